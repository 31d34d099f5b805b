#include "vsa/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace vsa {

bool solve_linear(std::vector<double>& a, std::vector<double>& b, std::size_t n, std::size_t m) {
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r * n + col]) > std::abs(a[pivot * n + col])) pivot = r;
        if (std::abs(a[pivot * n + col]) < 1e-12) return false;
        if (pivot != col) {
            for (std::size_t c = 0; c < n; ++c) std::swap(a[col * n + c], a[pivot * n + c]);
            for (std::size_t c = 0; c < m; ++c) std::swap(b[col * m + c], b[pivot * m + c]);
        }
        const double inv = 1.0 / a[col * n + col];
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a[r * n + col] * inv;
            if (f == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
            for (std::size_t c = 0; c < m; ++c) b[r * m + c] -= f * b[col * m + c];
        }
    }
    for (std::size_t r = 0; r < n; ++r) {
        const double inv = 1.0 / a[r * n + r];
        for (std::size_t c = 0; c < m; ++c) b[r * m + c] *= inv;
    }
    return true;
}

bool full_column_rank(const std::vector<double>& mat, std::size_t n, std::size_t k) {
    // Gram matrix G = M^T M, then elimination; a vanishing pivot (relative to
    // the largest diagonal) means rank deficiency.
    std::vector<double> g(k * k, 0.0);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t i = 0; i < k; ++i) {
            const double mi = mat[r * k + i];
            if (mi == 0.0) continue;
            for (std::size_t j = 0; j < k; ++j) g[i * k + j] += mi * mat[r * k + j];
        }
    double scale = 0.0;
    for (std::size_t i = 0; i < k; ++i) scale = std::max(scale, g[i * k + i]);
    if (scale <= 0.0) return false;
    for (std::size_t col = 0; col < k; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < k; ++r)
            if (std::abs(g[r * k + col]) > std::abs(g[pivot * k + col])) pivot = r;
        if (std::abs(g[pivot * k + col]) < 1e-10 * scale) return false;
        if (pivot != col)
            for (std::size_t c = 0; c < k; ++c) std::swap(g[col * k + c], g[pivot * k + c]);
        const double inv = 1.0 / g[col * k + col];
        for (std::size_t r = col + 1; r < k; ++r) {
            const double f = g[r * k + col] * inv;
            if (f == 0.0) continue;
            for (std::size_t c = col; c < k; ++c) g[r * k + c] -= f * g[col * k + c];
        }
    }
    return true;
}

void symmetric_eigen(std::vector<double> a, std::size_t n, std::vector<double>& values,
                     std::vector<double>& vectors) {
    vectors.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) vectors[i * n + i] = 1.0;

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
        if (off < 1e-22) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a[p * n + q];
                if (std::abs(apq) < 1e-300) continue;
                const double app = a[p * n + p];
                const double aqq = a[q * n + q];
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t i = 0; i < n; ++i) {
                    const double aip = a[i * n + p];
                    const double aiq = a[i * n + q];
                    a[i * n + p] = c * aip - s * aiq;
                    a[i * n + q] = s * aip + c * aiq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double api = a[p * n + i];
                    const double aqi = a[q * n + i];
                    a[p * n + i] = c * api - s * aqi;
                    a[q * n + i] = s * api + c * aqi;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vip = vectors[p * n + i];
                    const double viq = vectors[q * n + i];
                    vectors[p * n + i] = c * vip - s * viq;
                    vectors[q * n + i] = s * vip + c * viq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> diag(n);
    for (std::size_t i = 0; i < n; ++i) diag[i] = a[i * n + i];
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return diag[x] > diag[y]; });

    values.resize(n);
    std::vector<double> sorted(n * n);
    for (std::size_t e = 0; e < n; ++e) {
        values[e] = diag[order[e]];
        const double* row = vectors.data() + order[e] * n;
        // Deterministic sign: largest-magnitude component positive.
        std::size_t big = 0;
        for (std::size_t i = 1; i < n; ++i)
            if (std::abs(row[i]) > std::abs(row[big])) big = i;
        const double sign = row[big] < 0.0 ? -1.0 : 1.0;
        for (std::size_t i = 0; i < n; ++i) sorted[e * n + i] = sign * row[i];
    }
    vectors = std::move(sorted);
}

}  // namespace vsa
