#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "vsa/common.hpp"

namespace vsa {

// Extents of a dense value. Rank 0 = scalar, 1 = vector, 2 = matrix; nothing
// in this engine needs more (no broadcasting, no convolutions).
struct Shape {
    std::array<std::size_t, 2> dims{0, 0};
    std::uint8_t rank = 0;

    static Shape scalar() { return Shape{}; }
    static Shape vec(std::size_t n) { return Shape{{n, 0}, 1}; }
    static Shape mat(std::size_t rows, std::size_t cols) { return Shape{{rows, cols}, 2}; }

    std::size_t numel() const {
        if (rank == 0) return 1;
        if (rank == 1) return dims[0];
        return dims[0] * dims[1];
    }

    bool operator==(const Shape& o) const { return rank == o.rank && dims == o.dims; }
    bool operator!=(const Shape& o) const { return !(*this == o); }

    std::string str() const;
};

// Dense 64-bit real tensor. The networks here are tiny; precision beats
// speed and keeps finite-difference checks tight.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape s, double fill = 0.0) : shape(s), data(s.numel(), fill) {}
    Tensor(Shape s, std::vector<double> values);

    static Tensor scalar(double v);
    static Tensor vec(std::vector<double> values);
    static Tensor mat(std::size_t rows, std::size_t cols, std::vector<double> values);

    Shape shape;
    std::vector<double> data;
    bool requires_grad = false;

    std::size_t numel() const { return data.size(); }
    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }
    double& at(std::size_t r, std::size_t c) { return data[r * shape.dims[1] + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * shape.dims[1] + c]; }

    double item() const;

    // NaN/Inf is a contract violation, surfaced as a domain error.
    void ensure_finite(const char* what) const;
};

bool all_finite(const double* p, std::size_t n);

}  // namespace vsa
