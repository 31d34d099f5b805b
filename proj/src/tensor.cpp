#include "vsa/tensor.hpp"

#include <cmath>

namespace vsa {

std::string Shape::str() const {
    if (rank == 0) return "[]";
    if (rank == 1) return "[" + std::to_string(dims[0]) + "]";
    return "[" + std::to_string(dims[0]) + "," + std::to_string(dims[1]) + "]";
}

Tensor::Tensor(Shape s, std::vector<double> values) : shape(s), data(std::move(values)) {
    require(data.size() == s.numel(), ErrorKind::dimension,
            "tensor data length " + std::to_string(data.size()) + " does not match shape " + s.str());
}

Tensor Tensor::scalar(double v) {
    Tensor t(Shape::scalar());
    t.data[0] = v;
    return t;
}

Tensor Tensor::vec(std::vector<double> values) {
    const auto n = values.size();
    return Tensor(Shape::vec(n), std::move(values));
}

Tensor Tensor::mat(std::size_t rows, std::size_t cols, std::vector<double> values) {
    return Tensor(Shape::mat(rows, cols), std::move(values));
}

double Tensor::item() const {
    require(shape.rank == 0, ErrorKind::contract, "item() called on non-scalar tensor " + shape.str());
    return data[0];
}

void Tensor::ensure_finite(const char* what) const {
    if (!all_finite(data.data(), data.size()))
        fail(ErrorKind::domain, std::string("non-finite value in ") + what);
}

bool all_finite(const double* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(p[i])) return false;
    return true;
}

}  // namespace vsa
