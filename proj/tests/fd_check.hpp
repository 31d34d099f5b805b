#pragma once

// Central finite-difference oracle for gradient checks. Lives in test code
// and stays independent of the tape's backward pass: it only calls forward
// evaluations of a user-supplied function.

#include <cmath>
#include <functional>
#include <vector>

#include "vsa/tensor.hpp"

namespace vsa::testing {

// f: maps a full set of input tensors to a scalar.
using ForwardFn = std::function<double(const std::vector<Tensor>&)>;

inline double rel_err(double a, double b) {
    const double denom = std::max({std::abs(a), std::abs(b), 1e-3});
    return std::abs(a - b) / denom;
}

// Returns the worst relative error between `analytic` and central differences
// of `f` over every coordinate of every input.
inline double fd_max_rel_err(const ForwardFn& f, std::vector<Tensor> inputs,
                             const std::vector<Tensor>& analytic, double h = 1e-5) {
    double worst = 0.0;
    for (std::size_t t = 0; t < inputs.size(); ++t) {
        for (std::size_t i = 0; i < inputs[t].numel(); ++i) {
            const double orig = inputs[t][i];
            inputs[t][i] = orig + h;
            const double fp = f(inputs);
            inputs[t][i] = orig - h;
            const double fm = f(inputs);
            inputs[t][i] = orig;
            const double fd = (fp - fm) / (2.0 * h);
            worst = std::max(worst, rel_err(analytic[t][i], fd));
        }
    }
    return worst;
}

}  // namespace vsa::testing
