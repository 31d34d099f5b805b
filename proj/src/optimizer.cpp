#include "vsa/optimizer.hpp"

#include <cmath>

namespace vsa {

AdamW::AdamW(AdamWConfig cfg, std::vector<int> owned_params, const ParamStore& store)
    : cfg_(cfg), owned_(std::move(owned_params)) {
    m_.reserve(owned_.size());
    v_.reserve(owned_.size());
    for (int idx : owned_) {
        m_.emplace_back(store.value(idx).shape);
        v_.emplace_back(store.value(idx).shape);
    }
}

void AdamW::step(ParamStore& store, const GradBuffer& grads) {
    ++step_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));

    for (std::size_t p = 0; p < owned_.size(); ++p) {
        const int idx = owned_[p];
        require(grads.touched(idx), ErrorKind::contract,
                "optimizer step missing gradient for parameter " + store.name(idx));
        const Tensor& g = grads.grad(idx);
        Tensor& param = store.value(idx);
        Tensor& m = m_[p];
        Tensor& v = v_[p];
        const std::size_t n = param.data.size();
        for (std::size_t i = 0; i < n; ++i) {
            const double gi = g.data[i];
            m.data[i] = cfg_.beta1 * m.data[i] + (1.0 - cfg_.beta1) * gi;
            v.data[i] = cfg_.beta2 * v.data[i] + (1.0 - cfg_.beta2) * gi * gi;
            const double mhat = m.data[i] / bc1;
            const double vhat = v.data[i] / bc2;
            double w = param.data[i];
            w -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
            w -= cfg_.lr * cfg_.weight_decay * w;  // decoupled decay
            param.data[i] = w;
        }
        param.ensure_finite(store.name(idx).c_str());
    }
}

}  // namespace vsa
