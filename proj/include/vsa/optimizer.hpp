#pragma once

#include <vector>

#include "vsa/params.hpp"

namespace vsa {

struct AdamWConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-4;
};

// Adaptive-moment optimizer with decoupled weight decay: bias-corrected
// moment update first, then the decay shrinkage applied directly to the
// parameter values.
class AdamW {
public:
    AdamW(AdamWConfig cfg, std::vector<int> owned_params, const ParamStore& store);

    // Applies one step. `grads` must cover every owned parameter (a zero
    // gradient still counts as covered); a missing entry is a contract error.
    void step(ParamStore& store, const GradBuffer& grads);

    const std::vector<int>& owned() const { return owned_; }
    long step_count() const { return step_; }
    const AdamWConfig& config() const { return cfg_; }

private:
    AdamWConfig cfg_;
    std::vector<int> owned_;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
    long step_ = 0;
};

}  // namespace vsa
