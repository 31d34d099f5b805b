#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "vsa/tape.hpp"
#include "vsa/tensor.hpp"

namespace vsa {

// Flat registry of named parameters. Indices are stable for the lifetime of
// the store and are the identity used by tapes, gradients and optimizers.
class ParamStore {
public:
    int add(const std::string& name, Tensor value);

    int index_of(const std::string& name) const;  // -1 if absent
    bool has(const std::string& name) const { return index_of(name) >= 0; }

    Tensor& value(int index) { return params_.at(static_cast<std::size_t>(index)).value; }
    const Tensor& value(int index) const { return params_.at(static_cast<std::size_t>(index)).value; }
    Tensor& value(const std::string& name);
    const std::string& name(int index) const { return params_.at(static_cast<std::size_t>(index)).name; }

    std::size_t size() const { return params_.size(); }

    // FNV-1a over the raw bytes of every parameter, in index order. Used for
    // stop-gradient drift checks and run-determinism assertions.
    std::uint64_t content_hash() const;
    std::uint64_t content_hash(const std::vector<int>& indices) const;

    std::vector<Tensor> snapshot_values() const;
    void restore_values(const std::vector<Tensor>& values);

private:
    struct Entry {
        std::string name;
        Tensor value;
    };
    std::vector<Entry> params_;
    std::unordered_map<std::string, int> index_;
};

// Dense gradient accumulator aligned with a ParamStore.
class GradBuffer {
public:
    explicit GradBuffer(const ParamStore& store);

    void clear();
    void accumulate(int param_index, const Tensor& grad);
    void accumulate(const Tape::LeafGrad& grad);
    // Folds pending factored gradients into the dense buffers; must run
    // before scaling or an optimizer step.
    void finalize();
    void scale_all(double s);
    bool touched(int param_index) const { return touched_[static_cast<std::size_t>(param_index)]; }
    // Marks a parameter as covered with an all-zero gradient.
    void touch_zero(int param_index) { touched_[static_cast<std::size_t>(param_index)] = true; }
    const Tensor& grad(int param_index) const { return grads_[static_cast<std::size_t>(param_index)]; }

private:
    struct PendingFactor {
        int param;
        Tensor g;                                // n x m
        std::shared_ptr<const Tensor> x;         // n x k
    };
    std::vector<Tensor> grads_;
    std::vector<unsigned char> touched_;
    std::vector<PendingFactor> pending_;
};

}  // namespace vsa
