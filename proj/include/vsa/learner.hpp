#pragma once

#include <memory>
#include <string>

#include "vsa/config.hpp"

namespace vsa {

// The trainable model plus everything needed to reproduce its judgments:
// parameters, hierarchy assignment, quasi-center caches and bookkeeping.
// Checkpoints are a single JSON document and round-trip bit-exactly.
class Learner {
public:
    Learner(const AttributeSchema& schema, const EngineConfig& config);

    const AttributeSchema& schema() const { return space_->schema(); }
    const EngineConfig& config() const { return config_; }
    EngineConfig& mutable_config() { return config_; }
    ParamStore& store() { return store_; }
    const ParamStore& store() const { return store_; }
    ConceptSpace& space() { return *space_; }
    const ConceptSpace& space() const { return *space_; }

    // Ablation tag: none | no-cc | no-sl | no-abs.
    const std::string& ablation() const { return ablation_; }
    void set_ablation(const std::string& tag);
    bool clustering_enabled() const;
    bool shortcut_enabled() const;
    bool abstraction_enabled() const { return ablation_ != "no-abs"; }

    // Judgment mode used at evaluation time (before any debias flag).
    ExecMode eval_mode() const;

    // Condition tag of the training data, for bias reports.
    const std::string& train_condition() const { return train_condition_; }
    void set_train_condition(const std::string& c) { train_condition_ = c; }

    // Heads whose learned table deviates enough from uniform to participate
    // in debiased inference.
    std::vector<int> enabled_debias_heads() const;

    std::string to_checkpoint_json() const;
    static std::unique_ptr<Learner> from_checkpoint_json(const std::string& text);
    void save_checkpoint(const std::string& path) const;
    static std::unique_ptr<Learner> load_checkpoint(const std::string& path);

private:
    EngineConfig config_;
    ParamStore store_;
    std::unique_ptr<ConceptSpace> space_;
    std::string ablation_ = "none";
    std::string train_condition_ = "uniform";
};

}  // namespace vsa
