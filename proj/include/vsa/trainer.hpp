#pragma once

#include <memory>
#include <optional>
#include <string>

#include "vsa/dataset.hpp"
#include "vsa/eval.hpp"
#include "vsa/learner.hpp"

namespace vsa {

struct TrainDatasets {
    const Dataset* lesson1 = nullptr;
    const Dataset* lesson2 = nullptr;
    const Dataset* val = nullptr;
};

struct TrainEpochStats {
    std::string phase;   // lesson1 | lesson2
    int epoch = 0;
    double mean_loss = 0.0;
    double val_accuracy = 0.0;
    std::map<std::string, double> val_per_type;
    long cache_total = 0;
    long clamp_warnings = 0;
    long degenerate_events = 0;
    long theta_steps = 0;  // cumulative
    long phi_steps = 0;
};

struct TrainReport {
    std::vector<TrainEpochStats> epochs;
    std::map<std::string, std::string> hierarchy;  // concept -> assigned superordinate
    std::vector<double> freeze_margins;
    int freeze_ties = 0;
    double best_val_accuracy = 0.0;
    int best_epoch = -1;
    long theta_steps = 0;
    long phi_steps = 0;
    std::map<std::string, double> head_deviations;  // "src->dst" -> max dev from uniform

    std::string to_json(bool pretty = true) const;
};

struct TrainResult {
    std::unique_ptr<Learner> learner;
    TrainReport report;
};

// Runs the two-lesson curriculum: lesson 1 trains priors, mappings and
// embeddings under the mixture judgment on query-only data; the hierarchy is
// then frozen (aborting if too many assignments are low-margin); lesson 2
// trains mappings and embeddings under the exclusive (or clustered) judgment
// on the full question mix, alternating with shortcut-head steps when
// enabled. The returned learner carries the best validation checkpoint of
// lesson 2. Deterministic in (config, seed) across thread counts.
TrainResult run_curriculum(const AttributeSchema& schema, const EngineConfig& config,
                           const std::string& ablate, const TrainDatasets& data,
                           const std::string& report_path = "");

// Continues alternating theta/phi training of a frozen learner on one
// dataset; every phi step verifies that theta is bitwise unchanged.
TrainReport train_shortcut(Learner& learner, const Dataset& data, int epochs,
                           const Dataset* val = nullptr);

}  // namespace vsa
