#pragma once

#include <map>
#include <string>

#include "vsa/dataset.hpp"
#include "vsa/executor.hpp"
#include "vsa/learner.hpp"

namespace vsa {

struct EvalOptions {
    bool debias = false;
    bool oracle = false;   // ground-truth one-hot judgments (pipeline dry-run)
    unsigned threads = 0;
    std::size_t limit = 0;  // 0 = evaluate every sample
    bool keep_outcomes = true;
};

struct EvalCounts {
    std::size_t total = 0;
    std::size_t correct = 0;
    double accuracy() const {
        return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
    }
};

struct QuestionOutcome {
    std::size_t index = 0;
    QType qtype = QType::Query;
    bool correct = false;
    std::string predicted;
    std::string truth;
};

// Per-question-type accuracy table plus the per-question outcomes it was
// computed from. Overall is the question-weighted mean by construction.
struct EvalReport {
    std::map<std::string, EvalCounts> per_type;
    EvalCounts overall;
    std::string dataset_descriptor;
    bool abs_flag = true, cc_flag = true, sl_flag = true, debias_flag = false, oracle_flag = false;
    std::uint64_t config_hash = 0;
    std::vector<QuestionOutcome> outcomes;

    std::string to_json(bool pretty = true) const;
};

EvalReport evaluate(const Learner& learner, const Dataset& dataset, const EvalOptions& options);

// Analytic conditional P(dst value | src value) injected by a bias condition,
// derived from the sampling scheme (shape uniform, color restricted by the
// palette rules, everything else independent).
std::vector<std::vector<double>> analytic_conditional(const AttributeSchema& schema,
                                                      BiasCondition condition, int src, int dst);

struct BiasReport {
    struct Head {
        std::string src, dst;
        std::vector<std::string> rows, cols;
        std::vector<std::vector<double>> learned;
        std::vector<std::vector<double>> truth;
        double max_abs_deviation = 0.0;  // learned vs truth
    };
    std::vector<Head> heads;
    std::string condition;
    std::uint64_t config_hash = 0;

    std::string to_json(bool pretty = true) const;
};

// Learned P(Y|X) tables for the requested heads ("all" = every ordered pair),
// against the analytic table of the learner's training condition.
BiasReport bias_report(const Learner& learner, const std::string& heads_spec);

struct ClusterExportSummary {
    std::size_t rows = 0;
    double purity = 0.0;  // majority-label purity under nearest-center assignment
    std::string to_json() const;
};

// Maps every object of the dataset through the superordinate's subspace,
// appends a 2-D principal-component projection computed over the export set,
// and writes one CSV row per object. Centers come from the quasi-center
// cache when it covers the vocabulary, otherwise from predicted-label means.
ClusterExportSummary cluster_export(const Learner& learner, const Dataset& dataset,
                                    const std::string& superordinate, const std::string& csv_path,
                                    bool include_vectors, unsigned threads = 0);

}  // namespace vsa
