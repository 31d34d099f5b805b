#pragma once

#include <optional>
#include <span>
#include <vector>

#include "vsa/params.hpp"
#include "vsa/rng.hpp"
#include "vsa/scene.hpp"
#include "vsa/schema.hpp"
#include "vsa/tape.hpp"

namespace vsa {

struct JudgmentConfig {
    double gamma = 0.85;  // shift
    double tau = 0.25;    // scale
    double alpha = 0.01;  // quasi-center distance decay
    int cache_min = 50;   // samples before a cluster participates
    double debias_lambda = 1.0;
    double debias_head_threshold = 0.15;  // heads flatter than this stay out of debiasing
    std::size_t subspace_dim = 64;
    std::size_t feature_dim = 256;
    double embedding_init_std = 0.02;
};

// Judgment flavor used by program execution. Super / Clustered / Debiased
// require a frozen hierarchy.
enum class ExecMode { Mixture, Super, Clustered, ClusteredDebiased };

struct ShortcutHeadRef {
    int src = -1, dst = -1;      // superordinate indices
    int w1 = -1, b1 = -1, w2 = -1, b2 = -1;  // parameter indices
};

// Learner parameters and the judgment mathematics: per-superordinate linear
// subspace mappings, per-concept embeddings and subspace priors, the
// quasi-center cache, and the two-layer shortcut heads between every ordered
// pair of superordinates.
class ConceptSpace {
public:
    ConceptSpace(const AttributeSchema& schema, const JudgmentConfig& cfg, ParamStore& store,
                 Rng& init_rng);

    const AttributeSchema& schema() const { return schema_; }
    const JudgmentConfig& config() const { return cfg_; }
    JudgmentConfig& mutable_config() { return cfg_; }

    int mapping_w(int k) const { return map_w_.at(k); }
    int mapping_b(int k) const { return map_b_.at(k); }
    int prior(int concept_id) const { return prior_.at(concept_id); }
    int embedding(int concept_id, int k) const {
        return embed_.at(concept_id * static_cast<int>(schema_.super_count()) + k);
    }
    const std::vector<ShortcutHeadRef>& heads() const { return heads_; }
    const ShortcutHeadRef& head(int src, int dst) const;

    // Parameter groups. theta = everything the reasoning loss trains;
    // phi = the shortcut heads only (disjoint by construction).
    std::vector<int> theta_lesson1() const;  // priors + mappings + all embeddings
    std::vector<int> theta_lesson2(bool mixture_mode) const;
    std::vector<int> phi_params() const;

    // --- linguistic hierarchy ---------------------------------------------

    // Assignment of one concept to arg max_k softmax(prior). Ties break to
    // the lowest subspace index and are counted as warnings. Non-assigned
    // embedding rows are zeroed and dropped from later training.
    void freeze_hierarchy(ParamStore& store);
    bool frozen() const { return frozen_; }
    int assigned_super(int concept_id) const;
    const std::vector<int>& vocab(int k) const;  // concept ids assigned to subspace k
    int freeze_tie_count() const { return freeze_ties_; }
    // softmax(prior) top1 - top2 per concept, for the trainer's abort check.
    std::vector<double> assignment_margins(const ParamStore& store) const;
    // Restores a frozen assignment loaded from a checkpoint.
    void restore_assignment(const std::vector<int>& assignment);

    // --- quasi-center cache --------------------------------------------------

    struct CacheEntry {
        std::vector<double> mean;
        long count = 0;
    };
    const CacheEntry& cache(int concept_id) const { return cache_.at(concept_id); }
    CacheEntry& mutable_cache(int concept_id) { return cache_.at(concept_id); }
    // Running mean update: u <- (n*u + x) / (n+1).
    void cache_insert(int concept_id, std::span<const double> mapped_feature);
    bool cache_active(int concept_id) const {
        return cache_[concept_id].count >= cfg_.cache_min;
    }

private:
    AttributeSchema schema_;
    JudgmentConfig cfg_;
    std::vector<int> map_w_, map_b_;
    std::vector<int> prior_;
    std::vector<int> embed_;
    std::vector<ShortcutHeadRef> heads_;
    bool frozen_ = false;
    int freeze_ties_ = 0;
    std::vector<int> assignment_;
    std::vector<std::vector<int>> vocab_;
    std::vector<CacheEntry> cache_;
};

// Inference-time centered subtraction (the debiasing rule): from a base
// distribution subtract lambda times the mean deviation of the shortcut
// outputs from uniform, clamp at zero and renormalize. Falls back to the
// base distribution (and reports it) when everything clamps away.
std::vector<double> debias_distribution(std::span<const double> base,
                                        const std::vector<std::vector<double>>& shortcut_outputs,
                                        double lambda, bool* fell_back = nullptr);

// Conditional table P(dst value | src value) implied by a head's current
// parameters; rows follow the source vocabulary, columns the target one.
// Rows are softmax distributions and sum to 1.
std::vector<std::vector<double>> head_table(const ConceptSpace& cs, const ParamStore& store,
                                            const ShortcutHeadRef& head);

// Largest absolute deviation of a head's table from the uniform row.
double head_table_deviation(const ConceptSpace& cs, const ParamStore& store,
                            const ShortcutHeadRef& head);

// Tape-level judgment context for one (scene, mode) pair. Caches parameter
// leaves, mapped features and per-object distributions so repeated program
// steps reuse tape nodes.
class JudgmentSession {
public:
    struct Options {
        ExecMode mode = ExecMode::Super;
        bool oracle = false;                       // ground-truth one-hot judgments
        const ShortcutHeadRef* phi_head = nullptr; // answer target-side judgments via Eq. 9
        std::vector<int> debias_heads;             // head indices enabled for debiasing
    };

    JudgmentSession(Tape& tape, const ParamStore& store, const ConceptSpace& cs,
                    const Scene& scene, Options options);

    // Probability that an object has a concept (filter semantics).
    Tape::Var prob(int obj, int concept_id);

    // Per-object answer distribution for a superordinate (query semantics),
    // over answer_vocab(k).
    Tape::Var dist_over(int obj, int super_k);
    std::vector<int> answer_vocab(int super_k) const;

    // Forward-value helpers for the cache policy.
    std::span<const double> mapped_value(int obj, int k);
    double super_prob_value(int obj, int concept_id);

    // One full-vocabulary shortcut distribution, exposed for reports/tests.
    Tape::Var shortcut_dist(int obj, const ShortcutHeadRef& head);

    int degenerate_events() const { return degenerate_events_; }
    void note_degenerate() { ++degenerate_events_; }

    Tape& tape() { return tape_; }
    const ConceptSpace& space() const { return cs_; }
    const Scene& scene() const { return scene_; }
    const Options& options() const { return options_; }

private:
    Tape::Var param(int index);
    Tape::Var feature(int obj);
    Tape::Var feature_matrix();
    Tape::Var mapped_all(int k);
    Tape::Var mapped(int obj, int k);
    Tape::Var mapped_unit(int obj, int k);
    Tape::Var embed_unit(int concept_id, int k);
    Tape::Var prior_softmax(int concept_id);
    Tape::Var cosine(int obj, int concept_id, int k);
    Tape::Var super_dist(int obj, int k);
    Tape::Var clustered_vec(int obj, int k);     // unnormalized p' over vocab(k)
    Tape::Var mixture_prob(int obj, int concept_id);
    Tape::Var ci_query_dist(int obj, int k);     // lesson-1 rule over the full concept set
    Tape::Var debiased_dist(int obj, int k);
    Tape::Var base_dist(int obj, int k);         // normalized, mode-appropriate
    int vocab_slot(int concept_id) const;        // index within its vocabulary

    Tape& tape_;
    const ParamStore& store_;
    const ConceptSpace& cs_;
    const Scene& scene_;
    Options options_;
    std::vector<Tape::Var> param_vars_;
    Tape::Var feature_matrix_ = -1;
    std::vector<Tape::Var> mapped_all_vars_;
    std::vector<Tape::Var> feature_vars_, mapped_vars_, mapped_unit_vars_;
    std::vector<Tape::Var> embed_unit_vars_;
    std::vector<Tape::Var> prior_softmax_vars_;
    std::vector<Tape::Var> super_dist_vars_, clustered_vars_, ci_dist_vars_, debias_vars_;
    std::vector<Tape::Var> shortcut_vars_;
    std::vector<int> all_concepts_;
    int degenerate_events_ = 0;
};

}  // namespace vsa
