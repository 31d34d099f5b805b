#pragma once

#include "vsa/concept_space.hpp"
#include "vsa/oracle.hpp"
#include "vsa/program.hpp"

namespace vsa {

struct ExecutorConfig {
    double tau_count = 0.25;   // soft greater/less temperature
    double tau_count_eq = 0.5; // soft equality width
};

// --- individual step operators ------------------------------------------------
// Masks are per-object attention weights in [0,1]; every operator below
// preserves that range.

// mask'_i = mask_i * p(object i has concept).
Tape::Var exec_filter_step(JudgmentSession& session, Tape::Var mask, int concept_id);

// mask'_i = sum_j r_j * rel(i, j) with r the normalized reference weights.
// An all-zero incoming mask yields an all-zero mask (no error).
Tape::Var exec_relate_step(JudgmentSession& session, Tape::Var mask, Relation rel);

struct QueryOutput {
    Tape::Var dist = -1;
    std::vector<int> vocab;
    bool degenerate = false;  // all-zero mask: uniform answer, flagged
};

// Mask-weighted mixture of per-object answer distributions, renormalized.
QueryOutput exec_query_step(JudgmentSession& session, Tape::Var mask, int super_k);

// Soft count is the mask sum; the evaluation variant binarizes at 0.5 first.
Tape::Var exec_count_step(JudgmentSession& session, Tape::Var mask);
long count_eval(const Tape& tape, Tape::Var mask);

// Soft existence is the max mask entry; evaluation thresholds at 0.5.
Tape::Var exec_exist_step(JudgmentSession& session, Tape::Var mask);

// Probability that two query outputs agree: sum_c qa(c) * qb(c).
Tape::Var exec_compare_attr(JudgmentSession& session, const QueryOutput& a, const QueryOutput& b);

// Soft count comparison: sigmoid((a-b)/tau) for >, mirrored for <, and
// exp(-(a-b)^2 / tau_eq) for =.
Tape::Var exec_compare_count(Tape& tape, Tape::Var count_a, Tape::Var count_b, CmpOp cmp,
                             const ExecutorConfig& cfg);

// --- full program execution ---------------------------------------------------

// Result of quasi-symbolic execution. `value` is the terminal tape node:
// a distribution over `vocab` for Query, a scalar for Count, or a
// probability for Exist / CompareAttr / CompareCount. For Count the final
// attention mask is kept for the binarize-then-add evaluation rule.
struct ExecResult {
    enum class Kind { Distribution, Scalar, Probability } kind = Kind::Probability;
    Tape::Var value = -1;
    Tape::Var final_mask = -1;    // Count only
    // CompareCount only: branch masks, so evaluation can binarize-then-add
    // each side before comparing (the count discretization rule).
    Tape::Var cmp_mask_a = -1, cmp_mask_b = -1;
    CmpOp cmp = CmpOp::Eq;
    std::vector<int> vocab;       // Distribution only: concept ids per slot
    bool degenerate = false;      // an all-zero mask hit a query
    // Per-step forward values (masks or outputs) when tracing is on.
    std::vector<std::vector<double>> trace;
};

ExecResult exec_program(JudgmentSession& session, const Program& program,
                        const ExecutorConfig& cfg, bool keep_trace = false);

// Discrete answer per the evaluation rules: argmax for distributions,
// threshold 0.5 for probabilities, binarize-then-add for counts.
Answer exec_answer(const Tape& tape, const ExecResult& result);

}  // namespace vsa
