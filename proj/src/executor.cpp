#include "vsa/executor.hpp"

namespace vsa {

namespace {

bool forward_all_zero(const Tape& tape, Tape::Var mask) {
    for (double v : tape.value(mask))
        if (v != 0.0) return false;
    return true;
}

}  // namespace

Tape::Var exec_filter_step(JudgmentSession& session, Tape::Var mask, int concept_id) {
    Tape& tape = session.tape();
    const std::size_t n = session.scene().objects.size();
    std::vector<Tape::Var> probs;
    probs.reserve(n);
    for (std::size_t o = 0; o < n; ++o)
        probs.push_back(session.prob(static_cast<int>(o), concept_id));
    return tape.mul(mask, tape.stack(probs));
}

Tape::Var exec_relate_step(JudgmentSession& session, Tape::Var mask, Relation rel) {
    Tape& tape = session.tape();
    const std::size_t n = session.scene().objects.size();
    if (forward_all_zero(tape, mask)) {
        Tensor zeros(Shape::vec(n));
        return tape.constant(zeros);
    }
    // The geometric predicate enters as a constant matrix: differentiable
    // through the mask, not through geometry.
    const auto ref = tape.div_scalar(mask, tape.sum(mask));
    Tensor rel_matrix(Shape::mat(n, n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            rel_matrix.at(i, j) =
                related(session.scene(), static_cast<int>(i), static_cast<int>(j), rel) ? 1.0 : 0.0;
    return tape.matvec(tape.constant(rel_matrix), ref);
}

QueryOutput exec_query_step(JudgmentSession& session, Tape::Var mask, int super_k) {
    Tape& tape = session.tape();
    const std::size_t n = session.scene().objects.size();
    QueryOutput out;
    out.vocab = session.answer_vocab(super_k);
    if (forward_all_zero(tape, mask)) {
        session.note_degenerate();
        Tensor uniform(Shape::vec(out.vocab.size()), 1.0 / static_cast<double>(out.vocab.size()));
        out.dist = tape.constant(uniform);
        out.degenerate = true;
        return out;
    }
    const auto weights = tape.div_scalar(mask, tape.sum(mask));
    Tape::Var acc = -1;
    for (std::size_t o = 0; o < n; ++o) {
        const auto contrib =
            tape.mul_scalar(session.dist_over(static_cast<int>(o), super_k), tape.pick(weights, o));
        acc = acc < 0 ? contrib : tape.add(acc, contrib);
    }
    out.dist = tape.div_scalar(acc, tape.sum(acc));
    return out;
}

Tape::Var exec_count_step(JudgmentSession& session, Tape::Var mask) {
    return session.tape().sum(mask);
}

long count_eval(const Tape& tape, Tape::Var mask) {
    long count = 0;
    for (double v : tape.value(mask))
        if (v > 0.5) ++count;
    return count;
}

Tape::Var exec_exist_step(JudgmentSession& session, Tape::Var mask) {
    return session.tape().max_elem(mask);
}

Tape::Var exec_compare_attr(JudgmentSession& session, const QueryOutput& a, const QueryOutput& b) {
    return session.tape().dot(a.dist, b.dist);
}

Tape::Var exec_compare_count(Tape& tape, Tape::Var count_a, Tape::Var count_b, CmpOp cmp,
                             const ExecutorConfig& cfg) {
    switch (cmp) {
        case CmpOp::Gt:
            return tape.sigmoid(tape.scale(tape.sub(count_a, count_b), 1.0 / cfg.tau_count));
        case CmpOp::Lt:
            return tape.sigmoid(tape.scale(tape.sub(count_b, count_a), 1.0 / cfg.tau_count));
        default:
            return tape.exp(tape.scale(tape.sq_diff(count_a, count_b), -1.0 / cfg.tau_count_eq));
    }
}

ExecResult exec_program(JudgmentSession& session, const Program& program,
                        const ExecutorConfig& cfg, bool keep_trace) {
    validate_program(program, session.space().schema());
    Tape& tape = session.tape();
    const std::size_t n = session.scene().objects.size();
    std::vector<Tape::Var> masks(program.size(), -1);
    ExecResult result;

    auto mask_of = [&](int idx) {
        require(masks[idx] >= 0, ErrorKind::contract, "step input is not an object mask");
        return masks[idx];
    };

    for (std::size_t i = 0; i < program.size(); ++i) {
        const auto& step = program[i];
        Tape::Var traced = -1;
        switch (step.kind) {
            case StepKind::Scene: {
                Tensor ones(Shape::vec(n), 1.0);
                masks[i] = tape.constant(ones);
                traced = masks[i];
                break;
            }
            case StepKind::Filter:
                masks[i] = exec_filter_step(session, mask_of(step.inputs[0]), step.concept_id);
                traced = masks[i];
                break;
            case StepKind::Relate:
                masks[i] = exec_relate_step(session, mask_of(step.inputs[0]), step.relation);
                traced = masks[i];
                break;
            case StepKind::Query: {
                auto q = exec_query_step(session, mask_of(step.inputs[0]), step.super_index);
                result.kind = ExecResult::Kind::Distribution;
                result.value = q.dist;
                result.vocab = std::move(q.vocab);
                result.degenerate = q.degenerate;
                traced = result.value;
                break;
            }
            case StepKind::Exist:
                result.kind = ExecResult::Kind::Probability;
                result.value = exec_exist_step(session, mask_of(step.inputs[0]));
                traced = result.value;
                break;
            case StepKind::Count:
                result.kind = ExecResult::Kind::Scalar;
                result.final_mask = mask_of(step.inputs[0]);
                result.value = exec_count_step(session, result.final_mask);
                traced = result.value;
                break;
            case StepKind::CompareAttr: {
                auto qa = exec_query_step(session, mask_of(step.inputs[0]), step.super_index);
                auto qb = exec_query_step(session, mask_of(step.inputs[1]), step.super_index);
                result.kind = ExecResult::Kind::Probability;
                result.value = exec_compare_attr(session, qa, qb);
                result.degenerate = qa.degenerate || qb.degenerate;
                traced = result.value;
                break;
            }
            case StepKind::CompareCount: {
                const auto a = exec_count_step(session, mask_of(step.inputs[0]));
                const auto b = exec_count_step(session, mask_of(step.inputs[1]));
                result.kind = ExecResult::Kind::Probability;
                result.value = exec_compare_count(tape, a, b, step.cmp, cfg);
                result.cmp_mask_a = mask_of(step.inputs[0]);
                result.cmp_mask_b = mask_of(step.inputs[1]);
                result.cmp = step.cmp;
                traced = result.value;
                break;
            }
        }
        if (keep_trace) {
            const auto vals = tape.value(traced);
            result.trace.emplace_back(vals.begin(), vals.end());
        }
    }
    require(result.value >= 0, ErrorKind::contract, "program produced no output");
    return result;
}

Answer exec_answer(const Tape& tape, const ExecResult& result) {
    switch (result.kind) {
        case ExecResult::Kind::Distribution: {
            const auto vals = tape.value(result.value);
            std::size_t best = 0;
            for (std::size_t i = 1; i < vals.size(); ++i)
                if (vals[i] > vals[best]) best = i;
            return Answer::concept_value(result.vocab[best]);
        }
        case ExecResult::Kind::Scalar:
            // Count evaluation: binarize the mask at 0.5, then add up.
            return Answer::integer_value(count_eval(tape, result.final_mask));
        default:
            if (result.cmp_mask_a >= 0) {
                // Count comparisons evaluate on binarized counts, so exact
                // ties resolve deterministically instead of riding on soft
                // mask noise around the 0.5 threshold.
                const long a = count_eval(tape, result.cmp_mask_a);
                const long b = count_eval(tape, result.cmp_mask_b);
                switch (result.cmp) {
                    case CmpOp::Gt: return Answer::boolean_value(a > b);
                    case CmpOp::Lt: return Answer::boolean_value(a < b);
                    default: return Answer::boolean_value(a == b);
                }
            }
            return Answer::boolean_value(tape.scalar_value(result.value) > 0.5);
    }
}

}  // namespace vsa
