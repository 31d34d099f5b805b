#include "vsa/question_gen.hpp"

#include <algorithm>
#include <optional>

namespace vsa {

namespace {

struct Chain {
    std::vector<int> concepts;  // filter concept ids, applied in order
};

bool contains(const std::vector<int>& v, int x) {
    return std::find(v.begin(), v.end(), x) != v.end();
}

std::vector<int> allowed_supers(const AttributeSchema& schema, const QuestionConstraints& c,
                                int also_exclude = -1) {
    std::vector<int> out;
    for (int k = 0; k < static_cast<int>(schema.super_count()); ++k)
        if (!contains(c.forbidden_supers, k) && k != also_exclude) out.push_back(k);
    return out;
}

std::vector<int> filter_set(const Scene& scene, const AttributeSchema& schema,
                            const std::vector<int>& in, int concept_id) {
    const int k = schema.concept_super(concept_id);
    const int v = schema.concept_value_index(concept_id);
    std::vector<int> out;
    for (int o : in)
        if (scene.attribute_value(o, k) == v) out.push_back(o);
    return out;
}

// Greedily filters by the target's own attribute values (over a shuffled
// superordinate order) until the set collapses to exactly {target}.
std::optional<Chain> unique_chain(const Scene& scene, const AttributeSchema& schema, int target,
                                  const std::vector<int>& usable_supers,
                                  const std::vector<int>& start_set, Rng& rng) {
    std::vector<int> order = usable_supers;
    rng.shuffle(order);
    Chain chain;
    std::vector<int> current = start_set;
    if (!contains(current, target)) return std::nullopt;
    for (int k : order) {
        if (current.size() == 1) break;
        const int cid = schema.concept_of(k, scene.attribute_value(target, k));
        auto next = filter_set(scene, schema, current, cid);
        if (next.size() == current.size()) continue;  // non-discriminating filter
        chain.concepts.push_back(cid);
        current = std::move(next);
    }
    if (current.size() != 1 || current[0] != target) return std::nullopt;
    return chain;
}

// Random filter concepts over distinct superordinates; the resulting set may
// be anything, including empty.
Chain random_chain(const AttributeSchema& schema, const std::vector<int>& usable_supers,
                   std::size_t max_len, Rng& rng) {
    std::vector<int> order = usable_supers;
    rng.shuffle(order);
    Chain chain;
    const std::size_t len = 1 + static_cast<std::size_t>(rng.index(max_len));
    for (std::size_t i = 0; i < std::min(len, order.size()); ++i) {
        const int k = order[i];
        chain.concepts.push_back(
            schema.concept_of(k, rng.index(schema.vocab_size(k))));
    }
    return chain;
}

int append_filters(Program& program, const Chain& chain, int input) {
    int last = input;
    for (int cid : chain.concepts) {
        ProgramStep s;
        s.kind = StepKind::Filter;
        s.concept_id = cid;
        s.inputs = {last};
        program.push_back(s);
        last = static_cast<int>(program.size()) - 1;
    }
    return last;
}

// --- question text rendering (documentation only) ---------------------------

std::string describe(const AttributeSchema& schema, const Chain& chain) {
    std::string adjectives;
    std::string noun = "thing";
    const int shape_k = schema.super_index("shape");
    for (int cid : chain.concepts) {
        if (schema.concept_super(cid) == shape_k)
            noun = schema.concept_name(cid);
        else
            adjectives += schema.concept_name(cid) + " ";
    }
    return adjectives + noun;
}

std::string relation_phrase(Relation r) {
    switch (r) {
        case Relation::Left: return "left of";
        case Relation::Right: return "right of";
        case Relation::Front: return "in front of";
        default: return "behind";
    }
}

}  // namespace

QASample generate_question(const Scene& scene, const AttributeSchema& schema, QType qtype,
                           const QuestionConstraints& constraints, Rng& rng) {
    const int n = static_cast<int>(scene.objects.size());
    require(n > 0, ErrorKind::contract, "generate_question: empty scene");
    std::vector<int> everything(n);
    for (int o = 0; o < n; ++o) everything[o] = o;

    for (int attempt = 0; attempt < constraints.retry_budget; ++attempt) {
        Program program;
        program.push_back(ProgramStep{});  // Scene
        std::string text;
        QASample sample;
        sample.scene_id = scene.scene_id;
        sample.qtype = qtype;

        switch (qtype) {
            case QType::Query: {
                const auto q_candidates = allowed_supers(schema, constraints);
                if (q_candidates.empty())
                    fail(ErrorKind::generation, "no superordinate available for query");
                const int qsuper = q_candidates[rng.index(q_candidates.size())];
                const int target = rng.index(n);
                const auto target_supers = allowed_supers(schema, constraints, qsuper);
                if (rng.uniform() < 0.5) {
                    auto chain = unique_chain(scene, schema, target, target_supers, everything, rng);
                    if (!chain) continue;
                    const int last = append_filters(program, *chain, 0);
                    ProgramStep q;
                    q.kind = StepKind::Query;
                    q.super_index = qsuper;
                    q.inputs = {last};
                    program.push_back(q);
                    text = "What is the " + schema.super_name(qsuper) + " of the " +
                           describe(schema, *chain) + "?";
                } else {
                    // Relate form: [ref chain] -> Relate -> [target filters] -> Query.
                    const int ref = rng.index(n);
                    if (ref == target) continue;
                    auto ref_chain = unique_chain(scene, schema, ref,
                                                  allowed_supers(schema, constraints), everything, rng);
                    if (!ref_chain) continue;
                    std::vector<Relation> rels;
                    for (Relation r : {Relation::Left, Relation::Right, Relation::Front,
                                       Relation::Behind})
                        if (related(scene, target, ref, r)) rels.push_back(r);
                    if (rels.empty()) continue;
                    const Relation rel = rels[rng.index(rels.size())];
                    std::vector<int> candidates;
                    for (int o = 0; o < n; ++o)
                        if (related(scene, o, ref, rel)) candidates.push_back(o);
                    auto chain = unique_chain(scene, schema, target, target_supers, candidates, rng);
                    if (!chain) continue;
                    int last = append_filters(program, *ref_chain, 0);
                    ProgramStep r;
                    r.kind = StepKind::Relate;
                    r.relation = rel;
                    r.inputs = {last};
                    program.push_back(r);
                    last = static_cast<int>(program.size()) - 1;
                    last = append_filters(program, *chain, last);
                    ProgramStep q;
                    q.kind = StepKind::Query;
                    q.super_index = qsuper;
                    q.inputs = {last};
                    program.push_back(q);
                    text = "What is the " + schema.super_name(qsuper) + " of the " +
                           describe(schema, *chain) + " " + relation_phrase(rel) + " the " +
                           describe(schema, *ref_chain) + "?";
                }
                break;
            }
            case QType::Exist:
            case QType::Count: {
                const auto usable = allowed_supers(schema, constraints);
                Chain chain = random_chain(schema, usable, 2, rng);
                int last = 0;
                if (rng.uniform() < 0.25) {
                    // Relate form over a unique reference.
                    const int ref = rng.index(n);
                    auto ref_chain = unique_chain(scene, schema, ref, usable, everything, rng);
                    if (!ref_chain) continue;
                    const Relation rel = static_cast<Relation>(rng.index(4));
                    last = append_filters(program, *ref_chain, 0);
                    ProgramStep r;
                    r.kind = StepKind::Relate;
                    r.relation = rel;
                    r.inputs = {last};
                    program.push_back(r);
                    last = static_cast<int>(program.size()) - 1;
                    last = append_filters(program, chain, last);
                    text = (qtype == QType::Exist ? "Is there a " : "How many ") +
                           describe(schema, chain) + (qtype == QType::Exist ? " " : "s ") +
                           relation_phrase(rel) + " the " + describe(schema, *ref_chain) +
                           (qtype == QType::Exist ? "?" : " are there?");
                } else {
                    last = append_filters(program, chain, 0);
                    text = qtype == QType::Exist
                               ? "Is there a " + describe(schema, chain) + "?"
                               : "How many " + describe(schema, chain) + "s are there?";
                }
                ProgramStep t;
                t.kind = qtype == QType::Exist ? StepKind::Exist : StepKind::Count;
                t.inputs = {last};
                program.push_back(t);
                break;
            }
            case QType::CountEq:
            case QType::CountGt:
            case QType::CountLt: {
                const auto usable = allowed_supers(schema, constraints);
                Chain a = random_chain(schema, usable, 2, rng);
                Chain b = random_chain(schema, usable, 2, rng);
                if (a.concepts == b.concepts) continue;
                const int last_a = append_filters(program, a, 0);
                const int last_b = append_filters(program, b, 0);
                ProgramStep t;
                t.kind = StepKind::CompareCount;
                t.cmp = qtype == QType::CountEq ? CmpOp::Eq
                        : qtype == QType::CountGt ? CmpOp::Gt
                                                  : CmpOp::Lt;
                t.inputs = {last_a, last_b};
                program.push_back(t);
                const char* phrase = qtype == QType::CountEq ? "the same number of"
                                     : qtype == QType::CountGt ? "more"
                                                               : "fewer";
                text = std::string("Are there ") + phrase + " " + describe(schema, a) + "s than " +
                       describe(schema, b) + "s?";
                break;
            }
            case QType::CompareAttr: {
                const auto sup_candidates = allowed_supers(schema, constraints);
                if (sup_candidates.empty())
                    fail(ErrorKind::generation, "no superordinate available for compare");
                const int sup = sup_candidates[rng.index(sup_candidates.size())];
                const int a = rng.index(n);
                const int b = rng.index(n);
                if (a == b) continue;
                const auto usable = allowed_supers(schema, constraints, sup);
                auto chain_a = unique_chain(scene, schema, a, usable, everything, rng);
                auto chain_b = unique_chain(scene, schema, b, usable, everything, rng);
                if (!chain_a || !chain_b) continue;
                const int last_a = append_filters(program, *chain_a, 0);
                const int last_b = append_filters(program, *chain_b, 0);
                ProgramStep t;
                t.kind = StepKind::CompareAttr;
                t.super_index = sup;
                t.inputs = {last_a, last_b};
                program.push_back(t);
                text = "Does the " + describe(schema, *chain_a) + " have the same " +
                       schema.super_name(sup) + " as the " + describe(schema, *chain_b) + "?";
                break;
            }
        }

        validate_program(program, schema);
        sample.depth = program_depth(program);
        if (sample.depth >= constraints.max_depth_exclusive) continue;
        Answer answer;
        try {
            answer = brute_force_answer(scene, program, schema);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::ambiguity) continue;
            throw;
        }
        // Keep boolean answer classes roughly balanced: reject a coin-flip
        // mismatch early in the attempt budget.
        if (answer.tag == Answer::Tag::Boolean && attempt < constraints.retry_budget / 2) {
            const bool desired = rng.uniform() < 0.5;
            if (answer.boolean != desired) continue;
        }
        sample.program = std::move(program);
        sample.question_text = std::move(text);
        sample.answer = answer;
        return sample;
    }
    fail(ErrorKind::generation, "question generation exhausted its retry budget");
}

}  // namespace vsa
