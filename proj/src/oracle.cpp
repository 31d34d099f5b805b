#include "vsa/oracle.hpp"

namespace vsa {

bool related(const Scene& scene, int i, int j, Relation rel) {
    if (i == j) return false;
    const auto& a = scene.objects[i];
    const auto& b = scene.objects[j];
    switch (rel) {
        case Relation::Left: return a.x < b.x;
        case Relation::Right: return a.x > b.x;
        case Relation::Front: return a.y > b.y;
        default: return a.y < b.y;
    }
}

Answer brute_force_answer(const Scene& scene, const Program& program,
                          const AttributeSchema& schema) {
    validate_program(program, schema);
    const int n = static_cast<int>(scene.objects.size());
    std::vector<std::vector<int>> sets(program.size());

    auto singleton = [&](const std::vector<int>& set, const char* what) {
        require(set.size() == 1, ErrorKind::ambiguity,
                std::string(what) + " needs exactly one object, got " + std::to_string(set.size()));
        return set[0];
    };

    for (std::size_t i = 0; i < program.size(); ++i) {
        const auto& step = program[i];
        switch (step.kind) {
            case StepKind::Scene: {
                sets[i].resize(n);
                for (int o = 0; o < n; ++o) sets[i][o] = o;
                break;
            }
            case StepKind::Filter: {
                const int k = schema.concept_super(step.concept_id);
                const int v = schema.concept_value_index(step.concept_id);
                for (int o : sets[step.inputs[0]])
                    if (scene.attribute_value(o, k) == v) sets[i].push_back(o);
                break;
            }
            case StepKind::Relate: {
                const int ref = singleton(sets[step.inputs[0]], "Relate reference");
                for (int o = 0; o < n; ++o)
                    if (related(scene, o, ref, step.relation)) sets[i].push_back(o);
                break;
            }
            case StepKind::Query: {
                const int o = singleton(sets[step.inputs[0]], "Query referent");
                const int v = scene.attribute_value(o, step.super_index);
                return Answer::concept_value(schema.concept_of(step.super_index, v));
            }
            case StepKind::Exist:
                return Answer::boolean_value(!sets[step.inputs[0]].empty());
            case StepKind::Count:
                return Answer::integer_value(static_cast<long>(sets[step.inputs[0]].size()));
            case StepKind::CompareAttr: {
                const int a = singleton(sets[step.inputs[0]], "CompareAttr referent");
                const int b = singleton(sets[step.inputs[1]], "CompareAttr referent");
                return Answer::boolean_value(scene.attribute_value(a, step.super_index) ==
                                             scene.attribute_value(b, step.super_index));
            }
            case StepKind::CompareCount: {
                const long a = static_cast<long>(sets[step.inputs[0]].size());
                const long b = static_cast<long>(sets[step.inputs[1]].size());
                switch (step.cmp) {
                    case CmpOp::Eq: return Answer::boolean_value(a == b);
                    case CmpOp::Gt: return Answer::boolean_value(a > b);
                    default: return Answer::boolean_value(a < b);
                }
            }
        }
    }
    fail(ErrorKind::contract, "program produced no answer");
}

}  // namespace vsa
