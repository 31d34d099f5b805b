#include "vsa/program.hpp"

#include <algorithm>
#include <json.hpp>

namespace vsa {

using nlohmann::json;

Answer Answer::concept_value(int id) {
    Answer a;
    a.tag = Tag::Concept;
    a.concept_id = id;
    return a;
}

Answer Answer::integer_value(long v) {
    Answer a;
    a.tag = Tag::Integer;
    a.integer = v;
    return a;
}

Answer Answer::boolean_value(bool v) {
    Answer a;
    a.tag = Tag::Boolean;
    a.boolean = v;
    return a;
}

bool Answer::operator==(const Answer& o) const {
    if (tag != o.tag) return false;
    switch (tag) {
        case Tag::Concept: return concept_id == o.concept_id;
        case Tag::Integer: return integer == o.integer;
        default: return boolean == o.boolean;
    }
}

QType qtype_from_string(const std::string& s) {
    if (s == "query") return QType::Query;
    if (s == "exist") return QType::Exist;
    if (s == "count") return QType::Count;
    if (s == "count_eq") return QType::CountEq;
    if (s == "count_gt") return QType::CountGt;
    if (s == "count_lt") return QType::CountLt;
    if (s == "compare_attr") return QType::CompareAttr;
    fail(ErrorKind::parse, "unknown question type: " + s);
}

std::string to_string(QType t) {
    switch (t) {
        case QType::Query: return "query";
        case QType::Exist: return "exist";
        case QType::Count: return "count";
        case QType::CountEq: return "count_eq";
        case QType::CountGt: return "count_gt";
        case QType::CountLt: return "count_lt";
        default: return "compare_attr";
    }
}

std::string to_string(Relation r) {
    switch (r) {
        case Relation::Left: return "left";
        case Relation::Right: return "right";
        case Relation::Front: return "front";
        default: return "behind";
    }
}

std::string to_string(CmpOp c) {
    switch (c) {
        case CmpOp::Eq: return "=";
        case CmpOp::Gt: return ">";
        default: return "<";
    }
}

namespace {

Relation relation_from_string(const std::string& s, int pos) {
    if (s == "left") return Relation::Left;
    if (s == "right") return Relation::Right;
    if (s == "front") return Relation::Front;
    if (s == "behind") return Relation::Behind;
    fail(ErrorKind::parse, "step " + std::to_string(pos) + ": unknown relation '" + s + "'");
}

CmpOp cmp_from_string(const std::string& s, int pos) {
    if (s == "=") return CmpOp::Eq;
    if (s == ">") return CmpOp::Gt;
    if (s == "<") return CmpOp::Lt;
    fail(ErrorKind::parse, "step " + std::to_string(pos) + ": unknown comparison '" + s + "'");
}

bool is_terminal(StepKind k) {
    return k == StepKind::Query || k == StepKind::Exist || k == StepKind::Count ||
           k == StepKind::CompareAttr || k == StepKind::CompareCount;
}

bool is_mask_producer(StepKind k) {
    return k == StepKind::Scene || k == StepKind::Filter || k == StepKind::Relate;
}

std::size_t expected_arity(StepKind k) {
    switch (k) {
        case StepKind::Scene: return 0;
        case StepKind::CompareAttr:
        case StepKind::CompareCount: return 2;
        default: return 1;
    }
}

}  // namespace

void validate_program(const Program& program, const AttributeSchema& schema) {
    require(!program.empty(), ErrorKind::parse, "empty program");
    std::vector<int> consumers(program.size(), 0);
    for (std::size_t i = 0; i < program.size(); ++i) {
        const auto& step = program[i];
        const std::string at = "step " + std::to_string(i) + ": ";
        require(step.inputs.size() == expected_arity(step.kind), ErrorKind::parse,
                at + "wrong input arity");
        for (int in : step.inputs) {
            require(in >= 0 && in < static_cast<int>(i), ErrorKind::parse,
                    at + "dangling slot reference " + std::to_string(in));
            require(is_mask_producer(program[in].kind), ErrorKind::parse,
                    at + "input slot " + std::to_string(in) + " is not an object mask");
            ++consumers[in];
        }
        switch (step.kind) {
            case StepKind::Filter:
                require(step.concept_id >= 0 &&
                            step.concept_id < static_cast<int>(schema.concept_count()),
                        ErrorKind::parse, at + "unknown concept id");
                break;
            case StepKind::Query:
            case StepKind::CompareAttr:
                require(step.super_index >= 0 &&
                            step.super_index < static_cast<int>(schema.super_count()),
                        ErrorKind::parse, at + "unknown superordinate");
                break;
            default: break;
        }
    }
    require(is_terminal(program.back().kind), ErrorKind::parse,
            "final step must produce an answer");
    for (std::size_t i = 0; i + 1 < program.size(); ++i) {
        require(consumers[i] > 0, ErrorKind::parse,
                "step " + std::to_string(i) + ": dead step (only the final step may be unconsumed)");
        require(!is_terminal(program[i].kind), ErrorKind::parse,
                "step " + std::to_string(i) + ": terminal step feeds another step");
    }
}

int program_depth(const Program& program) {
    std::vector<int> depth(program.size(), 0);
    for (std::size_t i = 0; i < program.size(); ++i) {
        if (program[i].kind == StepKind::Scene) {
            depth[i] = 0;
            continue;
        }
        int best = 0;
        for (int in : program[i].inputs) best = std::max(best, depth[in]);
        depth[i] = best + 1;
    }
    return program.empty() ? 0 : depth.back();
}

std::string serialize_sample(const QASample& sample, const AttributeSchema& schema) {
    json steps = json::array();
    for (const auto& step : sample.program) {
        json s;
        switch (step.kind) {
            case StepKind::Scene: s["op"] = "scene"; break;
            case StepKind::Filter:
                s["op"] = "filter";
                s["concept"] = schema.concept_name(step.concept_id);
                break;
            case StepKind::Relate:
                s["op"] = "relate";
                s["relation"] = to_string(step.relation);
                break;
            case StepKind::Query:
                s["op"] = "query";
                s["attribute"] = schema.super_name(step.super_index);
                break;
            case StepKind::Exist: s["op"] = "exist"; break;
            case StepKind::Count: s["op"] = "count"; break;
            case StepKind::CompareAttr:
                s["op"] = "compare_attr";
                s["attribute"] = schema.super_name(step.super_index);
                break;
            case StepKind::CompareCount:
                s["op"] = "compare_count";
                s["cmp"] = to_string(step.cmp);
                break;
        }
        if (!step.inputs.empty()) s["in"] = step.inputs;
        steps.push_back(std::move(s));
    }
    json answer;
    switch (sample.answer.tag) {
        case Answer::Tag::Concept:
            answer = {{"type", "concept"}, {"value", schema.concept_name(sample.answer.concept_id)}};
            break;
        case Answer::Tag::Integer:
            answer = {{"type", "integer"}, {"value", sample.answer.integer}};
            break;
        case Answer::Tag::Boolean:
            answer = {{"type", "boolean"}, {"value", sample.answer.boolean}};
            break;
    }
    json j{{"scene_id", sample.scene_id},
           {"qtype", to_string(sample.qtype)},
           {"depth", sample.depth},
           {"program", steps},
           {"question_text", sample.question_text},
           {"answer", answer}};
    return j.dump();
}

QASample parse_sample(const std::string& line, const AttributeSchema& schema) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        fail(ErrorKind::parse, std::string("qa sample: bad JSON: ") + e.what());
    }
    QASample sample;
    try {
        sample.scene_id = j.at("scene_id").get<std::uint64_t>();
        sample.qtype = qtype_from_string(j.at("qtype").get<std::string>());
        sample.depth = j.at("depth").get<int>();
        sample.question_text = j.value("question_text", "");

        int pos = 0;
        for (const auto& s : j.at("program")) {
            ProgramStep step;
            const std::string op = s.at("op").get<std::string>();
            if (op == "scene") {
                step.kind = StepKind::Scene;
            } else if (op == "filter") {
                step.kind = StepKind::Filter;
                const std::string token = s.at("concept").get<std::string>();
                step.concept_id = schema.concept_id(token);
                require(step.concept_id >= 0, ErrorKind::parse,
                        "step " + std::to_string(pos) + ": unknown concept '" + token + "'");
            } else if (op == "relate") {
                step.kind = StepKind::Relate;
                step.relation = relation_from_string(s.at("relation").get<std::string>(), pos);
            } else if (op == "query" || op == "compare_attr") {
                step.kind = op == "query" ? StepKind::Query : StepKind::CompareAttr;
                const std::string token = s.at("attribute").get<std::string>();
                step.super_index = schema.super_index(token);
                require(step.super_index >= 0, ErrorKind::parse,
                        "step " + std::to_string(pos) + ": unknown superordinate '" + token + "'");
            } else if (op == "exist") {
                step.kind = StepKind::Exist;
            } else if (op == "count") {
                step.kind = StepKind::Count;
            } else if (op == "compare_count") {
                step.kind = StepKind::CompareCount;
                step.cmp = cmp_from_string(s.at("cmp").get<std::string>(), pos);
            } else {
                fail(ErrorKind::parse, "step " + std::to_string(pos) + ": unknown kind '" + op + "'");
            }
            if (s.contains("in")) step.inputs = s.at("in").get<std::vector<int>>();
            sample.program.push_back(std::move(step));
            ++pos;
        }

        const auto& ans = j.at("answer");
        const std::string type = ans.at("type").get<std::string>();
        if (type == "concept") {
            const std::string token = ans.at("value").get<std::string>();
            const int cid = schema.concept_id(token);
            require(cid >= 0, ErrorKind::parse, "answer: unknown concept '" + token + "'");
            sample.answer = Answer::concept_value(cid);
        } else if (type == "integer") {
            sample.answer = Answer::integer_value(ans.at("value").get<long>());
        } else if (type == "boolean") {
            sample.answer = Answer::boolean_value(ans.at("value").get<bool>());
        } else {
            fail(ErrorKind::parse, "answer: unknown type '" + type + "'");
        }
    } catch (const json::exception& e) {
        fail(ErrorKind::parse, std::string("qa sample: missing or mistyped field: ") + e.what());
    }
    validate_program(sample.program, schema);
    return sample;
}

}  // namespace vsa
