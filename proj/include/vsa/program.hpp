#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vsa/schema.hpp"

namespace vsa {

enum class StepKind : std::uint8_t {
    Scene,
    Filter,
    Relate,
    Query,
    Exist,
    Count,
    CompareAttr,
    CompareCount,
};

enum class Relation : std::uint8_t { Left, Right, Front, Behind };
enum class CmpOp : std::uint8_t { Eq, Gt, Lt };

// One typed reasoning step. Programs are DAGs stored in topological order;
// the final step is the single output and must be terminal (Query / Exist /
// Count / CompareAttr / CompareCount). Filter and Relate consume and produce
// object masks.
struct ProgramStep {
    StepKind kind = StepKind::Scene;
    int concept_id = -1;   // Filter
    Relation relation{};   // Relate
    int super_index = -1;  // Query / CompareAttr
    CmpOp cmp{};           // CompareCount
    std::vector<int> inputs;
};

using Program = std::vector<ProgramStep>;

struct Answer {
    enum class Tag : std::uint8_t { Concept, Integer, Boolean };
    Tag tag = Tag::Boolean;
    int concept_id = -1;
    long integer = 0;
    bool boolean = false;

    static Answer concept_value(int id);
    static Answer integer_value(long v);
    static Answer boolean_value(bool v);
    bool operator==(const Answer& o) const;
};

enum class QType : std::uint8_t {
    Query,
    Exist,
    Count,
    CountEq,
    CountGt,
    CountLt,
    CompareAttr,
};

QType qtype_from_string(const std::string& s);
std::string to_string(QType t);
std::string to_string(Relation r);
std::string to_string(CmpOp c);

struct QASample {
    std::uint64_t scene_id = 0;
    QType qtype = QType::Query;
    int depth = 0;
    Program program;
    std::string question_text;  // rendered template, documentation only
    Answer answer;
};

// Structural validation: arities, slot references, typing, single output.
// Throws parse errors with step positions on violation.
void validate_program(const Program& program, const AttributeSchema& schema);

// Longest root-to-output chain; a Scene step counts as depth 0. Branching
// programs take the maximum over branches.
int program_depth(const Program& program);

// JSON-line (de)serialization. Round-trips losslessly; parse rejects unknown
// kinds, unknown concepts and dangling slot references with position info.
std::string serialize_sample(const QASample& sample, const AttributeSchema& schema);
QASample parse_sample(const std::string& line, const AttributeSchema& schema);

}  // namespace vsa
