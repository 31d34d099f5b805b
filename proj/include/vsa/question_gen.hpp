#pragma once

#include "vsa/oracle.hpp"
#include "vsa/program.hpp"
#include "vsa/rng.hpp"
#include "vsa/scene.hpp"

namespace vsa {

struct QuestionConstraints {
    std::vector<int> forbidden_supers;  // no Filter / Query / CompareAttr on these
    int max_depth_exclusive = 64;       // program depth must stay below this
    int retry_budget = 64;
};

// Template-based generation standing in for a language parser: emits a typed
// program plus a rendered question string and its oracle answer. Query and
// compare-attribute programs are referentially unique by construction.
// Throws a generation error when the retry budget is exhausted (the caller
// resamples the scene).
QASample generate_question(const Scene& scene, const AttributeSchema& schema, QType qtype,
                           const QuestionConstraints& constraints, Rng& rng);

}  // namespace vsa
