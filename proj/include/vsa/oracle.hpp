#pragma once

#include "vsa/program.hpp"
#include "vsa/scene.hpp"

namespace vsa {

// Deterministic geometric predicate: is object i in `rel` to object j?
// Positions are in [0,1]^2; front means larger y. Always false on the
// diagonal.
bool related(const Scene& scene, int i, int j, Relation rel);

// Ground-truth interpreter with hard-set semantics over true attributes.
// Relate / Query / CompareAttr on a non-singleton set raise an ambiguity
// error; question generation discards such programs.
Answer brute_force_answer(const Scene& scene, const Program& program,
                          const AttributeSchema& schema);

}  // namespace vsa
