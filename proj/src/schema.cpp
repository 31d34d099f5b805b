#include "vsa/schema.hpp"

namespace vsa {

AttributeSchema::AttributeSchema(std::vector<Superordinate> supers) : supers_(std::move(supers)) {
    require(!supers_.empty(), ErrorKind::validation, "schema needs at least one superordinate");
    for (std::size_t k = 0; k < supers_.size(); ++k) {
        const auto& sup = supers_[k];
        require(sup.values.size() >= 2, ErrorKind::validation,
                "superordinate '" + sup.name + "' needs at least 2 concepts");
        require(super_lookup_.emplace(sup.name, static_cast<int>(k)).second, ErrorKind::validation,
                "duplicate superordinate name: " + sup.name);
        first_id_.push_back(static_cast<int>(concept_names_.size()));
        for (std::size_t v = 0; v < sup.values.size(); ++v) {
            const auto& val = sup.values[v];
            require(concept_lookup_.emplace(val, static_cast<int>(concept_names_.size())).second,
                    ErrorKind::validation, "concept name not unique across superordinates: " + val);
            concept_names_.push_back(val);
            concept_super_.push_back(static_cast<int>(k));
            concept_value_.push_back(static_cast<int>(v));
        }
    }
}

AttributeSchema AttributeSchema::clevr() {
    return AttributeSchema({
        {"color", {"gray", "red", "blue", "green", "brown", "purple", "cyan", "yellow"}},
        {"shape", {"cube", "sphere", "cylinder"}},
        {"size", {"small", "large"}},
        {"material", {"rubber", "metal"}},
    });
}

int AttributeSchema::super_index(const std::string& name) const {
    auto it = super_lookup_.find(name);
    return it == super_lookup_.end() ? -1 : it->second;
}

int AttributeSchema::concept_id(const std::string& value) const {
    auto it = concept_lookup_.find(value);
    return it == concept_lookup_.end() ? -1 : it->second;
}

}  // namespace vsa
