#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "vsa/common.hpp"

namespace vsa {

// Attribute vocabulary: an ordered list of superordinates (color, shape, ...),
// each with its concept values. Concept ids are global and stable, numbered
// through the superordinates in declaration order.
class AttributeSchema {
public:
    struct Superordinate {
        std::string name;
        std::vector<std::string> values;
    };

    AttributeSchema() = default;
    explicit AttributeSchema(std::vector<Superordinate> supers);

    static AttributeSchema clevr();

    const std::vector<Superordinate>& supers() const { return supers_; }
    std::size_t super_count() const { return supers_.size(); }
    std::size_t concept_count() const { return concept_names_.size(); }

    int super_index(const std::string& name) const;          // -1 if absent
    int concept_id(const std::string& value) const;          // -1 if absent
    const std::string& super_name(int k) const { return supers_.at(k).name; }
    const std::string& concept_name(int concept_id) const { return concept_names_.at(concept_id); }
    int concept_super(int concept_id) const { return concept_super_.at(concept_id); }
    int concept_value_index(int concept_id) const { return concept_value_.at(concept_id); }
    int concept_of(int super_idx, int value_idx) const { return first_id_.at(super_idx) + value_idx; }
    std::size_t vocab_size(int super_idx) const { return supers_.at(super_idx).values.size(); }

private:
    std::vector<Superordinate> supers_;
    std::vector<std::string> concept_names_;
    std::vector<int> concept_super_;
    std::vector<int> concept_value_;
    std::vector<int> first_id_;
    std::unordered_map<std::string, int> super_lookup_;
    std::unordered_map<std::string, int> concept_lookup_;
};

}  // namespace vsa
