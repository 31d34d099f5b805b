#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "vsa/question_gen.hpp"
#include "vsa/scene.hpp"

namespace vsa {

// An on-disk dataset directory holds universe.json, scenes.jsonl (one scene
// per line) and qa.jsonl (one question-answer sample per line).
struct Dataset {
    Universe universe;
    std::vector<Scene> scenes;
    std::vector<QASample> samples;
    std::unordered_map<std::uint64_t, std::size_t> scene_index;

    const Scene& scene_of(const QASample& sample) const;
    void rebuild_index();
};

std::string scene_to_jsonl(const Scene& scene, const AttributeSchema& schema);
Scene scene_from_jsonl(const std::string& line, const AttributeSchema& schema);

void write_scenes(const std::string& path, const std::vector<Scene>& scenes,
                  const AttributeSchema& schema);
std::vector<Scene> read_scenes(const std::string& path, const AttributeSchema& schema);

void write_samples(const std::string& path, const std::vector<QASample>& samples,
                   const AttributeSchema& schema);
std::vector<QASample> read_samples(const std::string& path, const AttributeSchema& schema);

// Loads a dataset directory. Every stored answer is re-verified against the
// ground-truth interpreter; a mismatch is a validation error.
Dataset load_dataset(const std::string& dir, bool verify_answers = true);

struct GenerateOptions {
    std::uint64_t seed = 1;
    BiasCondition condition = BiasCondition::uniform;
    std::size_t scene_count = 1000;
    std::size_t questions_per_scene = 10;
    std::uint64_t scene_offset = 0;
    int min_objects = 3;
    int max_objects = 10;
    std::vector<QType> qtypes{QType::Query,   QType::Exist,   QType::Count,      QType::CountEq,
                              QType::CountGt, QType::CountLt, QType::CompareAttr};
    int max_depth_exclusive = 64;
    std::vector<std::string> forbid;    // superordinate names excluded from questions
    std::string perturb_super;          // empty = no perturbation
    double perturb_rho = 0.35;
    UniverseConfig universe;
    unsigned threads = 0;
};

struct GenerateSummary {
    std::size_t scenes = 0;
    std::size_t questions = 0;
};

// Builds the dataset in memory. Deterministic in (seed, scene_offset, flags);
// scene ids are offset + index, so disjoint offsets give disjoint scenes in
// the same universe.
Dataset generate_dataset(const GenerateOptions& options, const AttributeSchema& schema);

// Same, then writes universe.json / scenes.jsonl / qa.jsonl under `dir`.
GenerateSummary generate_dataset_to_dir(const GenerateOptions& options,
                                        const AttributeSchema& schema, const std::string& dir);

}  // namespace vsa
