#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vsa/concept_space.hpp"
#include "vsa/executor.hpp"
#include "vsa/optimizer.hpp"
#include "vsa/program.hpp"
#include "vsa/scene.hpp"

namespace vsa {

struct LessonConfig {
    int epochs = 0;
    std::size_t scenes = 0;               // used when the trainer generates its own data
    std::size_t questions_per_scene = 10;
    int max_depth_exclusive = 64;
    int min_objects = 3;
    int max_objects = 10;
    std::vector<QType> qtypes;
};

struct CurriculumConfig {
    int batch_size = 32;  // training batch size
    LessonConfig lesson1{8, 2000, 10, 6, 3, 5, {QType::Query}};
    LessonConfig lesson2{6,
                         4000,
                         10,
                         64,
                         3,
                         10,
                         {QType::Query, QType::Exist, QType::Count, QType::CountEq, QType::CountGt,
                          QType::CountLt, QType::CompareAttr}};
    bool include_lesson1_data = true;  // lesson 2 trains on the union of both lessons
    bool clustering = true;            // quasi-center cache + Eq. 8 judgments
    bool shortcut = true;              // alternating shortcut-head training
    double freeze_margin = 0.1;        // softmax top1-top2 below this counts as low margin
    double freeze_max_low_fraction = 0.25;
    int val_questions = 500;
    int theta_hash_interval = 1;       // hash-check theta every N phi-steps
};

// The whole engine configuration: one JSON document, every default printable.
struct EngineConfig {
    std::uint64_t seed = 1;
    unsigned threads = 0;  // 0 = hardware concurrency
    UniverseConfig universe;
    JudgmentConfig judgment;
    ExecutorConfig executor;
    AdamWConfig optimizer;
    CurriculumConfig curriculum;
    // The paper names the optimizer and learning rate but no clipping or
    // schedule; both are explicitly none and recorded here.
    std::string grad_clip = "none";
    std::string lr_schedule = "none";

    std::string to_json(bool pretty = false) const;
    static EngineConfig from_json(const std::string& text);
    static EngineConfig from_file(const std::string& path);

    // FNV-1a over the canonical JSON dump; embedded in every report.
    std::uint64_t hash() const;
};

std::string qtype_list_string(const std::vector<QType>& qtypes);

}  // namespace vsa
