#include "vsa/config.hpp"

#include <fstream>
#include <json.hpp>

namespace vsa {

using nlohmann::json;

namespace {

json lesson_to_json(const LessonConfig& l) {
    json qtypes = json::array();
    for (auto q : l.qtypes) qtypes.push_back(to_string(q));
    return {{"epochs", l.epochs},
            {"scenes", l.scenes},
            {"questions_per_scene", l.questions_per_scene},
            {"max_depth_exclusive", l.max_depth_exclusive},
            {"min_objects", l.min_objects},
            {"max_objects", l.max_objects},
            {"qtypes", qtypes}};
}

LessonConfig lesson_from_json(const json& j, LessonConfig base) {
    base.epochs = j.value("epochs", base.epochs);
    base.scenes = j.value("scenes", base.scenes);
    base.questions_per_scene = j.value("questions_per_scene", base.questions_per_scene);
    base.max_depth_exclusive = j.value("max_depth_exclusive", base.max_depth_exclusive);
    base.min_objects = j.value("min_objects", base.min_objects);
    base.max_objects = j.value("max_objects", base.max_objects);
    if (j.contains("qtypes")) {
        base.qtypes.clear();
        for (const auto& q : j.at("qtypes"))
            base.qtypes.push_back(qtype_from_string(q.get<std::string>()));
    }
    return base;
}

}  // namespace

std::string qtype_list_string(const std::vector<QType>& qtypes) {
    std::string out;
    for (auto q : qtypes) {
        if (!out.empty()) out += ",";
        out += to_string(q);
    }
    return out;
}

std::string EngineConfig::to_json(bool pretty) const {
    json j;
    j["seed"] = seed;
    j["threads"] = threads;
    j["grad_clip"] = grad_clip;
    j["lr_schedule"] = lr_schedule;
    j["universe"] = {{"latent_dims", universe.latent_dims},
                     {"latent_scales", universe.latent_scales},
                     {"feature_dim", universe.feature_dim},
                     {"noise_sigma", universe.noise_sigma},
                     {"min_sep", universe.min_sep},
                     {"position_retries", universe.position_retries},
                     {"rank_retries", universe.rank_retries}};
    j["judgment"] = {{"gamma", judgment.gamma},
                     {"tau", judgment.tau},
                     {"alpha", judgment.alpha},
                     {"cache_min", judgment.cache_min},
                     {"debias_lambda", judgment.debias_lambda},
                     {"debias_head_threshold", judgment.debias_head_threshold},
                     {"subspace_dim", judgment.subspace_dim},
                     {"feature_dim", judgment.feature_dim},
                     {"embedding_init_std", judgment.embedding_init_std}};
    j["executor"] = {{"tau_count", executor.tau_count}, {"tau_count_eq", executor.tau_count_eq}};
    j["optimizer"] = {{"lr", optimizer.lr},
                      {"beta1", optimizer.beta1},
                      {"beta2", optimizer.beta2},
                      {"eps", optimizer.eps},
                      {"weight_decay", optimizer.weight_decay}};
    j["curriculum"] = {{"batch_size", curriculum.batch_size},
                       {"lesson1", lesson_to_json(curriculum.lesson1)},
                       {"lesson2", lesson_to_json(curriculum.lesson2)},
                       {"include_lesson1_data", curriculum.include_lesson1_data},
                       {"clustering", curriculum.clustering},
                       {"shortcut", curriculum.shortcut},
                       {"freeze_margin", curriculum.freeze_margin},
                       {"freeze_max_low_fraction", curriculum.freeze_max_low_fraction},
                       {"val_questions", curriculum.val_questions},
                       {"theta_hash_interval", curriculum.theta_hash_interval}};
    return pretty ? j.dump(2) : j.dump();
}

EngineConfig EngineConfig::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorKind::parse, std::string("config: bad JSON: ") + e.what());
    }
    EngineConfig cfg;
    try {
        cfg.seed = j.value("seed", cfg.seed);
        cfg.threads = j.value("threads", cfg.threads);
        cfg.grad_clip = j.value("grad_clip", cfg.grad_clip);
        cfg.lr_schedule = j.value("lr_schedule", cfg.lr_schedule);
        require(cfg.grad_clip == "none" && cfg.lr_schedule == "none", ErrorKind::validation,
                "config: only grad_clip=none and lr_schedule=none are implemented");
        if (j.contains("universe")) {
            const auto& u = j.at("universe");
            cfg.universe.latent_dims =
                u.value("latent_dims", cfg.universe.latent_dims);
            cfg.universe.latent_scales = u.value("latent_scales", cfg.universe.latent_scales);
            cfg.universe.feature_dim = u.value("feature_dim", cfg.universe.feature_dim);
            cfg.universe.noise_sigma = u.value("noise_sigma", cfg.universe.noise_sigma);
            cfg.universe.min_sep = u.value("min_sep", cfg.universe.min_sep);
            cfg.universe.position_retries =
                u.value("position_retries", cfg.universe.position_retries);
            cfg.universe.rank_retries = u.value("rank_retries", cfg.universe.rank_retries);
        }
        if (j.contains("judgment")) {
            const auto& q = j.at("judgment");
            cfg.judgment.gamma = q.value("gamma", cfg.judgment.gamma);
            cfg.judgment.tau = q.value("tau", cfg.judgment.tau);
            cfg.judgment.alpha = q.value("alpha", cfg.judgment.alpha);
            cfg.judgment.cache_min = q.value("cache_min", cfg.judgment.cache_min);
            cfg.judgment.debias_lambda = q.value("debias_lambda", cfg.judgment.debias_lambda);
            cfg.judgment.debias_head_threshold =
                q.value("debias_head_threshold", cfg.judgment.debias_head_threshold);
            cfg.judgment.subspace_dim = q.value("subspace_dim", cfg.judgment.subspace_dim);
            cfg.judgment.feature_dim = q.value("feature_dim", cfg.judgment.feature_dim);
            cfg.judgment.embedding_init_std =
                q.value("embedding_init_std", cfg.judgment.embedding_init_std);
        }
        if (j.contains("executor")) {
            const auto& e = j.at("executor");
            cfg.executor.tau_count = e.value("tau_count", cfg.executor.tau_count);
            cfg.executor.tau_count_eq = e.value("tau_count_eq", cfg.executor.tau_count_eq);
        }
        if (j.contains("optimizer")) {
            const auto& o = j.at("optimizer");
            cfg.optimizer.lr = o.value("lr", cfg.optimizer.lr);
            cfg.optimizer.beta1 = o.value("beta1", cfg.optimizer.beta1);
            cfg.optimizer.beta2 = o.value("beta2", cfg.optimizer.beta2);
            cfg.optimizer.eps = o.value("eps", cfg.optimizer.eps);
            cfg.optimizer.weight_decay = o.value("weight_decay", cfg.optimizer.weight_decay);
        }
        if (j.contains("curriculum")) {
            const auto& c = j.at("curriculum");
            cfg.curriculum.batch_size = c.value("batch_size", cfg.curriculum.batch_size);
            if (c.contains("lesson1"))
                cfg.curriculum.lesson1 = lesson_from_json(c.at("lesson1"), cfg.curriculum.lesson1);
            if (c.contains("lesson2"))
                cfg.curriculum.lesson2 = lesson_from_json(c.at("lesson2"), cfg.curriculum.lesson2);
            cfg.curriculum.include_lesson1_data =
                c.value("include_lesson1_data", cfg.curriculum.include_lesson1_data);
            cfg.curriculum.clustering = c.value("clustering", cfg.curriculum.clustering);
            cfg.curriculum.shortcut = c.value("shortcut", cfg.curriculum.shortcut);
            cfg.curriculum.freeze_margin = c.value("freeze_margin", cfg.curriculum.freeze_margin);
            cfg.curriculum.freeze_max_low_fraction =
                c.value("freeze_max_low_fraction", cfg.curriculum.freeze_max_low_fraction);
            cfg.curriculum.val_questions = c.value("val_questions", cfg.curriculum.val_questions);
            cfg.curriculum.theta_hash_interval =
                c.value("theta_hash_interval", cfg.curriculum.theta_hash_interval);
        }
    } catch (const json::exception& e) {
        fail(ErrorKind::parse, std::string("config: mistyped field: ") + e.what());
    }
    return cfg;
}

EngineConfig EngineConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::io, "cannot open config file " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json(text);
}

std::uint64_t EngineConfig::hash() const {
    const std::string text = to_json();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace vsa
