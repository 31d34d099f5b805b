#include "vsa/learner.hpp"

#include <fstream>
#include <json.hpp>

namespace vsa {

using nlohmann::json;

Learner::Learner(const AttributeSchema& schema, const EngineConfig& config) : config_(config) {
    Rng init_rng(Rng::derive(config.seed, 0x1417));
    space_ = std::make_unique<ConceptSpace>(schema, config.judgment, store_, init_rng);
}

void Learner::set_ablation(const std::string& tag) {
    require(tag == "none" || tag == "no-cc" || tag == "no-sl" || tag == "no-abs",
            ErrorKind::validation, "unknown ablation tag: " + tag);
    ablation_ = tag;
}

bool Learner::clustering_enabled() const {
    return config_.curriculum.clustering && ablation_ != "no-cc" && ablation_ != "no-abs";
}

bool Learner::shortcut_enabled() const {
    return config_.curriculum.shortcut && ablation_ != "no-sl" && ablation_ != "no-abs";
}

ExecMode Learner::eval_mode() const {
    if (!abstraction_enabled()) return ExecMode::Mixture;
    return clustering_enabled() ? ExecMode::Clustered : ExecMode::Super;
}

std::vector<int> Learner::enabled_debias_heads() const {
    std::vector<int> out;
    if (!space_->frozen()) return out;
    for (std::size_t i = 0; i < space_->heads().size(); ++i) {
        if (head_table_deviation(*space_, store_, space_->heads()[i]) >=
            config_.judgment.debias_head_threshold)
            out.push_back(static_cast<int>(i));
    }
    return out;
}

std::string Learner::to_checkpoint_json() const {
    json j;
    j["format"] = "vsa-checkpoint-v1";
    j["config"] = json::parse(config_.to_json());
    j["ablate"] = ablation_;
    j["train_condition"] = train_condition_;
    json supers = json::array();
    for (const auto& s : schema().supers()) supers.push_back({{"name", s.name}, {"values", s.values}});
    j["schema"] = supers;
    j["frozen"] = space_->frozen();
    if (space_->frozen()) {
        json assignment = json::object();
        for (int c = 0; c < static_cast<int>(schema().concept_count()); ++c)
            assignment[schema().concept_name(c)] = schema().super_name(space_->assigned_super(c));
        j["assignment"] = assignment;
    }
    json caches = json::object();
    for (int c = 0; c < static_cast<int>(schema().concept_count()); ++c) {
        const auto& entry = space_->cache(c);
        caches[schema().concept_name(c)] = {{"count", entry.count}, {"mean", entry.mean}};
    }
    j["caches"] = caches;
    json params = json::object();
    for (std::size_t i = 0; i < store_.size(); ++i) {
        const auto& t = store_.value(static_cast<int>(i));
        json shape = json::array();
        if (t.shape.rank >= 1) shape.push_back(t.shape.dims[0]);
        if (t.shape.rank >= 2) shape.push_back(t.shape.dims[1]);
        params[store_.name(static_cast<int>(i))] = {{"shape", shape}, {"data", t.data}};
    }
    j["params"] = params;
    return j.dump();
}

std::unique_ptr<Learner> Learner::from_checkpoint_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorKind::parse, std::string("checkpoint: bad JSON: ") + e.what());
    }
    try {
        require(j.value("format", "") == "vsa-checkpoint-v1", ErrorKind::parse,
                "checkpoint: unknown format tag");
        std::vector<AttributeSchema::Superordinate> supers;
        for (const auto& s : j.at("schema"))
            supers.push_back({s.at("name").get<std::string>(),
                              s.at("values").get<std::vector<std::string>>()});
        AttributeSchema schema(std::move(supers));
        EngineConfig cfg = EngineConfig::from_json(j.at("config").dump());
        auto learner = std::make_unique<Learner>(schema, cfg);
        learner->set_ablation(j.value("ablate", "none"));
        learner->set_train_condition(j.value("train_condition", "uniform"));

        for (const auto& [name, pj] : j.at("params").items()) {
            const int idx = learner->store_.index_of(name);
            require(idx >= 0, ErrorKind::parse, "checkpoint: unknown parameter " + name);
            auto& value = learner->store_.value(idx);
            auto data = pj.at("data").get<std::vector<double>>();
            require(data.size() == value.data.size(), ErrorKind::parse,
                    "checkpoint: size mismatch for " + name);
            value.data = std::move(data);
        }
        if (j.value("frozen", false)) {
            std::vector<int> assignment(schema.concept_count(), -1);
            for (const auto& [cname, sname] : j.at("assignment").items()) {
                const int cid = schema.concept_id(cname);
                const int k = learner->schema().super_index(sname.get<std::string>());
                require(cid >= 0 && k >= 0, ErrorKind::parse, "checkpoint: bad assignment entry");
                assignment[cid] = k;
            }
            learner->space_->restore_assignment(assignment);
        }
        for (const auto& [cname, cj] : j.at("caches").items()) {
            const int cid = schema.concept_id(cname);
            require(cid >= 0, ErrorKind::parse, "checkpoint: unknown cache concept " + cname);
            auto& entry = learner->space_->mutable_cache(cid);
            entry.count = cj.at("count").get<long>();
            entry.mean = cj.at("mean").get<std::vector<double>>();
        }
        return learner;
    } catch (const json::exception& e) {
        fail(ErrorKind::parse, std::string("checkpoint: missing or mistyped field: ") + e.what());
    }
}

void Learner::save_checkpoint(const std::string& path) const {
    std::ofstream out(path);
    require(out.good(), ErrorKind::io, "cannot write checkpoint " + path);
    out << to_checkpoint_json() << '\n';
    require(out.good(), ErrorKind::io, "checkpoint write failed: " + path);
}

std::unique_ptr<Learner> Learner::load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::io, "cannot open checkpoint " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_checkpoint_json(text);
}

}  // namespace vsa
