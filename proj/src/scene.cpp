#include "vsa/scene.hpp"

#include <cmath>
#include <json.hpp>

#include "vsa/linalg.hpp"

namespace vsa {

using nlohmann::json;

namespace {
constexpr std::uint64_t kUniverseStream = 0xA11CE0;
constexpr std::uint64_t kSceneStream = 0x5CE4E5;
constexpr std::uint64_t kNoiseStream = 0xFEA70;

struct PaletteRule {
    int shape_value;
    std::vector<int> colors;
};

// Palette restrictions resolved against the schema by name.
std::vector<PaletteRule> palette_rules(const AttributeSchema& schema, BiasCondition cond) {
    if (cond == BiasCondition::uniform) return {};
    const int color_k = schema.super_index("color");
    const int shape_k = schema.super_index("shape");
    require(color_k >= 0 && shape_k >= 0, ErrorKind::validation,
            "cogent conditions need 'color' and 'shape' superordinates");
    auto value_idx = [&](int k, const char* name) {
        const int cid = schema.concept_id(name);
        require(cid >= 0 && schema.concept_super(cid) == k, ErrorKind::validation,
                std::string("cogent conditions need concept '") + name + "'");
        return schema.concept_value_index(cid);
    };
    std::vector<int> palette_a{value_idx(color_k, "gray"), value_idx(color_k, "blue"),
                               value_idx(color_k, "brown"), value_idx(color_k, "yellow")};
    std::vector<int> palette_b{value_idx(color_k, "red"), value_idx(color_k, "green"),
                               value_idx(color_k, "purple"), value_idx(color_k, "cyan")};
    if (cond == BiasCondition::cogent_B) std::swap(palette_a, palette_b);
    return {{value_idx(shape_k, "cube"), palette_a}, {value_idx(shape_k, "cylinder"), palette_b}};
}

}  // namespace

BiasCondition bias_condition_from_string(const std::string& s) {
    if (s == "uniform") return BiasCondition::uniform;
    if (s == "cogent_A") return BiasCondition::cogent_A;
    if (s == "cogent_B") return BiasCondition::cogent_B;
    fail(ErrorKind::validation, "unknown bias condition: " + s);
}

std::string to_string(BiasCondition c) {
    switch (c) {
        case BiasCondition::uniform: return "uniform";
        case BiasCondition::cogent_A: return "cogent_A";
        default: return "cogent_B";
    }
}

void Universe::finish_init() {
    total_latent_ = 0;
    require(cfg_.latent_dims.size() == schema_.super_count(), ErrorKind::validation,
            "latent_dims must have one entry per superordinate");
    for (std::size_t d : cfg_.latent_dims) {
        require(d >= 2, ErrorKind::validation, "latent dims must be >= 2");
        total_latent_ += d;
    }
    require(cfg_.feature_dim >= total_latent_, ErrorKind::validation,
            "feature_dim must be at least the total latent dim");
    require(cfg_.latent_scales.size() == schema_.super_count(), ErrorKind::validation,
            "latent_scales must have one entry per superordinate");
    for (double s : cfg_.latent_scales)
        require(s > 0.0, ErrorKind::validation, "latent scales must be positive");
    require(cfg_.noise_sigma >= 0.0, ErrorKind::validation, "noise_sigma must be >= 0");

    // Nearest foreign latent within each superordinate, used by perturbation.
    nearest_other_.assign(schema_.concept_count(), -1);
    for (std::size_t k = 0; k < schema_.super_count(); ++k) {
        const int first = schema_.concept_of(static_cast<int>(k), 0);
        const int count = static_cast<int>(schema_.vocab_size(static_cast<int>(k)));
        for (int a = 0; a < count; ++a) {
            double best = 0.0;
            int best_id = -1;
            for (int b = 0; b < count; ++b) {
                if (a == b) continue;
                double d2 = 0.0;
                const auto& la = latents_[first + a];
                const auto& lb = latents_[first + b];
                for (std::size_t i = 0; i < la.size(); ++i) {
                    const double d = la[i] - lb[i];
                    d2 += d * d;
                }
                if (best_id < 0 || d2 < best) {
                    best = d2;
                    best_id = first + b;
                }
            }
            nearest_other_[first + a] = best_id;
        }
    }
}

Universe Universe::make(std::uint64_t master_seed, const UniverseConfig& cfg,
                        const AttributeSchema& schema) {
    Universe u;
    u.schema_ = schema;
    u.cfg_ = cfg;
    u.master_seed_ = master_seed;

    Rng rng(Rng::derive(master_seed, kUniverseStream));
    std::size_t total = 0;
    for (std::size_t d : cfg.latent_dims) total += d;

    u.latents_.resize(schema.concept_count());
    for (std::size_t k = 0; k < schema.super_count(); ++k) {
        const std::size_t dim = cfg.latent_dims.at(k);
        const int first = schema.concept_of(static_cast<int>(k), 0);
        const int count = static_cast<int>(schema.vocab_size(static_cast<int>(k)));
        const double scale = cfg.latent_scales.at(k);
        for (int v = 0; v < count; ++v)
            u.latents_[first + v] = rng.normal_vec(dim, scale);
        for (int a = 0; a < count; ++a)
            for (int b = a + 1; b < count; ++b)
                require(u.latents_[first + a] != u.latents_[first + b], ErrorKind::generation,
                        "degenerate latents for superordinate " + schema.super_name(static_cast<int>(k)));
    }

    const double mixer_scale = 1.0 / std::sqrt(static_cast<double>(total));
    bool ok = false;
    for (int attempt = 0; attempt < cfg.rank_retries && !ok; ++attempt) {
        u.mixer_ = Tensor(Shape::mat(cfg.feature_dim, total));
        for (auto& v : u.mixer_.data) v = rng.normal(0.0, mixer_scale);
        ok = full_column_rank(u.mixer_.data, cfg.feature_dim, total);
    }
    require(ok, ErrorKind::generation, "mixer rank check failed after retries");

    u.finish_init();
    return u;
}

std::vector<double> Universe::synthesize(const std::vector<const std::vector<double>*>& pieces,
                                         std::uint64_t noise_seed) const {
    require(pieces.size() == schema_.super_count(), ErrorKind::contract,
            "synthesize: one latent piece per superordinate required");
    std::vector<double> z;
    z.reserve(total_latent_);
    for (std::size_t k = 0; k < pieces.size(); ++k) {
        require(pieces[k]->size() == cfg_.latent_dims[k], ErrorKind::contract,
                "synthesize: latent piece dimension mismatch");
        z.insert(z.end(), pieces[k]->begin(), pieces[k]->end());
    }
    std::vector<double> out(cfg_.feature_dim, 0.0);
    const double* m = mixer_.data.data();
    for (std::size_t r = 0; r < cfg_.feature_dim; ++r) {
        const double* row = m + r * total_latent_;
        double acc = 0.0;
        for (std::size_t c = 0; c < total_latent_; ++c) acc += row[c] * z[c];
        out[r] = acc;
    }
    if (cfg_.noise_sigma > 0.0) {
        Rng noise(noise_seed);
        for (auto& v : out) v += cfg_.noise_sigma * noise.normal();
    }
    return out;
}

Scene sample_scene(const Universe& universe, BiasCondition condition, int n_objects,
                   std::uint64_t scene_id, std::uint64_t variant) {
    require(n_objects >= 3 && n_objects <= 10, ErrorKind::validation,
            "n_objects must be in [3, 10]");
    const auto& schema = universe.schema();
    const auto rules = palette_rules(schema, condition);
    const int shape_k = condition == BiasCondition::uniform ? -1 : schema.super_index("shape");
    const int color_k = condition == BiasCondition::uniform ? -1 : schema.super_index("color");

    Rng rng(Rng::derive(universe.master_seed(), kSceneStream + variant, scene_id));
    Scene scene;
    scene.scene_id = scene_id;
    scene.condition = condition;
    scene.objects.resize(n_objects);

    for (int o = 0; o < n_objects; ++o) {
        auto& obj = scene.objects[o];
        obj.attributes.assign(schema.super_count(), -1);

        // Shape first so its marginal stays uniform under palette rules; the
        // CoGenT (1/3, 2/3) conditionals rely on that.
        if (shape_k >= 0) obj.attributes[shape_k] = rng.index(schema.vocab_size(shape_k));
        for (std::size_t k = 0; k < schema.super_count(); ++k) {
            if (static_cast<int>(k) == shape_k) continue;
            if (static_cast<int>(k) == color_k) {
                const int shape_v = obj.attributes[shape_k];
                const PaletteRule* rule = nullptr;
                for (const auto& r : rules)
                    if (r.shape_value == shape_v) rule = &r;
                if (rule) {
                    obj.attributes[k] = rule->colors[rng.index(rule->colors.size())];
                    continue;
                }
            }
            obj.attributes[k] = rng.index(schema.vocab_size(static_cast<int>(k)));
        }

        // Positions: rejection sampling against the separation radius.
        const double min_sep2 = universe.config().min_sep * universe.config().min_sep;
        bool placed = false;
        for (int attempt = 0; attempt < universe.config().position_retries; ++attempt) {
            const double x = rng.uniform();
            const double y = rng.uniform();
            bool clear = true;
            for (int p = 0; p < o; ++p) {
                const double dx = x - scene.objects[p].x;
                const double dy = y - scene.objects[p].y;
                if (dx * dx + dy * dy < min_sep2) {
                    clear = false;
                    break;
                }
            }
            if (clear) {
                obj.x = x;
                obj.y = y;
                placed = true;
                break;
            }
        }
        require(placed, ErrorKind::generation, "position sampling exceeded retry budget");

        obj.noise_seed = Rng::derive(universe.master_seed(), kNoiseStream + scene_id,
                                     static_cast<std::uint64_t>(o));
        std::vector<const std::vector<double>*> pieces(schema.super_count());
        for (std::size_t k = 0; k < schema.super_count(); ++k)
            pieces[k] = &universe.latent(schema.concept_of(static_cast<int>(k), obj.attributes[k]));
        obj.feature = universe.synthesize(pieces, obj.noise_seed);
    }
    return scene;
}

Scene perturb_scene(const Universe& universe, const Scene& scene, int super_idx, double rho) {
    const auto& schema = universe.schema();
    require(super_idx >= 0 && super_idx < static_cast<int>(schema.super_count()),
            ErrorKind::validation, "perturb: unknown superordinate");
    require(rho >= 0.0 && rho <= 1.0, ErrorKind::validation, "perturb: rho must be in [0, 1]");

    Scene out = scene;
    const std::size_t dim = universe.config().latent_dims[super_idx];
    std::vector<double> blended(dim);
    for (auto& obj : out.objects) {
        const int cid = schema.concept_of(super_idx, obj.attributes[super_idx]);
        const auto& own = universe.latent(cid);
        const auto& other = universe.latent(universe.nearest_other(cid));
        for (std::size_t i = 0; i < dim; ++i)
            blended[i] = (1.0 - rho) * own[i] + rho * other[i];
        std::vector<const std::vector<double>*> pieces(schema.super_count());
        for (std::size_t k = 0; k < schema.super_count(); ++k) {
            pieces[k] = static_cast<int>(k) == super_idx
                            ? &blended
                            : &universe.latent(schema.concept_of(static_cast<int>(k), obj.attributes[k]));
        }
        obj.feature = universe.synthesize(pieces, obj.noise_seed);
    }
    return out;
}

std::string Universe::to_json() const {
    json j;
    j["master_seed"] = master_seed_;
    j["feature_dim"] = cfg_.feature_dim;
    j["noise_sigma"] = cfg_.noise_sigma;
    j["min_sep"] = cfg_.min_sep;
    j["position_retries"] = cfg_.position_retries;
    j["rank_retries"] = cfg_.rank_retries;
    json supers = json::array();
    for (std::size_t k = 0; k < schema_.super_count(); ++k) {
        json s;
        s["name"] = schema_.super_name(static_cast<int>(k));
        s["values"] = schema_.supers()[k].values;
        s["latent_dim"] = cfg_.latent_dims[k];
        s["latent_scale"] = cfg_.latent_scales[k];
        supers.push_back(s);
    }
    j["superordinates"] = supers;
    json latents = json::object();
    for (std::size_t c = 0; c < schema_.concept_count(); ++c)
        latents[schema_.concept_name(static_cast<int>(c))] = latents_[c];
    j["latents"] = latents;
    j["mixer"] = {{"rows", mixer_.shape.dims[0]}, {"cols", mixer_.shape.dims[1]}, {"data", mixer_.data}};
    return j.dump();
}

Universe Universe::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorKind::parse, std::string("universe: bad JSON: ") + e.what());
    }
    try {
        Universe u;
        std::vector<AttributeSchema::Superordinate> supers;
        UniverseConfig cfg;
        cfg.latent_dims.clear();
        cfg.latent_scales.clear();
        for (const auto& s : j.at("superordinates")) {
            supers.push_back({s.at("name").get<std::string>(),
                              s.at("values").get<std::vector<std::string>>()});
            cfg.latent_dims.push_back(s.at("latent_dim").get<std::size_t>());
            cfg.latent_scales.push_back(s.value("latent_scale", 1.0));
        }
        u.schema_ = AttributeSchema(std::move(supers));
        cfg.feature_dim = j.at("feature_dim").get<std::size_t>();
        cfg.noise_sigma = j.at("noise_sigma").get<double>();
        cfg.min_sep = j.at("min_sep").get<double>();
        cfg.position_retries = j.at("position_retries").get<int>();
        cfg.rank_retries = j.at("rank_retries").get<int>();
        u.cfg_ = cfg;
        u.master_seed_ = j.at("master_seed").get<std::uint64_t>();
        u.latents_.resize(u.schema_.concept_count());
        for (std::size_t c = 0; c < u.schema_.concept_count(); ++c)
            u.latents_[c] =
                j.at("latents").at(u.schema_.concept_name(static_cast<int>(c))).get<std::vector<double>>();
        const auto& m = j.at("mixer");
        u.mixer_ = Tensor(Shape::mat(m.at("rows").get<std::size_t>(), m.at("cols").get<std::size_t>()),
                          m.at("data").get<std::vector<double>>());
        u.finish_init();
        return u;
    } catch (const json::exception& e) {
        fail(ErrorKind::parse, std::string("universe: missing or mistyped field: ") + e.what());
    }
}

}  // namespace vsa
