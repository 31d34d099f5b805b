#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vsa/rng.hpp"
#include "vsa/schema.hpp"
#include "vsa/tensor.hpp"

namespace vsa {

// CoGenT-style palette restrictions: condition A ties cubes to one half of
// the color vocabulary and cylinders to the other; condition B swaps the
// palettes; spheres take every color in both.
enum class BiasCondition { uniform, cogent_A, cogent_B };

BiasCondition bias_condition_from_string(const std::string& s);
std::string to_string(BiasCondition c);

struct UniverseConfig {
    std::vector<std::size_t> latent_dims{8, 4, 2, 2};  // per superordinate
    // Latent scale per superordinate. Sub-unit scales shrink the separation
    // between that attribute's values relative to the feature noise, making
    // its perception genuinely ambiguous (the regime where priors matter).
    std::vector<double> latent_scales{1.0, 0.35, 1.0, 1.0};
    std::size_t feature_dim = 256;
    double noise_sigma = 0.4;
    double min_sep = 0.1;
    int position_retries = 20;
    int rank_retries = 5;
};

// The generative world behind every scene: one fixed latent vector per
// concept value and a fixed full-rank mixing matrix that maps concatenated
// latents to the object feature. Object features are therefore linearly
// decodable by construction, while the mixing keeps subspaces off-axis.
class Universe {
public:
    static Universe make(std::uint64_t master_seed, const UniverseConfig& cfg,
                         const AttributeSchema& schema);

    const AttributeSchema& schema() const { return schema_; }
    const UniverseConfig& config() const { return cfg_; }
    std::uint64_t master_seed() const { return master_seed_; }
    const std::vector<double>& latent(int concept_id) const { return latents_.at(concept_id); }
    int nearest_other(int concept_id) const { return nearest_other_.at(concept_id); }
    const Tensor& mixer() const { return mixer_; }
    std::size_t total_latent_dim() const { return total_latent_; }

    // Feature for one latent piece per superordinate, with fresh noise drawn
    // from `noise_seed`.
    std::vector<double> synthesize(const std::vector<const std::vector<double>*>& pieces,
                                   std::uint64_t noise_seed) const;

    // Serialization (single JSON document).
    std::string to_json() const;
    static Universe from_json(const std::string& text);

private:
    AttributeSchema schema_;
    UniverseConfig cfg_;
    std::uint64_t master_seed_ = 0;
    std::vector<std::vector<double>> latents_;  // per concept id
    std::vector<int> nearest_other_;            // per concept id, same superordinate
    Tensor mixer_;                              // feature_dim x total_latent
    std::size_t total_latent_ = 0;

    void finish_init();
};

struct SceneObject {
    std::vector<int> attributes;  // value index per superordinate
    double x = 0.0, y = 0.0;
    std::vector<double> feature;
    std::uint64_t noise_seed = 0;  // not serialized; kept for re-synthesis
};

struct Scene {
    std::uint64_t scene_id = 0;
    BiasCondition condition = BiasCondition::uniform;
    std::vector<SceneObject> objects;

    int attribute_value(int obj, int super_idx) const {
        return objects.at(obj).attributes.at(super_idx);
    }
};

// Deterministic: (master seed, scene_id, variant) fully determines the
// result. The variant salt lets a caller resample a scene that cannot host a
// requested question while keeping the pipeline reproducible.
Scene sample_scene(const Universe& universe, BiasCondition condition, int n_objects,
                   std::uint64_t scene_id, std::uint64_t variant = 0);

// Shifts every object's latent for one superordinate toward its nearest
// foreign latent: latent' = (1-rho) * own + rho * nearest. Ground-truth
// attributes stay unchanged; features are re-synthesized with each object's
// original noise stream, so rho = 0 reproduces the input bit for bit.
Scene perturb_scene(const Universe& universe, const Scene& scene, int super_idx, double rho);

}  // namespace vsa
