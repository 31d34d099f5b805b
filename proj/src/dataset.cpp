#include "vsa/dataset.hpp"

#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "vsa/parallel.hpp"

namespace vsa {

using nlohmann::json;

const Scene& Dataset::scene_of(const QASample& sample) const {
    auto it = scene_index.find(sample.scene_id);
    require(it != scene_index.end(), ErrorKind::validation,
            "qa sample references unknown scene " + std::to_string(sample.scene_id));
    return scenes[it->second];
}

void Dataset::rebuild_index() {
    scene_index.clear();
    for (std::size_t i = 0; i < scenes.size(); ++i) scene_index[scenes[i].scene_id] = i;
}

std::string scene_to_jsonl(const Scene& scene, const AttributeSchema& schema) {
    json objects = json::array();
    for (const auto& obj : scene.objects) {
        json attrs = json::object();
        for (std::size_t k = 0; k < schema.super_count(); ++k)
            attrs[schema.super_name(static_cast<int>(k))] =
                schema.supers()[k].values[obj.attributes[k]];
        objects.push_back(
            {{"attributes", attrs}, {"position", {obj.x, obj.y}}, {"feature", obj.feature}});
    }
    json j{{"scene_id", scene.scene_id},
           {"condition", to_string(scene.condition)},
           {"objects", objects}};
    return j.dump();
}

Scene scene_from_jsonl(const std::string& line, const AttributeSchema& schema) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        fail(ErrorKind::parse, std::string("scene: bad JSON: ") + e.what());
    }
    try {
        Scene scene;
        scene.scene_id = j.at("scene_id").get<std::uint64_t>();
        scene.condition = bias_condition_from_string(j.at("condition").get<std::string>());
        for (const auto& o : j.at("objects")) {
            SceneObject obj;
            obj.attributes.assign(schema.super_count(), -1);
            for (const auto& [name, value] : o.at("attributes").items()) {
                const int k = schema.super_index(name);
                require(k >= 0, ErrorKind::parse, "scene: unknown superordinate '" + name + "'");
                const int cid = schema.concept_id(value.get<std::string>());
                require(cid >= 0 && schema.concept_super(cid) == k, ErrorKind::parse,
                        "scene: unknown value for " + name);
                obj.attributes[k] = schema.concept_value_index(cid);
            }
            for (std::size_t k = 0; k < schema.super_count(); ++k)
                require(obj.attributes[k] >= 0, ErrorKind::parse,
                        "scene: missing attribute " + schema.super_name(static_cast<int>(k)));
            obj.x = o.at("position").at(0).get<double>();
            obj.y = o.at("position").at(1).get<double>();
            obj.feature = o.at("feature").get<std::vector<double>>();
            require(all_finite(obj.feature.data(), obj.feature.size()), ErrorKind::domain,
                    "scene: non-finite feature");
            scene.objects.push_back(std::move(obj));
        }
        return scene;
    } catch (const json::exception& e) {
        fail(ErrorKind::parse, std::string("scene: missing or mistyped field: ") + e.what());
    }
}

namespace {

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::io, "cannot open " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) lines.push_back(line);
    return lines;
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
    std::ofstream out(path);
    require(out.good(), ErrorKind::io, "cannot write " + path);
    for (const auto& l : lines) out << l << '\n';
    require(out.good(), ErrorKind::io, "write failed for " + path);
}

}  // namespace

void write_scenes(const std::string& path, const std::vector<Scene>& scenes,
                  const AttributeSchema& schema) {
    std::vector<std::string> lines(scenes.size());
    for (std::size_t i = 0; i < scenes.size(); ++i) lines[i] = scene_to_jsonl(scenes[i], schema);
    write_lines(path, lines);
}

std::vector<Scene> read_scenes(const std::string& path, const AttributeSchema& schema) {
    const auto lines = read_lines(path);
    std::vector<Scene> scenes(lines.size());
    for (std::size_t i = 0; i < lines.size(); ++i) scenes[i] = scene_from_jsonl(lines[i], schema);
    return scenes;
}

void write_samples(const std::string& path, const std::vector<QASample>& samples,
                   const AttributeSchema& schema) {
    std::vector<std::string> lines(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) lines[i] = serialize_sample(samples[i], schema);
    write_lines(path, lines);
}

std::vector<QASample> read_samples(const std::string& path, const AttributeSchema& schema) {
    const auto lines = read_lines(path);
    std::vector<QASample> samples(lines.size());
    for (std::size_t i = 0; i < lines.size(); ++i) samples[i] = parse_sample(lines[i], schema);
    return samples;
}

Dataset load_dataset(const std::string& dir, bool verify_answers) {
    namespace fs = std::filesystem;
    Dataset ds;
    {
        std::ifstream in(fs::path(dir) / "universe.json");
        require(in.good(), ErrorKind::io, "cannot open universe.json in " + dir);
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        ds.universe = Universe::from_json(text);
    }
    const auto& schema = ds.universe.schema();
    ds.scenes = read_scenes((fs::path(dir) / "scenes.jsonl").string(), schema);
    ds.samples = read_samples((fs::path(dir) / "qa.jsonl").string(), schema);
    ds.rebuild_index();
    if (verify_answers) {
        for (const auto& sample : ds.samples) {
            const Answer truth = brute_force_answer(ds.scene_of(sample), sample.program, schema);
            require(truth == sample.answer, ErrorKind::validation,
                    "stored answer disagrees with the ground-truth interpreter (scene " +
                        std::to_string(sample.scene_id) + ")");
        }
    }
    return ds;
}

Dataset generate_dataset(const GenerateOptions& options, const AttributeSchema& schema) {
    require(options.min_objects >= 3 && options.max_objects <= 10 &&
                options.min_objects <= options.max_objects,
            ErrorKind::validation, "object counts must satisfy 3 <= min <= max <= 10");
    require(!options.qtypes.empty(), ErrorKind::validation, "qtypes must not be empty");

    int perturb_super = -1;
    if (!options.perturb_super.empty()) {
        perturb_super = schema.super_index(options.perturb_super);
        require(perturb_super >= 0, ErrorKind::validation,
                "unknown perturbation attribute: " + options.perturb_super);
    }
    QuestionConstraints constraints;
    constraints.max_depth_exclusive = options.max_depth_exclusive;
    for (const auto& name : options.forbid) {
        const int k = schema.super_index(name);
        require(k >= 0, ErrorKind::validation, "unknown forbidden attribute: " + name);
        constraints.forbidden_supers.push_back(k);
    }

    Dataset ds;
    ds.universe = Universe::make(options.seed, options.universe, schema);
    ds.scenes.resize(options.scene_count);
    std::vector<std::vector<QASample>> per_scene(options.scene_count);

    parallel_for(options.scene_count, options.threads, [&](std::size_t i) {
        const std::uint64_t scene_id = options.scene_offset + i;
        // A scene can be unable to host a requested question (no unique
        // referent for any object); the generator first falls over to other
        // question types and ultimately resamples the scene, all
        // deterministically in (seed, scene_id).
        for (std::uint64_t variant = 0;; ++variant) {
            require(variant < 16, ErrorKind::generation,
                    "scene resampling exhausted for scene " + std::to_string(scene_id));
            Rng rng(Rng::derive(options.seed, 0x9E57A1 + variant, scene_id));
            const int n_objects =
                options.min_objects + rng.index(options.max_objects - options.min_objects + 1);
            Scene scene = sample_scene(ds.universe, options.condition, n_objects, scene_id, variant);
            if (perturb_super >= 0)
                scene = perturb_scene(ds.universe, scene, perturb_super, options.perturb_rho);

            std::vector<QASample> samples;
            bool scene_ok = true;
            for (std::size_t q = 0; q < options.questions_per_scene && scene_ok; ++q) {
                QType qtype = options.qtypes[rng.index(options.qtypes.size())];
                for (std::size_t tries = 0;; ++tries) {
                    try {
                        samples.push_back(generate_question(scene, schema, qtype, constraints, rng));
                        break;
                    } catch (const Error& e) {
                        if (e.kind() != ErrorKind::generation) throw;
                        if (tries >= 7) {
                            scene_ok = false;
                            break;
                        }
                        qtype = options.qtypes[rng.index(options.qtypes.size())];
                    }
                }
            }
            if (!scene_ok) continue;
            per_scene[i] = std::move(samples);
            ds.scenes[i] = std::move(scene);
            break;
        }
    });

    for (auto& chunk : per_scene)
        for (auto& s : chunk) ds.samples.push_back(std::move(s));
    ds.rebuild_index();
    return ds;
}

GenerateSummary generate_dataset_to_dir(const GenerateOptions& options,
                                        const AttributeSchema& schema, const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    require(!ec, ErrorKind::io, "cannot create output directory " + dir);

    Dataset ds = generate_dataset(options, schema);
    {
        std::ofstream out(fs::path(dir) / "universe.json");
        require(out.good(), ErrorKind::io, "cannot write universe.json");
        out << ds.universe.to_json() << '\n';
    }
    write_scenes((fs::path(dir) / "scenes.jsonl").string(), ds.scenes, schema);
    write_samples((fs::path(dir) / "qa.jsonl").string(), ds.samples, schema);
    return {ds.scenes.size(), ds.samples.size()};
}

}  // namespace vsa
