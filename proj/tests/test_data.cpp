#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <set>

#include "probe.hpp"
#include "vsa/dataset.hpp"
#include "vsa/oracle.hpp"
#include "vsa/question_gen.hpp"

using namespace vsa;

namespace {

Universe default_universe(std::uint64_t seed = 11, double noise = -1.0) {
    UniverseConfig cfg;
    if (noise >= 0.0) cfg.noise_sigma = noise;
    return Universe::make(seed, cfg, AttributeSchema::clevr());
}

// Hand-built scene for interpreter tests.
Scene make_scene(const AttributeSchema& schema,
                 const std::vector<std::tuple<const char*, const char*, const char*, const char*,
                                              double, double>>& objs) {
    Scene scene;
    scene.scene_id = 0;
    for (const auto& [color, shape, size, material, x, y] : objs) {
        SceneObject o;
        o.attributes.assign(4, -1);
        for (const char* name : {color, shape, size, material}) {
            const int cid = schema.concept_id(name);
            REQUIRE(cid >= 0);
            o.attributes[schema.concept_super(cid)] = schema.concept_value_index(cid);
        }
        o.x = x;
        o.y = y;
        o.feature.assign(4, 0.0);
        scene.objects.push_back(std::move(o));
    }
    return scene;
}

Program chain_program(const AttributeSchema& schema, const std::vector<std::string>& filters,
                      StepKind terminal, int super_index = -1) {
    Program p;
    p.push_back(ProgramStep{});
    int last = 0;
    for (const auto& f : filters) {
        ProgramStep s;
        s.kind = StepKind::Filter;
        s.concept_id = schema.concept_id(f);
        s.inputs = {last};
        p.push_back(s);
        last = static_cast<int>(p.size()) - 1;
    }
    ProgramStep t;
    t.kind = terminal;
    t.super_index = super_index;
    t.inputs = {last};
    p.push_back(t);
    return p;
}

// Second, deliberately naive interpreter: recursive set evaluation written
// independently of brute_force_answer.
std::set<int> naive_mask(const Scene& scene, const AttributeSchema& schema, const Program& p,
                         int idx) {
    const auto& step = p[idx];
    if (step.kind == StepKind::Scene) {
        std::set<int> all;
        for (int o = 0; o < static_cast<int>(scene.objects.size()); ++o) all.insert(o);
        return all;
    }
    if (step.kind == StepKind::Filter) {
        std::set<int> out;
        for (int o : naive_mask(scene, schema, p, step.inputs[0])) {
            const int k = schema.concept_super(step.concept_id);
            if (scene.attribute_value(o, k) == schema.concept_value_index(step.concept_id))
                out.insert(o);
        }
        return out;
    }
    if (step.kind == StepKind::Relate) {
        const auto in = naive_mask(scene, schema, p, step.inputs[0]);
        if (in.size() != 1) throw Error(ErrorKind::ambiguity, "naive: relate needs singleton");
        const int ref = *in.begin();
        std::set<int> out;
        for (int o = 0; o < static_cast<int>(scene.objects.size()); ++o)
            if (related(scene, o, ref, step.relation)) out.insert(o);
        return out;
    }
    throw Error(ErrorKind::contract, "naive: not a mask step");
}

Answer naive_answer(const Scene& scene, const AttributeSchema& schema, const Program& p) {
    const auto& out = p.back();
    switch (out.kind) {
        case StepKind::Query: {
            const auto set = naive_mask(scene, schema, p, out.inputs[0]);
            if (set.size() != 1) throw Error(ErrorKind::ambiguity, "naive: query needs singleton");
            const int o = *set.begin();
            return Answer::concept_value(
                schema.concept_of(out.super_index, scene.attribute_value(o, out.super_index)));
        }
        case StepKind::Exist:
            return Answer::boolean_value(!naive_mask(scene, schema, p, out.inputs[0]).empty());
        case StepKind::Count:
            return Answer::integer_value(
                static_cast<long>(naive_mask(scene, schema, p, out.inputs[0]).size()));
        case StepKind::CompareAttr: {
            const auto a = naive_mask(scene, schema, p, out.inputs[0]);
            const auto b = naive_mask(scene, schema, p, out.inputs[1]);
            if (a.size() != 1 || b.size() != 1)
                throw Error(ErrorKind::ambiguity, "naive: compare needs singletons");
            return Answer::boolean_value(
                scene.attribute_value(*a.begin(), out.super_index) ==
                scene.attribute_value(*b.begin(), out.super_index));
        }
        case StepKind::CompareCount: {
            const long a = static_cast<long>(naive_mask(scene, schema, p, out.inputs[0]).size());
            const long b = static_cast<long>(naive_mask(scene, schema, p, out.inputs[1]).size());
            if (out.cmp == CmpOp::Eq) return Answer::boolean_value(a == b);
            if (out.cmp == CmpOp::Gt) return Answer::boolean_value(a > b);
            return Answer::boolean_value(a < b);
        }
        default: throw Error(ErrorKind::contract, "naive: bad terminal");
    }
}

}  // namespace

TEST_CASE("universe generation is deterministic and latents are distinct") {
    auto u1 = default_universe(42);
    auto u2 = default_universe(42);
    CHECK(u1.mixer().data == u2.mixer().data);
    for (std::size_t c = 0; c < u1.schema().concept_count(); ++c)
        CHECK(u1.latent(static_cast<int>(c)) == u2.latent(static_cast<int>(c)));
    auto s1 = sample_scene(u1, BiasCondition::uniform, 5, 7);
    auto s2 = sample_scene(u2, BiasCondition::uniform, 5, 7);
    for (std::size_t o = 0; o < s1.objects.size(); ++o) {
        CHECK(s1.objects[o].feature == s2.objects[o].feature);
        CHECK(s1.objects[o].attributes == s2.objects[o].attributes);
    }
}

TEST_CASE("noiseless features are a pure function of attributes") {
    auto u = default_universe(5, 0.0);
    // Two identical attribute tuples, different noise streams.
    std::vector<const std::vector<double>*> pieces;
    const auto& schema = u.schema();
    for (std::size_t k = 0; k < schema.super_count(); ++k)
        pieces.push_back(&u.latent(schema.concept_of(static_cast<int>(k), 0)));
    CHECK(u.synthesize(pieces, 123) == u.synthesize(pieces, 456));
}

TEST_CASE("default latent dims and feature dim") {
    UniverseConfig cfg;
    CHECK(cfg.latent_dims == std::vector<std::size_t>{8, 4, 2, 2});
    CHECK(cfg.feature_dim == 256);
}

TEST_CASE("noiseless features decode every attribute with a least-squares probe") {
    auto u = default_universe(19, 0.0);
    const auto& schema = u.schema();
    std::vector<std::vector<double>> train_f, test_f;
    std::vector<std::vector<int>> train_l(4), test_l(4);
    std::uint64_t sid = 0;
    while (train_f.size() < 200 || test_f.size() < 1000) {
        auto scene = sample_scene(u, BiasCondition::uniform, 8, sid++);
        for (const auto& obj : scene.objects) {
            const bool to_train = train_f.size() < 200;
            auto& f = to_train ? train_f : test_f;
            auto& l = to_train ? train_l : test_l;
            f.push_back(obj.feature);
            for (int k = 0; k < 4; ++k) l[k].push_back(obj.attributes[k]);
            if (!to_train && test_f.size() >= 1000) break;
        }
    }
    for (int k = 0; k < 4; ++k) {
        auto probe = testing::LinearProbe::fit(train_f, train_l[k], schema.vocab_size(k));
        CHECK(probe.accuracy(test_f, test_l[k]) == 1.0);
    }
}

TEST_CASE("cogent_A palette restriction and conditional shape distribution") {
    auto u = default_universe(23);
    const auto& schema = u.schema();
    const int color_k = schema.super_index("color");
    const int shape_k = schema.super_index("shape");
    const int red = schema.concept_value_index(schema.concept_id("red"));
    const int cube = schema.concept_value_index(schema.concept_id("cube"));

    std::vector<std::vector<double>> shape_given_color(8, std::vector<double>(3, 0.0));
    std::vector<double> color_count(8, 0.0);
    std::vector<double> shape_count(3, 0.0);
    std::size_t total = 0;
    for (std::uint64_t sid = 0; total < 30000; ++sid) {
        auto scene = sample_scene(u, BiasCondition::cogent_A, 8, sid);
        for (const auto& obj : scene.objects) {
            const int c = obj.attributes[color_k];
            const int s = obj.attributes[shape_k];
            CHECK_FALSE((c == red && s == cube));  // no red cube under condition A
            shape_given_color[c][s] += 1.0;
            color_count[c] += 1.0;
            shape_count[s] += 1.0;
            ++total;
        }
    }
    for (int s = 0; s < 3; ++s)
        CHECK(shape_count[s] / static_cast<double>(total) ==
              doctest::Approx(1.0 / 3.0).epsilon(0.06));  // +-0.02 absolute
    // Palette-A colors: (cube, sphere, cylinder) = (2/3, 1/3, 0); palette B mirrored.
    const int sphere = schema.concept_value_index(schema.concept_id("sphere"));
    const int cylinder = schema.concept_value_index(schema.concept_id("cylinder"));
    for (const char* name : {"gray", "blue", "brown", "yellow"}) {
        const int c = schema.concept_value_index(schema.concept_id(name));
        CHECK(std::abs(shape_given_color[c][cube] / color_count[c] - 2.0 / 3.0) < 0.02);
        CHECK(std::abs(shape_given_color[c][sphere] / color_count[c] - 1.0 / 3.0) < 0.02);
        CHECK(shape_given_color[c][cylinder] == 0.0);
    }
    for (const char* name : {"red", "green", "purple", "cyan"}) {
        const int c = schema.concept_value_index(schema.concept_id(name));
        CHECK(shape_given_color[c][cube] == 0.0);
        CHECK(std::abs(shape_given_color[c][sphere] / color_count[c] - 1.0 / 3.0) < 0.02);
        CHECK(std::abs(shape_given_color[c][cylinder] / color_count[c] - 2.0 / 3.0) < 0.02);
    }
}

TEST_CASE("uniform condition keeps color independent of shape") {
    auto u = default_universe(29);
    const auto& schema = u.schema();
    const int color_k = schema.super_index("color");
    const int shape_k = schema.super_index("shape");
    const int red = schema.concept_value_index(schema.concept_id("red"));
    const int cube = schema.concept_value_index(schema.concept_id("cube"));
    double red_cubes = 0.0, cubes = 0.0;
    std::size_t total = 0;
    for (std::uint64_t sid = 0; total < 10000; ++sid) {
        auto scene = sample_scene(u, BiasCondition::uniform, 8, sid);
        for (const auto& obj : scene.objects) {
            ++total;
            if (obj.attributes[shape_k] == cube) {
                cubes += 1.0;
                if (obj.attributes[color_k] == red) red_cubes += 1.0;
            }
        }
    }
    CHECK(std::abs(red_cubes / cubes - 1.0 / 8.0) < 0.02);
}

TEST_CASE("positions respect the separation radius") {
    auto u = default_universe(31);
    for (std::uint64_t sid = 0; sid < 50; ++sid) {
        auto scene = sample_scene(u, BiasCondition::uniform, 10, sid);
        for (std::size_t a = 0; a < scene.objects.size(); ++a)
            for (std::size_t b = a + 1; b < scene.objects.size(); ++b) {
                const double dx = scene.objects[a].x - scene.objects[b].x;
                const double dy = scene.objects[a].y - scene.objects[b].y;
                CHECK(dx * dx + dy * dy >= 0.1 * 0.1);
            }
    }
}

TEST_CASE("perturbation endpoints: rho=0 is identity, rho=1 lands on the neighbor") {
    auto u = default_universe(37);
    const auto& schema = u.schema();
    const int color_k = schema.super_index("color");
    auto scene = sample_scene(u, BiasCondition::uniform, 6, 3);

    auto zero = perturb_scene(u, scene, color_k, 0.0);
    for (std::size_t o = 0; o < scene.objects.size(); ++o)
        CHECK(zero.objects[o].feature == scene.objects[o].feature);

    auto one = perturb_scene(u, scene, color_k, 1.0);
    for (std::size_t o = 0; o < scene.objects.size(); ++o) {
        const auto& obj = scene.objects[o];
        const int cid = schema.concept_of(color_k, obj.attributes[color_k]);
        std::vector<const std::vector<double>*> pieces(schema.super_count());
        for (std::size_t k = 0; k < schema.super_count(); ++k)
            pieces[k] = static_cast<int>(k) == color_k
                            ? &u.latent(u.nearest_other(cid))
                            : &u.latent(schema.concept_of(static_cast<int>(k), obj.attributes[k]));
        CHECK(one.objects[o].feature == u.synthesize(pieces, obj.noise_seed));
    }
    CHECK_THROWS_AS((void)perturb_scene(u, scene, 99, 0.5), Error);
}

TEST_CASE("default rho drops perturbed color decoding by 5-15 points") {
    auto u = default_universe(41);  // default noise_sigma
    const auto& schema = u.schema();
    const int color_k = schema.super_index("color");
    GenerateOptions opt;  // default rho lives here
    std::vector<std::vector<double>> train_f, clean_f, pert_f;
    std::vector<int> train_l, clean_l, pert_l;
    for (std::uint64_t sid = 0; sid < 400; ++sid) {
        auto scene = sample_scene(u, BiasCondition::uniform, 8, sid);
        auto pert = perturb_scene(u, scene, color_k, opt.perturb_rho);
        for (std::size_t o = 0; o < scene.objects.size(); ++o) {
            if (sid < 150) {
                train_f.push_back(scene.objects[o].feature);
                train_l.push_back(scene.objects[o].attributes[color_k]);
            } else {
                clean_f.push_back(scene.objects[o].feature);
                clean_l.push_back(scene.objects[o].attributes[color_k]);
                pert_f.push_back(pert.objects[o].feature);
                pert_l.push_back(pert.objects[o].attributes[color_k]);
            }
        }
    }
    auto probe = testing::LinearProbe::fit(train_f, train_l, 8);
    const double clean_acc = probe.accuracy(clean_f, clean_l);
    const double pert_acc = probe.accuracy(pert_f, pert_l);
    const double drop = 100.0 * (clean_acc - pert_acc);
    INFO("clean ", clean_acc, " perturbed ", pert_acc, " drop ", drop);
    CHECK(clean_acc > 0.99);
    CHECK(drop >= 5.0);
    CHECK(drop <= 15.0);
}

TEST_CASE("universe json round-trip") {
    auto u = default_universe(43);
    auto text = u.to_json();
    auto v = Universe::from_json(text);
    CHECK(v.mixer().data == u.mixer().data);
    CHECK(v.master_seed() == u.master_seed());
    for (std::size_t c = 0; c < u.schema().concept_count(); ++c)
        CHECK(v.latent(static_cast<int>(c)) == u.latent(static_cast<int>(c)));
}

// --- program DSL -------------------------------------------------------------

TEST_CASE("worked example: query the size of the sphere left of the blue metal object") {
    const auto schema = AttributeSchema::clevr();
    auto scene = make_scene(schema, {
        {"red", "cube", "large", "rubber", 0.95, 0.5},
        {"blue", "cube", "small", "metal", 0.9, 0.2},
        {"gray", "sphere", "small", "metal", 0.3, 0.6},
        {"green", "cylinder", "large", "rubber", 0.7, 0.8},
    });
    Program p;
    p.push_back(ProgramStep{});
    ProgramStep f1;
    f1.kind = StepKind::Filter;
    f1.concept_id = schema.concept_id("blue");
    f1.inputs = {0};
    p.push_back(f1);
    ProgramStep r;
    r.kind = StepKind::Relate;
    r.relation = Relation::Left;
    r.inputs = {1};
    p.push_back(r);
    ProgramStep f2;
    f2.kind = StepKind::Filter;
    f2.concept_id = schema.concept_id("sphere");
    f2.inputs = {2};
    p.push_back(f2);
    ProgramStep q;
    q.kind = StepKind::Query;
    q.super_index = schema.super_index("size");
    q.inputs = {3};
    p.push_back(q);

    CHECK(program_depth(p) == 4);
    const auto answer = brute_force_answer(scene, p, schema);
    CHECK(answer == Answer::concept_value(schema.concept_id("small")));
}

TEST_CASE("program depth on simple and branching programs") {
    const auto schema = AttributeSchema::clevr();
    auto exist = chain_program(schema, {"red"}, StepKind::Exist);
    CHECK(program_depth(exist) == 2);

    // Two 2-step branches feeding a comparison: depth = 3.
    Program p;
    p.push_back(ProgramStep{});
    ProgramStep fa;
    fa.kind = StepKind::Filter;
    fa.concept_id = schema.concept_id("red");
    fa.inputs = {0};
    p.push_back(fa);
    ProgramStep fa2 = fa;
    fa2.concept_id = schema.concept_id("cube");
    fa2.inputs = {1};
    p.push_back(fa2);
    ProgramStep fb = fa;
    fb.concept_id = schema.concept_id("blue");
    fb.inputs = {0};
    p.push_back(fb);
    ProgramStep fb2 = fa;
    fb2.concept_id = schema.concept_id("sphere");
    fb2.inputs = {3};
    p.push_back(fb2);
    ProgramStep cc;
    cc.kind = StepKind::CompareCount;
    cc.cmp = CmpOp::Gt;
    cc.inputs = {2, 4};
    p.push_back(cc);
    CHECK(program_depth(p) == 3);
}

TEST_CASE("oracle basics: empty filter count, exist, direct count") {
    const auto schema = AttributeSchema::clevr();
    auto all_blue = make_scene(schema, {
        {"blue", "cube", "small", "metal", 0.1, 0.1},
        {"blue", "sphere", "large", "rubber", 0.5, 0.5},
        {"blue", "cylinder", "small", "metal", 0.9, 0.9},
    });
    CHECK(brute_force_answer(all_blue, chain_program(schema, {"red"}, StepKind::Count), schema) ==
          Answer::integer_value(0));
    CHECK(brute_force_answer(all_blue, chain_program(schema, {"sphere"}, StepKind::Exist), schema) ==
          Answer::boolean_value(true));

    auto two_red = make_scene(schema, {
        {"red", "cube", "small", "metal", 0.1, 0.1},
        {"red", "sphere", "large", "rubber", 0.5, 0.5},
        {"blue", "cylinder", "small", "metal", 0.9, 0.9},
    });
    CHECK(brute_force_answer(two_red, chain_program(schema, {"red"}, StepKind::Count), schema) ==
          Answer::integer_value(2));
    // Ambiguous query referent errors out.
    CHECK_THROWS_AS(
        (void)brute_force_answer(two_red, chain_program(schema, {"red"}, StepKind::Query,
                                                        schema.super_index("size")),
                                 schema),
        Error);
}

TEST_CASE("generated questions respect forbidden superordinates across 10k samples") {
    auto u = default_universe(47);
    const auto& schema = u.schema();
    const int color_k = schema.super_index("color");
    QuestionConstraints constraints;
    constraints.forbidden_supers = {color_k};
    Rng rng(99);
    const std::vector<QType> types{QType::Query,   QType::Exist,   QType::Count,  QType::CountEq,
                                   QType::CountGt, QType::CountLt, QType::CompareAttr};
    std::size_t emitted = 0;
    for (std::uint64_t sid = 0; emitted < 10000; ++sid) {
        auto scene = sample_scene(u, BiasCondition::uniform, 3 + rng.index(8), sid);
        for (int q = 0; q < 10 && emitted < 10000; ++q) {
            QASample sample;
            try {
                sample = generate_question(scene, schema, types[rng.index(types.size())],
                                           constraints, rng);
            } catch (const Error& e) {
                if (e.kind() == ErrorKind::generation) continue;
                throw;
            }
            ++emitted;
            for (const auto& step : sample.program) {
                if (step.kind == StepKind::Filter)
                    CHECK(schema.concept_super(step.concept_id) != color_k);
                if (step.kind == StepKind::Query || step.kind == StepKind::CompareAttr)
                    CHECK(step.super_index != color_k);
            }
        }
    }
}

TEST_CASE("curriculum lesson 1 constraints hold on every emitted sample") {
    GenerateOptions opt;
    opt.seed = 53;
    opt.scene_count = 100;
    opt.questions_per_scene = 10;
    opt.min_objects = 3;
    opt.max_objects = 5;
    opt.qtypes = {QType::Query};
    opt.max_depth_exclusive = 6;
    auto ds = generate_dataset(opt, AttributeSchema::clevr());
    REQUIRE(ds.samples.size() == 1000);
    for (const auto& s : ds.samples) {
        CHECK(s.qtype == QType::Query);
        CHECK(s.depth < 6);
        CHECK(ds.scene_of(s).objects.size() < 6);
    }
}

TEST_CASE("serialization round-trips 10k random samples") {
    GenerateOptions opt;
    opt.seed = 59;
    opt.scene_count = 1000;
    opt.questions_per_scene = 10;
    auto ds = generate_dataset(opt, AttributeSchema::clevr());
    const auto& schema = ds.universe.schema();
    REQUIRE(ds.samples.size() == 10000);
    for (const auto& s : ds.samples) {
        const auto line = serialize_sample(s, schema);
        const auto parsed = parse_sample(line, schema);
        CHECK(serialize_sample(parsed, schema) == line);
        CHECK(parsed.answer == s.answer);
        CHECK(parsed.depth == s.depth);
    }
}

TEST_CASE("parse rejects unknown concepts, kinds and dangling references") {
    const auto schema = AttributeSchema::clevr();
    const std::string base =
        R"({"scene_id":0,"qtype":"count","depth":2,"question_text":"",)"
        R"("answer":{"type":"integer","value":0},"program":[{"op":"scene"},)";

    try {
        (void)parse_sample(base + R"({"op":"filter","concept":"redd","in":[0]},)" +
                               R"({"op":"count","in":[1]}]})",
                           schema);
        FAIL("expected parse error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("redd") != std::string::npos);
    }

    try {
        (void)parse_sample(base + R"({"op":"filter","concept":"red","in":[0]},)" +
                               R"({"op":"frobnicate","in":[1]},{"op":"count","in":[2]}]})",
                           schema);
        FAIL("expected parse error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("frobnicate") != std::string::npos);
    }

    try {
        (void)parse_sample(base + R"({"op":"filter","concept":"red","in":[0]},)" +
                               R"({"op":"count","in":[7]}]})",
                           schema);
        FAIL("expected parse error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("dangling") != std::string::npos);
        CHECK(std::string(e.what()).find("7") != std::string::npos);
    }

    CHECK_THROWS_AS((void)parse_sample("{not json", schema), Error);
}

TEST_CASE("oracle agrees with an independent naive interpreter on 1000 random programs") {
    auto u = default_universe(61);
    const auto& schema = u.schema();
    Rng rng(101);
    QuestionConstraints constraints;
    const std::vector<QType> types{QType::Query,   QType::Exist,   QType::Count,  QType::CountEq,
                                   QType::CountGt, QType::CountLt, QType::CompareAttr};
    std::size_t checked = 0;
    for (std::uint64_t sid = 0; checked < 1000; ++sid) {
        auto scene = sample_scene(u, BiasCondition::uniform, 3 + rng.index(8), sid);
        for (int q = 0; q < 5 && checked < 1000; ++q) {
            QASample sample;
            try {
                sample = generate_question(scene, schema, types[rng.index(types.size())],
                                           constraints, rng);
            } catch (const Error&) {
                continue;
            }
            CHECK(naive_answer(scene, schema, sample.program) == sample.answer);
            CHECK(sample.answer == brute_force_answer(scene, sample.program, schema));
            ++checked;
        }
    }
    CHECK(checked == 1000);
}

TEST_CASE("dataset files round-trip and loading re-verifies answers") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "vsa_test_dataset";
    fs::remove_all(dir);
    GenerateOptions opt;
    opt.seed = 67;
    opt.scene_count = 20;
    opt.questions_per_scene = 5;
    auto summary = generate_dataset_to_dir(opt, AttributeSchema::clevr(), dir.string());
    CHECK(summary.scenes == 20);
    CHECK(summary.questions == 100);

    auto ds = load_dataset(dir.string());
    CHECK(ds.scenes.size() == 20);
    CHECK(ds.samples.size() == 100);

    // Deterministic regeneration produces byte-identical files.
    const auto dir2 = fs::temp_directory_path() / "vsa_test_dataset2";
    fs::remove_all(dir2);
    (void)generate_dataset_to_dir(opt, AttributeSchema::clevr(), dir2.string());
    for (const char* name : {"universe.json", "scenes.jsonl", "qa.jsonl"}) {
        std::ifstream a(dir / name), b(dir2 / name);
        std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
        std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
        CHECK(sa == sb);
    }

    // Tamper with a stored answer: loading must fail verification.
    {
        std::ifstream in(dir / "qa.jsonl");
        std::vector<std::string> lines;
        std::string line;
        while (std::getline(in, line)) lines.push_back(line);
        auto pos = lines[0].find("\"answer\"");
        REQUIRE(pos != std::string::npos);
        // Flip answer to a guaranteed-wrong integer.
        auto j = nlohmann::json::parse(lines[0]);
        j["answer"] = {{"type", "integer"}, {"value", 99}};
        j["program"] = {{{"op", "scene"}}, {{"op", "count"}, {"in", {0}}}};
        j["qtype"] = "count";
        lines[0] = j.dump();
        std::ofstream out(dir / "qa.jsonl");
        for (const auto& l : lines) out << l << '\n';
    }
    CHECK_THROWS_AS((void)load_dataset(dir.string()), Error);
    fs::remove_all(dir);
    fs::remove_all(dir2);
}
