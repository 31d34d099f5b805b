#include "vsa/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <json.hpp>

#include "vsa/executor.hpp"
#include "vsa/optimizer.hpp"
#include "vsa/parallel.hpp"

namespace vsa {

using nlohmann::json;

namespace {

struct SampleRef {
    const Dataset* data;
    std::size_t index;
    const QASample& sample() const { return data->samples[index]; }
    const Scene& scene() const { return data->scene_of(data->samples[index]); }
};

struct SampleOutcome {
    double loss = 0.0;
    bool correct = false;
    long clamp = 0;
    long degenerate = 0;
    std::vector<Tape::LeafGrad> grads;
    std::vector<std::pair<int, std::vector<double>>> cache_candidates;
};

Tape::Var build_loss(Tape& tape, const ExecResult& result, const Answer& answer, long* clamp) {
    switch (result.kind) {
        case ExecResult::Kind::Scalar: {
            require(answer.tag == Answer::Tag::Integer, ErrorKind::contract,
                    "count output against a non-integer answer");
            return tape.sq_diff(result.value,
                                tape.constant_scalar(static_cast<double>(answer.integer)));
        }
        case ExecResult::Kind::Distribution: {
            require(answer.tag == Answer::Tag::Concept, ErrorKind::contract,
                    "distribution output against a non-concept answer");
            int slot = -1;
            for (std::size_t i = 0; i < result.vocab.size(); ++i)
                if (result.vocab[i] == answer.concept_id) slot = static_cast<int>(i);
            if (slot < 0) {
                // The true concept is outside the answered vocabulary (a
                // misassigned hierarchy); worst-case clamped loss, no gradient.
                ++*clamp;
                return tape.constant_scalar(-std::log(1e-12));
            }
            const auto p = tape.pick(result.value, static_cast<std::size_t>(slot));
            if (tape.scalar_value(p) < 1e-12) ++*clamp;
            return tape.scale(tape.log(tape.offset(p, 1e-12)), -1.0);
        }
        default: {
            require(answer.tag == Answer::Tag::Boolean, ErrorKind::contract,
                    "probability output against a non-boolean answer");
            auto p = result.value;
            if (!answer.boolean) p = tape.offset(tape.scale(p, -1.0), 1.0);
            if (tape.scalar_value(p) < 1e-12) ++*clamp;
            return tape.scale(tape.log(tape.offset(p, 1e-12)), -1.0);
        }
    }
}

// Superordinates whose concepts a program judges (filter concepts plus query
// and compare attributes); used to pick an applicable shortcut head.
std::vector<int> judged_supers(const Program& program, const ConceptSpace& space) {
    std::vector<int> out;
    auto push = [&](int k) {
        if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(k);
    };
    for (const auto& step : program) {
        if (step.kind == StepKind::Filter) push(space.assigned_super(step.concept_id));
        if (step.kind == StepKind::Query || step.kind == StepKind::CompareAttr)
            push(step.super_index);
    }
    return out;
}

class BatchEngine {
public:
    BatchEngine(Learner& learner, unsigned threads)
        : learner_(learner), grads_(learner.store()), threads_(threads) {}

    // One optimizer step over a batch. Returns summed loss; fills
    // per-sample correctness flags when collecting the cache.
    struct BatchStats {
        double loss_sum = 0.0;
        long correct = 0;
        long clamp = 0;
        long degenerate = 0;
    };

    BatchStats theta_step(const std::vector<SampleRef>& batch, ExecMode mode, AdamW& opt,
                          bool collect_cache) {
        std::vector<SampleOutcome> outcomes(batch.size());
        parallel_for(batch.size(), threads_, [&](std::size_t i) {
            outcomes[i] = run_sample(batch[i], mode, nullptr, collect_cache);
        });
        const auto stats = reduce_and_step(batch, outcomes, opt);
        if (collect_cache) {
            for (std::size_t i = 0; i < batch.size(); ++i) {
                if (!outcomes[i].correct) continue;
                for (auto& [concept_id, mapped] : outcomes[i].cache_candidates)
                    learner_.space().cache_insert(
                        concept_id, std::span<const double>(mapped.data(), mapped.size()));
            }
        }
        return stats;
    }

    BatchStats phi_step(const std::vector<SampleRef>& batch, AdamW& opt) {
        // Deterministic head rotation: each sample takes the next applicable
        // head so every head sees a share of the stream.
        const auto& heads = learner_.space().heads();
        std::vector<const ShortcutHeadRef*> chosen(batch.size(), nullptr);
        for (std::size_t i = 0; i < batch.size(); ++i) {
            // Heads estimate a conditional distribution, so they train on the
            // one question family whose loss is a proper scoring rule for it:
            // query cross-entropy. Max-pooled exist losses and the balanced
            // comparison questions would pull the tables off the data
            // conditional (toward the answer base rates the generator
            // enforces).
            if (batch[i].sample().qtype != QType::Query) continue;
            const auto supers = judged_supers(batch[i].sample().program, learner_.space());
            for (std::size_t probe = 0; probe < heads.size(); ++probe) {
                const auto& h = heads[(rotation_ + probe) % heads.size()];
                if (std::find(supers.begin(), supers.end(), h.dst) != supers.end()) {
                    chosen[i] = &h;
                    rotation_ = (rotation_ + probe + 1) % heads.size();
                    break;
                }
            }
        }
        std::vector<SampleOutcome> outcomes(batch.size());
        parallel_for(batch.size(), threads_, [&](std::size_t i) {
            if (chosen[i])
                outcomes[i] = run_sample(batch[i], ExecMode::Super, chosen[i], false);
        });
        return reduce_and_step(batch, outcomes, opt);
    }

private:
    SampleOutcome run_sample(const SampleRef& ref, ExecMode mode, const ShortcutHeadRef* phi_head,
                             bool collect_cache) {
        SampleOutcome out;
        thread_local Tape tape;
        tape.reset();
        JudgmentSession session(tape, learner_.store(), learner_.space(), ref.scene(),
                                {mode, false, phi_head, {}});
        const auto result = exec_program(session, ref.sample().program, learner_.config().executor);
        const auto loss = build_loss(tape, result, ref.sample().answer, &out.clamp);
        out.correct = exec_answer(tape, result) == ref.sample().answer;
        out.degenerate = session.degenerate_events();
        if (collect_cache && out.correct) {
            // Most-likely-positive policy: for each filtered concept, the
            // scene object with the highest exclusive judgment.
            std::vector<int> seen;
            for (const auto& step : ref.sample().program) {
                if (step.kind != StepKind::Filter) continue;
                if (std::find(seen.begin(), seen.end(), step.concept_id) != seen.end()) continue;
                seen.push_back(step.concept_id);
                const int k = learner_.space().assigned_super(step.concept_id);
                int best = 0;
                double best_p = -1.0;
                for (std::size_t o = 0; o < ref.scene().objects.size(); ++o) {
                    const double p =
                        session.super_prob_value(static_cast<int>(o), step.concept_id);
                    if (p > best_p) {
                        best_p = p;
                        best = static_cast<int>(o);
                    }
                }
                const auto mapped = session.mapped_value(best, k);
                out.cache_candidates.emplace_back(step.concept_id,
                                                  std::vector<double>(mapped.begin(), mapped.end()));
            }
        }
        out.grads = tape.backward(loss);
        out.loss = tape.scalar_value(loss);
        return out;
    }

    BatchStats reduce_and_step(const std::vector<SampleRef>& batch,
                               std::vector<SampleOutcome>& outcomes, AdamW& opt) {
        BatchStats stats;
        grads_.clear();
        for (auto& out : outcomes) {
            stats.loss_sum += out.loss;
            stats.correct += out.correct ? 1 : 0;
            stats.clamp += out.clamp;
            stats.degenerate += out.degenerate;
            for (const auto& lg : out.grads) grads_.accumulate(lg);
        }
        grads_.finalize();
        grads_.scale_all(1.0 / static_cast<double>(batch.size()));
        for (int idx : opt.owned())
            if (!grads_.touched(idx)) grads_.touch_zero(idx);
        opt.step(learner_.store(), grads_);
        return stats;
    }

    Learner& learner_;
    GradBuffer grads_;
    unsigned threads_;
    std::size_t rotation_ = 0;
};

double validate(const Learner& learner, const Dataset& val, std::size_t limit, unsigned threads,
                std::optional<ExecMode> mode_override, std::map<std::string, double>* per_type) {
    EvalOptions opt;
    opt.threads = threads;
    opt.limit = limit;
    opt.keep_outcomes = false;
    EvalReport report;
    if (mode_override) {
        // Pre-freeze validation runs under the mixture judgment regardless of
        // the learner's eventual evaluation mode.
        Learner& mut = const_cast<Learner&>(learner);
        const std::string saved = mut.ablation();
        mut.set_ablation("no-abs");
        report = evaluate(mut, val, opt);
        mut.set_ablation(saved);
    } else {
        report = evaluate(learner, val, opt);
    }
    if (per_type) {
        per_type->clear();
        for (const auto& [name, counts] : report.per_type) (*per_type)[name] = counts.accuracy();
    }
    return report.overall.accuracy();
}

class Curriculum {
public:
    Curriculum(Learner& learner, const TrainDatasets& data, std::string report_path)
        : learner_(learner),
          data_(data),
          report_path_(std::move(report_path)),
          engine_(learner, learner.config().threads) {
        require(data.lesson1 && data.lesson2 && data.val, ErrorKind::validation,
                "curriculum needs lesson1, lesson2 and val datasets");
    }

    TrainReport run() {
        check_lesson1_data();
        lesson1();
        if (learner_.abstraction_enabled()) freeze();
        lesson2();
        finalize();
        return report_;
    }

    TrainReport run_shortcut_only(const Dataset& data, int epochs) {
        require(learner_.space().frozen(), ErrorKind::state,
                "shortcut training requires a frozen hierarchy");
        shortcut_data_ = &data;
        lesson2_with(data, epochs, /*phase=*/"shortcut");
        finalize();
        return report_;
    }

private:
    void check_lesson1_data() {
        const auto& l1 = learner_.config().curriculum.lesson1;
        for (const auto& s : data_.lesson1->samples) {
            require(std::find(l1.qtypes.begin(), l1.qtypes.end(), s.qtype) != l1.qtypes.end(),
                    ErrorKind::validation, "lesson-1 sample with out-of-curriculum question type");
            require(s.depth < l1.max_depth_exclusive, ErrorKind::validation,
                    "lesson-1 sample too deep for the curriculum");
            require(static_cast<int>(data_.lesson1->scene_of(s).objects.size()) <=
                        l1.max_objects,
                    ErrorKind::validation, "lesson-1 scene too large for the curriculum");
        }
    }

    void lesson1() {
        const auto& cfg = learner_.config();
        AdamW opt(cfg.optimizer, learner_.space().theta_lesson1(), learner_.store());
        std::vector<SampleRef> all;
        for (std::size_t i = 0; i < data_.lesson1->samples.size(); ++i)
            all.push_back({data_.lesson1, i});
        for (int epoch = 0; epoch < cfg.curriculum.lesson1.epochs; ++epoch) {
            const auto stats = run_epoch(all, ExecMode::Mixture, opt, false, 1, epoch);
            TrainEpochStats es;
            es.phase = "lesson1";
            es.epoch = epoch;
            es.mean_loss = stats.loss_sum / static_cast<double>(all.size());
            es.clamp_warnings = stats.clamp;
            es.degenerate_events = stats.degenerate;
            es.val_accuracy = validate(learner_, *data_.val, cfg.curriculum.val_questions,
                                       cfg.threads, ExecMode::Mixture, &es.val_per_type);
            es.theta_steps = theta_steps_;
            es.phi_steps = phi_steps_;
            report_.epochs.push_back(std::move(es));
            write_report();
        }
    }

    void freeze() {
        const auto& cfg = learner_.config().curriculum;
        const auto margins = learner_.space().assignment_margins(learner_.store());
        std::size_t low = 0;
        for (double m : margins)
            if (m < cfg.freeze_margin) ++low;
        const double frac = static_cast<double>(low) / static_cast<double>(margins.size());
        require(frac <= cfg.freeze_max_low_fraction, ErrorKind::state,
                "hierarchy freeze aborted: " + std::to_string(low) + "/" +
                    std::to_string(margins.size()) +
                    " assignments are ties or low-margin; the lesson-1 data is insufficient");
        learner_.space().freeze_hierarchy(learner_.store());
        report_.freeze_margins = margins;
        report_.freeze_ties = learner_.space().freeze_tie_count();
        for (int c = 0; c < static_cast<int>(learner_.schema().concept_count()); ++c)
            report_.hierarchy[learner_.schema().concept_name(c)] =
                learner_.schema().super_name(learner_.space().assigned_super(c));
    }

    void lesson2() {
        std::vector<SampleRef> all;
        if (learner_.config().curriculum.include_lesson1_data)
            for (std::size_t i = 0; i < data_.lesson1->samples.size(); ++i)
                all.push_back({data_.lesson1, i});
        for (std::size_t i = 0; i < data_.lesson2->samples.size(); ++i)
            all.push_back({data_.lesson2, i});
        lesson2_impl(all, learner_.config().curriculum.lesson2.epochs, "lesson2");
    }

    void lesson2_with(const Dataset& data, int epochs, const std::string& phase) {
        std::vector<SampleRef> all;
        for (std::size_t i = 0; i < data.samples.size(); ++i) all.push_back({&data, i});
        lesson2_impl(all, epochs, phase);
    }

    void lesson2_impl(std::vector<SampleRef> all, int epochs, const std::string& phase) {
        const auto& cfg = learner_.config();
        const bool mixture = !learner_.abstraction_enabled();
        const ExecMode mode = mixture ? ExecMode::Mixture
                              : learner_.clustering_enabled() ? ExecMode::Clustered
                                                              : ExecMode::Super;
        AdamW theta_opt(cfg.optimizer, learner_.space().theta_lesson2(mixture), learner_.store());
        std::optional<AdamW> phi_opt;
        if (learner_.shortcut_enabled())
            phi_opt.emplace(cfg.optimizer, learner_.space().phi_params(), learner_.store());

        for (int epoch = 0; epoch < epochs; ++epoch) {
            const auto stats = run_epoch(all, mode, theta_opt, learner_.clustering_enabled(),
                                         2, epoch, phi_opt ? &*phi_opt : nullptr);
            TrainEpochStats es;
            es.phase = phase;
            es.epoch = epoch;
            es.mean_loss = stats.loss_sum / static_cast<double>(all.size());
            es.clamp_warnings = stats.clamp;
            es.degenerate_events = stats.degenerate;
            es.cache_total = cache_total();
            es.val_accuracy = validate(learner_, *data_.val, cfg.curriculum.val_questions,
                                       cfg.threads, std::nullopt, &es.val_per_type);
            es.theta_steps = theta_steps_;
            es.phi_steps = phi_steps_;
            report_.epochs.push_back(es);
            // Ties prefer the later epoch: the shortcut heads keep improving
            // after task accuracy saturates.
            if (es.val_accuracy >= report_.best_val_accuracy || best_values_.empty()) {
                report_.best_val_accuracy = es.val_accuracy;
                report_.best_epoch = static_cast<int>(report_.epochs.size()) - 1;
                best_values_ = learner_.store().snapshot_values();
                best_caches_ = snapshot_caches();
            }
            write_report();
        }
    }

    BatchEngine::BatchStats run_epoch(std::vector<SampleRef>& all, ExecMode mode, AdamW& opt,
                                      bool collect_cache, int lesson_tag, int epoch,
                                      AdamW* phi_opt = nullptr) {
        Rng shuffle_rng(Rng::derive(learner_.config().seed, 0xE70C00 + lesson_tag, epoch));
        shuffle_rng.shuffle(all);
        const std::size_t batch_size = static_cast<std::size_t>(learner_.config().curriculum.batch_size);
        BatchEngine::BatchStats total;
        const auto theta_params = learner_.space().theta_lesson1();
        for (std::size_t start = 0; start < all.size(); start += batch_size) {
            const std::size_t end = std::min(all.size(), start + batch_size);
            std::vector<SampleRef> batch(all.begin() + start, all.begin() + end);
            const auto stats = engine_.theta_step(batch, mode, opt, collect_cache);
            ++theta_steps_;
            total.loss_sum += stats.loss_sum;
            total.correct += stats.correct;
            total.clamp += stats.clamp;
            total.degenerate += stats.degenerate;
            if (phi_opt) {
                const bool check =
                    learner_.config().curriculum.theta_hash_interval > 0 &&
                    phi_steps_ % learner_.config().curriculum.theta_hash_interval == 0;
                std::uint64_t before = 0;
                if (check) before = learner_.store().content_hash(theta_params);
                (void)engine_.phi_step(batch, *phi_opt);
                ++phi_steps_;
                if (check) {
                    require(learner_.store().content_hash(theta_params) == before,
                            ErrorKind::internal,
                            "stop-gradient violation: theta changed during a phi step");
                }
            }
        }
        return total;
    }

    long cache_total() const {
        long total = 0;
        for (int c = 0; c < static_cast<int>(learner_.schema().concept_count()); ++c)
            total += learner_.space().cache(c).count;
        return total;
    }

    std::vector<ConceptSpace::CacheEntry> snapshot_caches() const {
        std::vector<ConceptSpace::CacheEntry> out;
        for (int c = 0; c < static_cast<int>(learner_.schema().concept_count()); ++c)
            out.push_back(learner_.space().cache(c));
        return out;
    }

    void finalize() {
        if (!best_values_.empty()) {
            learner_.store().restore_values(best_values_);
            for (int c = 0; c < static_cast<int>(learner_.schema().concept_count()); ++c)
                learner_.space().mutable_cache(c) = best_caches_[c];
        }
        report_.theta_steps = theta_steps_;
        report_.phi_steps = phi_steps_;
        if (learner_.space().frozen()) {
            for (const auto& h : learner_.space().heads())
                report_.head_deviations[learner_.schema().super_name(h.src) + "->" +
                                        learner_.schema().super_name(h.dst)] =
                    head_table_deviation(learner_.space(), learner_.store(), h);
        }
        write_report();
    }

    void write_report() {
        if (report_path_.empty()) return;
        std::ofstream out(report_path_);
        require(out.good(), ErrorKind::io, "cannot write train report " + report_path_);
        out << report_.to_json() << '\n';
    }

    Learner& learner_;
    TrainDatasets data_;
    std::string report_path_;
    BatchEngine engine_;
    TrainReport report_;
    long theta_steps_ = 0;
    long phi_steps_ = 0;
    std::vector<Tensor> best_values_;
    std::vector<ConceptSpace::CacheEntry> best_caches_;
    const Dataset* shortcut_data_ = nullptr;
};

}  // namespace

std::string TrainReport::to_json(bool pretty) const {
    json epochs_json = json::array();
    for (const auto& e : epochs) {
        epochs_json.push_back({{"phase", e.phase},
                               {"epoch", e.epoch},
                               {"mean_loss", e.mean_loss},
                               {"val_accuracy", e.val_accuracy},
                               {"val_per_type", e.val_per_type},
                               {"cache_total", e.cache_total},
                               {"clamp_warnings", e.clamp_warnings},
                               {"degenerate_events", e.degenerate_events},
                               {"theta_steps", e.theta_steps},
                               {"phi_steps", e.phi_steps}});
    }
    json j{{"epochs", epochs_json},
           {"hierarchy", hierarchy},
           {"freeze_margins", freeze_margins},
           {"freeze_ties", freeze_ties},
           {"best_val_accuracy", best_val_accuracy},
           {"best_epoch", best_epoch},
           {"theta_steps", theta_steps},
           {"phi_steps", phi_steps},
           {"head_deviations", head_deviations}};
    return pretty ? j.dump(2) : j.dump();
}

TrainResult run_curriculum(const AttributeSchema& schema, const EngineConfig& config,
                           const std::string& ablate, const TrainDatasets& data,
                           const std::string& report_path) {
    TrainResult result;
    result.learner = std::make_unique<Learner>(schema, config);
    result.learner->set_ablation(ablate);
    if (data.lesson2 && !data.lesson2->scenes.empty())
        result.learner->set_train_condition(to_string(data.lesson2->scenes.front().condition));
    Curriculum curriculum(*result.learner, data, report_path);
    result.report = curriculum.run();
    return result;
}

TrainReport train_shortcut(Learner& learner, const Dataset& data, int epochs, const Dataset* val) {
    TrainDatasets ds;
    ds.lesson1 = &data;
    ds.lesson2 = &data;
    ds.val = val ? val : &data;
    Curriculum curriculum(learner, ds, "");
    return curriculum.run_shortcut_only(data, epochs);
}

}  // namespace vsa
