#include "vsa/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>

#include "vsa/linalg.hpp"
#include "vsa/parallel.hpp"

namespace vsa {

using nlohmann::json;

namespace {

std::string answer_string(const Answer& a, const AttributeSchema& schema) {
    switch (a.tag) {
        case Answer::Tag::Concept: return schema.concept_name(a.concept_id);
        case Answer::Tag::Integer: return std::to_string(a.integer);
        default: return a.boolean ? "yes" : "no";
    }
}

std::vector<double> map_feature(const ConceptSpace& cs, const ParamStore& store,
                                std::span<const double> feature, int k) {
    const auto& w = store.value(cs.mapping_w(k));
    const auto& b = store.value(cs.mapping_b(k));
    const std::size_t rows = w.shape.dims[0], cols = w.shape.dims[1];
    std::vector<double> out(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        double acc = b.data[r];
        const double* row = w.data.data() + r * cols;
        for (std::size_t c = 0; c < cols; ++c) acc += row[c] * feature[c];
        out[r] = acc;
    }
    return out;
}

}  // namespace

EvalReport evaluate(const Learner& learner, const Dataset& dataset, const EvalOptions& options) {
    EvalReport report;
    report.dataset_descriptor = std::to_string(dataset.scenes.size()) + " scenes / " +
                                std::to_string(dataset.samples.size()) + " questions";
    report.abs_flag = learner.abstraction_enabled();
    report.cc_flag = learner.clustering_enabled();
    report.sl_flag = learner.shortcut_enabled();
    report.debias_flag = options.debias;
    report.oracle_flag = options.oracle;
    report.config_hash = learner.config().hash();

    const std::size_t n =
        options.limit == 0 ? dataset.samples.size() : std::min(options.limit, dataset.samples.size());
    std::vector<QuestionOutcome> outcomes(n);

    const ExecMode mode = learner.eval_mode();
    std::vector<int> debias_heads;
    if (options.debias) {
        require(learner.space().frozen(), ErrorKind::state,
                "debiased evaluation requires a frozen hierarchy");
        debias_heads = learner.enabled_debias_heads();
    }
    const ExecMode run_mode =
        options.debias && mode != ExecMode::Mixture ? ExecMode::ClusteredDebiased : mode;

    parallel_for(n, options.threads, [&](std::size_t i) {
        const auto& sample = dataset.samples[i];
        const Scene& scene = dataset.scene_of(sample);
        thread_local Tape tape;
        tape.reset();
        JudgmentSession session(tape, learner.store(), learner.space(), scene,
                                {run_mode, options.oracle, nullptr, debias_heads});
        auto result = exec_program(session, sample.program, learner.config().executor);
        const Answer predicted = exec_answer(tape, result);
        auto& out = outcomes[i];
        out.index = i;
        out.qtype = sample.qtype;
        out.correct = predicted == sample.answer;
        out.predicted = answer_string(predicted, learner.schema());
        out.truth = answer_string(sample.answer, learner.schema());
    });

    for (const auto& out : outcomes) {
        auto& bucket = report.per_type[to_string(out.qtype)];
        ++bucket.total;
        ++report.overall.total;
        if (out.correct) {
            ++bucket.correct;
            ++report.overall.correct;
        }
    }
    if (options.keep_outcomes) report.outcomes = std::move(outcomes);
    return report;
}

std::string EvalReport::to_json(bool pretty) const {
    json per;
    for (const auto& [name, counts] : per_type)
        per[name] = {{"n", counts.total}, {"correct", counts.correct}, {"accuracy", counts.accuracy()}};
    json j{{"dataset", dataset_descriptor},
           {"mode", {{"abs", abs_flag}, {"cc", cc_flag}, {"sl", sl_flag},
                     {"debias", debias_flag}, {"oracle", oracle_flag}}},
           {"config_hash", config_hash},
           {"per_type", per},
           {"overall",
            {{"n", overall.total}, {"correct", overall.correct}, {"accuracy", overall.accuracy()}}}};
    return pretty ? j.dump(2) : j.dump();
}

std::vector<std::vector<double>> analytic_conditional(const AttributeSchema& schema,
                                                      BiasCondition condition, int src, int dst) {
    const std::size_t rows = schema.vocab_size(src);
    const std::size_t cols = schema.vocab_size(dst);
    std::vector<std::vector<double>> table(rows,
                                           std::vector<double>(cols, 1.0 / static_cast<double>(cols)));
    if (condition == BiasCondition::uniform) return table;

    const int color_k = schema.super_index("color");
    const int shape_k = schema.super_index("shape");
    if (color_k < 0 || shape_k < 0) return table;
    const bool color_shape = (src == color_k && dst == shape_k);
    const bool shape_color = (src == shape_k && dst == color_k);
    if (!color_shape && !shape_color) return table;

    auto value_of = [&](int k, const char* name) {
        return schema.concept_value_index(schema.concept_id(name));
    };
    std::vector<int> palette_a{value_of(color_k, "gray"), value_of(color_k, "blue"),
                               value_of(color_k, "brown"), value_of(color_k, "yellow")};
    std::vector<int> palette_b{value_of(color_k, "red"), value_of(color_k, "green"),
                               value_of(color_k, "purple"), value_of(color_k, "cyan")};
    if (condition == BiasCondition::cogent_B) std::swap(palette_a, palette_b);
    const int cube = value_of(shape_k, "cube");
    const int sphere = value_of(shape_k, "sphere");
    const int cylinder = value_of(shape_k, "cylinder");
    auto in = [](const std::vector<int>& v, int x) {
        return std::find(v.begin(), v.end(), x) != v.end();
    };

    if (color_shape) {
        // Shape sampled uniformly, color restricted by palette: Bayes gives
        // (2/3, 1/3, 0) for palette-A colors and (0, 1/3, 2/3) for the rest.
        for (std::size_t c = 0; c < rows; ++c) {
            auto& row = table[c];
            std::fill(row.begin(), row.end(), 0.0);
            const bool a = in(palette_a, static_cast<int>(c));
            row[cube] = a ? 2.0 / 3.0 : 0.0;
            row[sphere] = 1.0 / 3.0;
            row[cylinder] = a ? 0.0 : 2.0 / 3.0;
        }
    } else {
        for (std::size_t s = 0; s < rows; ++s) {
            auto& row = table[s];
            std::fill(row.begin(), row.end(), 0.0);
            if (static_cast<int>(s) == cube) {
                for (int c : palette_a) row[c] = 0.25;
            } else if (static_cast<int>(s) == cylinder) {
                for (int c : palette_b) row[c] = 0.25;
            } else {
                std::fill(row.begin(), row.end(), 1.0 / static_cast<double>(cols));
            }
        }
    }
    return table;
}

BiasReport bias_report(const Learner& learner, const std::string& heads_spec) {
    require(learner.space().frozen(), ErrorKind::state, "bias report requires a frozen hierarchy");
    const auto& schema = learner.schema();
    const auto& space = learner.space();

    std::vector<const ShortcutHeadRef*> selected;
    if (heads_spec.empty() || heads_spec == "all") {
        for (const auto& h : space.heads()) selected.push_back(&h);
    } else {
        const auto colon = heads_spec.find(':');
        require(colon != std::string::npos, ErrorKind::validation,
                "head spec must be 'all' or 'SRC:DST'");
        const int src = schema.super_index(heads_spec.substr(0, colon));
        const int dst = schema.super_index(heads_spec.substr(colon + 1));
        require(src >= 0 && dst >= 0 && src != dst, ErrorKind::validation,
                "unknown head spec: " + heads_spec);
        selected.push_back(&space.head(src, dst));
    }

    BiasReport report;
    report.condition = learner.train_condition();
    report.config_hash = learner.config().hash();
    const BiasCondition condition = bias_condition_from_string(report.condition);
    for (const auto* h : selected) {
        BiasReport::Head entry;
        entry.src = schema.super_name(h->src);
        entry.dst = schema.super_name(h->dst);
        entry.learned = head_table(space, learner.store(), *h);
        const auto truth_by_value = analytic_conditional(schema, condition, h->src, h->dst);
        bool schema_aligned = true;
        for (int cid : space.vocab(h->src)) schema_aligned &= schema.concept_super(cid) == h->src;
        for (int cid : space.vocab(h->dst)) schema_aligned &= schema.concept_super(cid) == h->dst;
        const auto& src_vocab = space.vocab(h->src);
        const auto& dst_vocab = space.vocab(h->dst);
        for (int cid : src_vocab) entry.rows.push_back(schema.concept_name(cid));
        for (int cid : dst_vocab) entry.cols.push_back(schema.concept_name(cid));
        entry.truth.assign(src_vocab.size(),
                           std::vector<double>(dst_vocab.size(), 1.0 / dst_vocab.size()));
        if (schema_aligned) {
            for (std::size_t r = 0; r < src_vocab.size(); ++r)
                for (std::size_t c = 0; c < dst_vocab.size(); ++c)
                    entry.truth[r][c] = truth_by_value[schema.concept_value_index(src_vocab[r])]
                                                      [schema.concept_value_index(dst_vocab[c])];
        }
        for (std::size_t r = 0; r < entry.learned.size(); ++r)
            for (std::size_t c = 0; c < entry.learned[r].size(); ++c)
                entry.max_abs_deviation = std::max(
                    entry.max_abs_deviation, std::abs(entry.learned[r][c] - entry.truth[r][c]));
        report.heads.push_back(std::move(entry));
    }
    return report;
}

std::string BiasReport::to_json(bool pretty) const {
    json heads_json = json::array();
    for (const auto& h : heads) {
        heads_json.push_back({{"src", h.src},
                              {"dst", h.dst},
                              {"rows", h.rows},
                              {"cols", h.cols},
                              {"learned", h.learned},
                              {"truth", h.truth},
                              {"max_abs_deviation", h.max_abs_deviation}});
    }
    json j{{"condition", condition}, {"config_hash", config_hash}, {"heads", heads_json}};
    return pretty ? j.dump(2) : j.dump();
}

std::string ClusterExportSummary::to_json() const {
    return json{{"rows", rows}, {"purity", purity}}.dump();
}

ClusterExportSummary cluster_export(const Learner& learner, const Dataset& dataset,
                                    const std::string& superordinate, const std::string& csv_path,
                                    bool include_vectors, unsigned threads) {
    const auto& schema = learner.schema();
    const int k = schema.super_index(superordinate);
    require(k >= 0, ErrorKind::validation, "unknown superordinate: " + superordinate);
    const auto& space = learner.space();
    const std::size_t dim = learner.config().judgment.subspace_dim;

    struct Row {
        std::string id;
        int true_value;
        std::vector<double> mapped;
        int predicted_slot = -1;
    };
    std::vector<std::size_t> scene_offsets(dataset.scenes.size() + 1, 0);
    for (std::size_t s = 0; s < dataset.scenes.size(); ++s)
        scene_offsets[s + 1] = scene_offsets[s] + dataset.scenes[s].objects.size();
    std::vector<Row> rows(scene_offsets.back());

    const bool frozen = space.frozen();
    parallel_for(dataset.scenes.size(), threads, [&](std::size_t s) {
        const auto& scene = dataset.scenes[s];
        Tape tape;
        std::optional<JudgmentSession> session;
        if (frozen)
            session.emplace(tape, learner.store(), learner.space(), scene,
                            JudgmentSession::Options{learner.eval_mode(), false, nullptr, {}});
        for (std::size_t o = 0; o < scene.objects.size(); ++o) {
            auto& row = rows[scene_offsets[s] + o];
            row.id = std::to_string(scene.scene_id) + ":" + std::to_string(o);
            row.true_value = scene.objects[o].attributes[k];
            row.mapped = map_feature(space, learner.store(),
                                     std::span<const double>(scene.objects[o].feature.data(),
                                                             scene.objects[o].feature.size()),
                                     k);
            if (session) {
                const auto dist = tape.value(session->dist_over(static_cast<int>(o), k));
                int best = 0;
                for (std::size_t i = 1; i < dist.size(); ++i)
                    if (dist[i] > dist[best]) best = static_cast<int>(i);
                row.predicted_slot = best;
            }
        }
    });
    require(!rows.empty(), ErrorKind::validation, "cluster export over an empty dataset");

    // PCA over the export set.
    std::vector<double> mean(dim, 0.0);
    for (const auto& r : rows)
        for (std::size_t i = 0; i < dim; ++i) mean[i] += r.mapped[i];
    for (auto& v : mean) v /= static_cast<double>(rows.size());
    std::vector<double> cov(dim * dim, 0.0);
    for (const auto& r : rows)
        for (std::size_t i = 0; i < dim; ++i) {
            const double di = r.mapped[i] - mean[i];
            for (std::size_t j = 0; j < dim; ++j) cov[i * dim + j] += di * (r.mapped[j] - mean[j]);
        }
    for (auto& v : cov) v /= static_cast<double>(rows.size());
    std::vector<double> evals, evecs;
    symmetric_eigen(cov, dim, evals, evecs);

    auto project = [&](const std::vector<double>& x, std::size_t e) {
        double acc = 0.0;
        for (std::size_t i = 0; i < dim; ++i) acc += (x[i] - mean[i]) * evecs[e * dim + i];
        return acc;
    };

    // Cluster centers: quasi-center cache when it covers the vocabulary,
    // otherwise means of predicted-label groups.
    std::vector<std::vector<double>> centers;
    std::vector<int> center_group_of_row(rows.size(), -1);
    const auto* vocab = frozen ? &space.vocab(k) : nullptr;
    bool cache_covers = frozen && learner.clustering_enabled() && vocab && !vocab->empty();
    if (cache_covers)
        for (int cid : *vocab) cache_covers &= space.cache(cid).count > 0;
    if (cache_covers) {
        for (int cid : *vocab) centers.push_back(space.cache(cid).mean);
    } else if (frozen && vocab && !vocab->empty()) {
        std::vector<std::vector<double>> sums(vocab->size(), std::vector<double>(dim, 0.0));
        std::vector<std::size_t> counts(vocab->size(), 0);
        for (const auto& r : rows) {
            if (r.predicted_slot < 0) continue;
            ++counts[r.predicted_slot];
            for (std::size_t i = 0; i < dim; ++i) sums[r.predicted_slot][i] += r.mapped[i];
        }
        for (std::size_t g = 0; g < sums.size(); ++g) {
            if (counts[g] == 0) continue;
            for (auto& v : sums[g]) v /= static_cast<double>(counts[g]);
            centers.push_back(std::move(sums[g]));
        }
    }
    double purity = 0.0;
    if (!centers.empty()) {
        std::vector<std::map<int, std::size_t>> member_labels(centers.size());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            double best = 0.0;
            int best_c = -1;
            for (std::size_t c = 0; c < centers.size(); ++c) {
                double d2 = 0.0;
                for (std::size_t i = 0; i < dim; ++i) {
                    const double d = rows[r].mapped[i] - centers[c][i];
                    d2 += d * d;
                }
                if (best_c < 0 || d2 < best) {
                    best = d2;
                    best_c = static_cast<int>(c);
                }
            }
            center_group_of_row[r] = best_c;
            ++member_labels[best_c][rows[r].true_value];
        }
        std::size_t majority_total = 0;
        for (const auto& group : member_labels) {
            std::size_t top = 0;
            for (const auto& [label, count] : group) top = std::max(top, count);
            majority_total += top;
        }
        purity = static_cast<double>(majority_total) / static_cast<double>(rows.size());
    }

    std::ofstream out(csv_path);
    require(out.good(), ErrorKind::io, "cannot write " + csv_path);
    out << "object_id,true_concept";
    if (include_vectors)
        for (std::size_t i = 0; i < dim; ++i) out << ",v" << i;
    out << ",pc1,pc2\n";
    out.precision(17);
    for (const auto& r : rows) {
        out << r.id << ',' << schema.supers()[k].values[r.true_value];
        if (include_vectors)
            for (std::size_t i = 0; i < dim; ++i) out << ',' << r.mapped[i];
        out << ',' << project(r.mapped, 0) << ',' << project(r.mapped, 1) << '\n';
    }
    require(out.good(), ErrorKind::io, "write failed for " + csv_path);

    return {rows.size(), purity};
}

}  // namespace vsa
