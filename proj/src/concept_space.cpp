#include "vsa/concept_space.hpp"

#include <algorithm>
#include <cmath>

namespace vsa {

namespace {

std::vector<double> softmax_plain(std::span<const double> logits) {
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    std::vector<double> out(logits.size());
    double z = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - mx);
        z += out[i];
    }
    for (auto& v : out) v /= z;
    return out;
}

}  // namespace

ConceptSpace::ConceptSpace(const AttributeSchema& schema, const JudgmentConfig& cfg,
                           ParamStore& store, Rng& init_rng)
    : schema_(schema), cfg_(cfg) {
    const int K = static_cast<int>(schema.super_count());
    const int M = static_cast<int>(schema.concept_count());
    const std::size_t dim = cfg.subspace_dim;
    const std::size_t feat = cfg.feature_dim;

    const double map_bound = 1.0 / std::sqrt(static_cast<double>(feat));
    for (int k = 0; k < K; ++k) {
        Tensor w(Shape::mat(dim, feat));
        for (auto& v : w.data) v = init_rng.uniform(-map_bound, map_bound);
        map_w_.push_back(store.add("map." + schema.super_name(k) + ".w", std::move(w)));
        map_b_.push_back(store.add("map." + schema.super_name(k) + ".b", Tensor(Shape::vec(dim))));
    }
    for (int c = 0; c < M; ++c)
        prior_.push_back(store.add("prior." + schema.concept_name(c),
                                   Tensor(Shape::vec(static_cast<std::size_t>(K)))));
    for (int c = 0; c < M; ++c) {
        for (int k = 0; k < K; ++k) {
            Tensor e(Shape::vec(dim));
            for (auto& v : e.data) v = init_rng.normal(0.0, cfg.embedding_init_std);
            embed_.push_back(store.add(
                "emb." + schema.concept_name(c) + "." + schema.super_name(k), std::move(e)));
        }
    }
    const double head_bound = 1.0 / std::sqrt(static_cast<double>(dim));
    for (int src = 0; src < K; ++src) {
        for (int dst = 0; dst < K; ++dst) {
            if (src == dst) continue;
            ShortcutHeadRef h;
            h.src = src;
            h.dst = dst;
            const std::string base =
                "head." + schema.super_name(src) + "-" + schema.super_name(dst);
            Tensor w1(Shape::mat(dim, dim)), w2(Shape::mat(dim, dim));
            for (auto& v : w1.data) v = init_rng.uniform(-head_bound, head_bound);
            for (auto& v : w2.data) v = init_rng.uniform(-head_bound, head_bound);
            h.w1 = store.add(base + ".w1", std::move(w1));
            h.b1 = store.add(base + ".b1", Tensor(Shape::vec(dim)));
            h.w2 = store.add(base + ".w2", std::move(w2));
            h.b2 = store.add(base + ".b2", Tensor(Shape::vec(dim)));
            heads_.push_back(h);
        }
    }
    cache_.resize(M);
    for (auto& entry : cache_) entry.mean.assign(dim, 0.0);
}

const ShortcutHeadRef& ConceptSpace::head(int src, int dst) const {
    for (const auto& h : heads_)
        if (h.src == src && h.dst == dst) return h;
    fail(ErrorKind::validation, "no shortcut head " + schema_.super_name(src) + "->" +
                                    schema_.super_name(dst));
}

std::vector<int> ConceptSpace::theta_lesson1() const {
    std::vector<int> out;
    out.insert(out.end(), prior_.begin(), prior_.end());
    for (std::size_t k = 0; k < map_w_.size(); ++k) {
        out.push_back(map_w_[k]);
        out.push_back(map_b_[k]);
    }
    out.insert(out.end(), embed_.begin(), embed_.end());
    return out;
}

std::vector<int> ConceptSpace::theta_lesson2(bool mixture_mode) const {
    if (mixture_mode) return theta_lesson1();
    require(frozen_, ErrorKind::state, "lesson-2 parameter group requires a frozen hierarchy");
    std::vector<int> out;
    for (std::size_t k = 0; k < map_w_.size(); ++k) {
        out.push_back(map_w_[k]);
        out.push_back(map_b_[k]);
    }
    for (int c = 0; c < static_cast<int>(schema_.concept_count()); ++c)
        out.push_back(embedding(c, assignment_[c]));
    return out;
}

std::vector<int> ConceptSpace::phi_params() const {
    std::vector<int> out;
    for (const auto& h : heads_) {
        out.push_back(h.w1);
        out.push_back(h.b1);
        out.push_back(h.w2);
        out.push_back(h.b2);
    }
    return out;
}

void ConceptSpace::freeze_hierarchy(ParamStore& store) {
    require(!frozen_, ErrorKind::state, "hierarchy already frozen");
    const int K = static_cast<int>(schema_.super_count());
    const int M = static_cast<int>(schema_.concept_count());
    assignment_.assign(M, 0);
    vocab_.assign(K, {});
    freeze_ties_ = 0;
    for (int c = 0; c < M; ++c) {
        const auto p = softmax_plain(store.value(prior_[c]).data);
        int best = 0;
        bool tie = false;
        for (int k = 1; k < K; ++k) {
            if (p[k] > p[best]) {
                best = k;
                tie = false;
            } else if (p[k] == p[best]) {
                tie = true;  // argmax keeps the lowest index
            }
        }
        if (tie) ++freeze_ties_;
        assignment_[c] = best;
        vocab_[best].push_back(c);
        for (int k = 0; k < K; ++k) {
            if (k == best) continue;
            auto& dead = store.value(embedding(c, k)).data;
            std::fill(dead.begin(), dead.end(), 0.0);
        }
    }
    frozen_ = true;
}

int ConceptSpace::assigned_super(int concept_id) const {
    require(frozen_, ErrorKind::state, "hierarchy not frozen yet");
    return assignment_.at(concept_id);
}

const std::vector<int>& ConceptSpace::vocab(int k) const {
    require(frozen_, ErrorKind::state, "hierarchy not frozen yet");
    return vocab_.at(k);
}

std::vector<double> ConceptSpace::assignment_margins(const ParamStore& store) const {
    std::vector<double> out;
    for (int c = 0; c < static_cast<int>(schema_.concept_count()); ++c) {
        auto p = softmax_plain(store.value(prior_[c]).data);
        std::sort(p.begin(), p.end(), std::greater<>());
        out.push_back(p[0] - p[1]);
    }
    return out;
}

void ConceptSpace::restore_assignment(const std::vector<int>& assignment) {
    require(assignment.size() == schema_.concept_count(), ErrorKind::validation,
            "assignment size mismatch");
    const int K = static_cast<int>(schema_.super_count());
    assignment_ = assignment;
    vocab_.assign(K, {});
    for (int c = 0; c < static_cast<int>(assignment.size()); ++c) {
        require(assignment[c] >= 0 && assignment[c] < K, ErrorKind::validation,
                "assignment out of range");
        vocab_[assignment[c]].push_back(c);
    }
    frozen_ = true;
}

void ConceptSpace::cache_insert(int concept_id, std::span<const double> mapped_feature) {
    auto& entry = cache_.at(concept_id);
    require(mapped_feature.size() == entry.mean.size(), ErrorKind::dimension,
            "cache insert dimension mismatch");
    const double n = static_cast<double>(entry.count);
    for (std::size_t i = 0; i < entry.mean.size(); ++i)
        entry.mean[i] = (n * entry.mean[i] + mapped_feature[i]) / (n + 1.0);
    ++entry.count;
}

namespace {

std::vector<double> plain_head_output(const ConceptSpace& cs, const ParamStore& store,
                                      const ShortcutHeadRef& head, const std::vector<double>& e) {
    const std::size_t dim = cs.config().subspace_dim;
    const auto& w1 = store.value(head.w1);
    const auto& b1 = store.value(head.b1);
    const auto& w2 = store.value(head.w2);
    const auto& b2 = store.value(head.b2);
    std::vector<double> h1(dim), h2(dim);
    for (std::size_t r = 0; r < dim; ++r) {
        double acc = b1.data[r];
        for (std::size_t c = 0; c < dim; ++c) acc += w1.at(r, c) * e[c];
        h1[r] = acc > 0.0 ? acc : 0.0;
    }
    for (std::size_t r = 0; r < dim; ++r) {
        double acc = b2.data[r];
        for (std::size_t c = 0; c < dim; ++c) acc += w2.at(r, c) * h1[c];
        h2[r] = acc;
    }
    return h2;
}

double norm_of(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
}

}  // namespace

std::vector<std::vector<double>> head_table(const ConceptSpace& cs, const ParamStore& store,
                                            const ShortcutHeadRef& head) {
    require(cs.frozen(), ErrorKind::state, "head_table requires a frozen hierarchy");
    const auto& src_vocab = cs.vocab(head.src);
    const auto& dst_vocab = cs.vocab(head.dst);
    require(!src_vocab.empty() && !dst_vocab.empty(), ErrorKind::state,
            "head_table: empty vocabulary");
    std::vector<std::vector<double>> table;
    for (int cx : src_vocab) {
        const auto& e = store.value(cs.embedding(cx, head.src)).data;
        auto h = plain_head_output(cs, store, head, e);
        const double hn = norm_of(h);
        std::vector<double> logits;
        for (int cy : dst_vocab) {
            const auto& ey = store.value(cs.embedding(cy, head.dst)).data;
            const double en = norm_of(ey);
            double cos = 0.0;
            if (hn > 1e-12 && en > 1e-12) {
                for (std::size_t i = 0; i < h.size(); ++i) cos += h[i] * ey[i];
                cos /= hn * en;
            }
            logits.push_back((cos - cs.config().gamma) / cs.config().tau);
        }
        table.push_back(softmax_plain(logits));
    }
    return table;
}

double head_table_deviation(const ConceptSpace& cs, const ParamStore& store,
                            const ShortcutHeadRef& head) {
    const auto table = head_table(cs, store, head);
    const double uniform = 1.0 / static_cast<double>(table[0].size());
    double dev = 0.0;
    for (const auto& row : table)
        for (double p : row) dev = std::max(dev, std::abs(p - uniform));
    return dev;
}

// --- JudgmentSession ---------------------------------------------------------

JudgmentSession::JudgmentSession(Tape& tape, const ParamStore& store, const ConceptSpace& cs,
                                 const Scene& scene, Options options)
    : tape_(tape), store_(store), cs_(cs), scene_(scene), options_(std::move(options)) {
    const int n = static_cast<int>(scene.objects.size());
    const int K = static_cast<int>(cs.schema().super_count());
    const int M = static_cast<int>(cs.schema().concept_count());
    param_vars_.assign(store.size(), -1);
    mapped_all_vars_.assign(K, -1);
    feature_vars_.assign(n, -1);
    mapped_vars_.assign(static_cast<std::size_t>(n) * K, -1);
    mapped_unit_vars_.assign(static_cast<std::size_t>(n) * K, -1);
    embed_unit_vars_.assign(static_cast<std::size_t>(M) * K, -1);
    prior_softmax_vars_.assign(M, -1);
    super_dist_vars_.assign(static_cast<std::size_t>(n) * K, -1);
    clustered_vars_.assign(static_cast<std::size_t>(n) * K, -1);
    ci_dist_vars_.assign(static_cast<std::size_t>(n) * K, -1);
    debias_vars_.assign(static_cast<std::size_t>(n) * K, -1);
    shortcut_vars_.assign(static_cast<std::size_t>(n) * cs.heads().size(), -1);
    all_concepts_.resize(M);
    for (int c = 0; c < M; ++c) all_concepts_[c] = c;

    if (!options_.oracle) {
        const bool needs_freeze = options_.mode != ExecMode::Mixture || options_.phi_head;
        require(!needs_freeze || cs.frozen(), ErrorKind::state,
                "judgment mode requires a frozen hierarchy");
    }
}

Tape::Var JudgmentSession::param(int index) {
    auto& v = param_vars_.at(index);
    if (v < 0) v = tape_.leaf(store_.value(index), index);
    return v;
}

Tape::Var JudgmentSession::feature(int obj) {
    auto& v = feature_vars_.at(obj);
    if (v < 0) {
        const auto& f = scene_.objects[obj].feature;
        v = tape_.constant(std::span<const double>(f.data(), f.size()), Shape::vec(f.size()));
    }
    return v;
}

Tape::Var JudgmentSession::feature_matrix() {
    if (feature_matrix_ < 0) {
        const std::size_t n = scene_.objects.size();
        const std::size_t d = scene_.objects.empty() ? 0 : scene_.objects[0].feature.size();
        Tensor stacked(Shape::mat(n, d));
        for (std::size_t o = 0; o < n; ++o)
            std::copy(scene_.objects[o].feature.begin(), scene_.objects[o].feature.end(),
                      stacked.data.begin() + o * d);
        feature_matrix_ = tape_.constant(stacked);
    }
    return feature_matrix_;
}

Tape::Var JudgmentSession::mapped_all(int k) {
    auto& v = mapped_all_vars_.at(k);
    if (v < 0)
        v = tape_.linear_all(feature_matrix(), param(cs_.mapping_w(k)), param(cs_.mapping_b(k)));
    return v;
}

Tape::Var JudgmentSession::mapped(int obj, int k) {
    auto& v = mapped_vars_.at(static_cast<std::size_t>(obj) * cs_.schema().super_count() + k);
    if (v < 0) v = tape_.row(mapped_all(k), static_cast<std::size_t>(obj));
    return v;
}

Tape::Var JudgmentSession::mapped_unit(int obj, int k) {
    auto& v = mapped_unit_vars_.at(static_cast<std::size_t>(obj) * cs_.schema().super_count() + k);
    if (v < 0) v = tape_.normalize(mapped(obj, k));
    return v;
}

Tape::Var JudgmentSession::embed_unit(int concept_id, int k) {
    auto& v =
        embed_unit_vars_.at(static_cast<std::size_t>(concept_id) * cs_.schema().super_count() + k);
    if (v < 0) v = tape_.normalize(param(cs_.embedding(concept_id, k)));
    return v;
}

Tape::Var JudgmentSession::prior_softmax(int concept_id) {
    auto& v = prior_softmax_vars_.at(concept_id);
    if (v < 0) v = tape_.softmax(param(cs_.prior(concept_id)));
    return v;
}

Tape::Var JudgmentSession::cosine(int obj, int concept_id, int k) {
    return tape_.dot(mapped_unit(obj, k), embed_unit(concept_id, k));
}

int JudgmentSession::vocab_slot(int concept_id) const {
    const auto& voc = cs_.vocab(cs_.assigned_super(concept_id));
    for (std::size_t i = 0; i < voc.size(); ++i)
        if (voc[i] == concept_id) return static_cast<int>(i);
    fail(ErrorKind::internal, "concept missing from its own vocabulary");
}

Tape::Var JudgmentSession::super_dist(int obj, int k) {
    auto& v = super_dist_vars_.at(static_cast<std::size_t>(obj) * cs_.schema().super_count() + k);
    if (v < 0) {
        const auto& voc = cs_.vocab(k);
        require(!voc.empty(), ErrorKind::state,
                "no concepts assigned to superordinate " + cs_.schema().super_name(k));
        std::vector<Tape::Var> logits;
        logits.reserve(voc.size());
        const double gamma = cs_.config().gamma;
        const double inv_tau = 1.0 / cs_.config().tau;
        for (int c : voc)
            logits.push_back(tape_.scale(tape_.offset(cosine(obj, c, k), -gamma), inv_tau));
        v = tape_.softmax(tape_.stack(logits));
    }
    return v;
}

Tape::Var JudgmentSession::clustered_vec(int obj, int k) {
    auto& v = clustered_vars_.at(static_cast<std::size_t>(obj) * cs_.schema().super_count() + k);
    if (v < 0) {
        const auto base = super_dist(obj, k);
        const auto& voc = cs_.vocab(k);
        bool any_active = false;
        for (int c : voc) any_active = any_active || cs_.cache_active(c);
        if (!any_active || cs_.config().alpha == 0.0) {
            v = base;
        } else {
            std::vector<Tape::Var> factors;
            factors.reserve(voc.size());
            for (int c : voc) {
                if (!cs_.cache_active(c)) {
                    factors.push_back(tape_.constant_scalar(1.0));
                    continue;
                }
                const auto& u = cs_.cache(c).mean;
                const auto center =
                    tape_.constant(std::span<const double>(u.data(), u.size()), Shape::vec(u.size()));
                const auto dist = tape_.l2norm(tape_.sub(mapped(obj, k), center));
                factors.push_back(tape_.exp(tape_.scale(dist, -cs_.config().alpha)));
            }
            v = tape_.mul(base, tape_.stack(factors));
        }
    }
    return v;
}

Tape::Var JudgmentSession::mixture_prob(int obj, int concept_id) {
    const int K = static_cast<int>(cs_.schema().super_count());
    std::vector<Tape::Var> sims;
    sims.reserve(K);
    const double gamma = cs_.config().gamma;
    const double inv_tau = 1.0 / cs_.config().tau;
    for (int k = 0; k < K; ++k)
        sims.push_back(tape_.scale(tape_.offset(cosine(obj, concept_id, k), -gamma), inv_tau));
    return tape_.dot(prior_softmax(concept_id), tape_.sigmoid(tape_.stack(sims)));
}

Tape::Var JudgmentSession::ci_query_dist(int obj, int k) {
    auto& v = ci_dist_vars_.at(static_cast<std::size_t>(obj) * cs_.schema().super_count() + k);
    if (v < 0) {
        // Lesson-1 query rule: every concept scores by its prior mass on the
        // queried subspace times the similarity term in that subspace.
        const double gamma = cs_.config().gamma;
        const double inv_tau = 1.0 / cs_.config().tau;
        std::vector<Tape::Var> scores;
        scores.reserve(all_concepts_.size());
        for (int c : all_concepts_) {
            const auto weight = tape_.pick(prior_softmax(c), k);
            const auto sim =
                tape_.sigmoid(tape_.scale(tape_.offset(cosine(obj, c, k), -gamma), inv_tau));
            scores.push_back(tape_.mul(weight, sim));
        }
        const auto stacked = tape_.stack(scores);
        v = tape_.div_scalar(stacked, tape_.sum(stacked));
    }
    return v;
}

Tape::Var JudgmentSession::shortcut_dist(int obj, const ShortcutHeadRef& head) {
    int head_index = -1;
    for (std::size_t i = 0; i < cs_.heads().size(); ++i)
        if (&cs_.heads()[i] == &head || (cs_.heads()[i].src == head.src &&
                                         cs_.heads()[i].dst == head.dst))
            head_index = static_cast<int>(i);
    auto& v = shortcut_vars_.at(static_cast<std::size_t>(obj) * cs_.heads().size() + head_index);
    if (v < 0) {
        // x* = argmax of the source-side exclusive judgment; no gradient may
        // flow through the source pathway (Eq. 9's stop-gradient).
        const auto src_vals = tape_.value(super_dist(obj, head.src));
        int best = 0;
        for (std::size_t i = 1; i < src_vals.size(); ++i)
            if (src_vals[i] > src_vals[best]) best = static_cast<int>(i);
        const int cx = cs_.vocab(head.src)[best];

        const auto e = tape_.stop_gradient(param(cs_.embedding(cx, head.src)));
        const auto h1 = tape_.relu(tape_.add(tape_.matvec(param(head.w1), e), param(head.b1)));
        const auto h2 = tape_.add(tape_.matvec(param(head.w2), h1), param(head.b2));
        const auto hu = tape_.normalize(h2);
        const double gamma = cs_.config().gamma;
        const double inv_tau = 1.0 / cs_.config().tau;
        std::vector<Tape::Var> logits;
        for (int cy : cs_.vocab(head.dst)) {
            const auto cos = tape_.dot(hu, tape_.stop_gradient(embed_unit(cy, head.dst)));
            logits.push_back(tape_.scale(tape_.offset(cos, -gamma), inv_tau));
        }
        v = tape_.softmax(tape_.stack(logits));
    }
    return v;
}

Tape::Var JudgmentSession::base_dist(int obj, int k) {
    switch (options_.mode) {
        case ExecMode::Mixture: return ci_query_dist(obj, k);
        case ExecMode::Super: return super_dist(obj, k);
        default: {
            const auto p = clustered_vec(obj, k);
            if (p == super_dist(obj, k)) return p;  // no active cache
            return tape_.div_scalar(p, tape_.sum(p));
        }
    }
}

std::vector<double> debias_distribution(std::span<const double> base,
                                        const std::vector<std::vector<double>>& shortcut_outputs,
                                        double lambda, bool* fell_back) {
    if (fell_back) *fell_back = false;
    std::vector<double> out(base.begin(), base.end());
    if (shortcut_outputs.empty()) return out;
    const double uniform = 1.0 / static_cast<double>(base.size());
    const double scale = lambda / static_cast<double>(shortcut_outputs.size());
    double total = 0.0;
    for (std::size_t y = 0; y < out.size(); ++y) {
        double dev = 0.0;
        for (const auto& s : shortcut_outputs) dev += s[y] - uniform;
        out[y] = std::max(0.0, out[y] - scale * dev);
        total += out[y];
    }
    if (total <= 0.0) {
        if (fell_back) *fell_back = true;
        return {base.begin(), base.end()};
    }
    for (auto& v : out) v /= total;
    return out;
}

Tape::Var JudgmentSession::debiased_dist(int obj, int k) {
    auto& v = debias_vars_.at(static_cast<std::size_t>(obj) * cs_.schema().super_count() + k);
    if (v < 0) {
        // Debiasing is an inference-time correction; it enters the tape as a
        // constant, so no gradient ever flows through the subtraction.
        const auto base = base_dist(obj, k);
        std::vector<std::vector<double>> shortcuts;
        for (int hi : options_.debias_heads) {
            const auto& h = cs_.heads()[hi];
            if (h.dst != k) continue;
            const auto sv = tape_.value(shortcut_dist(obj, h));
            shortcuts.emplace_back(sv.begin(), sv.end());
        }
        if (shortcuts.empty()) {
            v = base;
            return v;
        }
        bool fell_back = false;
        const auto adjusted = debias_distribution(tape_.value(base), shortcuts,
                                                  cs_.config().debias_lambda, &fell_back);
        if (fell_back) note_degenerate();
        v = tape_.constant(std::span<const double>(adjusted.data(), adjusted.size()),
                           Shape::vec(adjusted.size()));
    }
    return v;
}

Tape::Var JudgmentSession::prob(int obj, int concept_id) {
    if (options_.oracle) {
        const int k = cs_.schema().concept_super(concept_id);
        const bool has = scene_.attribute_value(obj, k) ==
                         cs_.schema().concept_value_index(concept_id);
        return tape_.constant_scalar(has ? 1.0 : 0.0);
    }
    if (options_.phi_head && cs_.assigned_super(concept_id) == options_.phi_head->dst)
        return tape_.pick(shortcut_dist(obj, *options_.phi_head), vocab_slot(concept_id));
    if (options_.phi_head)
        return tape_.stop_gradient(
            tape_.pick(super_dist(obj, cs_.assigned_super(concept_id)), vocab_slot(concept_id)));

    switch (options_.mode) {
        case ExecMode::Mixture: return mixture_prob(obj, concept_id);
        case ExecMode::Super:
            return tape_.pick(super_dist(obj, cs_.assigned_super(concept_id)),
                              vocab_slot(concept_id));
        case ExecMode::Clustered:
            return tape_.pick(clustered_vec(obj, cs_.assigned_super(concept_id)),
                              vocab_slot(concept_id));
        default:
            return tape_.pick(debiased_dist(obj, cs_.assigned_super(concept_id)),
                              vocab_slot(concept_id));
    }
}

Tape::Var JudgmentSession::dist_over(int obj, int super_k) {
    if (options_.oracle) {
        const std::size_t vocab_n = cs_.schema().vocab_size(super_k);
        Tensor onehot(Shape::vec(vocab_n));
        onehot.data[scene_.attribute_value(obj, super_k)] = 1.0;
        return tape_.constant(onehot);
    }
    if (options_.phi_head && super_k == options_.phi_head->dst)
        return shortcut_dist(obj, *options_.phi_head);
    if (options_.phi_head) return tape_.stop_gradient(super_dist(obj, super_k));

    switch (options_.mode) {
        case ExecMode::Mixture: return ci_query_dist(obj, super_k);
        case ExecMode::Super: return super_dist(obj, super_k);
        case ExecMode::Clustered: return base_dist(obj, super_k);
        default: return debiased_dist(obj, super_k);
    }
}

std::vector<int> JudgmentSession::answer_vocab(int super_k) const {
    if (options_.oracle) {
        std::vector<int> schema_vocab;
        for (std::size_t v = 0; v < cs_.schema().vocab_size(super_k); ++v)
            schema_vocab.push_back(cs_.schema().concept_of(super_k, static_cast<int>(v)));
        return schema_vocab;
    }
    if (options_.mode == ExecMode::Mixture && !options_.phi_head) return all_concepts_;
    return cs_.vocab(super_k);
}

std::span<const double> JudgmentSession::mapped_value(int obj, int k) {
    return tape_.value(mapped(obj, k));
}

double JudgmentSession::super_prob_value(int obj, int concept_id) {
    const auto vals = tape_.value(super_dist(obj, cs_.assigned_super(concept_id)));
    return vals[vocab_slot(concept_id)];
}

}  // namespace vsa
