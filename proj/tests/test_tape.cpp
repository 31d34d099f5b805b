#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "fd_check.hpp"
#include "vsa/rng.hpp"
#include "vsa/optimizer.hpp"
#include "vsa/tape.hpp"

using namespace vsa;
using Var = Tape::Var;

namespace {

Tensor random_vec(Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
    Tensor t(Shape::vec(n));
    for (auto& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

Tensor random_mat(Rng& rng, std::size_t r, std::size_t c) {
    Tensor t(Shape::mat(r, c));
    for (auto& v : t.data) v = rng.uniform(-1.0, 1.0);
    return t;
}

}  // namespace

TEST_CASE("sigmoid at zero: value 0.5, local derivative 0.25") {
    Tape tape;
    Tensor x = Tensor::scalar(0.0);
    Var xv = tape.leaf(x, 0);
    Var y = tape.sigmoid(xv);
    CHECK(tape.scalar_value(y) == doctest::Approx(0.5).epsilon(1e-15));
    auto grads = tape.backward(y);
    REQUIRE(grads.size() == 1);
    CHECK(grads[0].grad.data[0] == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("softmax of equal logits is uniform") {
    Tape tape;
    Var x = tape.constant(Tensor::vec({0.0, 0.0, 0.0}));
    Var y = tape.softmax(x);
    for (double p : tape.value(y)) CHECK(p == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("stop_gradient severs half the product rule in dot(a, stop(a))") {
    Tape tape;
    Tensor a = Tensor::vec({1.0, 2.0});
    Var av = tape.leaf(a, 0);
    Var d = tape.dot(av, tape.stop_gradient(av));
    CHECK(tape.scalar_value(d) == doctest::Approx(5.0));
    auto grads = tape.backward(d);
    REQUIRE(grads.size() == 1);
    CHECK(grads[0].grad.data[0] == doctest::Approx(1.0));
    CHECK(grads[0].grad.data[1] == doctest::Approx(2.0));
}

TEST_CASE("sq_diff loss gradient: d(x-3)^2/dx at x=5 is 4") {
    Tape tape;
    Tensor xt = Tensor::scalar(5.0);
    Var x = tape.leaf(xt, 0);
    Var target = tape.constant_scalar(3.0);
    Var loss = tape.sq_diff(x, target);
    auto grads = tape.backward(loss);
    CHECK(grads[0].grad.data[0] == doctest::Approx(4.0).epsilon(1e-15));
}

TEST_CASE("softmax-then-log gradient equals p minus onehot") {
    // Analytic oracle evaluated independently: p_i = exp(x_i) / sum exp(x_j).
    const std::vector<double> logits{1.0, 0.0, -1.0};
    double z = 0.0;
    for (double v : logits) z += std::exp(v);
    std::vector<double> p;
    for (double v : logits) p.push_back(std::exp(v) / z);

    Tensor logit_t = Tensor::vec(logits);
    for (std::size_t idx = 0; idx < 3; ++idx) {
        Tape tape;
        Var x = tape.leaf(logit_t, 0);
        Var nll = tape.scale(tape.log(tape.pick(tape.softmax(x), idx)), -1.0);
        auto grads = tape.backward(nll);
        for (std::size_t j = 0; j < 3; ++j) {
            const double expect = p[j] - (j == idx ? 1.0 : 0.0);
            CHECK(grads[0].grad.data[j] == doctest::Approx(expect).epsilon(1e-12));
        }
    }
}

TEST_CASE("three-layer graph gradients match central finite differences") {
    Rng rng(20240817);
    for (int trial = 0; trial < 10; ++trial) {
        Tensor w1 = random_mat(rng, 5, 4);
        Tensor w2 = random_mat(rng, 3, 5);
        Tensor x = random_vec(rng, 4);
        const std::size_t pick_idx = static_cast<std::size_t>(rng.index(3));

        auto forward = [&](const std::vector<Tensor>& in) {
            Tape t;
            Var vw1 = t.leaf(in[0], 0);
            Var vw2 = t.leaf(in[1], 1);
            Var vx = t.leaf(in[2], 2);
            Var h = t.relu(t.matvec(vw1, vx));
            Var logits = t.matvec(vw2, h);
            return -t.scalar_value(t.log(t.pick(t.softmax(logits), pick_idx)));
        };

        Tape tape;
        Var vw1 = tape.leaf(w1, 0);
        Var vw2 = tape.leaf(w2, 1);
        Var vx = tape.leaf(x, 2);
        Var h = tape.relu(tape.matvec(vw1, vx));
        Var logits = tape.matvec(vw2, h);
        Var loss = tape.scale(tape.log(tape.pick(tape.softmax(logits), pick_idx)), -1.0);
        auto grads = tape.backward(loss);
        REQUIRE(grads.size() == 3);
        std::vector<Tensor> analytic{grads[0].grad, grads[1].grad, grads[2].grad};

        auto err = testing::fd_max_rel_err(
            [&](const std::vector<Tensor>& in) { return forward(in); }, {w1, w2, x}, analytic);
        CHECK(err < 1e-4);
    }
}

TEST_CASE("every primitive matches central finite differences over 100 seeds") {
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        Rng rng(Rng::derive(99, seed));
        const std::size_t n = 3 + static_cast<std::size_t>(rng.index(4));

        // One composite graph touching every differentiable primitive; the
        // scalar output mixes them with random weights.
        Tensor m = random_mat(rng, n, n);
        Tensor a = random_vec(rng, n, 0.5, 2.0);   // positive: feeds log
        Tensor b = random_vec(rng, n, -2.0, 2.0);
        Tensor s = Tensor::scalar(rng.uniform(0.5, 2.0));
        // Keep relu inputs away from the kink and max_elem away from ties.
        for (auto& v : b.data)
            if (std::abs(v) < 5e-3) v = 5e-3;
        {
            double best = -1e9, second = -1e9;
            for (double v : b.data) {
                if (v > best) {
                    second = best;
                    best = v;
                } else if (v > second) {
                    second = v;
                }
            }
            if (best - second < 5e-3) b.data[0] = best + 1.0;
        }
        Tensor w = random_vec(rng, n);

        auto build = [&](Tape& t, const std::vector<Tensor>& in, std::vector<Var>* leaves) {
            Var vm = t.leaf(in[0], 0);
            Var va = t.leaf(in[1], 1);
            Var vb = t.leaf(in[2], 2);
            Var vs = t.leaf(in[3], 3);
            if (leaves) *leaves = {vm, va, vb, vs};
            Var mv = t.matvec(vm, va);
            Var terms[16];
            Var vw = t.constant(w);
            terms[0] = t.dot(t.add(mv, vb), vw);
            terms[1] = t.dot(t.sub(mv, vb), vw);
            terms[2] = t.dot(t.mul(va, vb), vw);
            terms[3] = t.dot(t.scale(va, 1.7), vw);
            terms[4] = t.dot(t.offset(vb, 0.3), vw);
            terms[5] = t.dot(t.sigmoid(vb), vw);
            terms[6] = t.dot(t.softmax(vb), vw);
            terms[7] = t.dot(t.log(va), vw);
            terms[8] = t.dot(t.exp(vb), vw);
            terms[9] = t.l2norm(vb);
            terms[10] = t.dot(t.normalize(va), vw);
            terms[11] = t.sq_diff(va, vb);
            terms[12] = t.dot(t.relu(vb), vw);
            terms[13] = t.sum(t.div_scalar(va, vs));
            terms[14] = t.max_elem(vb);
            terms[15] = t.dot(t.mul_scalar(va, vs), vw);
            Var total = t.stack(std::span<const Var>(terms, 16));
            return t.pick(t.softmax(total), 0);
        };

        std::vector<Tensor> inputs{m, a, b, s};
        Tape tape;
        std::vector<Var> leaves;
        Var loss = build(tape, inputs, &leaves);
        auto grads = tape.backward(loss);
        REQUIRE(grads.size() == 4);
        std::vector<Tensor> analytic;
        for (auto& g : grads) analytic.push_back(g.grad);

        auto err = testing::fd_max_rel_err(
            [&](const std::vector<Tensor>& in) {
                Tape t;
                return t.scalar_value(build(t, in, nullptr));
            },
            inputs, analytic);
        CHECK(err < 1e-4);
    }
}

TEST_CASE("linear_all and row match matvec composition and finite differences") {
    Rng rng(555);
    const std::size_t n = 3, rows = 5, cols = 7;
    Tensor x(Shape::mat(n, cols));
    for (auto& v : x.data) v = rng.uniform(-1.0, 1.0);
    Tensor w(Shape::mat(rows, cols));
    for (auto& v : w.data) v = rng.uniform(-1.0, 1.0);
    Tensor b(Shape::vec(rows));
    for (auto& v : b.data) v = rng.uniform(-1.0, 1.0);
    Tensor pickw(Shape::vec(rows));
    for (auto& v : pickw.data) v = rng.uniform(-1.0, 1.0);

    auto forward = [&](const std::vector<Tensor>& in) {
        Tape t2;
        auto vx = t2.constant(x);
        Tensor wl = in[0], bl = in[1];
        auto vw = t2.leaf(wl, 0);
        auto vb = t2.leaf(bl, 1);
        auto y = t2.linear_all(vx, vw, vb);
        auto pw = t2.constant(pickw);
        double acc = 0.0;
        for (std::size_t o = 0; o < n; ++o)
            acc += (o + 1) * t2.scalar_value(t2.dot(t2.row(y, o), pw));
        return acc;
    };

    Tape tape;
    auto vx = tape.constant(x);
    auto vw = tape.leaf(w, 0);
    auto vb = tape.leaf(b, 1);
    auto y = tape.linear_all(vx, vw, vb);
    // Row o must equal matvec(w, x_row_o) + b.
    Tape t3;
    for (std::size_t o = 0; o < n; ++o) {
        Tensor xrow(Shape::vec(cols));
        for (std::size_t c = 0; c < cols; ++c) xrow.data[c] = x.at(o, c);
        auto xv = t3.constant(xrow);
        auto wv = t3.leaf(w, 0);
        auto bv = t3.leaf(b, 1);
        auto yv = t3.add(t3.matvec(wv, xv), bv);
        for (std::size_t r = 0; r < rows; ++r)
            CHECK(tape.value(y)[o * rows + r] ==
                  doctest::Approx(t3.value(yv)[r]).epsilon(1e-14));
    }
    auto pw = tape.constant(pickw);
    Tape::Var terms[3];
    for (std::size_t o = 0; o < n; ++o)
        terms[o] = tape.scale(tape.dot(tape.row(y, o), pw), static_cast<double>(o + 1));
    auto loss = tape.sum(tape.stack(std::span<const Tape::Var>(terms, 3)));
    auto grads = tape.backward(loss);
    REQUIRE(grads.size() == 2);
    // The weight gradient comes back factored; materialize it.
    CHECK(grads[0].factored());
    std::vector<Tensor> analytic{grads[0].dense(), grads[1].grad};
    auto err = testing::fd_max_rel_err(
        [&](const std::vector<Tensor>& in) { return forward(in); }, {w, b}, analytic, 1e-6);
    CHECK(err < 1e-4);
}

TEST_CASE("backward is deterministic: identical tape gives bit-identical gradients") {
    auto run = [] {
        Rng rng(7);
        Tape t;
        Tensor m = random_mat(rng, 6, 6);
        Tensor x = random_vec(rng, 6);
        Var vm = t.leaf(m, 0);
        Var vx = t.leaf(x, 1);
        Var y = t.softmax(t.relu(t.matvec(vm, vx)));
        Var loss = t.scale(t.log(t.pick(y, 2)), -1.0);
        auto grads = t.backward(loss);
        return std::pair{grads[0].grad.data, grads[1].grad.data};
    };
    auto [g1m, g1x] = run();
    auto [g2m, g2x] = run();
    CHECK(g1m == g2m);  // exact bitwise equality
    CHECK(g1x == g2x);
}

TEST_CASE("gradients upstream of stop_gradient are exactly zero") {
    Rng rng(11);
    Tape t;
    Tensor a = random_vec(rng, 4);
    Tensor b = random_vec(rng, 4);
    Var va = t.leaf(a, 0);
    Var vb = t.leaf(b, 1);
    // b only reaches the loss through a severed edge.
    Var blocked = t.stop_gradient(t.sigmoid(vb));
    Var loss = t.dot(t.mul(va, blocked), t.constant(random_vec(rng, 4)));
    auto grads = t.backward(loss);
    REQUIRE(grads.size() == 2);
    for (double g : grads[1].grad.data) CHECK(g == 0.0);
    double a_norm = 0.0;
    for (double g : grads[0].grad.data) a_norm += std::abs(g);
    CHECK(a_norm > 0.0);
}

TEST_CASE("untouched leaves get zero gradients") {
    Tape t;
    Tensor a = Tensor::scalar(2.0);
    Tensor b = Tensor::vec({1.0, 2.0, 3.0});
    Var used = t.leaf(a, 0);
    Var unused = t.leaf(b, 1);
    (void)unused;
    Var loss = t.mul(used, used);
    auto grads = t.backward(loss);
    REQUIRE(grads.size() == 2);
    CHECK(grads[0].grad.data[0] == doctest::Approx(4.0));
    for (double g : grads[1].grad.data) CHECK(g == 0.0);
}

TEST_CASE("contract and domain errors") {
    Tape t;
    Var v = t.constant(Tensor::vec({1.0, 2.0}));
    CHECK_THROWS_AS((void)t.backward(v), Error);  // non-scalar loss
    Tape t2;
    CHECK_THROWS_AS((void)t2.log(t2.constant(Tensor::vec({1.0, -1.0}))), Error);
    Tape t3;
    Var a = t3.constant(Tensor::vec({1.0, 2.0}));
    Var b = t3.constant(Tensor::vec({1.0, 2.0, 3.0}));
    CHECK_THROWS_AS((void)t3.add(a, b), Error);
    Tape t4;
    CHECK_THROWS_AS((void)t4.normalize(t4.constant(Tensor::vec({0.0, 0.0}))), Error);
}

TEST_CASE("adamw: zero gradient applies only decoupled decay") {
    ParamStore store;
    const int p = store.add("w", Tensor::vec({1.0, -2.0, 0.5}));
    AdamWConfig cfg;
    cfg.lr = 0.01;
    cfg.weight_decay = 0.1;
    AdamW opt(cfg, {p}, store);
    GradBuffer grads(store);
    grads.touch_zero(p);
    opt.step(store, grads);
    CHECK(store.value(p).data[0] == doctest::Approx(1.0 * (1.0 - 0.01 * 0.1)).epsilon(1e-15));
    CHECK(store.value(p).data[1] == doctest::Approx(-2.0 * (1.0 - 0.01 * 0.1)).epsilon(1e-15));
    CHECK(store.value(p).data[2] == doctest::Approx(0.5 * (1.0 - 0.01 * 0.1)).epsilon(1e-15));
}

TEST_CASE("adamw: first step from zero moments moves by lr in the gradient sign direction") {
    // Hand-evaluated recursion at t=1: m-hat = g, v-hat = g*g, so the update
    // is lr * g / (|g| + eps).
    ParamStore store;
    const int p = store.add("w", Tensor::vec({1.0, 1.0}));
    AdamWConfig cfg;
    cfg.lr = 0.001;
    cfg.weight_decay = 0.0;
    AdamW opt(cfg, {p}, store);
    GradBuffer grads(store);
    Tensor g = Tensor::vec({2.0, -0.3});
    grads.accumulate(p, g);
    opt.step(store, grads);
    for (std::size_t i = 0; i < 2; ++i) {
        const double expected = 1.0 - cfg.lr * g.data[i] / (std::abs(g.data[i]) + cfg.eps);
        CHECK(store.value(p).data[i] == doctest::Approx(expected).epsilon(1e-15));
        CHECK(std::abs(store.value(p).data[i] - (1.0 - cfg.lr * (g.data[i] > 0 ? 1.0 : -1.0))) <
              1e-6);
    }
}

TEST_CASE("adamw: missing gradient entry is a contract error") {
    ParamStore store;
    const int p = store.add("w", Tensor::scalar(1.0));
    AdamW opt({}, {p}, store);
    GradBuffer grads(store);
    CHECK_THROWS_AS(opt.step(store, grads), Error);
}
