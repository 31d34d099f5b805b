#include "vsa/tape.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace vsa {

namespace {
constexpr double kNormFloor = 1e-12;
}

void Tape::reset() {
    nodes_.clear();
    arena_.clear();
    grads_.clear();
    goff_.clear();
    pool_.clear();
    cons_other_.clear();
    cons_linw_.clear();
    grads_valid_ = false;
}

void Tape::note_consumer(Var in, bool as_linear_weight) {
    if (in < 0) return;
    auto& counter = as_linear_weight ? cons_linw_ : cons_other_;
    counter[static_cast<std::size_t>(in)]++;
}

Tensor Tape::LeafGrad::dense() const {
    if (!factored()) return grad;
    const std::size_t n = factor_g.shape.dims[0];
    const std::size_t m = factor_g.shape.dims[1];
    const std::size_t k = factor_x->shape.dims[1];
    Tensor out = grad.numel() > 0 ? grad : Tensor(Shape::mat(m, k));
    for (std::size_t r = 0; r < m; ++r)
        for (std::size_t o = 0; o < n; ++o) {
            const double go = factor_g.data[o * m + r];
            if (go == 0.0) continue;
            const double* xrow = factor_x->data.data() + o * k;
            double* grow = out.data.data() + r * k;
            for (std::size_t cc = 0; cc < k; ++cc) grow[cc] += go * xrow[cc];
        }
    return out;
}

std::size_t Tape::check(Var v) const {
    require(v >= 0 && static_cast<std::size_t>(v) < nodes_.size(), ErrorKind::contract,
            "tape variable out of range");
    return static_cast<std::size_t>(v);
}

const double* Tape::val_ptr(Var v) const {
    const Node& n = nodes_[check(v)];
    return n.ext ? n.ext : arena_.data() + n.off;
}

double* Tape::out_ptr(Var v) { return arena_.data() + nodes_[check(v)].off; }

std::span<const double> Tape::value(Var v) const {
    const Node& n = nodes_[check(v)];
    return {val_ptr(v), n.shape.numel()};
}

double Tape::scalar_value(Var v) const {
    require(nodes_[check(v)].shape.rank == 0, ErrorKind::contract, "expected scalar tape value");
    return *val_ptr(v);
}

Tensor Tape::tensor_value(Var v) const {
    const auto s = value(v);
    Tensor t(nodes_[check(v)].shape);
    std::copy(s.begin(), s.end(), t.data.begin());
    return t;
}

Tape::Var Tape::push(Node node) {
    grads_valid_ = false;
    goff_.push_back(0);  // assigned lazily in backward()
    cons_other_.push_back(0);
    cons_linw_.push_back(0);
    nodes_.push_back(node);
    return static_cast<Var>(nodes_.size() - 1);
}

Tape::Var Tape::alloc_output(Op op, Shape shape, Var in0, Var in1) {
    Node n;
    n.op = op;
    n.shape = shape;
    n.in0 = in0;
    n.in1 = in1;
    n.off = arena_.size();
    arena_.resize(arena_.size() + shape.numel());
    note_consumer(in0, false);
    note_consumer(in1, op == Op::LinearAll);
    return push(n);
}

void Tape::check_same_shape(Var a, Var b, const char* op) const {
    require(nodes_[check(a)].shape == nodes_[check(b)].shape, ErrorKind::dimension,
            std::string(op) + ": shape mismatch " + nodes_[a].shape.str() + " vs " + nodes_[b].shape.str());
}

Tape::Var Tape::leaf(std::span<const double> values, Shape shape, int param_id) {
    // Finiteness of parameters is enforced at the optimizer boundary once per
    // step; re-scanning them on every tape build would dominate training time.
    require(values.size() == shape.numel(), ErrorKind::dimension, "leaf: data/shape mismatch");
    Node n;
    n.op = Op::Input;
    n.shape = shape;
    n.ext = values.data();
    n.param_id = param_id;
    return push(n);
}

Tape::Var Tape::constant(std::span<const double> values, Shape shape) {
    require(values.size() == shape.numel(), ErrorKind::dimension, "constant: data/shape mismatch");
    if (!all_finite(values.data(), values.size()))
        fail(ErrorKind::domain, "non-finite value in tape constant");
    Node n;
    n.op = Op::Input;
    n.shape = shape;
    n.off = arena_.size();
    n.diff = false;
    arena_.insert(arena_.end(), values.begin(), values.end());
    return push(n);
}

Tape::Var Tape::constant(const Tensor& t) { return constant(t.data, t.shape); }

Tape::Var Tape::constant_scalar(double v) {
    const double d[1] = {v};
    return constant(std::span<const double>(d, 1), Shape::scalar());
}

Tape::Var Tape::matvec(Var m, Var x) {
    const Shape& ms = nodes_[check(m)].shape;
    const Shape& xs = nodes_[check(x)].shape;
    require(ms.rank == 2 && xs.rank == 1 && ms.dims[1] == xs.dims[0], ErrorKind::dimension,
            "matvec: incompatible shapes " + ms.str() + " x " + xs.str());
    const std::size_t rows = ms.dims[0], cols = ms.dims[1];
    Var out = alloc_output(Op::MatVec, Shape::vec(rows), m, x);
    const double* __restrict__ mp = val_ptr(m);
    const double* __restrict__ xp = val_ptr(x);
    double* __restrict__ yp = out_ptr(out);
    // Four partial sums break the FP dependency chain so the loop pipelines
    // without reassociation flags; the summation order is fixed either way.
    for (std::size_t r = 0; r < rows; ++r) {
        const double* __restrict__ row = mp + r * cols;
        double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
        std::size_t c = 0;
        for (; c + 4 <= cols; c += 4) {
            a0 += row[c] * xp[c];
            a1 += row[c + 1] * xp[c + 1];
            a2 += row[c + 2] * xp[c + 2];
            a3 += row[c + 3] * xp[c + 3];
        }
        double acc = (a0 + a1) + (a2 + a3);
        for (; c < cols; ++c) acc += row[c] * xp[c];
        yp[r] = acc;
    }
    return out;
}

Tape::Var Tape::linear_all(Var x_rows, Var w, Var b) {
    const Shape& xs = nodes_[check(x_rows)].shape;
    const Shape& ws = nodes_[check(w)].shape;
    const Shape& bs = nodes_[check(b)].shape;
    require(xs.rank == 2 && ws.rank == 2 && bs.rank == 1 && xs.dims[1] == ws.dims[1] &&
                bs.dims[0] == ws.dims[0],
            ErrorKind::dimension,
            "linear_all: incompatible shapes " + xs.str() + ", " + ws.str() + ", " + bs.str());
    const std::size_t n = xs.dims[0], cols = xs.dims[1], rows = ws.dims[0];
    Var out = alloc_output(Op::LinearAll, Shape::mat(n, rows), x_rows, w);
    nodes_[out].iaux = b;  // third input
    note_consumer(b, false);
    const double* __restrict__ xp = val_ptr(x_rows);
    const double* __restrict__ wp = val_ptr(w);
    const double* __restrict__ bp = val_ptr(b);
    double* __restrict__ yp = out_ptr(out);
    for (std::size_t o = 0; o < n; ++o)
        for (std::size_t r = 0; r < rows; ++r) yp[o * rows + r] = bp[r];
    for (std::size_t r = 0; r < rows; ++r) {
        const double* __restrict__ wrow = wp + r * cols;
        for (std::size_t o = 0; o < n; ++o) {
            const double* __restrict__ xrow = xp + o * cols;
            double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
            std::size_t cc = 0;
            for (; cc + 4 <= cols; cc += 4) {
                a0 += wrow[cc] * xrow[cc];
                a1 += wrow[cc + 1] * xrow[cc + 1];
                a2 += wrow[cc + 2] * xrow[cc + 2];
                a3 += wrow[cc + 3] * xrow[cc + 3];
            }
            double acc = (a0 + a1) + (a2 + a3);
            for (; cc < cols; ++cc) acc += wrow[cc] * xrow[cc];
            yp[o * rows + r] += acc;
        }
    }
    return out;
}

Tape::Var Tape::row(Var m, std::size_t r) {
    const Shape& ms = nodes_[check(m)].shape;
    require(ms.rank == 2 && r < ms.dims[0], ErrorKind::dimension, "row: index out of range");
    Var out = alloc_output(Op::Row, Shape::vec(ms.dims[1]), m);
    nodes_[out].iaux = static_cast<std::int64_t>(r);
    const double* mp = val_ptr(m);
    double* yp = out_ptr(out);
    std::memcpy(yp, mp + r * ms.dims[1], ms.dims[1] * sizeof(double));
    return out;
}

Tape::Var Tape::add(Var a, Var b) {
    check_same_shape(a, b, "add");
    Var out = alloc_output(Op::Add, nodes_[a].shape, a, b);
    const double* ap = val_ptr(a);
    const double* bp = val_ptr(b);
    double* yp = out_ptr(out);
    const std::size_t n = nodes_[out].shape.numel();
    for (std::size_t i = 0; i < n; ++i) yp[i] = ap[i] + bp[i];
    return out;
}

Tape::Var Tape::sub(Var a, Var b) {
    check_same_shape(a, b, "sub");
    Var out = alloc_output(Op::Sub, nodes_[a].shape, a, b);
    const double* ap = val_ptr(a);
    const double* bp = val_ptr(b);
    double* yp = out_ptr(out);
    const std::size_t n = nodes_[out].shape.numel();
    for (std::size_t i = 0; i < n; ++i) yp[i] = ap[i] - bp[i];
    return out;
}

Tape::Var Tape::mul(Var a, Var b) {
    check_same_shape(a, b, "mul");
    Var out = alloc_output(Op::Mul, nodes_[a].shape, a, b);
    const double* ap = val_ptr(a);
    const double* bp = val_ptr(b);
    double* yp = out_ptr(out);
    const std::size_t n = nodes_[out].shape.numel();
    for (std::size_t i = 0; i < n; ++i) yp[i] = ap[i] * bp[i];
    return out;
}

Tape::Var Tape::scale(Var a, double s) {
    Var out = alloc_output(Op::Scale, nodes_[check(a)].shape, a);
    nodes_[out].aux = s;
    const double* ap = val_ptr(a);
    double* yp = out_ptr(out);
    const std::size_t n = nodes_[out].shape.numel();
    for (std::size_t i = 0; i < n; ++i) yp[i] = s * ap[i];
    return out;
}

Tape::Var Tape::offset(Var a, double c) {
    Var out = alloc_output(Op::Offset, nodes_[check(a)].shape, a);
    nodes_[out].aux = c;
    const double* ap = val_ptr(a);
    double* yp = out_ptr(out);
    const std::size_t n = nodes_[out].shape.numel();
    for (std::size_t i = 0; i < n; ++i) yp[i] = ap[i] + c;
    return out;
}

Tape::Var Tape::dot(Var a, Var b) {
    require(nodes_[check(a)].shape.rank == 1, ErrorKind::dimension, "dot: expects vectors");
    check_same_shape(a, b, "dot");
    Var out = alloc_output(Op::Dot, Shape::scalar(), a, b);
    const double* ap = val_ptr(a);
    const double* bp = val_ptr(b);
    const std::size_t n = nodes_[a].shape.numel();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += ap[i] * bp[i];
    *out_ptr(out) = acc;
    return out;
}

Tape::Var Tape::sigmoid(Var x) {
    Var out = alloc_output(Op::Sigmoid, nodes_[check(x)].shape, x);
    const double* xp = val_ptr(x);
    double* yp = out_ptr(out);
    const std::size_t n = nodes_[out].shape.numel();
    for (std::size_t i = 0; i < n; ++i) yp[i] = 1.0 / (1.0 + std::exp(-xp[i]));
    return out;
}

Tape::Var Tape::softmax(Var x) {
    require(nodes_[check(x)].shape.rank == 1, ErrorKind::dimension, "softmax: expects a vector");
    const std::size_t n = nodes_[x].shape.numel();
    require(n > 0, ErrorKind::dimension, "softmax: empty input");
    Var out = alloc_output(Op::Softmax, nodes_[x].shape, x);
    const double* xp = val_ptr(x);
    double* yp = out_ptr(out);
    double mx = xp[0];
    for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, xp[i]);
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        yp[i] = std::exp(xp[i] - mx);
        z += yp[i];
    }
    for (std::size_t i = 0; i < n; ++i) yp[i] /= z;
    return out;
}

Tape::Var Tape::log(Var x) {
    Var out = alloc_output(Op::Log, nodes_[check(x)].shape, x);
    const double* xp = val_ptr(x);
    double* yp = out_ptr(out);
    const std::size_t n = nodes_[out].shape.numel();
    for (std::size_t i = 0; i < n; ++i) {
        require(xp[i] > 0.0, ErrorKind::domain, "log of non-positive value");
        yp[i] = std::log(xp[i]);
    }
    return out;
}

Tape::Var Tape::exp(Var x) {
    Var out = alloc_output(Op::Exp, nodes_[check(x)].shape, x);
    const double* xp = val_ptr(x);
    double* yp = out_ptr(out);
    const std::size_t n = nodes_[out].shape.numel();
    for (std::size_t i = 0; i < n; ++i) yp[i] = std::exp(xp[i]);
    return out;
}

Tape::Var Tape::l2norm(Var x) {
    require(nodes_[check(x)].shape.rank == 1, ErrorKind::dimension, "l2norm: expects a vector");
    Var out = alloc_output(Op::L2Norm, Shape::scalar(), x);
    const double* xp = val_ptr(x);
    const std::size_t n = nodes_[x].shape.numel();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += xp[i] * xp[i];
    *out_ptr(out) = std::sqrt(acc);
    return out;
}

Tape::Var Tape::normalize(Var x) {
    require(nodes_[check(x)].shape.rank == 1, ErrorKind::dimension, "normalize: expects a vector");
    const std::size_t n = nodes_[x].shape.numel();
    const double* xp = val_ptr(x);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += xp[i] * xp[i];
    const double norm = std::sqrt(acc);
    require(norm > kNormFloor, ErrorKind::domain, "normalize: zero-norm vector");
    Var out = alloc_output(Op::Normalize, nodes_[x].shape, x);
    nodes_[out].aux = norm;
    xp = val_ptr(x);  // arena may have reallocated
    double* yp = out_ptr(out);
    for (std::size_t i = 0; i < n; ++i) yp[i] = xp[i] / norm;
    return out;
}

Tape::Var Tape::sq_diff(Var a, Var b) {
    check_same_shape(a, b, "sq_diff");
    Var out = alloc_output(Op::SqDiff, Shape::scalar(), a, b);
    const double* ap = val_ptr(a);
    const double* bp = val_ptr(b);
    const std::size_t n = nodes_[a].shape.numel();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = ap[i] - bp[i];
        acc += d * d;
    }
    *out_ptr(out) = acc;
    return out;
}

Tape::Var Tape::relu(Var x) {
    Var out = alloc_output(Op::Relu, nodes_[check(x)].shape, x);
    const double* xp = val_ptr(x);
    double* yp = out_ptr(out);
    const std::size_t n = nodes_[out].shape.numel();
    for (std::size_t i = 0; i < n; ++i) yp[i] = xp[i] > 0.0 ? xp[i] : 0.0;
    return out;
}

Tape::Var Tape::stop_gradient(Var x) {
    // Copies the value and severs the backward edge.
    Var out = alloc_output(Op::StopGrad, nodes_[check(x)].shape, x);
    const double* xp = val_ptr(x);
    double* yp = out_ptr(out);
    std::memcpy(yp, xp, nodes_[out].shape.numel() * sizeof(double));
    return out;
}

Tape::Var Tape::sum(Var x) {
    require(nodes_[check(x)].shape.rank == 1, ErrorKind::dimension, "sum: expects a vector");
    Var out = alloc_output(Op::Sum, Shape::scalar(), x);
    const double* xp = val_ptr(x);
    const std::size_t n = nodes_[x].shape.numel();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += xp[i];
    *out_ptr(out) = acc;
    return out;
}

Tape::Var Tape::max_elem(Var x) {
    require(nodes_[check(x)].shape.rank == 1 && nodes_[x].shape.numel() > 0, ErrorKind::dimension,
            "max_elem: expects a non-empty vector");
    Var out = alloc_output(Op::MaxElem, Shape::scalar(), x);
    const double* xp = val_ptr(x);
    const std::size_t n = nodes_[x].shape.numel();
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (xp[i] > xp[best]) best = i;  // ties keep the lowest index
    nodes_[out].iaux = static_cast<std::int64_t>(best);
    *out_ptr(out) = xp[best];
    return out;
}

Tape::Var Tape::div_scalar(Var a, Var s) {
    require(nodes_[check(s)].shape.rank == 0, ErrorKind::dimension, "div_scalar: divisor must be scalar");
    const double sv = *val_ptr(s);
    require(std::abs(sv) > 1e-300, ErrorKind::domain, "div_scalar: division by zero");
    Var out = alloc_output(Op::DivScalar, nodes_[check(a)].shape, a, s);
    const double* ap = val_ptr(a);
    double* yp = out_ptr(out);
    const std::size_t n = nodes_[out].shape.numel();
    for (std::size_t i = 0; i < n; ++i) yp[i] = ap[i] / sv;
    return out;
}

Tape::Var Tape::mul_scalar(Var a, Var s) {
    require(nodes_[check(s)].shape.rank == 0, ErrorKind::dimension, "mul_scalar: factor must be scalar");
    const double sv = *val_ptr(s);
    Var out = alloc_output(Op::MulScalar, nodes_[check(a)].shape, a, s);
    const double* ap = val_ptr(a);
    double* yp = out_ptr(out);
    const std::size_t n = nodes_[out].shape.numel();
    for (std::size_t i = 0; i < n; ++i) yp[i] = ap[i] * sv;
    return out;
}

Tape::Var Tape::stack(std::span<const Var> xs) {
    require(!xs.empty(), ErrorKind::dimension, "stack: empty argument list");
    for (Var v : xs)
        require(nodes_[check(v)].shape.rank == 0, ErrorKind::dimension, "stack: expects scalars");
    const std::size_t pool_off = pool_.size();
    pool_.insert(pool_.end(), xs.begin(), xs.end());
    for (Var v : xs) note_consumer(v, false);
    Var out = alloc_output(Op::Stack, Shape::vec(xs.size()), -1);
    nodes_[out].iaux = static_cast<std::int64_t>(pool_off);
    double* yp = out_ptr(out);
    for (std::size_t i = 0; i < xs.size(); ++i) yp[i] = *val_ptr(xs[i]);
    return out;
}

Tape::Var Tape::pick(Var x, std::size_t i) {
    const Shape& s = nodes_[check(x)].shape;
    require(s.rank == 1 && i < s.numel(), ErrorKind::dimension, "pick: index out of range");
    Var out = alloc_output(Op::Pick, Shape::scalar(), x);
    nodes_[out].iaux = static_cast<std::int64_t>(i);
    *out_ptr(out) = val_ptr(x)[i];
    return out;
}

double* Tape::grad_ptr(Var v) { return grads_.data() + goff_[static_cast<std::size_t>(v)]; }

std::span<const double> Tape::grad(Var v) const {
    require(grads_valid_, ErrorKind::state, "grad() called before backward()");
    require(!factored_leaf(check(v)), ErrorKind::contract,
            "grad(): leaf gradient is factored; use backward()'s LeafGrad");
    return {grads_.data() + goff_[check(v)], nodes_[v].shape.numel()};
}

bool Tape::factored_leaf(std::size_t i) const {
    const Node& n = nodes_[i];
    return n.op == Op::Input && n.param_id != kNoParam && cons_other_[i] == 0 &&
           cons_linw_[i] > 0;
}

std::vector<Tape::LeafGrad> Tape::backward(Var loss) {
    require(nodes_[check(loss)].shape.rank == 0, ErrorKind::contract,
            "backward: loss must be a scalar");

    // Lay out one gradient slot per node. Leaves whose gradient comes back in
    // factored form get no dense slot.
    std::size_t total = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        goff_[i] = total;
        if (!factored_leaf(i)) total += nodes_[i].shape.numel();
    }
    grads_.assign(total, 0.0);
    grads_[goff_[static_cast<std::size_t>(loss)]] = 1.0;

    for (std::size_t i = static_cast<std::size_t>(loss) + 1; i-- > 0;) backward_node(i);

    grads_valid_ = true;
    std::vector<LeafGrad> out;
    std::vector<std::pair<Var, std::shared_ptr<const Tensor>>> x_cache;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const Node& n = nodes_[i];
        if (n.param_id == kNoParam) continue;
        if (factored_leaf(i)) {
            // One factor per linear_all consumer that received gradient.
            for (std::size_t j = i + 1; j < nodes_.size(); ++j) {
                const Node& consumer = nodes_[j];
                if (consumer.op != Op::LinearAll || consumer.in1 != static_cast<Var>(i)) continue;
                if (static_cast<Var>(j) > loss) break;
                const double* gy = grads_.data() + goff_[j];
                const std::size_t gn = consumer.shape.numel();
                bool nonzero = false;
                for (std::size_t t = 0; t < gn && !nonzero; ++t) nonzero = gy[t] != 0.0;
                if (!nonzero) continue;
                LeafGrad lg;
                lg.param_id = n.param_id;
                lg.factor_g = Tensor(consumer.shape);
                std::memcpy(lg.factor_g.data.data(), gy, gn * sizeof(double));
                std::shared_ptr<const Tensor> xv;
                for (auto& [var, cached] : x_cache)
                    if (var == consumer.in0) xv = cached;
                if (!xv) {
                    auto fresh = std::make_shared<Tensor>(tensor_value(consumer.in0));
                    x_cache.emplace_back(consumer.in0, fresh);
                    xv = std::move(fresh);
                }
                lg.factor_x = std::move(xv);
                out.push_back(std::move(lg));
            }
            continue;
        }
        LeafGrad lg;
        lg.param_id = n.param_id;
        lg.grad = Tensor(n.shape);
        std::memcpy(lg.grad.data.data(), grads_.data() + goff_[i],
                    n.shape.numel() * sizeof(double));
        out.push_back(std::move(lg));
    }
    return out;
}

void Tape::backward_node(std::size_t i) {
    const Node& n = nodes_[i];
    const double* g = grads_.data() + goff_[i];
    const std::size_t len = n.shape.numel();

    switch (n.op) {
        case Op::Input:
        case Op::StopGrad:
            return;
        case Op::MatVec: {
            const std::size_t rows = nodes_[n.in0].shape.dims[0];
            const std::size_t cols = nodes_[n.in0].shape.dims[1];
            const double* __restrict__ mp = val_ptr(n.in0);
            const double* __restrict__ xp = val_ptr(n.in1);
            double* __restrict__ gm = grad_ptr(n.in0);
            double* __restrict__ gx = grad_ptr(n.in1);
            const bool need_m = nodes_[n.in0].diff;
            const bool need_x = nodes_[n.in1].diff;
            for (std::size_t r = 0; r < rows; ++r) {
                const double gr = g[r];
                if (gr == 0.0) continue;
                if (need_m) {
                    double* __restrict__ grow = gm + r * cols;
                    for (std::size_t c = 0; c < cols; ++c) grow[c] += gr * xp[c];
                }
                if (need_x) {
                    const double* __restrict__ row = mp + r * cols;
                    for (std::size_t c = 0; c < cols; ++c) gx[c] += gr * row[c];
                }
            }
            return;
        }
        case Op::LinearAll: {
            const Var bvar = static_cast<Var>(n.iaux);
            const std::size_t nrows = n.shape.dims[0];   // inputs
            const std::size_t rows = n.shape.dims[1];    // outputs per input
            const std::size_t cols = nodes_[n.in1].shape.dims[1];
            const double* __restrict__ xp = val_ptr(n.in0);
            const double* __restrict__ wp = val_ptr(n.in1);
            if (nodes_[bvar].diff) {
                double* __restrict__ gb = grad_ptr(bvar);
                for (std::size_t o = 0; o < nrows; ++o)
                    for (std::size_t r = 0; r < rows; ++r) gb[r] += g[o * rows + r];
            }
            if (nodes_[n.in1].diff && !factored_leaf(static_cast<std::size_t>(n.in1))) {
                double* __restrict__ gw = grad_ptr(n.in1);
                for (std::size_t r = 0; r < rows; ++r) {
                    double* __restrict__ grow = gw + r * cols;
                    for (std::size_t o = 0; o < nrows; ++o) {
                        const double go = g[o * rows + r];
                        if (go == 0.0) continue;
                        const double* __restrict__ xrow = xp + o * cols;
                        for (std::size_t c = 0; c < cols; ++c) grow[c] += go * xrow[c];
                    }
                }
            }
            if (nodes_[n.in0].diff) {
                double* __restrict__ gx = grad_ptr(n.in0);
                for (std::size_t o = 0; o < nrows; ++o) {
                    double* __restrict__ gxrow = gx + o * cols;
                    for (std::size_t r = 0; r < rows; ++r) {
                        const double go = g[o * rows + r];
                        if (go == 0.0) continue;
                        const double* __restrict__ wrow = wp + r * cols;
                        for (std::size_t c = 0; c < cols; ++c) gxrow[c] += go * wrow[c];
                    }
                }
            }
            return;
        }
        case Op::Row: {
            const std::size_t cols = n.shape.dims[0];
            double* gm = grad_ptr(n.in0);
            const std::size_t r = static_cast<std::size_t>(n.iaux);
            for (std::size_t c = 0; c < cols; ++c) gm[r * cols + c] += g[c];
            return;
        }
        case Op::Add: {
            double* ga = grad_ptr(n.in0);
            double* gb = grad_ptr(n.in1);
            for (std::size_t k = 0; k < len; ++k) {
                ga[k] += g[k];
                gb[k] += g[k];
            }
            return;
        }
        case Op::Sub: {
            double* ga = grad_ptr(n.in0);
            double* gb = grad_ptr(n.in1);
            for (std::size_t k = 0; k < len; ++k) {
                ga[k] += g[k];
                gb[k] -= g[k];
            }
            return;
        }
        case Op::Mul: {
            const double* ap = val_ptr(n.in0);
            const double* bp = val_ptr(n.in1);
            double* ga = grad_ptr(n.in0);
            double* gb = grad_ptr(n.in1);
            for (std::size_t k = 0; k < len; ++k) {
                ga[k] += g[k] * bp[k];
                gb[k] += g[k] * ap[k];
            }
            return;
        }
        case Op::Scale: {
            double* ga = grad_ptr(n.in0);
            for (std::size_t k = 0; k < len; ++k) ga[k] += n.aux * g[k];
            return;
        }
        case Op::Offset: {
            double* ga = grad_ptr(n.in0);
            for (std::size_t k = 0; k < len; ++k) ga[k] += g[k];
            return;
        }
        case Op::Dot: {
            const double g0 = g[0];
            const double* ap = val_ptr(n.in0);
            const double* bp = val_ptr(n.in1);
            double* ga = grad_ptr(n.in0);
            double* gb = grad_ptr(n.in1);
            const std::size_t m = nodes_[n.in0].shape.numel();
            for (std::size_t k = 0; k < m; ++k) {
                ga[k] += g0 * bp[k];
                gb[k] += g0 * ap[k];
            }
            return;
        }
        case Op::Sigmoid: {
            const double* yp = arena_.data() + n.off;
            double* gx = grad_ptr(n.in0);
            for (std::size_t k = 0; k < len; ++k) gx[k] += g[k] * yp[k] * (1.0 - yp[k]);
            return;
        }
        case Op::Softmax: {
            const double* yp = arena_.data() + n.off;
            double* gx = grad_ptr(n.in0);
            double inner = 0.0;
            for (std::size_t k = 0; k < len; ++k) inner += g[k] * yp[k];
            for (std::size_t k = 0; k < len; ++k) gx[k] += yp[k] * (g[k] - inner);
            return;
        }
        case Op::Log: {
            const double* xp = val_ptr(n.in0);
            double* gx = grad_ptr(n.in0);
            for (std::size_t k = 0; k < len; ++k) gx[k] += g[k] / xp[k];
            return;
        }
        case Op::Exp: {
            const double* yp = arena_.data() + n.off;
            double* gx = grad_ptr(n.in0);
            for (std::size_t k = 0; k < len; ++k) gx[k] += g[k] * yp[k];
            return;
        }
        case Op::L2Norm: {
            const double y = arena_[n.off];
            if (y <= 0.0) return;  // subgradient 0 at the origin
            const double g0 = g[0] / y;
            const double* xp = val_ptr(n.in0);
            double* gx = grad_ptr(n.in0);
            const std::size_t m = nodes_[n.in0].shape.numel();
            for (std::size_t k = 0; k < m; ++k) gx[k] += g0 * xp[k];
            return;
        }
        case Op::Normalize: {
            const double* yp = arena_.data() + n.off;
            double* gx = grad_ptr(n.in0);
            double inner = 0.0;
            for (std::size_t k = 0; k < len; ++k) inner += g[k] * yp[k];
            const double inv = 1.0 / n.aux;
            for (std::size_t k = 0; k < len; ++k) gx[k] += (g[k] - yp[k] * inner) * inv;
            return;
        }
        case Op::SqDiff: {
            const double g0 = 2.0 * g[0];
            const double* ap = val_ptr(n.in0);
            const double* bp = val_ptr(n.in1);
            double* ga = grad_ptr(n.in0);
            double* gb = grad_ptr(n.in1);
            const std::size_t m = nodes_[n.in0].shape.numel();
            for (std::size_t k = 0; k < m; ++k) {
                const double d = g0 * (ap[k] - bp[k]);
                ga[k] += d;
                gb[k] -= d;
            }
            return;
        }
        case Op::Relu: {
            const double* xp = val_ptr(n.in0);
            double* gx = grad_ptr(n.in0);
            for (std::size_t k = 0; k < len; ++k)
                if (xp[k] > 0.0) gx[k] += g[k];
            return;
        }
        case Op::Sum: {
            const double g0 = g[0];
            double* gx = grad_ptr(n.in0);
            const std::size_t m = nodes_[n.in0].shape.numel();
            for (std::size_t k = 0; k < m; ++k) gx[k] += g0;
            return;
        }
        case Op::MaxElem: {
            grad_ptr(n.in0)[static_cast<std::size_t>(n.iaux)] += g[0];
            return;
        }
        case Op::DivScalar: {
            const double sv = *val_ptr(n.in1);
            const double* yp = arena_.data() + n.off;
            double* ga = grad_ptr(n.in0);
            double* gs = grad_ptr(n.in1);
            double inner = 0.0;
            for (std::size_t k = 0; k < len; ++k) {
                ga[k] += g[k] / sv;
                inner += g[k] * yp[k];
            }
            gs[0] -= inner / sv;
            return;
        }
        case Op::MulScalar: {
            const double sv = *val_ptr(n.in1);
            const double* ap = val_ptr(n.in0);
            double* ga = grad_ptr(n.in0);
            double* gs = grad_ptr(n.in1);
            double inner = 0.0;
            for (std::size_t k = 0; k < len; ++k) {
                ga[k] += g[k] * sv;
                inner += g[k] * ap[k];
            }
            gs[0] += inner;
            return;
        }
        case Op::Stack: {
            const std::size_t off = static_cast<std::size_t>(n.iaux);
            for (std::size_t k = 0; k < len; ++k) grad_ptr(pool_[off + k])[0] += g[k];
            return;
        }
        case Op::Pick: {
            grad_ptr(n.in0)[static_cast<std::size_t>(n.iaux)] += g[0];
            return;
        }
    }
}

}  // namespace vsa
