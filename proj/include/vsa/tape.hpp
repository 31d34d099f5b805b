#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "vsa/tensor.hpp"

namespace vsa {

// Reverse-mode autodiff over dense vector/matrix primitives.
//
// A Tape is rebuilt per training step (define-by-run): nodes are appended in
// topological order and the backward pass visits them exactly once in
// reverse. Values live in a single arena so a reused Tape performs no
// per-node allocation after warm-up. Leaf nodes may alias external parameter
// storage; the caller guarantees that storage outlives the tape and is not
// mutated while the tape is alive.
class Tape {
public:
    using Var = std::int32_t;
    static constexpr int kNoParam = -1;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Clears all nodes but keeps arena capacity.
    void reset();

    // --- inputs -----------------------------------------------------------

    // Differentiable leaf aliasing external storage, tagged with a parameter
    // id. The storage must outlive the tape; temporaries are rejected.
    Var leaf(std::span<const double> values, Shape shape, int param_id);
    Var leaf(const Tensor& t, int param_id) { return leaf(t.data, t.shape, param_id); }
    Var leaf(Tensor&& t, int param_id) = delete;

    // Non-differentiable input (copied into the arena).
    Var constant(const Tensor& t);
    Var constant(std::span<const double> values, Shape shape);
    Var constant_scalar(double v);

    // --- primitives ---------------------------------------------------------

    Var matvec(Var m, Var x);
    // One linear map over many inputs: rows of x are inputs, output row o is
    // W * x[o] + b. Reads the weight matrix once per call.
    Var linear_all(Var x_rows, Var w, Var b);
    Var row(Var m, std::size_t r);
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var scale(Var a, double s);
    Var offset(Var a, double c);
    Var dot(Var a, Var b);
    Var sigmoid(Var x);
    Var softmax(Var x);
    Var log(Var x);
    Var exp(Var x);
    Var l2norm(Var x);
    Var normalize(Var x);
    Var sq_diff(Var a, Var b);
    Var relu(Var x);
    Var stop_gradient(Var x);
    Var sum(Var x);
    Var max_elem(Var x);
    Var div_scalar(Var a, Var s);
    Var mul_scalar(Var a, Var s);
    Var stack(std::span<const Var> xs);
    Var pick(Var x, std::size_t i);

    // --- inspection ---------------------------------------------------------

    std::size_t size() const { return nodes_.size(); }
    Shape shape(Var v) const { return nodes_[check(v)].shape; }
    std::span<const double> value(Var v) const;
    double scalar_value(Var v) const;
    Tensor tensor_value(Var v) const;

    // --- backward -----------------------------------------------------------

    // Gradient of a scalar loss w.r.t. one tagged leaf, in tape order.
    // Weight matrices consumed only as linear_all weights come back in
    // factored form (gW = factor_g^T * factor_x); everything else is dense.
    struct LeafGrad {
        int param_id;
        Tensor grad;
        Tensor factor_g;                          // n x m output gradient
        std::shared_ptr<const Tensor> factor_x;   // n x k inputs
        bool factored() const { return factor_g.numel() > 0; }
        Tensor dense() const;                     // materializes factored form
    };

    // Runs the reverse pass. Every tagged leaf gets an entry; leaves the loss
    // does not reach get zero gradients. Results are deterministic: an
    // identical tape yields bit-identical gradients.
    std::vector<LeafGrad> backward(Var loss);

    // Gradient span for a leaf from the most recent backward() call.
    std::span<const double> grad(Var v) const;

private:
    enum class Op : std::uint8_t {
        Input,
        MatVec,
        LinearAll,
        Row,
        Add,
        Sub,
        Mul,
        Scale,
        Offset,
        Dot,
        Sigmoid,
        Softmax,
        Log,
        Exp,
        L2Norm,
        Normalize,
        SqDiff,
        Relu,
        StopGrad,
        Sum,
        MaxElem,
        DivScalar,
        MulScalar,
        Stack,
        Pick,
    };

    struct Node {
        Op op;
        Shape shape;
        Var in0 = -1;
        Var in1 = -1;
        // Arena offset of the output value; leaves aliasing external storage
        // use `ext` instead.
        std::size_t off = 0;
        const double* ext = nullptr;
        double aux = 0.0;        // Scale factor / Offset constant
        std::int64_t iaux = 0;   // Pick index; Stack pool offset/count
        int param_id = kNoParam;
        bool diff = true;        // participates in the backward pass
    };

    Var push(Node node);
    void note_consumer(Var in, bool as_linear_weight);
    bool factored_leaf(std::size_t i) const;
    Var alloc_output(Op op, Shape shape, Var in0, Var in1 = -1);
    std::size_t check(Var v) const;
    const double* val_ptr(Var v) const;
    double* out_ptr(Var v);
    void check_same_shape(Var a, Var b, const char* op) const;
    void backward_node(std::size_t i);
    double* grad_ptr(Var v);

    std::vector<Node> nodes_;
    std::vector<double> arena_;
    std::vector<double> grads_;        // aligned with arena_ offsets
    std::vector<std::size_t> goff_;    // per-node gradient offset
    std::vector<Var> pool_;            // Stack argument pool
    std::vector<std::uint16_t> cons_other_;   // per-node consumers outside linear_all weights
    std::vector<std::uint16_t> cons_linw_;    // per-node consumers as linear_all weight
    bool grads_valid_ = false;
};

}  // namespace vsa
