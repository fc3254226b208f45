#pragma once

#include <functional>
#include <vector>

#include "dsattn/mask.hpp"
#include "dsattn/matrix.hpp"
#include "dsattn/predictor.hpp"

namespace dsattn::ad {

// Handle into a Tape; node 0 is valid, -1 means "none".
struct Var {
    int32_t id = -1;
    bool valid() const { return id >= 0; }
};

// Reverse-mode tape over Matrix-valued nodes. Nodes are appended in forward
// order, so reverse iteration is a topological order of the DAG. Gradients
// are accumulated in f64 regardless of value precision. Not thread-safe;
// build one tape per training step.
class Tape {
  public:
    explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

    Var input(Matrix value, bool requires_grad);
    Var constant(Matrix value) { return input(std::move(value), false); }

    const Matrix& value(Var v) const { return nodes_[v.id].value; }
    // Zero matrix when the node was never reached by backward.
    const Matrix& grad(Var v) const;
    bool has_grad(Var v) const { return !nodes_[v.id].grad.empty(); }
    double scalar(Var v) const { return nodes_[v.id].value(0, 0); }
    size_t size() const { return nodes_.size(); }
    bool grad_enabled() const { return grad_enabled_; }

    Var matmul(Var a, Var b);
    Var matmul_nt(Var a, Var b);  // a * b^T
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var scale(Var a, double s);
    Var add_scaled(Var a, Var b, double s);  // a + s*b
    Var add_row_broadcast(Var x, Var bias);  // x (m,n) + bias (1,n)
    Var tanh_act(Var x);
    Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);
    Var embedding(Var table, std::vector<uint32_t> ids);
    Var row(Var x, size_t i);  // 1 x n copy of row i
    Var concat_cols(const std::vector<Var>& xs);
    Var softmax_rows(Var scores);
    // Additive-mask softmax: scores - c outside the mask, then row softmax.
    // The mask is a constant of the forward pass (no gradient through
    // selection).
    Var softmax_rows_masked(Var scores, const SparseMask& mask, double c);
    // Forward quantization, straight-through backward: identity inside the
    // clamp range, zero outside.
    Var quantize_ste(Var x, QuantSpec q);
    Var mse_fro(Var a, Var b, double coeff);          // coeff * ||a - b||_F^2
    Var cross_entropy(Var logits, uint32_t label);    // logits 1 x C

    void backward(Var loss);

  private:
    struct Node {
        Matrix value;
        Matrix grad;
        bool requires_grad = false;
        std::function<void(Tape&)> back;
    };

    Var emit(Matrix value, bool requires_grad, std::function<void(Tape&)> back);
    void accum(Var v, const Matrix& delta);
    void accum_scaled(Var v, const Matrix& delta, double s);
    Matrix& grad_ref(Var v);

    std::vector<Node> nodes_;
    bool grad_enabled_ = true;
};

}  // namespace dsattn::ad
