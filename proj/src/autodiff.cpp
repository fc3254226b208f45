#include "dsattn/autodiff.hpp"

#include <cmath>

#include "dsattn/attention.hpp"
#include "dsattn/linalg.hpp"

namespace dsattn::ad {

Var Tape::input(Matrix value, bool requires_grad) {
    nodes_.push_back({std::move(value), Matrix{}, requires_grad && grad_enabled_, nullptr});
    return {static_cast<int32_t>(nodes_.size() - 1)};
}

const Matrix& Tape::grad(Var v) const {
    const Node& n = nodes_[v.id];
    if (!n.grad.empty()) return n.grad;
    static thread_local Matrix zeros;
    zeros = Matrix::zeros(n.value.rows(), n.value.cols());
    return zeros;
}

Var Tape::emit(Matrix value, bool requires_grad, std::function<void(Tape&)> back) {
    const bool rg = requires_grad && grad_enabled_;
    nodes_.push_back({std::move(value), Matrix{}, rg, rg ? std::move(back) : nullptr});
    return {static_cast<int32_t>(nodes_.size() - 1)};
}

Matrix& Tape::grad_ref(Var v) {
    Node& n = nodes_[v.id];
    if (n.grad.empty()) n.grad = Matrix::zeros(n.value.rows(), n.value.cols());
    return n.grad;
}

void Tape::accum(Var v, const Matrix& delta) { accum_scaled(v, delta, 1.0); }

void Tape::accum_scaled(Var v, const Matrix& delta, double s) {
    if (!nodes_[v.id].requires_grad) return;
    Matrix& g = grad_ref(v);
    if (!g.same_shape(delta)) throw ShapeError("autodiff: gradient shape mismatch");
    for (size_t i = 0; i < g.size(); ++i) g.raw()[i] += s * delta.data()[i];
}

namespace {
bool rg2(const bool a, const bool b) { return a || b; }
}  // namespace

Var Tape::matmul(Var a, Var b) {
    Var out = emit(dsattn::matmul(value(a), value(b)),
                   rg2(nodes_[a.id].requires_grad, nodes_[b.id].requires_grad), nullptr);
    if (nodes_[out.id].requires_grad)
        nodes_[out.id].back = [out, a, b](Tape& t) {
            const Matrix& g = t.nodes_[out.id].grad;
            t.accum(a, dsattn::matmul_nt(g, t.value(b)));
            t.accum(b, dsattn::matmul_tn(t.value(a), g));
        };
    return out;
}

Var Tape::matmul_nt(Var a, Var b) {
    Var out = emit(dsattn::matmul_nt(value(a), value(b)),
                   rg2(nodes_[a.id].requires_grad, nodes_[b.id].requires_grad), nullptr);
    if (nodes_[out.id].requires_grad)
        nodes_[out.id].back = [out, a, b](Tape& t) {
            const Matrix& g = t.nodes_[out.id].grad;
            t.accum(a, dsattn::matmul(g, t.value(b)));
            t.accum(b, dsattn::matmul_tn(g, t.value(a)));
        };
    return out;
}

Var Tape::add_scaled(Var a, Var b, double s) {
    if (!value(a).same_shape(value(b))) throw ShapeError("add_scaled: shape mismatch");
    Matrix c(value(a).rows(), value(a).cols(),
             combine(value(a).precision(), value(b).precision()));
    for (size_t i = 0; i < c.size(); ++i)
        c.raw()[i] = value(a).data()[i] + s * value(b).data()[i];
    c.round_to_precision();
    Var out = emit(std::move(c), rg2(nodes_[a.id].requires_grad, nodes_[b.id].requires_grad),
                   nullptr);
    if (nodes_[out.id].requires_grad)
        nodes_[out.id].back = [out, a, b, s](Tape& t) {
            const Matrix& g = t.nodes_[out.id].grad;
            t.accum(a, g);
            t.accum_scaled(b, g, s);
        };
    return out;
}

Var Tape::add(Var a, Var b) { return add_scaled(a, b, 1.0); }
Var Tape::sub(Var a, Var b) { return add_scaled(a, b, -1.0); }

Var Tape::scale(Var a, double s) {
    Var out = emit(dsattn::scale(value(a), s), nodes_[a.id].requires_grad, nullptr);
    if (nodes_[out.id].requires_grad)
        nodes_[out.id].back = [out, a, s](Tape& t) {
            t.accum_scaled(a, t.nodes_[out.id].grad, s);
        };
    return out;
}

Var Tape::add_row_broadcast(Var x, Var bias) {
    const Matrix& xv = value(x);
    const Matrix& bv = value(bias);
    if (bv.rows() != 1 || bv.cols() != xv.cols())
        throw ShapeError("add_row_broadcast: bias must be 1 x cols");
    Matrix c(xv.rows(), xv.cols(), combine(xv.precision(), bv.precision()));
    for (size_t i = 0; i < xv.rows(); ++i)
        for (size_t j = 0; j < xv.cols(); ++j) c.raw()[i * xv.cols() + j] = xv(i, j) + bv(0, j);
    c.round_to_precision();
    Var out = emit(std::move(c),
                   rg2(nodes_[x.id].requires_grad, nodes_[bias.id].requires_grad), nullptr);
    if (nodes_[out.id].requires_grad)
        nodes_[out.id].back = [out, x, bias](Tape& t) {
            const Matrix& g = t.nodes_[out.id].grad;
            t.accum(x, g);
            Matrix gb = Matrix::zeros(1, g.cols());
            for (size_t i = 0; i < g.rows(); ++i)
                for (size_t j = 0; j < g.cols(); ++j) gb.raw()[j] += g(i, j);
            t.accum(bias, gb);
        };
    return out;
}

Var Tape::tanh_act(Var x) {
    const Matrix& xv = value(x);
    Matrix y(xv.rows(), xv.cols(), xv.precision());
    for (size_t i = 0; i < xv.size(); ++i) y.raw()[i] = std::tanh(xv.data()[i]);
    y.round_to_precision();
    Var out = emit(std::move(y), nodes_[x.id].requires_grad, nullptr);
    if (nodes_[out.id].requires_grad)
        nodes_[out.id].back = [out, x](Tape& t) {
            const Matrix& g = t.nodes_[out.id].grad;
            const Matrix& yv = t.value(out);
            Matrix gx(g.rows(), g.cols());
            for (size_t i = 0; i < g.size(); ++i)
                gx.raw()[i] = g.data()[i] * (1.0 - yv.data()[i] * yv.data()[i]);
            t.accum(x, gx);
        };
    return out;
}

Var Tape::layer_norm(Var x, Var gain, Var bias, double eps) {
    const Matrix& xv = value(x);
    const Matrix& gv = value(gain);
    const Matrix& bv = value(bias);
    if (gv.rows() != 1 || gv.cols() != xv.cols() || bv.rows() != 1 || bv.cols() != xv.cols())
        throw ShapeError("layer_norm: gain/bias must be 1 x cols");
    const size_t n = xv.cols();
    Matrix xhat(xv.rows(), n);
    Matrix inv_std(xv.rows(), 1);
    Matrix y(xv.rows(), n, xv.precision());
    for (size_t i = 0; i < xv.rows(); ++i) {
        double mu = 0.0;
        for (size_t j = 0; j < n; ++j) mu += xv(i, j);
        mu /= static_cast<double>(n);
        double var = 0.0;
        for (size_t j = 0; j < n; ++j) var += (xv(i, j) - mu) * (xv(i, j) - mu);
        var /= static_cast<double>(n);
        const double inv = 1.0 / std::sqrt(var + eps);
        inv_std.raw()[i] = inv;
        for (size_t j = 0; j < n; ++j) {
            xhat.raw()[i * n + j] = (xv(i, j) - mu) * inv;
            y.raw()[i * n + j] = xhat(i, j) * gv(0, j) + bv(0, j);
        }
    }
    y.round_to_precision();
    const bool rg = nodes_[x.id].requires_grad || nodes_[gain.id].requires_grad ||
                    nodes_[bias.id].requires_grad;
    Var out = emit(std::move(y), rg, nullptr);
    if (nodes_[out.id].requires_grad)
        nodes_[out.id].back = [out, x, gain, bias, xhat = std::move(xhat),
                               inv_std = std::move(inv_std)](Tape& t) {
            const Matrix& g = t.nodes_[out.id].grad;
            const Matrix& gv = t.value(gain);
            const size_t rows = g.rows(), n = g.cols();
            Matrix ggain = Matrix::zeros(1, n);
            Matrix gbias = Matrix::zeros(1, n);
            Matrix gx(rows, n);
            for (size_t i = 0; i < rows; ++i) {
                double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
                for (size_t j = 0; j < n; ++j) {
                    const double dxhat = g(i, j) * gv(0, j);
                    mean_dxhat += dxhat;
                    mean_dxhat_xhat += dxhat * xhat(i, j);
                    ggain.raw()[j] += g(i, j) * xhat(i, j);
                    gbias.raw()[j] += g(i, j);
                }
                mean_dxhat /= static_cast<double>(n);
                mean_dxhat_xhat /= static_cast<double>(n);
                for (size_t j = 0; j < n; ++j) {
                    const double dxhat = g(i, j) * gv(0, j);
                    gx.raw()[i * n + j] =
                        inv_std(i, 0) * (dxhat - mean_dxhat - xhat(i, j) * mean_dxhat_xhat);
                }
            }
            t.accum(x, gx);
            t.accum(gain, ggain);
            t.accum(bias, gbias);
        };
    return out;
}

Var Tape::embedding(Var table, std::vector<uint32_t> ids) {
    const Matrix& tv = value(table);
    Matrix y(ids.size(), tv.cols(), tv.precision());
    for (size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] >= tv.rows()) throw ParamError("embedding: id out of range");
        for (size_t j = 0; j < tv.cols(); ++j) y.raw()[i * tv.cols() + j] = tv(ids[i], j);
    }
    Var out = emit(std::move(y), nodes_[table.id].requires_grad, nullptr);
    if (nodes_[out.id].requires_grad)
        nodes_[out.id].back = [out, table, ids = std::move(ids)](Tape& t) {
            const Matrix& g = t.nodes_[out.id].grad;
            Matrix& gt = t.grad_ref(table);
            for (size_t i = 0; i < ids.size(); ++i)
                for (size_t j = 0; j < g.cols(); ++j)
                    gt.raw()[ids[i] * g.cols() + j] += g(i, j);
        };
    return out;
}

Var Tape::row(Var x, size_t i) {
    const Matrix& xv = value(x);
    if (i >= xv.rows()) throw ParamError("row: index out of range");
    Matrix y(1, xv.cols(), xv.precision());
    for (size_t j = 0; j < xv.cols(); ++j) y.raw()[j] = xv(i, j);
    Var out = emit(std::move(y), nodes_[x.id].requires_grad, nullptr);
    if (nodes_[out.id].requires_grad)
        nodes_[out.id].back = [out, x, i](Tape& t) {
            const Matrix& g = t.nodes_[out.id].grad;
            Matrix& gx = t.grad_ref(x);
            for (size_t j = 0; j < g.cols(); ++j) gx.raw()[i * gx.cols() + j] += g(0, j);
        };
    return out;
}

Var Tape::concat_cols(const std::vector<Var>& xs) {
    if (xs.empty()) throw ParamError("concat_cols: empty input");
    size_t total = 0;
    bool rg = false;
    Precision prec = value(xs[0]).precision();
    for (Var v : xs) {
        total += value(v).cols();
        rg = rg || nodes_[v.id].requires_grad;
        prec = combine(prec, value(v).precision());
    }
    const size_t rows = value(xs[0]).rows();
    Matrix y(rows, total, prec);
    size_t off = 0;
    for (Var v : xs) {
        const Matrix& m = value(v);
        if (m.rows() != rows) throw ShapeError("concat_cols: row mismatch");
        for (size_t i = 0; i < rows; ++i)
            for (size_t j = 0; j < m.cols(); ++j) y.raw()[i * total + off + j] = m(i, j);
        off += m.cols();
    }
    y.round_to_precision();
    Var out = emit(std::move(y), rg, nullptr);
    if (nodes_[out.id].requires_grad)
        nodes_[out.id].back = [out, xs](Tape& t) {
            const Matrix& g = t.nodes_[out.id].grad;
            size_t off = 0;
            for (Var v : xs) {
                const size_t c = t.value(v).cols();
                Matrix part(g.rows(), c);
                for (size_t i = 0; i < g.rows(); ++i)
                    for (size_t j = 0; j < c; ++j) part.raw()[i * c + j] = g(i, off + j);
                t.accum(v, part);
                off += c;
            }
        };
    return out;
}

namespace {
void softmax_backward(const Matrix& g, const Matrix& y, Matrix& gx) {
    for (size_t i = 0; i < g.rows(); ++i) {
        double dot = 0.0;
        for (size_t j = 0; j < g.cols(); ++j) dot += g(i, j) * y(i, j);
        for (size_t j = 0; j < g.cols(); ++j)
            gx.raw()[i * g.cols() + j] = y(i, j) * (g(i, j) - dot);
    }
}
}  // namespace

Var Tape::softmax_rows(Var scores) {
    Var out = emit(dsattn::row_softmax(value(scores)), nodes_[scores.id].requires_grad, nullptr);
    if (nodes_[out.id].requires_grad)
        nodes_[out.id].back = [out, scores](Tape& t) {
            const Matrix& g = t.nodes_[out.id].grad;
            const Matrix& y = t.value(out);
            Matrix gx(g.rows(), g.cols());
            softmax_backward(g, y, gx);
            t.accum(scores, gx);
        };
    return out;
}

Var Tape::softmax_rows_masked(Var scores, const SparseMask& mask, double c) {
    Matrix masked = apply_additive_mask(value(scores), mask, MaskConstant{c});
    Var out = emit(dsattn::row_softmax(masked), nodes_[scores.id].requires_grad, nullptr);
    if (nodes_[out.id].requires_grad)
        nodes_[out.id].back = [out, scores](Tape& t) {
            const Matrix& g = t.nodes_[out.id].grad;
            const Matrix& y = t.value(out);
            Matrix gx(g.rows(), g.cols());
            softmax_backward(g, y, gx);
            t.accum(scores, gx);
        };
    return out;
}

Var Tape::quantize_ste(Var x, QuantSpec q) {
    q.validate();
    if (q.is_full()) return x;  // identity, straight-through trivially
    const double amax = max_abs(value(x));
    Var out = emit(dsattn::quantize(value(x), q), nodes_[x.id].requires_grad, nullptr);
    if (nodes_[out.id].requires_grad)
        nodes_[out.id].back = [out, x, amax](Tape& t) {
            const Matrix& g = t.nodes_[out.id].grad;
            const Matrix& xv = t.value(x);
            Matrix gx(g.rows(), g.cols());
            for (size_t i = 0; i < g.size(); ++i)
                gx.raw()[i] = std::abs(xv.data()[i]) <= amax ? g.data()[i] : 0.0;
            t.accum(x, gx);
        };
    return out;
}

Var Tape::mse_fro(Var a, Var b, double coeff) {
    const Matrix& av = value(a);
    const Matrix& bv = value(b);
    if (!av.same_shape(bv)) throw ShapeError("mse_fro: shape mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < av.size(); ++i) {
        const double d = av.data()[i] - bv.data()[i];
        acc += d * d;
    }
    Matrix y(1, 1);
    y.raw()[0] = coeff * acc;
    Var out = emit(std::move(y), rg2(nodes_[a.id].requires_grad, nodes_[b.id].requires_grad),
                   nullptr);
    if (nodes_[out.id].requires_grad)
        nodes_[out.id].back = [out, a, b, coeff](Tape& t) {
            const double g = t.nodes_[out.id].grad(0, 0);
            const Matrix& av = t.value(a);
            const Matrix& bv = t.value(b);
            Matrix d(av.rows(), av.cols());
            for (size_t i = 0; i < av.size(); ++i)
                d.raw()[i] = 2.0 * coeff * g * (av.data()[i] - bv.data()[i]);
            t.accum(a, d);
            t.accum_scaled(b, d, -1.0);
        };
    return out;
}

Var Tape::cross_entropy(Var logits, uint32_t label) {
    const Matrix& lv = value(logits);
    if (lv.rows() != 1) throw ShapeError("cross_entropy: logits must be 1 x C");
    if (label >= lv.cols()) throw ParamError("cross_entropy: label out of range");
    double m = lv(0, 0);
    for (size_t j = 1; j < lv.cols(); ++j) m = std::max(m, lv(0, j));
    double sum = 0.0;
    for (size_t j = 0; j < lv.cols(); ++j) sum += std::exp(lv(0, j) - m);
    Matrix y(1, 1);
    y.raw()[0] = std::log(sum) - (lv(0, label) - m);
    Var out = emit(std::move(y), nodes_[logits.id].requires_grad, nullptr);
    if (nodes_[out.id].requires_grad)
        nodes_[out.id].back = [out, logits, label, m, sum](Tape& t) {
            const double g = t.nodes_[out.id].grad(0, 0);
            const Matrix& lv = t.value(logits);
            Matrix gl(1, lv.cols());
            for (size_t j = 0; j < lv.cols(); ++j) {
                const double p = std::exp(lv(0, j) - m) / sum;
                gl.raw()[j] = g * (p - (j == label ? 1.0 : 0.0));
            }
            t.accum(logits, gl);
        };
    return out;
}

void Tape::backward(Var loss) {
    if (!grad_enabled_) throw ParamError("backward: tape built with grads disabled");
    const Matrix& lv = value(loss);
    if (lv.rows() != 1 || lv.cols() != 1) throw ShapeError("backward: loss must be 1 x 1");
    grad_ref(loss).raw()[0] = 1.0;
    for (int32_t id = loss.id; id >= 0; --id) {
        Node& n = nodes_[id];
        if (n.back && n.requires_grad && !n.grad.empty()) n.back(*this);
    }
}

}  // namespace dsattn::ad
