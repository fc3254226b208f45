#include "dsattn/attention.hpp"

#include <cmath>

#include "dsattn/linalg.hpp"

namespace dsattn {

void AttentionParams::validate() const {
    if (heads < 1) throw ParamError("AttentionParams: heads must be >= 1");
    if (wq.size() != heads || wk.size() != heads || wv.size() != heads)
        throw ShapeError("AttentionParams: per-head weight list size != heads");
    for (size_t h = 0; h < heads; ++h) {
        if (wq[h].rows() != d() || wk[h].rows() != d() || wv[h].rows() != d())
            throw ShapeError("AttentionParams: weight input dim mismatch");
        if (wq[h].cols() != d_k() || wk[h].cols() != d_k())
            throw ShapeError("AttentionParams: W_Q/W_K output dim mismatch");
        if (wv[h].cols() != d_v()) throw ShapeError("AttentionParams: W_V output dim mismatch");
    }
}

AttentionParams random_attention_params(size_t d, size_t d_k, size_t d_v, size_t heads,
                                        Rng& rng, bool scale, Precision prec) {
    AttentionParams p;
    p.heads = heads;
    p.scale = scale;
    const double s = 1.0 / std::sqrt(static_cast<double>(d));
    for (size_t h = 0; h < heads; ++h) {
        p.wq.push_back(random_uniform(d, d_k, -s, s, rng, prec));
        p.wk.push_back(random_uniform(d, d_k, -s, s, rng, prec));
        p.wv.push_back(random_uniform(d, d_v, -s, s, rng, prec));
    }
    return p;
}

Qkv project_qkv(const Matrix& x, const AttentionParams& p) {
    p.validate();
    if (x.cols() != p.d()) throw ShapeError("project_qkv: X feature dim != d");
    Qkv out;
    for (size_t h = 0; h < p.heads; ++h) {
        out.q.push_back(matmul(x, p.wq[h]));
        out.k.push_back(matmul(x, p.wk[h]));
        out.v.push_back(matmul(x, p.wv[h]));
    }
    return out;
}

Matrix attention_scores(const Matrix& q, const Matrix& k, bool scale) {
    Matrix s = matmul_nt(q, k);
    if (scale) s = dsattn::scale(s, 1.0 / std::sqrt(static_cast<double>(q.cols())));
    return s;
}

Matrix apply_additive_mask(const Matrix& scores, const SparseMask& m, MaskConstant c) {
    if (scores.rows() != m.l || scores.cols() != m.l)
        throw ShapeError("apply_additive_mask: mask shape mismatch");
    if (c.c <= 0) throw ParamError("apply_additive_mask: mask constant must be positive");
    Matrix out = scores;
    for (size_t i = 0; i < m.l; ++i) {
        const auto& row = m.kept[i];
        size_t p = 0;
        for (uint32_t j = 0; j < m.l; ++j) {
            if (p < row.size() && row[p] == j) {
                ++p;  // kept position, untouched
            } else {
                out.set(i, j, out(i, j) - c.c);
            }
        }
    }
    return out;
}

static Matrix concat_heads(const std::vector<Matrix>& zs) {
    size_t total = 0;
    for (const auto& z : zs) total += z.cols();
    Precision prec = zs[0].precision();
    for (const auto& z : zs) prec = combine(prec, z.precision());
    Matrix out(zs[0].rows(), total, prec);
    size_t off = 0;
    for (const auto& z : zs) {
        for (size_t i = 0; i < z.rows(); ++i)
            for (size_t j = 0; j < z.cols(); ++j) out.raw()[i * total + off + j] = z(i, j);
        off += z.cols();
    }
    out.round_to_precision();
    return out;
}

Matrix dense_attention(const Matrix& x, const AttentionParams& p) {
    Qkv qkv = project_qkv(x, p);
    std::vector<Matrix> zs;
    for (size_t h = 0; h < p.heads; ++h) {
        Matrix a = row_softmax(attention_scores(qkv.q[h], qkv.k[h], p.scale));
        zs.push_back(matmul(a, qkv.v[h]));
    }
    return concat_heads(zs);
}

Matrix masked_attention(const Matrix& x, const AttentionParams& p,
                        std::span<const SparseMask> per_head, MaskConstant c) {
    if (per_head.size() != p.heads)
        throw ShapeError("masked_attention: need one mask per head");
    Qkv qkv = project_qkv(x, p);
    std::vector<Matrix> zs;
    for (size_t h = 0; h < p.heads; ++h) {
        Matrix s = attention_scores(qkv.q[h], qkv.k[h], p.scale);
        Matrix a = row_softmax(apply_additive_mask(s, per_head[h], c));
        zs.push_back(matmul(a, qkv.v[h]));
    }
    return concat_heads(zs);
}

Matrix masked_attention(const Matrix& x, const AttentionParams& p, const SparseMask& m,
                        MaskConstant c) {
    std::vector<SparseMask> masks(p.heads, m);
    return masked_attention(x, p, masks, c);
}

}  // namespace dsattn
