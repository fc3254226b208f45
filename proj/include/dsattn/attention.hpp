#pragma once

#include <span>
#include <vector>

#include "dsattn/mask.hpp"
#include "dsattn/matrix.hpp"
#include "dsattn/rng.hpp"

namespace dsattn {

// Large additive constant subtracted at masked positions before softmax.
struct MaskConstant {
    double c = 1e4;
};

// Weights of one attention layer; one W_Q/W_K/W_V triple per head. Head
// outputs are concatenated along features. `scale` applies 1/sqrt(d_k).
struct AttentionParams {
    size_t heads = 1;
    bool scale = true;
    std::vector<Matrix> wq, wk, wv;  // each d x d_k (d_v for wv)

    size_t d() const { return wq.at(0).rows(); }
    size_t d_k() const { return wq.at(0).cols(); }
    size_t d_v() const { return wv.at(0).cols(); }
    void validate() const;
};

AttentionParams random_attention_params(size_t d, size_t d_k, size_t d_v, size_t heads,
                                        Rng& rng, bool scale = true,
                                        Precision prec = Precision::f64);

struct Qkv {
    std::vector<Matrix> q, k, v;  // per head
};

Qkv project_qkv(const Matrix& x, const AttentionParams& p);

// scores = Q K^T, times 1/sqrt(d_k) when scale is set
Matrix attention_scores(const Matrix& q, const Matrix& k, bool scale);

// scores - c at positions outside the mask (additive-mask semantics);
// positions inside the mask are left untouched bit-for-bit.
Matrix apply_additive_mask(const Matrix& scores, const SparseMask& m, MaskConstant c = {});

// Z = softmax(QK^T / sqrt(d_k)) V, heads concatenated.
Matrix dense_attention(const Matrix& x, const AttentionParams& p);

// Mask-constrained attention; with a full mask this equals dense_attention
// exactly. One mask shared by all heads, or one per head.
Matrix masked_attention(const Matrix& x, const AttentionParams& p, const SparseMask& m,
                        MaskConstant c = {});
Matrix masked_attention(const Matrix& x, const AttentionParams& p,
                        std::span<const SparseMask> per_head, MaskConstant c = {});

}  // namespace dsattn
