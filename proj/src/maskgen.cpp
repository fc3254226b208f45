#include "dsattn/maskgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dsattn/linalg.hpp"

namespace dsattn {

SparseMask oracle_topk_mask(const Matrix& s, size_t keep_per_row) {
    if (s.rows() != s.cols()) throw ShapeError("oracle_topk_mask: scores must be square");
    SparseMask m(s.rows());
    m.kept = row_topk_indices(s, keep_per_row);
    return m;
}

SparseMask predicted_topk_mask(const Matrix& s_tilde, size_t keep_per_row) {
    return oracle_topk_mask(s_tilde, keep_per_row);
}

SparseMask threshold_mask(const Matrix& s, double theta, bool post_softmax) {
    if (!std::isfinite(theta)) throw ParamError("threshold_mask: theta must be finite");
    if (s.rows() != s.cols()) throw ShapeError("threshold_mask: scores must be square");
    const Matrix base = post_softmax ? row_softmax(s) : s;
    SparseMask m(base.rows());
    for (size_t i = 0; i < base.rows(); ++i)
        for (uint32_t j = 0; j < base.cols(); ++j)
            if (base(i, j) >= theta) m.kept[i].push_back(j);
    return m;
}

SparseMask colvec_mask(const Matrix& s_tilde, ColVecSpec spec, double target_sparsity) {
    if (spec.orientation == VecOrientation::row) {
        ColVecSpec t = spec;
        t.orientation = VecOrientation::col;
        SparseMask cm = colvec_mask(transpose(s_tilde), t, target_sparsity);
        SparseMask m(cm.l);
        for (size_t i = 0; i < cm.l; ++i)
            for (uint32_t j : cm.kept[i]) m.kept[j].push_back(static_cast<uint32_t>(i));
        return m;
    }
    if (spec.v < 1) throw ParamError("colvec_mask: vector height must be >= 1");
    if (!(target_sparsity > 0.0 && target_sparsity < 1.0))
        throw ParamError("colvec_mask: target_sparsity must be in (0, 1)");
    if (s_tilde.rows() != s_tilde.cols()) throw ShapeError("colvec_mask: scores must be square");
    const size_t l = s_tilde.rows();
    const auto keep =
        static_cast<size_t>(std::ceil((1.0 - target_sparsity) * static_cast<double>(l)));
    SparseMask m(l);
    for (size_t band = 0; band < l; band += spec.v) {
        const size_t band_end = std::min(band + spec.v, l);  // ragged last band allowed
        Matrix colscore(1, l);
        for (size_t i = band; i < band_end; ++i)
            for (size_t j = 0; j < l; ++j)
                colscore.raw()[j] += std::abs(s_tilde(i, j));
        const auto cols = row_topk_indices(colscore, keep)[0];
        for (size_t i = band; i < band_end; ++i) m.kept[i] = cols;
    }
    return m;
}

SparseMask random_mask(size_t l, size_t keep_per_row, Rng& rng) {
    if (keep_per_row < 1 || keep_per_row > l)
        throw ParamError("random_mask: keep_per_row out of range");
    SparseMask m(l);
    std::vector<uint32_t> pool(l);
    for (size_t i = 0; i < l; ++i) {
        std::iota(pool.begin(), pool.end(), 0u);
        for (size_t j = 0; j < keep_per_row; ++j) {  // partial Fisher-Yates
            const size_t r = j + static_cast<size_t>(rng.uniform_int(l - j));
            std::swap(pool[j], pool[r]);
        }
        m.kept[i].assign(pool.begin(), pool.begin() + keep_per_row);
        std::sort(m.kept[i].begin(), m.kept[i].end());
    }
    return m;
}

SparseMask local_window_mask(size_t l, size_t keep_per_row) {
    if (keep_per_row < 1 || keep_per_row > l)
        throw ParamError("local_window_mask: keep_per_row out of range");
    SparseMask m(l);
    for (size_t i = 0; i < l; ++i) {
        // keep_per_row columns nearest to i, clipped to [0, l)
        long lo = static_cast<long>(i) - static_cast<long>(keep_per_row - 1) / 2;
        lo = std::clamp(lo, 0L, static_cast<long>(l - keep_per_row));
        for (size_t j = 0; j < keep_per_row; ++j)
            m.kept[i].push_back(static_cast<uint32_t>(lo + static_cast<long>(j)));
    }
    return m;
}

double prediction_accuracy(const SparseMask& pred, const SparseMask& oracle) {
    if (pred.l != oracle.l) throw ParamError("prediction_accuracy: size mismatch");
    size_t inter = 0, total = 0;
    for (size_t i = 0; i < pred.l; ++i) {
        if (pred.kept[i].size() != oracle.kept[i].size())
            throw ParamError("prediction_accuracy: per-row counts differ");
        total += pred.kept[i].size();
        const auto& o = oracle.kept[i];
        for (uint32_t j : pred.kept[i])
            if (std::binary_search(o.begin(), o.end(), j)) ++inter;
    }
    if (total == 0) throw ParamError("prediction_accuracy: empty masks");
    return static_cast<double>(inter) / static_cast<double>(total);
}

}  // namespace dsattn
