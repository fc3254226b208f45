#pragma once

#include "dsattn/mask.hpp"
#include "dsattn/matrix.hpp"
#include "dsattn/rng.hpp"

namespace dsattn {

// Per row, the keep_per_row largest exact scores (pre-softmax); tie rule and
// ordering from row_topk_indices.
SparseMask oracle_topk_mask(const Matrix& s, size_t keep_per_row);

// Same selection over approximate scores.
SparseMask predicted_topk_mask(const Matrix& s_tilde, size_t keep_per_row);

// Keep positions with value >= theta, either on raw scores or on row-softmax
// weights. Rows may end up empty (flagged via SparseMask::empty_rows).
SparseMask threshold_mask(const Matrix& s, double theta, bool post_softmax);

enum class VecOrientation { col, row };

// v consecutive rows x 1 column (col), or the transposed rule (row).
struct ColVecSpec {
    size_t v = 4;
    VecOrientation orientation = VecOrientation::col;
};

// Rows partitioned into bands of height v (last band may be ragged); per
// band each column is scored by sum |s~| over the band and the top
// ceil((1 - target_sparsity) * l) columns are kept for every row of the band.
SparseMask colvec_mask(const Matrix& s_tilde, ColVecSpec spec, double target_sparsity);

// Uniform sample of keep_per_row columns per row, without replacement.
SparseMask random_mask(size_t l, size_t keep_per_row, Rng& rng);

// Static control: the keep_per_row columns nearest the diagonal
// (row-balanced; ties toward smaller index).
SparseMask local_window_mask(size_t l, size_t keep_per_row);

// |pred intersect oracle| / |pred| aggregated over rows. Requires matching
// l and per-row counts.
double prediction_accuracy(const SparseMask& pred, const SparseMask& oracle);

}  // namespace dsattn
