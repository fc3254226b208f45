#pragma once

#include <span>

#include "dsattn/attention.hpp"
#include "dsattn/mask.hpp"
#include "dsattn/matrix.hpp"

namespace dsattn {

// Exact multiply / exp counts accumulated by the sparse kernels. The cost
// model asserts against these, so they are maintained by the kernels
// themselves rather than estimated. Thread-local; reset before measuring.
struct OpCounters {
    uint64_t sddmm_mults = 0;
    uint64_t spmm_mults = 0;
    uint64_t softmax_exps = 0;
    void reset() { *this = OpCounters{}; }
};

OpCounters& op_counters();

// Per kept position, one score value; storage layout mirrors mask.kept rows
// flattened (row_offsets has l+1 entries).
struct SparseScores {
    SparseMask mask;
    std::vector<double> values;
    std::vector<uint64_t> row_offsets;

    double value(size_t row, size_t idx_in_row) const {
        return values[row_offsets[row] + idx_in_row];
    }
};

// Softmax-normalized sparse rows; empty rows are all-zero and flagged.
struct SparseWeights {
    SparseMask mask;
    std::vector<double> values;
    std::vector<uint64_t> row_offsets;
    std::vector<uint8_t> empty_row;

    double value(size_t row, size_t idx_in_row) const {
        return values[row_offsets[row] + idx_in_row];
    }
};

// Score values only at kept positions: <Q_i, K_j> (/ sqrt(d_k) if scale).
SparseScores sddmm(const Matrix& q, const Matrix& k, const SparseMask& mask, bool scale);

// Row softmax over stored entries only (max-subtracted); exp count == nnz.
SparseWeights sparse_softmax(const SparseScores& s);

// Z_i = sum over kept j of a[i][j] * V_j; empty rows give zero output rows.
Matrix spmm(const SparseWeights& a, const Matrix& v);

// sddmm -> sparse_softmax -> spmm per head, head outputs concatenated.
Matrix sparse_attention(const Matrix& x, const AttentionParams& p, const SparseMask& mask);
Matrix sparse_attention(const Matrix& x, const AttentionParams& p,
                        std::span<const SparseMask> per_head);

// Sparse fixture files: the mask format with an appended value payload.
void write_sparse_scores(const std::string& path, const SparseScores& s);
SparseScores read_sparse_scores(const std::string& path);

}  // namespace dsattn
