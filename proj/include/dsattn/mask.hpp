#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dsattn/errors.hpp"

namespace dsattn {

// Per-row kept-column index sets of an l x l attention mask. Rows are
// ascending and duplicate-free; rows may be empty (flagged downstream).
struct SparseMask {
    size_t l = 0;
    std::vector<std::vector<uint32_t>> kept;

    SparseMask() = default;
    explicit SparseMask(size_t n) : l(n), kept(n) {}

    static SparseMask full(size_t n);
    static SparseMask diagonal(size_t n);

    size_t nnz() const;
    double sparsity() const;  // 1 - nnz / l^2
    bool row_balanced() const;
    // kept count when row-balanced, nullopt otherwise
    std::optional<size_t> balanced_count() const;
    std::vector<uint32_t> empty_rows() const;
    bool has_empty_rows() const;
    bool contains(size_t row, uint32_t col) const;

    // throws ShapeError/ParamError when the invariants are violated
    void validate() const;

    bool operator==(const SparseMask&) const = default;
};

// Text fixture format shared by the sparse and dataflow modules:
//   line 1: "DSAMASK 1"
//   line 2: "<l> <balanced count | -1>"
//   then l lines of ascending column indices (blank line = empty row)
void write_mask(const std::string& path, const SparseMask& m);
SparseMask read_mask(const std::string& path);

}  // namespace dsattn
