#pragma once

#include <cstdint>
#include <vector>

#include "dsattn/mask.hpp"

namespace dsattn::dataflow {

// Processing schedule over the rows of a sparse attention matrix. `band` is
// the number of PEs working on consecutive rows in lockstep.
enum class ScheduleKind { row_by_row, row_parallel, row_parallel_reordered };

struct Schedule {
    ScheduleKind kind = ScheduleKind::row_by_row;
    size_t band = 4;
};

struct BandDetail {
    size_t first_row = 0;
    size_t rows = 0;
    uint64_t fetches = 0;
    uint64_t idle = 0;
};

// Second-operand fetch counts (columns of K^T for SDDMM, rows of V for SpMM)
// under a one-live-broadcast, no-cache buffering model:
//  - row_by_row: every kept entry loads its own operand; fetches = nnz.
//  - row_parallel: at step t each PE requests the t-th kept column of its row
//    in ascending order; one fetch serves all PEs requesting the same column
//    at the same step.
//  - row_parallel_reordered: PEs may consume their columns in any order; each
//    distinct column of a band is broadcast exactly once, so fetches equal
//    the band column-union size.
// pe_idle_steps counts load-imbalance idleness: (band max kept - own kept)
// summed over rows, zero for row-balanced masks.
struct AccessTrace {
    uint64_t operand_fetches = 0;
    uint64_t broadcast_steps = 0;
    uint64_t pe_idle_steps = 0;
    std::vector<BandDetail> bands;
};

AccessTrace simulate(const SparseMask& mask, const Schedule& schedule);

// nnz / fetches per schedule, relative to row_by_row (whose ratio is 1).
struct ReductionReport {
    double row_by_row = 1.0;
    double row_parallel = 1.0;
    double row_parallel_reordered = 1.0;
};

ReductionReport reduction_report(const SparseMask& mask, size_t band);

// The SDDMM stage streams columns of K^T and the SpMM stage rows of V; both
// are driven by the same kept coordinates, so the counting model is applied
// to each stage. no_reshuffle records the structural check that stage-1
// products are consumed by stage 2 grouped per row, independent of the
// within-row processing order.
struct ChainTrace {
    AccessTrace sddmm_stage;
    AccessTrace spmm_stage;
    bool no_reshuffle = false;
};

ChainTrace chain_simulate(const SparseMask& mask, const Schedule& schedule);

}  // namespace dsattn::dataflow
