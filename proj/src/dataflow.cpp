#include "dsattn/dataflow.hpp"

#include <algorithm>
#include <set>

namespace dsattn::dataflow {

namespace {

BandDetail simulate_band(const SparseMask& mask, size_t first, size_t rows, ScheduleKind kind) {
    BandDetail d;
    d.first_row = first;
    d.rows = rows;
    size_t max_kept = 0;
    for (size_t r = first; r < first + rows; ++r)
        max_kept = std::max(max_kept, mask.kept[r].size());
    for (size_t r = first; r < first + rows; ++r)
        d.idle += max_kept - mask.kept[r].size();

    switch (kind) {
        case ScheduleKind::row_by_row: {
            for (size_t r = first; r < first + rows; ++r) d.fetches += mask.kept[r].size();
            break;
        }
        case ScheduleKind::row_parallel: {
            // step-synchronous: the t-th kept column of each row, shared when equal
            for (size_t t = 0; t < max_kept; ++t) {
                std::set<uint32_t> requested;
                for (size_t r = first; r < first + rows; ++r)
                    if (t < mask.kept[r].size()) requested.insert(mask.kept[r][t]);
                d.fetches += requested.size();
            }
            break;
        }
        case ScheduleKind::row_parallel_reordered: {
            std::set<uint32_t> union_cols;
            for (size_t r = first; r < first + rows; ++r)
                union_cols.insert(mask.kept[r].begin(), mask.kept[r].end());
            d.fetches = union_cols.size();
            break;
        }
    }
    return d;
}

}  // namespace

AccessTrace simulate(const SparseMask& mask, const Schedule& schedule) {
    if (schedule.band < 1) throw ParamError("simulate: band height must be >= 1");
    mask.validate();
    const size_t band = schedule.kind == ScheduleKind::row_by_row ? 1 : schedule.band;
    AccessTrace trace;
    for (size_t first = 0; first < mask.l; first += band) {
        const size_t rows = std::min(band, mask.l - first);
        BandDetail d = simulate_band(mask, first, rows, schedule.kind);
        trace.operand_fetches += d.fetches;
        trace.pe_idle_steps += d.idle;
        trace.bands.push_back(d);
    }
    trace.broadcast_steps = trace.operand_fetches;  // one live broadcast at a time
    return trace;
}

ReductionReport reduction_report(const SparseMask& mask, size_t band) {
    ReductionReport r;
    const auto nnz = static_cast<double>(mask.nnz());
    const AccessTrace par = simulate(mask, {ScheduleKind::row_parallel, band});
    const AccessTrace reord = simulate(mask, {ScheduleKind::row_parallel_reordered, band});
    r.row_by_row = 1.0;
    r.row_parallel = nnz / static_cast<double>(par.operand_fetches);
    r.row_parallel_reordered = nnz / static_cast<double>(reord.operand_fetches);
    return r;
}

ChainTrace chain_simulate(const SparseMask& mask, const Schedule& schedule) {
    ChainTrace c;
    // Stage 1 (SDDMM) fetches columns of K^T, stage 2 (SpMM) rows of V; the
    // same kept coordinates drive both streams.
    c.sddmm_stage = simulate(mask, schedule);
    c.spmm_stage = simulate(mask, schedule);
    // Structural no-reshuffle check: accumulate the multiset of (row, col)
    // products a reordered stage 1 emits and confirm stage 2 consumes them
    // per row as a set, i.e. no inter-stage permutation buffer is needed.
    c.no_reshuffle = true;
    const size_t band = schedule.kind == ScheduleKind::row_by_row ? 1 : schedule.band;
    for (size_t first = 0; first < mask.l && c.no_reshuffle; first += band) {
        const size_t rows = std::min(band, mask.l - first);
        std::vector<std::vector<uint32_t>> emitted(rows);
        // reordered emission: per distinct broadcast column, all rows of the
        // band holding it emit their product
        std::set<uint32_t> union_cols;
        for (size_t r = 0; r < rows; ++r)
            union_cols.insert(mask.kept[first + r].begin(), mask.kept[first + r].end());
        for (uint32_t col : union_cols)
            for (size_t r = 0; r < rows; ++r)
                if (mask.contains(first + r, col)) emitted[r].push_back(col);
        for (size_t r = 0; r < rows; ++r) {
            std::vector<uint32_t> sorted = emitted[r];
            std::sort(sorted.begin(), sorted.end());
            if (sorted != mask.kept[first + r]) c.no_reshuffle = false;
        }
    }
    return c;
}

}  // namespace dsattn::dataflow
