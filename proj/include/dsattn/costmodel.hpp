#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "dsattn/errors.hpp"

namespace dsattn::costmodel {

// Shapes of one attention layer for analytic MAC accounting.
struct LayerShape {
    size_t l = 0;       // sequence length
    size_t d = 0;       // model width
    size_t d_k = 0;     // per-head query/key width
    size_t d_v = 0;     // per-head value width
    size_t heads = 1;
    size_t ffn = 0;     // feed-forward hidden width
    size_t proj_k = 0;  // prediction projection width k (0 disables prediction)
    int pred_bits = 4;  // 0 = full precision
    double beta_override = -1.0;  // >= 0 replaces the bits/32 convention

    void validate() const;
};

// Per layer: h * l^2 * (d_k + d_v). MACs only, softmax and scaling excluded.
uint64_t dense_attention_macs(const LayerShape& s);

// kept-fraction * dense count. Exact integer form for balanced masks with
// keep_per_row kept entries per row.
double dsa_attention_macs(const LayerShape& s, double sparsity);
uint64_t dsa_attention_macs_exact(const LayerShape& s, size_t keep_per_row);

// One shared prediction path per layer: raw = l*d*k (X P, computed once)
// + 2*l*k^2 (W~_Q / W~_K) + l^2*k (S~). beta defaults to pred_bits/32.
struct PredictionMacs {
    uint64_t raw = 0;
    double beta = 1.0;
    double weighted = 0.0;
};
PredictionMacs prediction_macs(const LayerShape& s);

struct CostReport {
    LayerShape shape;
    double sparsity = 0.0;
    uint64_t macs_linear = 0;      // QKV projections + output projection
    uint64_t macs_attention = 0;   // dense score + output GEMMs
    uint64_t macs_other = 0;       // FFN GEMMs
    uint64_t macs_prediction_raw = 0;
    double macs_prediction_weighted = 0.0;
    uint64_t dense_total = 0;
    double dsa_total = 0.0;        // linear + kept-fraction * attention + other
    double reduction_ratio = 1.0;  // dense_total / dsa_total
    double overhead_ratio = 0.0;   // prediction_weighted / dense_total
    double attention_share_dense = 0.0;
};

CostReport layer_breakdown(const LayerShape& s, double sparsity);

// Relative MAC energy factors, FP32 := 1.0. The numbers are user-supplied
// input data, never shipped as ground truth; defaults are placeholders.
struct EnergyTable {
    std::map<std::string, double> factors;  // e.g. {"fp32",1.0},{"int4",0.1}
    std::string provenance;

    static EnergyTable placeholder_defaults();
    double factor(const std::string& name) const;
};

struct EnergyReport {
    double dense = 0.0;
    double dsa = 0.0;             // includes beta-free prediction at its factor
    double ratio_vs_dense = 1.0;  // dsa / dense
    double reduction = 1.0;       // dense / dsa
};

EnergyReport energy_estimate(const CostReport& report, const EnergyTable& table);

// Softmax element-operation reduction: l^2 / nnz = 1 / (1 - sparsity) for
// row-balanced masks.
double sparse_softmax_saving(size_t l, double sparsity);
double sparse_softmax_saving_exact(size_t l, size_t keep_per_row);

const char* precision_name(int bits);  // "fp32", "int8", ...

}  // namespace dsattn::costmodel
