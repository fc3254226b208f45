#include "dsattn/costmodel.hpp"

#include <cmath>

namespace dsattn::costmodel {

void LayerShape::validate() const {
    if (l == 0 || d == 0 || d_k == 0 || d_v == 0 || heads == 0 || ffn == 0)
        throw ParamError("LayerShape: all dimensions must be positive");
    if (proj_k > d) throw ParamError("LayerShape: proj_k must be <= d");
    if (pred_bits != 0 && pred_bits != 2 && pred_bits != 4 && pred_bits != 8 && pred_bits != 16)
        throw ParamError("LayerShape: pred_bits must be one of {0,2,4,8,16}");
}

uint64_t dense_attention_macs(const LayerShape& s) {
    s.validate();
    const uint64_t l2 = static_cast<uint64_t>(s.l) * s.l;
    return static_cast<uint64_t>(s.heads) * l2 * (s.d_k + s.d_v);
}

double dsa_attention_macs(const LayerShape& s, double sparsity) {
    if (sparsity < 0.0 || sparsity >= 1.0)
        throw ParamError("dsa_attention_macs: sparsity must be in [0, 1)");
    return (1.0 - sparsity) * static_cast<double>(dense_attention_macs(s));
}

uint64_t dsa_attention_macs_exact(const LayerShape& s, size_t keep_per_row) {
    s.validate();
    if (keep_per_row < 1 || keep_per_row > s.l)
        throw ParamError("dsa_attention_macs_exact: keep_per_row out of range");
    const uint64_t nnz = static_cast<uint64_t>(s.l) * keep_per_row;
    return static_cast<uint64_t>(s.heads) * nnz * (s.d_k + s.d_v);
}

PredictionMacs prediction_macs(const LayerShape& s) {
    s.validate();
    PredictionMacs p;
    if (s.proj_k == 0) return p;
    const uint64_t l = s.l, d = s.d, k = s.proj_k;
    p.raw = l * d * k + 2 * l * k * k + l * l * k;
    p.beta = s.beta_override >= 0.0
                 ? s.beta_override
                 : (s.pred_bits == 0 ? 1.0 : static_cast<double>(s.pred_bits) / 32.0);
    p.weighted = p.beta * static_cast<double>(p.raw);
    return p;
}

CostReport layer_breakdown(const LayerShape& s, double sparsity) {
    s.validate();
    if (sparsity < 0.0 || sparsity >= 1.0)
        throw ParamError("layer_breakdown: sparsity must be in [0, 1)");
    CostReport r;
    r.shape = s;
    r.sparsity = sparsity;
    const uint64_t l = s.l, d = s.d;
    const uint64_t qkv = static_cast<uint64_t>(s.heads) * l * d * (2 * s.d_k + s.d_v);
    const uint64_t out_proj = l * (static_cast<uint64_t>(s.heads) * s.d_v) * d;
    r.macs_linear = qkv + out_proj;
    r.macs_attention = dense_attention_macs(s);
    r.macs_other = 2 * l * d * static_cast<uint64_t>(s.ffn);
    const PredictionMacs p = prediction_macs(s);
    r.macs_prediction_raw = p.raw;
    r.macs_prediction_weighted = p.weighted;
    r.dense_total = r.macs_linear + r.macs_attention + r.macs_other;
    r.dsa_total = static_cast<double>(r.macs_linear) + static_cast<double>(r.macs_other) +
                  (1.0 - sparsity) * static_cast<double>(r.macs_attention);
    r.reduction_ratio = static_cast<double>(r.dense_total) / r.dsa_total;
    r.overhead_ratio = p.weighted / static_cast<double>(r.dense_total);
    r.attention_share_dense =
        static_cast<double>(r.macs_attention) / static_cast<double>(r.dense_total);
    return r;
}

EnergyTable EnergyTable::placeholder_defaults() {
    EnergyTable t;
    // Placeholder relative factors; replace with numbers from a process-level
    // simulator for real projections.
    t.factors = {{"fp32", 1.0}, {"int16", 0.35}, {"int8", 0.15}, {"int4", 0.06}, {"int2", 0.03}};
    t.provenance = "placeholder defaults; supply measured per-precision factors";
    return t;
}

double EnergyTable::factor(const std::string& name) const {
    auto it = factors.find(name);
    if (it == factors.end()) throw ParamError("EnergyTable: missing factor for " + name);
    if (it->second <= 0.0) throw ParamError("EnergyTable: factors must be positive");
    return it->second;
}

const char* precision_name(int bits) {
    switch (bits) {
        case 0: return "fp32";
        case 2: return "int2";
        case 4: return "int4";
        case 8: return "int8";
        case 16: return "int16";
        default: throw ParamError("precision_name: unsupported bit width");
    }
}

EnergyReport energy_estimate(const CostReport& report, const EnergyTable& table) {
    EnergyReport e;
    const double f_base = table.factor("fp32");
    e.dense = static_cast<double>(report.dense_total) * f_base;
    double pred = 0.0;
    if (report.macs_prediction_raw > 0)
        pred = static_cast<double>(report.macs_prediction_raw) *
               table.factor(precision_name(report.shape.pred_bits));
    e.dsa = report.dsa_total * f_base + pred;
    e.ratio_vs_dense = e.dsa / e.dense;
    e.reduction = e.dense / e.dsa;
    return e;
}

double sparse_softmax_saving(size_t l, double sparsity) {
    if (l == 0) throw ParamError("sparse_softmax_saving: l must be positive");
    if (sparsity < 0.0 || sparsity >= 1.0)
        throw ParamError("sparse_softmax_saving: sparsity must be in [0, 1)");
    return 1.0 / (1.0 - sparsity);
}

double sparse_softmax_saving_exact(size_t l, size_t keep_per_row) {
    if (keep_per_row < 1 || keep_per_row > l)
        throw ParamError("sparse_softmax_saving_exact: keep_per_row out of range");
    return static_cast<double>(l) / static_cast<double>(keep_per_row);
}

}  // namespace dsattn::costmodel
