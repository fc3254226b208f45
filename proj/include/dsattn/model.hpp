#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "dsattn/matrix.hpp"
#include "dsattn/predictor.hpp"
#include "dsattn/rng.hpp"

namespace dsattn {

struct ModelConfig {
    size_t layers = 2;
    size_t d = 64;
    size_t heads = 2;
    size_t ffn = 128;
    size_t seq_len = 128;
    size_t vocab = 31;
    size_t n_classes = 4;
    double sigma = 0.5;   // predictor projection ratio k/d
    int pred_bits = 0;    // train-time predictor quantization; 0 = full
    bool scale_scores = true;
    bool share_projection = true;  // one P per layer shared across heads
    // approximation-loss aggregation: mean over heads, summed over layers by
    // default; both reducible to plain sums via these switches
    bool mse_mean_over_heads = true;
    bool mse_mean_over_layers = false;
    Precision precision = Precision::f32;
    double mask_constant = 1e4;

    size_t d_head() const { return d / heads; }
    size_t proj_k() const;
    void validate() const;
};

// Trainable tensor with its Adam state.
struct Parameter {
    std::string name;
    Matrix value;
    Matrix adam_m, adam_v;
    bool predictor_path = false;  // prediction-path parameter group
};

// Token embedding + learned positions, N pre-norm attention blocks with
// feed-forward sublayers and per-head prediction paths, classifier head
// reading out at the sample's marker position.
class ToyModel {
  public:
    ToyModel(ModelConfig cfg, uint64_t init_seed);

    const ModelConfig& config() const { return cfg_; }
    std::vector<Parameter>& params() { return params_; }
    const std::vector<Parameter>& params() const { return params_; }
    size_t param_index(const std::string& name) const;
    Parameter& param(const std::string& name) { return params_[param_index(name)]; }
    const Parameter& param(const std::string& name) const { return params_[param_index(name)]; }
    size_t param_count_scalars() const;

    // Frozen per-layer projections (never trained; asserted by tests).
    const std::vector<std::shared_ptr<const ProjectionMatrix>>& projections() const {
        return projections_;
    }

    void save(const std::string& path, const std::string& extra_meta_json = "") const;
    static ToyModel load(const std::string& path);

  private:
    ToyModel() = default;
    void index_params();

    ModelConfig cfg_;
    std::vector<Parameter> params_;
    std::map<std::string, size_t> index_;
    std::vector<std::shared_ptr<const ProjectionMatrix>> projections_;
};

}  // namespace dsattn
