#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dsattn/autodiff.hpp"
#include "dsattn/model.hpp"
#include "dsattn/task.hpp"

namespace dsattn {

enum class MaskKind { none, predicted, oracle, random, local };
MaskKind mask_kind_from_string(const std::string& s);
const char* mask_kind_name(MaskKind k);

struct LossBreakdown {
    double model_loss = 0.0;
    double mse_loss = 0.0;
    double lambda = 0.0;
    double total = 0.0;  // model_loss + lambda * mse_loss
};

struct ForwardOptions {
    bool dsa = false;  // apply sparsity masks to attention
    MaskKind mask_kind = MaskKind::predicted;
    double sparsity = 0.9;
    double lambda = 0.0;
    bool train_model = true;
    bool train_predictor = true;
    int bits_override = -1;  // eval-time predictor requantization; -1 = config
    Rng* mask_rng = nullptr;
    // Pinned masks per [layer][head]; bypasses mask generation (gradient
    // checking needs the selection frozen).
    const std::vector<std::vector<SparseMask>>* mask_override = nullptr;
    bool collect_stats = false;     // prediction accuracy / rel Frobenius error
    bool capture_masks = false;     // store generated masks in the result
    double drop_threshold = -1.0;   // >= 0: post-softmax weights < theta dropped
};

struct ForwardStats {
    std::vector<double> pred_acc_per_layer;  // mean over heads
    double rel_fro = 0.0;                    // mean ||S - S~||_F / ||S||_F
    double mse = 0.0;                        // Eq.-6 aggregate at lambda = 1
    double dropped_fraction = 0.0;           // with drop_threshold
    std::vector<std::vector<SparseMask>> masks;  // [layer][head] when captured
};

struct BatchResult {
    ad::Var loss;
    ad::Var logits_last;
    LossBreakdown breakdown;
    std::vector<ad::Var> bound;  // parameter vars, parallel to model.params()
    ForwardStats stats;
    std::vector<uint32_t> predictions;  // argmax per sample
};

// Builds the forward graph for a batch on the given tape. Losses: mean
// cross-entropy over the batch plus lambda times Eq.-6 MSE (mean over heads,
// summed over layers, averaged over the batch).
BatchResult forward_batch(ad::Tape& tape, ToyModel& model, const TaskSpec& spec,
                          const std::vector<const Sample*>& batch, const ForwardOptions& opts);

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// One Adam update from gradients on the tape; t is the 1-based step index of
// the current phase. Predictor-path parameters use pred.lr.
void adam_step(ToyModel& model, ad::Tape& tape, const std::vector<ad::Var>& bound,
               const AdamConfig& model_cfg, const AdamConfig& pred_cfg, size_t t);
void adam_step(ToyModel& model, const std::vector<Matrix>& grads,
               const AdamConfig& model_cfg, const AdamConfig& pred_cfg, size_t t);

// Forward + backward over the batch split across worker threads (contiguous
// chunks, one per worker). Gradients are reduced in chunk order, so the
// result is bit-reproducible for a fixed thread count regardless of
// scheduling. grads[i] is parallel to model.params(); empty when the
// parameter received no gradient.
struct StepResult {
    LossBreakdown breakdown;
    ForwardStats stats;
    std::vector<Matrix> grads;
};
StepResult train_step_compute(ToyModel& model, const TaskSpec& spec,
                              const std::vector<const Sample*>& batch,
                              const ForwardOptions& opts, size_t threads);

enum class TrainSchedule { dense_pretrain, adapt_finetune, from_scratch_two_phase };
TrainSchedule schedule_from_string(const std::string& s);
const char* schedule_name(TrainSchedule s);

struct TrainConfig {
    TrainSchedule schedule = TrainSchedule::dense_pretrain;
    size_t steps = 420;         // main phase (dense steps, or joint steps)
    size_t phase1_steps = 0;    // predictor warmup (adapt) / dense phase (from-scratch)
    size_t batch = 16;
    double lr = 1e-3;
    double predictor_lr = 3e-3;
    double warmup_lr = 1e-2;    // predictor-only warmup phase
    double lambda = 0.01;
    double sparsity = 0.9;
    MaskKind mask_kind = MaskKind::predicted;
    uint64_t seed = 1;
    size_t eval_every = 0;   // 0 = final evaluation only
    size_t stats_every = 10; // prediction-accuracy sampling interval
    size_t threads = 2;      // batch workers; part of the config contract
};

struct MetricsRow {
    size_t step = 0;
    std::string phase;
    double model_loss = 0.0;
    double mse_loss = 0.0;
    double total_loss = 0.0;
    double eval_acc = -1.0;  // -1 when not evaluated at this step
    double pred_acc = -1.0;
    double rel_fro = -1.0;
};

struct TrainResult {
    std::vector<MetricsRow> history;
    double final_accuracy = 0.0;
    std::vector<double> final_pred_acc_per_layer;
    double final_rel_fro = -1.0;
};

TrainResult train(ToyModel& model, const ToyTask& train_task, const ToyTask& eval_task,
                  const TrainConfig& cfg);

struct EvalOptions {
    bool dsa = false;
    MaskKind mask_kind = MaskKind::predicted;
    double sparsity = 0.9;
    int bits_override = -1;
    uint64_t mask_seed = 1234;  // for MaskKind::random
    double drop_threshold = -1.0;
};

struct EvalResult {
    double accuracy = 0.0;
    std::vector<double> pred_acc_per_layer;
    double rel_fro = -1.0;
    double mse = -1.0;
    double dropped_fraction = 0.0;
};

EvalResult evaluate(ToyModel& model, const ToyTask& task, const EvalOptions& opts,
                    bool collect_stats = false);

void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows);

size_t keep_per_row(size_t l, double sparsity);

}  // namespace dsattn
