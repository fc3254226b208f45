#include "dsattn/presets.hpp"

#include "dsattn/errors.hpp"

namespace dsattn::presets {

costmodel::LayerShape cost_shape(const std::string& name) {
    costmodel::LayerShape s;
    if (name == "text") {
        s = {.l = 4000, .d = 256, .d_k = 64, .d_v = 64, .heads = 4, .ffn = 1024,
             .proj_k = 64, .pred_bits = 4};
    } else if (name == "text-2k") {
        s = {.l = 2000, .d = 256, .d_k = 64, .d_v = 64, .heads = 4, .ffn = 1024,
             .proj_k = 64, .pred_bits = 4};
    } else if (name == "retrieval") {
        s = {.l = 4000, .d = 128, .d_k = 32, .d_v = 32, .heads = 4, .ffn = 512,
             .proj_k = 32, .pred_bits = 4};
    } else if (name == "image") {
        s = {.l = 1024, .d = 64, .d_k = 8, .d_v = 8, .heads = 8, .ffn = 128,
             .proj_k = 16, .pred_bits = 4};
    } else if (name == "desk") {
        s = {.l = 128, .d = 64, .d_k = 32, .d_v = 32, .heads = 2, .ffn = 128,
             .proj_k = 32, .pred_bits = 4};
    } else {
        throw ConfigError("unknown cost preset: " + name);
    }
    return s;
}

std::vector<std::string> cost_preset_names() {
    return {"text", "text-2k", "retrieval", "image", "desk"};
}

std::string train_config_json(const std::string& name) {
    if (name == "desk-dense") {
        return R"({
  "task": {"l": 128, "vocab": 31, "train_samples": 4096, "eval_samples": 512},
  "model": {"layers": 2, "d": 64, "heads": 2, "ffn": 128, "sigma": 0.5,
            "pred_bits": "full", "scale_scores": true, "precision": "f32"},
  "train": {"schedule": "dense-pretrain", "steps": 420, "phase1_steps": 0,
            "batch": 16, "lr": 0.001, "predictor_lr": 0.003, "warmup_lr": 0.01,
            "lambda": 0.0, "sparsity": 0.0, "mask_kind": "none",
            "eval_every": 0, "stats_every": 10},
  "seed": 1,
  "out_prefix": "desk-dense"
})";
    }
    if (name == "desk-dsa90") {
        return R"({
  "task": {"l": 128, "vocab": 31, "train_samples": 4096, "eval_samples": 512},
  "model": {"layers": 2, "d": 64, "heads": 2, "ffn": 128, "sigma": 0.5,
            "pred_bits": "full", "scale_scores": true, "precision": "f32"},
  "train": {"schedule": "adapt-finetune", "steps": 400, "phase1_steps": 600,
            "batch": 16, "lr": 0.0003, "predictor_lr": 0.003, "warmup_lr": 0.01,
            "lambda": 0.02, "sparsity": 0.9, "mask_kind": "predicted",
            "eval_every": 0, "stats_every": 10},
  "seed": 1,
  "init_checkpoint": "desk-dense.checkpoint.bin",
  "out_prefix": "desk-dsa90"
})";
    }
    throw ConfigError("unknown train preset: " + name);
}

std::vector<std::string> train_preset_names() { return {"desk-dense", "desk-dsa90"}; }

}  // namespace dsattn::presets
