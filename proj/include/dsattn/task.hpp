#pragma once

#include <cstdint>
#include <vector>

#include "dsattn/rng.hpp"

namespace dsattn {

// Pointer-match toy task. Each sequence hides one marker token Q_j at a
// random position and one target token T_{j,c} at a distant position; the
// label is the target's payload class c. Distractor targets with other keys
// make the label unrecoverable from token counts alone, so solving the task
// requires attending from the marker to an input-dependent distant position.
struct TaskSpec {
    size_t l = 128;
    size_t vocab = 31;
    size_t n_keys = 4;
    size_t n_classes = 4;
    size_t n_distractors = 3;
    size_t gap = 16;  // minimum |marker - target| distance

    size_t fillers() const { return vocab - n_keys - n_keys * n_classes; }
    uint32_t query_token(size_t key) const { return static_cast<uint32_t>(fillers() + key); }
    uint32_t target_token(size_t key, size_t cls) const {
        return static_cast<uint32_t>(fillers() + n_keys + key * n_classes + cls);
    }
    bool is_query(uint32_t tok) const {
        return tok >= fillers() && tok < fillers() + n_keys;
    }
    bool is_target(uint32_t tok) const { return tok >= fillers() + n_keys; }
    void validate() const;
};

struct Sample {
    std::vector<uint32_t> tokens;
    uint32_t label = 0;
    uint32_t marker_pos = 0;  // classifier readout position
    uint32_t target_pos = 0;
};

struct ToyTask {
    TaskSpec spec;
    std::vector<Sample> samples;
};

ToyTask make_toy_task(size_t l, size_t vocab, size_t n_samples, Rng& rng);

// Reads the label by scanning for the marker and its matching target;
// achieves accuracy 1 by construction.
uint32_t brute_force_read(const TaskSpec& spec, const std::vector<uint32_t>& tokens);

// Softmax regression on token-count features; ceiling well below the
// attention solution because counts cannot bind keys to payloads.
double bow_logistic_accuracy(const ToyTask& train, const ToyTask& eval, size_t steps, double lr,
                             Rng& rng);

}  // namespace dsattn
