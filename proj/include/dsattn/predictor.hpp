#pragma once

#include <memory>

#include "dsattn/matrix.hpp"
#include "dsattn/rng.hpp"

namespace dsattn {

// Sparse random projection P in sqrt(3/k) * {-1, 0, +1}^{d x k}, entries
// drawn with probabilities {1/6, 2/3, 1/6}. Frozen after initialization and
// shared by the approximate query and key transforms.
struct ProjectionMatrix {
    Matrix p;
    uint64_t seed = 0;
    double sigma() const { return static_cast<double>(p.cols()) / static_cast<double>(p.rows()); }
};

ProjectionMatrix init_projection(size_t d, size_t k, Rng& rng);
// Seed-recording variant; the stored seed replays the projection exactly.
ProjectionMatrix init_projection(size_t d, size_t k, uint64_t seed);

// Symmetric uniform quantization with a per-tensor scale. bits = 0 means full
// precision (identity).
struct QuantSpec {
    int bits = 0;  // one of {0(full), 2, 4, 8, 16}
    bool is_full() const { return bits == 0; }
    void validate() const;
};

Matrix quantize(const Matrix& m, QuantSpec q);

// One prediction path instance (per attention head); P is shared across the
// query/key transforms and, by default, across heads of a layer.
struct PredictorParams {
    std::shared_ptr<const ProjectionMatrix> proj;
    Matrix wq, wk;  // k x k trainable transforms
    QuantSpec quant;
    void validate() const;
};

PredictorParams random_predictor_params(std::shared_ptr<const ProjectionMatrix> proj,
                                        double init_std, Rng& rng, QuantSpec quant = {},
                                        Precision prec = Precision::f64);

// S~ = quantize(X P Wq) * quantize(X P Wk)^T with X P computed once.
Matrix approx_scores(const Matrix& x, const PredictorParams& pp);
// Same, reusing a precomputed R = X P.
Matrix approx_scores_from_r(const Matrix& r, const PredictorParams& pp);

}  // namespace dsattn
