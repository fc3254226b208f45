#include "dsattn/predictor.hpp"

#include <cmath>

#include "dsattn/kernels.hpp"
#include "dsattn/linalg.hpp"

namespace dsattn {

ProjectionMatrix init_projection(size_t d, size_t k, Rng& rng) {
    if (k < 1 || k > d) throw ParamError("init_projection: need 1 <= k <= d");
    ProjectionMatrix proj;
    proj.p = Matrix(d, k);
    const double v = std::sqrt(3.0 / static_cast<double>(k));
    for (size_t i = 0; i < proj.p.size(); ++i) {
        const double u = rng.uniform01();
        proj.p.raw()[i] = u < 1.0 / 6.0 ? -v : (u >= 5.0 / 6.0 ? v : 0.0);
    }
    return proj;
}

ProjectionMatrix init_projection(size_t d, size_t k, uint64_t seed) {
    Rng rng(seed);
    ProjectionMatrix proj = init_projection(d, k, rng);
    proj.seed = seed;
    return proj;
}

void QuantSpec::validate() const {
    if (bits != 0 && bits != 2 && bits != 4 && bits != 8 && bits != 16)
        throw ParamError("QuantSpec: bits must be one of {2,4,8,16,full}");
}

Matrix quantize(const Matrix& m, QuantSpec q) {
    q.validate();
    if (q.is_full()) return m;
    const double qmax = static_cast<double>((1 << (q.bits - 1)) - 1);
    const double amax = max_abs(m);
    Matrix out(m.rows(), m.cols(), m.precision());
    if (amax == 0.0) return out;  // scale guard: all-zero input -> all-zero output
    const double s = amax / qmax;
    kernels::quantize(m.data(), out.raw(), m.size(), s, qmax);
    out.round_to_precision();
    return out;
}

void PredictorParams::validate() const {
    if (!proj) throw ParamError("PredictorParams: missing projection");
    const size_t k = proj->p.cols();
    if (wq.rows() != k || wq.cols() != k || wk.rows() != k || wk.cols() != k)
        throw ShapeError("PredictorParams: W~ must be k x k");
    quant.validate();
}

PredictorParams random_predictor_params(std::shared_ptr<const ProjectionMatrix> proj,
                                        double init_std, Rng& rng, QuantSpec quant,
                                        Precision prec) {
    PredictorParams pp;
    const size_t k = proj->p.cols();
    pp.proj = std::move(proj);
    pp.wq = random_normal(k, k, 0.0, init_std, rng, prec);
    pp.wk = random_normal(k, k, 0.0, init_std, rng, prec);
    pp.quant = quant;
    return pp;
}

Matrix approx_scores_from_r(const Matrix& r, const PredictorParams& pp) {
    pp.validate();
    if (r.cols() != pp.proj->p.cols())
        throw ShapeError("approx_scores: R width != projection k");
    Matrix qt = quantize(matmul(r, pp.wq), pp.quant);
    Matrix kt = quantize(matmul(r, pp.wk), pp.quant);
    return matmul_nt(qt, kt);
}

Matrix approx_scores(const Matrix& x, const PredictorParams& pp) {
    pp.validate();
    if (x.cols() != pp.proj->p.rows()) throw ShapeError("approx_scores: X feature dim != d");
    return approx_scores_from_r(matmul(x, pp.proj->p), pp);
}

}  // namespace dsattn
