#include <cmath>
#include <cstring>

#include "dsattn/kernels.hpp"

namespace dsattn::kernels::detail {

// Round half away from zero. Matches std::round for all finite magnitudes
// below 2^52; written out so the AVX2 variant can mirror it operation for
// operation.
static inline double round_half_away(double x) {
    double t = std::trunc(x);
    double f = x - t;
    if (f >= 0.5) t += 1.0;
    if (f <= -0.5) t -= 1.0;
    return t;
}

void matmul_scalar(const double* a, const double* b, double* c, size_t m, size_t k, size_t n) {
    // i-k-j order with a row accumulator; each c[i][j] still sees the exact
    // sequence acc = fma(a[i][kk], b[kk][j], acc) for kk = 0..k-1.
    for (size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        std::memset(crow, 0, n * sizeof(double));
        const double* arow = a + i * k;
        for (size_t kk = 0; kk < k; ++kk) {
            const double aik = arow[kk];
            const double* brow = b + kk * n;
            for (size_t j = 0; j < n; ++j) crow[j] = std::fma(aik, brow[j], crow[j]);
        }
    }
}

void sddmm_scalar(const double* q, const double* kmat, size_t dk, const uint32_t* cols,
                  const uint64_t* rowptr, size_t rows, double scale, double* out) {
    for (size_t i = 0; i < rows; ++i) {
        const double* qrow = q + i * dk;
        for (uint64_t p = rowptr[i]; p < rowptr[i + 1]; ++p) {
            const double* krow = kmat + static_cast<size_t>(cols[p]) * dk;
            double acc = 0.0;
            for (size_t kk = 0; kk < dk; ++kk) acc = std::fma(qrow[kk], krow[kk], acc);
            out[p] = acc * scale;
        }
    }
}

void spmm_scalar(const double* vals, const uint32_t* cols, const uint64_t* rowptr, size_t rows,
                 const double* v, size_t dv, double* z) {
    for (size_t i = 0; i < rows; ++i) {
        double* zrow = z + i * dv;
        std::memset(zrow, 0, dv * sizeof(double));
        for (uint64_t p = rowptr[i]; p < rowptr[i + 1]; ++p) {
            const double w = vals[p];
            const double* vrow = v + static_cast<size_t>(cols[p]) * dv;
            for (size_t j = 0; j < dv; ++j) zrow[j] = std::fma(w, vrow[j], zrow[j]);
        }
    }
}

void quantize_scalar(const double* x, double* y, size_t n, double s, double qmax) {
    for (size_t i = 0; i < n; ++i) {
        double t = x[i] / s;
        double r = round_half_away(t);
        if (r > qmax) r = qmax;
        if (r < -qmax) r = -qmax;
        y[i] = r * s;
    }
}

}  // namespace dsattn::kernels::detail
