#include <immintrin.h>

#include <cmath>
#include <cstring>

#include "dsattn/kernels.hpp"

// AVX2 variants. Every kernel keeps the per-element IEEE operation sequence
// of the scalar reference (sequential FMA over the reduction index), so the
// outputs are bit-identical to scalar.cpp; vectorization is across output
// columns / kept positions, never across the reduction.

namespace dsattn::kernels::detail {

namespace {

inline double round_half_away_inline(double x) {
    double t = std::trunc(x);
    double f = x - t;
    if (f >= 0.5) t += 1.0;
    if (f <= -0.5) t -= 1.0;
    return t;
}

// One output row of c over a j-block held in registers across the k loop.
template <int NV>
inline void matmul_row_block(const double* arow, const double* b, double* crow, size_t k,
                             size_t n, size_t j0) {
    __m256d acc[NV];
    for (int v = 0; v < NV; ++v) acc[v] = _mm256_setzero_pd();
    for (size_t kk = 0; kk < k; ++kk) {
        const __m256d av = _mm256_set1_pd(arow[kk]);
        const double* brow = b + kk * n + j0;
        for (int v = 0; v < NV; ++v)
            acc[v] = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + 4 * v), acc[v]);
    }
    for (int v = 0; v < NV; ++v) _mm256_storeu_pd(crow + j0 + 4 * v, acc[v]);
}

}  // namespace

void matmul_avx2(const double* a, const double* b, double* c, size_t m, size_t k, size_t n) {
    for (size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        size_t j = 0;
        for (; j + 16 <= n; j += 16) matmul_row_block<4>(arow, b, crow, k, n, j);
        for (; j + 4 <= n; j += 4) matmul_row_block<1>(arow, b, crow, k, n, j);
        for (; j < n; ++j) {
            double acc = 0.0;
            for (size_t kk = 0; kk < k; ++kk) acc = std::fma(arow[kk], b[kk * n + j], acc);
            crow[j] = acc;
        }
    }
}

void sddmm_avx2(const double* q, const double* kmat, size_t dk, const uint32_t* cols,
                const uint64_t* rowptr, size_t rows, double scale, double* out) {
    for (size_t i = 0; i < rows; ++i) {
        const double* qrow = q + i * dk;
        uint64_t p = rowptr[i];
        const uint64_t pend = rowptr[i + 1];
        // four kept positions per pass, one lane per position
        for (; p + 4 <= pend; p += 4) {
            const double* k0 = kmat + static_cast<size_t>(cols[p + 0]) * dk;
            const double* k1 = kmat + static_cast<size_t>(cols[p + 1]) * dk;
            const double* k2 = kmat + static_cast<size_t>(cols[p + 2]) * dk;
            const double* k3 = kmat + static_cast<size_t>(cols[p + 3]) * dk;
            __m256d acc = _mm256_setzero_pd();
            for (size_t kk = 0; kk < dk; ++kk) {
                const __m256d qv = _mm256_set1_pd(qrow[kk]);
                const __m256d kv = _mm256_set_pd(k3[kk], k2[kk], k1[kk], k0[kk]);
                acc = _mm256_fmadd_pd(qv, kv, acc);
            }
            alignas(32) double lanes[4];
            _mm256_store_pd(lanes, acc);
            out[p + 0] = lanes[0] * scale;
            out[p + 1] = lanes[1] * scale;
            out[p + 2] = lanes[2] * scale;
            out[p + 3] = lanes[3] * scale;
        }
        for (; p < pend; ++p) {
            const double* krow = kmat + static_cast<size_t>(cols[p]) * dk;
            double acc = 0.0;
            for (size_t kk = 0; kk < dk; ++kk) acc = std::fma(qrow[kk], krow[kk], acc);
            out[p] = acc * scale;
        }
    }
}

void spmm_avx2(const double* vals, const uint32_t* cols, const uint64_t* rowptr, size_t rows,
               const double* v, size_t dv, double* z) {
    for (size_t i = 0; i < rows; ++i) {
        double* zrow = z + i * dv;
        std::memset(zrow, 0, dv * sizeof(double));
        size_t j = 0;
        for (; j + 4 <= dv; j += 4) {
            __m256d acc = _mm256_setzero_pd();
            for (uint64_t p = rowptr[i]; p < rowptr[i + 1]; ++p) {
                const __m256d wv = _mm256_set1_pd(vals[p]);
                const double* vrow = v + static_cast<size_t>(cols[p]) * dv;
                acc = _mm256_fmadd_pd(wv, _mm256_loadu_pd(vrow + j), acc);
            }
            _mm256_storeu_pd(zrow + j, acc);
        }
        for (; j < dv; ++j) {
            double acc = 0.0;
            for (uint64_t p = rowptr[i]; p < rowptr[i + 1]; ++p)
                acc = std::fma(vals[p], v[static_cast<size_t>(cols[p]) * dv + j], acc);
            zrow[j] = acc;
        }
    }
}

void quantize_avx2(const double* x, double* y, size_t n, double s, double qmax) {
    const __m256d vs = _mm256_set1_pd(s);
    const __m256d vqmax = _mm256_set1_pd(qmax);
    const __m256d vqmin = _mm256_set1_pd(-qmax);
    const __m256d vhalf = _mm256_set1_pd(0.5);
    const __m256d vone = _mm256_set1_pd(1.0);
    const __m256d signmask = _mm256_set1_pd(-0.0);
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d t = _mm256_div_pd(_mm256_loadu_pd(x + i), vs);
        const __m256d tr = _mm256_round_pd(t, _MM_FROUND_TO_ZERO | _MM_FROUND_NO_EXC);
        const __m256d f = _mm256_sub_pd(t, tr);
        const __m256d absf = _mm256_andnot_pd(signmask, f);
        const __m256d need = _mm256_cmp_pd(absf, vhalf, _CMP_GE_OQ);
        // +-1 with the sign of the fractional part, blended in where
        // |f| >= 0.5 (an unconditional add would flip -0.0 to +0.0)
        const __m256d adjusted =
            _mm256_add_pd(tr, _mm256_or_pd(_mm256_and_pd(f, signmask), vone));
        __m256d r = _mm256_blendv_pd(tr, adjusted, need);
        r = _mm256_min_pd(r, vqmax);
        r = _mm256_max_pd(r, vqmin);
        _mm256_storeu_pd(y + i, _mm256_mul_pd(r, vs));
    }
    for (; i < n; ++i) {
        double r = round_half_away_inline(x[i] / s);
        if (r > qmax) r = qmax;
        if (r < -qmax) r = -qmax;
        y[i] = r * s;
    }
}

}  // namespace dsattn::kernels::detail
