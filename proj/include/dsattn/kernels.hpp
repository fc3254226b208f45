#pragma once

#include <cstddef>
#include <cstdint>

namespace dsattn::kernels {

// Runtime-selected instruction set. The AVX2 variants execute the exact same
// IEEE operation sequence per output element as the scalar reference
// (sequential fused multiply-add over the reduction index), so results are
// bit-identical across paths; the equivalence tests assert this.
enum class Isa { scalar, avx2 };

Isa active_isa();
void force_isa(Isa isa);  // tests / DSATTN_ISA=scalar env override
void reset_isa();         // back to auto-detection
bool avx2_supported();
const char* isa_name(Isa isa);

// c = a(m x k) * b(k x n), row-major. c is overwritten. Accumulation is
// double FMA in ascending k order for every element.
void matmul(const double* a, const double* b, double* c, size_t m, size_t k, size_t n);

// Sampled dense-dense product: out[p] = scale * <q_i, k_{cols[p]}> for each
// kept position p of row i (CSR layout: rowptr has rows+1 entries).
void sddmm(const double* q, const double* kmat, size_t dk, const uint32_t* cols,
           const uint64_t* rowptr, size_t rows, double scale, double* out);

// Sparse-times-dense: z_i = sum_p vals[p] * v_{cols[p]} over row i's kept
// positions in ascending storage order. z is overwritten (rows x dv).
void spmm(const double* vals, const uint32_t* cols, const uint64_t* rowptr, size_t rows,
          const double* v, size_t dv, double* z);

// y[i] = clamp(round_half_away(x[i] / s), -qmax, qmax) * s
void quantize(const double* x, double* y, size_t n, double s, double qmax);

namespace detail {
// scalar reference kernels (always available)
void matmul_scalar(const double* a, const double* b, double* c, size_t m, size_t k, size_t n);
void sddmm_scalar(const double* q, const double* kmat, size_t dk, const uint32_t* cols,
                  const uint64_t* rowptr, size_t rows, double scale, double* out);
void spmm_scalar(const double* vals, const uint32_t* cols, const uint64_t* rowptr, size_t rows,
                 const double* v, size_t dv, double* z);
void quantize_scalar(const double* x, double* y, size_t n, double s, double qmax);

// AVX2 variants (present only when the TU is compiled; guarded by dispatch)
void matmul_avx2(const double* a, const double* b, double* c, size_t m, size_t k, size_t n);
void sddmm_avx2(const double* q, const double* kmat, size_t dk, const uint32_t* cols,
                const uint64_t* rowptr, size_t rows, double scale, double* out);
void spmm_avx2(const double* vals, const uint32_t* cols, const uint64_t* rowptr, size_t rows,
               const double* v, size_t dv, double* z);
void quantize_avx2(const double* x, double* y, size_t n, double s, double qmax);
}  // namespace detail

}  // namespace dsattn::kernels
