#include <cstdlib>
#include <cstring>

#if defined(__GLIBC__) || defined(__linux__)
#include <malloc.h>
#endif

#include "dsattn/kernels.hpp"

namespace dsattn::kernels {

namespace {

// Matrix buffers in the hot loops sit just above glibc's default mmap
// threshold; keep them on the heap so repeated alloc/free does not turn into
// mmap/munmap churn (and cross-thread TLB shootdowns).
struct MallocTuning {
    MallocTuning() {
#if defined(__GLIBC__)
        mallopt(M_MMAP_THRESHOLD, 64 * 1024 * 1024);
        mallopt(M_TRIM_THRESHOLD, 64 * 1024 * 1024);
#endif
    }
};
const MallocTuning malloc_tuning;

Isa detect() {
#if DSATTN_HAVE_AVX2_TU
    const bool hw = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    if (const char* env = std::getenv("DSATTN_ISA")) {
        if (std::strcmp(env, "scalar") == 0) return Isa::scalar;
        if (std::strcmp(env, "avx2") == 0 && hw) return Isa::avx2;
    }
    if (hw) return Isa::avx2;
#endif
    return Isa::scalar;
}

Isa g_isa = detect();
bool g_forced = false;

}  // namespace

bool avx2_supported() {
#if DSATTN_HAVE_AVX2_TU
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Isa active_isa() { return g_isa; }

void force_isa(Isa isa) {
    g_isa = isa;
    g_forced = true;
}

void reset_isa() {
    g_isa = detect();
    g_forced = false;
}

const char* isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

void matmul(const double* a, const double* b, double* c, size_t m, size_t k, size_t n) {
#if DSATTN_HAVE_AVX2_TU
    if (g_isa == Isa::avx2) {
        detail::matmul_avx2(a, b, c, m, k, n);
        return;
    }
#endif
    detail::matmul_scalar(a, b, c, m, k, n);
}

void sddmm(const double* q, const double* kmat, size_t dk, const uint32_t* cols,
           const uint64_t* rowptr, size_t rows, double scale, double* out) {
#if DSATTN_HAVE_AVX2_TU
    if (g_isa == Isa::avx2) {
        detail::sddmm_avx2(q, kmat, dk, cols, rowptr, rows, scale, out);
        return;
    }
#endif
    detail::sddmm_scalar(q, kmat, dk, cols, rowptr, rows, scale, out);
}

void spmm(const double* vals, const uint32_t* cols, const uint64_t* rowptr, size_t rows,
          const double* v, size_t dv, double* z) {
#if DSATTN_HAVE_AVX2_TU
    if (g_isa == Isa::avx2) {
        detail::spmm_avx2(vals, cols, rowptr, rows, v, dv, z);
        return;
    }
#endif
    detail::spmm_scalar(vals, cols, rowptr, rows, v, dv, z);
}

void quantize(const double* x, double* y, size_t n, double s, double qmax) {
#if DSATTN_HAVE_AVX2_TU
    if (g_isa == Isa::avx2) {
        detail::quantize_avx2(x, y, n, s, qmax);
        return;
    }
#endif
    detail::quantize_scalar(x, y, n, s, qmax);
}

}  // namespace dsattn::kernels
