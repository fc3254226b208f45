#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>
#include <vector>

#include "dsattn/kernels.hpp"
#include "dsattn/rng.hpp"

using namespace dsattn;
namespace dk = dsattn::kernels;

namespace {

std::vector<double> random_vec(size_t n, Rng& rng, double lo = -2.0, double hi = 2.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(lo, hi);
    return v;
}

struct CsrFixture {
    std::vector<uint64_t> rowptr;
    std::vector<uint32_t> cols;
};

CsrFixture random_csr(size_t rows, size_t cols, double density, Rng& rng) {
    CsrFixture c;
    c.rowptr.push_back(0);
    for (size_t i = 0; i < rows; ++i) {
        for (uint32_t j = 0; j < cols; ++j)
            if (rng.uniform01() < density) c.cols.push_back(j);
        c.rowptr.push_back(c.cols.size());
    }
    return c;
}

}  // namespace

TEST_CASE("matmul scalar matches triple-loop oracle") {
    Rng rng(1);
    const size_t m = 5, k = 7, n = 4;
    auto a = random_vec(m * k, rng);
    auto b = random_vec(k * n, rng);
    std::vector<double> c(m * n);
    dk::detail::matmul_scalar(a.data(), b.data(), c.data(), m, k, n);
    for (size_t i = 0; i < m; ++i)
        for (size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (size_t kk = 0; kk < k; ++kk) acc += a[i * k + kk] * b[kk * n + j];
            CHECK(std::abs(c[i * n + j] - acc) <=
                  1e-6 * std::max(1.0, std::abs(acc)));
        }
}

TEST_CASE("avx2 kernels are bit-identical to scalar") {
    if (!dk::avx2_supported()) {
        MESSAGE("avx2 not available; skipping");
        return;
    }
    Rng rng(2);
    SUBCASE("matmul") {
        for (auto [m, k, n] : {std::tuple<size_t, size_t, size_t>{1, 1, 1},
                               {3, 5, 17},
                               {8, 16, 64},
                               {13, 7, 19},
                               {32, 64, 33}}) {
            auto a = random_vec(m * k, rng);
            auto b = random_vec(k * n, rng);
            std::vector<double> cs(m * n), cv(m * n);
            dk::detail::matmul_scalar(a.data(), b.data(), cs.data(), m, k, n);
            dk::detail::matmul_avx2(a.data(), b.data(), cv.data(), m, k, n);
            CHECK(std::memcmp(cs.data(), cv.data(), cs.size() * sizeof(double)) == 0);
        }
    }
    SUBCASE("sddmm") {
        const size_t rows = 16, dk_ = 9;
        auto q = random_vec(rows * dk_, rng);
        auto kmat = random_vec(rows * dk_, rng);
        CsrFixture csr = random_csr(rows, rows, 0.4, rng);
        std::vector<double> os(csr.cols.size()), ov(csr.cols.size());
        dk::detail::sddmm_scalar(q.data(), kmat.data(), dk_, csr.cols.data(),
                                 csr.rowptr.data(), rows, 0.37, os.data());
        dk::detail::sddmm_avx2(q.data(), kmat.data(), dk_, csr.cols.data(), csr.rowptr.data(),
                               rows, 0.37, ov.data());
        CHECK(std::memcmp(os.data(), ov.data(), os.size() * sizeof(double)) == 0);
    }
    SUBCASE("spmm") {
        const size_t rows = 12, dv = 11;
        CsrFixture csr = random_csr(rows, rows, 0.5, rng);
        auto vals = random_vec(csr.cols.size(), rng);
        auto v = random_vec(rows * dv, rng);
        std::vector<double> zs(rows * dv), zv(rows * dv);
        dk::detail::spmm_scalar(vals.data(), csr.cols.data(), csr.rowptr.data(), rows, v.data(),
                                dv, zs.data());
        dk::detail::spmm_avx2(vals.data(), csr.cols.data(), csr.rowptr.data(), rows, v.data(),
                              dv, zv.data());
        CHECK(std::memcmp(zs.data(), zv.data(), zs.size() * sizeof(double)) == 0);
    }
    SUBCASE("quantize") {
        auto x = random_vec(1003, rng, -3.0, 3.0);
        x.push_back(0.5);
        x.push_back(-0.5);
        x.push_back(1.5);
        x.push_back(-2.5);
        std::vector<double> ys(x.size()), yv(x.size());
        dk::detail::quantize_scalar(x.data(), ys.data(), x.size(), 0.25, 7.0);
        dk::detail::quantize_avx2(x.data(), yv.data(), x.size(), 0.25, 7.0);
        CHECK(std::memcmp(ys.data(), yv.data(), ys.size() * sizeof(double)) == 0);
    }
}

TEST_CASE("quantize rounds half away from zero and clamps") {
    std::vector<double> x = {0.5, -0.5, 1.49, -1.49, 100.0, -100.0};
    std::vector<double> y(x.size());
    dk::detail::quantize_scalar(x.data(), y.data(), x.size(), 1.0, 7.0);
    CHECK(y[0] == 1.0);
    CHECK(y[1] == -1.0);
    CHECK(y[2] == 1.0);
    CHECK(y[3] == -1.0);
    CHECK(y[4] == 7.0);
    CHECK(y[5] == -7.0);
}

TEST_CASE("isa forcing switches the dispatch path") {
    dk::force_isa(dk::Isa::scalar);
    CHECK(dk::active_isa() == dk::Isa::scalar);
    dk::reset_isa();
    if (dk::avx2_supported()) CHECK(dk::active_isa() == dk::Isa::avx2);
}
