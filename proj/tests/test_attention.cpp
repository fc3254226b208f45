#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numeric>

#include "dsattn/attention.hpp"
#include "dsattn/linalg.hpp"
#include "dsattn/maskgen.hpp"

using namespace dsattn;

namespace {

// from-scratch oracle: per head softmax(QK^T/sqrt(dk)) V with plain loops
Matrix oracle_attention(const Matrix& x, const AttentionParams& p) {
    std::vector<Matrix> zs;
    for (size_t h = 0; h < p.heads; ++h) {
        Matrix q = matmul(x, p.wq[h]);
        Matrix k = matmul(x, p.wk[h]);
        Matrix v = matmul(x, p.wv[h]);
        const size_t l = x.rows();
        Matrix s(l, l);
        for (size_t i = 0; i < l; ++i)
            for (size_t j = 0; j < l; ++j) {
                double acc = 0.0;
                for (size_t c = 0; c < q.cols(); ++c) acc += q(i, c) * k(j, c);
                s.set(i, j, p.scale ? acc / std::sqrt(static_cast<double>(q.cols())) : acc);
            }
        Matrix a = row_softmax(s);
        zs.push_back(matmul(a, v));
    }
    Matrix out(x.rows(), zs.size() * zs[0].cols());
    size_t off = 0;
    for (const auto& z : zs) {
        for (size_t i = 0; i < z.rows(); ++i)
            for (size_t j = 0; j < z.cols(); ++j) out.set(i, off + j, z(i, j));
        off += z.cols();
    }
    return out;
}

}  // namespace

TEST_CASE("project_qkv") {
    Rng rng(1);
    SUBCASE("identity input returns the weights verbatim") {
        AttentionParams p = random_attention_params(4, 3, 2, 1, rng);
        Qkv qkv = project_qkv(Matrix::eye(4), p);
        CHECK(max_abs_diff(qkv.q[0], p.wq[0]) == 0.0);
        CHECK(max_abs_diff(qkv.k[0], p.wk[0]) == 0.0);
        CHECK(max_abs_diff(qkv.v[0], p.wv[0]) == 0.0);
    }
    SUBCASE("zero input gives zero projections") {
        AttentionParams p = random_attention_params(4, 3, 3, 2, rng);
        Qkv qkv = project_qkv(Matrix::zeros(5, 4), p);
        CHECK(max_abs(qkv.q[0]) == 0.0);
        CHECK(max_abs(qkv.v[1]) == 0.0);
    }
    SUBCASE("matches the matmul oracle chain") {
        AttentionParams p = random_attention_params(8, 4, 4, 1, rng);
        Matrix x = random_uniform(6, 8, -1, 1, rng);
        Qkv qkv = project_qkv(x, p);
        for (size_t i = 0; i < 6; ++i)
            for (size_t j = 0; j < 4; ++j) {
                double acc = 0.0;
                for (size_t k = 0; k < 8; ++k) acc += x(i, k) * p.wq[0](k, j);
                CHECK(qkv.q[0](i, j) == doctest::Approx(acc).epsilon(1e-9));
            }
    }
    SUBCASE("shape errors") {
        AttentionParams p = random_attention_params(4, 3, 3, 1, rng);
        CHECK_THROWS_AS(project_qkv(Matrix::zeros(5, 3), p), ShapeError);
    }
}

TEST_CASE("dense_attention") {
    Rng rng(2);
    SUBCASE("single token: A = [1], Z = V") {
        AttentionParams p = random_attention_params(4, 2, 3, 1, rng);
        Matrix x = random_uniform(1, 4, -1, 1, rng);
        Matrix z = dense_attention(x, p);
        Matrix v = matmul(x, p.wv[0]);
        CHECK(max_abs_diff(z, v) <= 1e-12);
    }
    SUBCASE("identical input rows give identical output rows") {
        AttentionParams p = random_attention_params(4, 4, 4, 2, rng);
        Matrix x(5, 4);
        for (size_t i = 0; i < 5; ++i)
            for (size_t j = 0; j < 4; ++j) x.set(i, j, 0.3 * static_cast<double>(j) - 0.5);
        Matrix z = dense_attention(x, p);
        for (size_t i = 1; i < 5; ++i)
            for (size_t j = 0; j < z.cols(); ++j)
                CHECK(z(i, j) == doctest::Approx(z(0, j)).epsilon(1e-12));
    }
    SUBCASE("matches from-scratch oracle, two heads") {
        AttentionParams p = random_attention_params(8, 4, 4, 2, rng);
        Matrix x = random_uniform(8, 8, -1, 1, rng);
        CHECK(max_abs_diff(dense_attention(x, p), oracle_attention(x, p)) <= 1e-5);
    }
}

TEST_CASE("masked_attention") {
    Rng rng(3);
    AttentionParams p = random_attention_params(6, 3, 3, 1, rng);
    Matrix x = random_uniform(8, 6, -1, 1, rng);
    SUBCASE("full mask equals dense attention exactly") {
        Matrix a = masked_attention(x, p, SparseMask::full(8));
        Matrix b = dense_attention(x, p);
        CHECK(max_abs_diff(a, b) == 0.0);
    }
    SUBCASE("diagonal mask returns V") {
        Matrix z = masked_attention(x, p, SparseMask::diagonal(8));
        Matrix v = matmul(x, p.wv[0]);
        CHECK(max_abs_diff(z, v) <= 1e-6);
    }
    SUBCASE("masked positions carry < 1e-4 weight at 50% density") {
        Rng mask_rng(4);
        SparseMask m = random_mask(8, 4, mask_rng);
        Qkv qkv = project_qkv(x, p);
        Matrix s = attention_scores(qkv.q[0], qkv.k[0], p.scale);
        Matrix a = row_softmax(apply_additive_mask(s, m));
        for (size_t i = 0; i < 8; ++i) {
            double kept_sum = 0.0;
            for (uint32_t j = 0; j < 8; ++j) {
                if (m.contains(i, j))
                    kept_sum += a(i, j);
                else
                    CHECK(a(i, j) < 1e-4);
            }
            CHECK(kept_sum == doctest::Approx(1.0).epsilon(1e-6));
        }
    }
    SUBCASE("mask shape mismatch throws") {
        CHECK_THROWS_AS(masked_attention(x, p, SparseMask::full(5)), ShapeError);
    }
    SUBCASE("masking stays monotone for raw scores up to +-100") {
        Matrix s(4, 4);
        Rng rr(9);
        for (size_t i = 0; i < 4; ++i)
            for (size_t j = 0; j < 4; ++j) s.set(i, j, rr.uniform(-100.0, 100.0));
        SparseMask m = random_mask(4, 2, rr);
        Matrix a = row_softmax(apply_additive_mask(s, m));
        for (size_t i = 0; i < 4; ++i)
            for (uint32_t j = 0; j < 4; ++j)
                if (!m.contains(i, j)) CHECK(a(i, j) < 1e-4);
    }
}

TEST_CASE("attention weight rows sum to one, dense and masked") {
    Rng rng(5);
    AttentionParams p = random_attention_params(6, 3, 3, 1, rng);
    Matrix x = random_uniform(7, 6, -2, 2, rng);
    Qkv qkv = project_qkv(x, p);
    Matrix s = attention_scores(qkv.q[0], qkv.k[0], true);
    for (const Matrix& a :
         {row_softmax(s), row_softmax(apply_additive_mask(s, random_mask(7, 3, rng)))}) {
        for (size_t i = 0; i < a.rows(); ++i) {
            double sum = 0.0;
            for (size_t j = 0; j < a.cols(); ++j) sum += a(i, j);
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
        }
    }
}

TEST_CASE("attention is equivariant to sequence permutation") {
    Rng rng(6);
    AttentionParams p = random_attention_params(5, 3, 4, 2, rng);
    Matrix x = random_uniform(9, 5, -1, 1, rng);
    std::vector<size_t> perm(9);
    std::iota(perm.begin(), perm.end(), 0u);
    for (size_t i = 8; i > 0; --i) std::swap(perm[i], perm[rng.uniform_int(i + 1)]);
    Matrix xp(9, 5);
    for (size_t i = 0; i < 9; ++i)
        for (size_t j = 0; j < 5; ++j) xp.set(i, j, x(perm[i], j));
    Matrix z = dense_attention(x, p);
    Matrix zp = dense_attention(xp, p);
    for (size_t i = 0; i < 9; ++i)
        for (size_t j = 0; j < z.cols(); ++j)
            CHECK(zp(i, j) == doctest::Approx(z(perm[i], j)).epsilon(1e-6));
}
