#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "dsattn/linalg.hpp"

using namespace dsattn;

namespace {

Matrix random_m(size_t r, size_t c, Rng& rng, Precision p = Precision::f64) {
    return random_uniform(r, c, -1.5, 1.5, rng, p);
}

}  // namespace

TEST_CASE("matmul trivia") {
    Matrix a = Matrix::from_rows({{2.0}});
    Matrix b = Matrix::from_rows({{3.0}});
    CHECK(matmul(a, b)(0, 0) == doctest::Approx(6.0));

    Rng rng(3);
    Matrix any = random_m(3, 5, rng);
    CHECK(max_abs_diff(matmul(Matrix::eye(3), any), any) == 0.0);
}

TEST_CASE("matmul matches triple-loop oracle on random 5x7 * 7x4") {
    Rng rng(4);
    Matrix a = random_m(5, 7, rng);
    Matrix b = random_m(7, 4, rng);
    Matrix c = matmul(a, b);
    for (size_t i = 0; i < 5; ++i)
        for (size_t j = 0; j < 4; ++j) {
            double acc = 0.0;
            for (size_t k = 0; k < 7; ++k) acc += a(i, k) * b(k, j);
            CHECK(std::abs(c(i, j) - acc) <= 1e-6 * std::max(1.0, std::abs(acc)));
        }
    CHECK_THROWS_AS(matmul(a, a), ShapeError);
}

TEST_CASE("matmul associativity at high precision") {
    Rng rng(5);
    for (int trial = 0; trial < 5; ++trial) {
        Matrix a = random_m(4, 6, rng);
        Matrix b = random_m(6, 5, rng);
        Matrix c = random_m(5, 3, rng);
        Matrix left = matmul(matmul(a, b), c);
        Matrix right = matmul(a, matmul(b, c));
        CHECK(max_abs_diff(left, right) <=
              1e-5 * std::max(1.0, max_abs(left)));
    }
}

TEST_CASE("row_softmax") {
    SUBCASE("uniform row") {
        Matrix s = Matrix::from_rows({{0.0, 0.0, 0.0}});
        Matrix a = row_softmax(s);
        for (size_t j = 0; j < 3; ++j) CHECK(a(0, j) == doctest::Approx(1.0 / 3));
    }
    SUBCASE("stability under huge scores") {
        Matrix s = Matrix::from_rows({{1e4, 0.0}});
        Matrix a = row_softmax(s);
        CHECK(all_finite(a));
        CHECK(a(0, 0) == doctest::Approx(1.0));
        CHECK(a(0, 1) <= 1e-100);
    }
    SUBCASE("rows sum to one and match naive oracle") {
        Rng rng(6);
        Matrix s = random_m(4, 6, rng);
        Matrix a = row_softmax(s);
        for (size_t i = 0; i < 4; ++i) {
            double sum = 0.0, m = s(i, 0);
            for (size_t j = 0; j < 6; ++j) m = std::max(m, s(i, j));
            std::vector<double> e(6);
            double esum = 0.0;
            for (size_t j = 0; j < 6; ++j) esum += (e[j] = std::exp(s(i, j) - m));
            for (size_t j = 0; j < 6; ++j) {
                CHECK(a(i, j) == doctest::Approx(e[j] / esum).epsilon(1e-9));
                sum += a(i, j);
            }
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
        }
    }
    SUBCASE("shift invariance") {
        Rng rng(7);
        Matrix s = random_m(3, 8, rng);
        Matrix shifted = s;
        for (size_t i = 0; i < s.rows(); ++i)
            for (size_t j = 0; j < s.cols(); ++j) shifted.set(i, j, s(i, j) + 17.5);
        CHECK(max_abs_diff(row_softmax(s), row_softmax(shifted)) <= 1e-6);
    }
}

TEST_CASE("row_topk_indices") {
    SUBCASE("tie broken toward the smaller column") {
        Matrix s = Matrix::from_rows({{0.1, 0.9, 0.5, 0.9}});
        auto idx = row_topk_indices(s, 2);
        CHECK(idx[0] == std::vector<uint32_t>{1, 3});
    }
    SUBCASE("k equal to cols returns everything") {
        Matrix s = Matrix::from_rows({{3.0, 1.0, 2.0}});
        auto idx = row_topk_indices(s, 3);
        CHECK(idx[0] == std::vector<uint32_t>{0, 1, 2});
    }
    SUBCASE("matches full-sort oracle on random 8x16") {
        Rng rng(8);
        Matrix s = random_m(8, 16, rng);
        auto idx = row_topk_indices(s, 4);
        for (size_t i = 0; i < 8; ++i) {
            std::vector<uint32_t> order(16);
            for (uint32_t j = 0; j < 16; ++j) order[j] = j;
            std::stable_sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) {
                return s(i, a) > s(i, b);
            });
            std::vector<uint32_t> expect(order.begin(), order.begin() + 4);
            std::sort(expect.begin(), expect.end());
            CHECK(idx[i] == expect);
        }
    }
    SUBCASE("duplicated inputs give identical outputs") {
        Rng rng(9);
        Matrix s = random_m(6, 10, rng);
        CHECK(row_topk_indices(s, 3) == row_topk_indices(s, 3));
    }
    Matrix s = Matrix::from_rows({{1.0, 2.0}});
    CHECK_THROWS_AS(row_topk_indices(s, 0), ParamError);
    CHECK_THROWS_AS(row_topk_indices(s, 3), ParamError);
}

TEST_CASE("f32 precision rounds through float") {
    Rng rng(10);
    Matrix a = random_m(4, 4, rng, Precision::f32);
    for (size_t i = 0; i < a.size(); ++i)
        CHECK(a.data()[i] == static_cast<double>(static_cast<float>(a.data()[i])));
    Matrix b = random_m(4, 4, rng, Precision::f32);
    Matrix c = matmul(a, b);
    CHECK(c.precision() == Precision::f32);
    Matrix d = matmul(a, random_m(4, 4, rng, Precision::f64));
    CHECK(d.precision() == Precision::f64);
}

TEST_CASE("rng determinism") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng c(43);
    CHECK(c.next_u64() != Rng(42).next_u64());
}
