#pragma once

#include <cstdint>
#include <vector>

#include "dsattn/matrix.hpp"
#include "dsattn/rng.hpp"

namespace dsattn {

// c[i][j] = sum_k a[i][k] * b[k][j]; double FMA accumulation, rounded to the
// result precision.
Matrix matmul(const Matrix& a, const Matrix& b);
// a * transpose(b) and transpose(a) * b.
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);

// Row-wise softmax with mandatory max subtraction.
Matrix row_softmax(const Matrix& s);

// Per row, the k_keep column indices of largest value; ties broken by the
// smaller column index; returned ascending.
std::vector<std::vector<uint32_t>> row_topk_indices(const Matrix& s, size_t k_keep);

double frobenius_norm(const Matrix& a);
double max_abs(const Matrix& a);
double max_abs_diff(const Matrix& a, const Matrix& b);
bool all_finite(const Matrix& a);

Matrix random_normal(size_t rows, size_t cols, double mean, double stddev, Rng& rng,
                     Precision prec = Precision::f64);
Matrix random_uniform(size_t rows, size_t cols, double lo, double hi, Rng& rng,
                      Precision prec = Precision::f64);

}  // namespace dsattn
