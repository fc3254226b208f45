#include "dsattn/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dsattn/kernels.hpp"

namespace dsattn {

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw ShapeError("matmul: inner dimensions differ");
    Matrix c(a.rows(), b.cols(), combine(a.precision(), b.precision()));
    kernels::matmul(a.data(), b.data(), c.raw(), a.rows(), a.cols(), b.cols());
    c.round_to_precision();
    return c;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows(), a.precision());
    for (size_t i = 0; i < a.rows(); ++i)
        for (size_t j = 0; j < a.cols(); ++j) t.raw()[j * a.rows() + i] = a(i, j);
    return t;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) { return matmul(a, transpose(b)); }
Matrix matmul_tn(const Matrix& a, const Matrix& b) { return matmul(transpose(a), b); }

static Matrix elementwise(const Matrix& a, const Matrix& b, double sign, bool mul) {
    if (!a.same_shape(b)) throw ShapeError("elementwise: shape mismatch");
    Matrix c(a.rows(), a.cols(), combine(a.precision(), b.precision()));
    const double* pa = a.data();
    const double* pb = b.data();
    for (size_t i = 0; i < a.size(); ++i)
        c.raw()[i] = mul ? pa[i] * pb[i] : pa[i] + sign * pb[i];
    c.round_to_precision();
    return c;
}

Matrix add(const Matrix& a, const Matrix& b) { return elementwise(a, b, 1.0, false); }
Matrix sub(const Matrix& a, const Matrix& b) { return elementwise(a, b, -1.0, false); }
Matrix hadamard(const Matrix& a, const Matrix& b) { return elementwise(a, b, 0.0, true); }

Matrix scale(const Matrix& a, double s) {
    Matrix c(a.rows(), a.cols(), a.precision());
    for (size_t i = 0; i < a.size(); ++i) c.raw()[i] = a.data()[i] * s;
    c.round_to_precision();
    return c;
}

Matrix row_softmax(const Matrix& s) {
    Matrix out(s.rows(), s.cols(), s.precision());
    for (size_t i = 0; i < s.rows(); ++i) {
        const double* row = s.data() + i * s.cols();
        double m = row[0];
        for (size_t j = 1; j < s.cols(); ++j) m = std::max(m, row[j]);
        double sum = 0.0;
        double* orow = out.raw() + i * s.cols();
        for (size_t j = 0; j < s.cols(); ++j) {
            orow[j] = std::exp(row[j] - m);
            sum += orow[j];
        }
        for (size_t j = 0; j < s.cols(); ++j) orow[j] /= sum;
    }
    out.round_to_precision();
    return out;
}

std::vector<std::vector<uint32_t>> row_topk_indices(const Matrix& s, size_t k_keep) {
    if (k_keep < 1 || k_keep > s.cols())
        throw ParamError("row_topk_indices: k_keep out of range");
    std::vector<std::vector<uint32_t>> out(s.rows());
    std::vector<uint32_t> idx(s.cols());
    for (size_t i = 0; i < s.rows(); ++i) {
        const double* row = s.data() + i * s.cols();
        std::iota(idx.begin(), idx.end(), 0u);
        std::sort(idx.begin(), idx.end(), [row](uint32_t a, uint32_t b) {
            if (row[a] != row[b]) return row[a] > row[b];
            return a < b;
        });
        out[i].assign(idx.begin(), idx.begin() + k_keep);
        std::sort(out[i].begin(), out[i].end());
    }
    return out;
}

double frobenius_norm(const Matrix& a) {
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) acc += a.data()[i] * a.data()[i];
    return std::sqrt(acc);
}

double max_abs(const Matrix& a) {
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i]));
    return m;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw ShapeError("max_abs_diff: shape mismatch");
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

bool all_finite(const Matrix& a) {
    for (size_t i = 0; i < a.size(); ++i)
        if (!std::isfinite(a.data()[i])) return false;
    return true;
}

Matrix random_normal(size_t rows, size_t cols, double mean, double stddev, Rng& rng,
                     Precision prec) {
    Matrix m(rows, cols, prec);
    for (size_t i = 0; i < m.size(); ++i) m.raw()[i] = rng.normal(mean, stddev);
    m.round_to_precision();
    return m;
}

Matrix random_uniform(size_t rows, size_t cols, double lo, double hi, Rng& rng, Precision prec) {
    Matrix m(rows, cols, prec);
    for (size_t i = 0; i < m.size(); ++i) m.raw()[i] = rng.uniform(lo, hi);
    m.round_to_precision();
    return m;
}

}  // namespace dsattn
