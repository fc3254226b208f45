#pragma once

#include <cstdint>
#include <initializer_list>
#include <vector>

#include "dsattn/errors.hpp"

namespace dsattn {

// Element precision of a Matrix. Storage and arithmetic are always double;
// f32 matrices round every element through float after each public
// operation, giving 32-bit-equivalent results with 64-bit accumulation.
// f64 is used for gradient checking.
enum class Precision : uint8_t { f32 = 0, f64 = 1 };

inline double round_to(double x, Precision p) {
    return p == Precision::f32 ? static_cast<double>(static_cast<float>(x)) : x;
}

// Dense row-major 2-D array. The universal tensor for X/Q/K/V/S/A/Z.
class Matrix {
  public:
    Matrix() = default;
    Matrix(size_t rows, size_t cols, Precision prec = Precision::f64)
        : rows_(rows), cols_(cols), prec_(prec), data_(rows * cols, 0.0) {
        if (rows == 0 || cols == 0) throw ShapeError("Matrix: dimensions must be positive");
    }

    static Matrix zeros(size_t rows, size_t cols, Precision prec = Precision::f64) {
        return Matrix(rows, cols, prec);
    }
    static Matrix filled(size_t rows, size_t cols, double v, Precision prec = Precision::f64) {
        Matrix m(rows, cols, prec);
        for (auto& x : m.data_) x = round_to(v, prec);
        return m;
    }
    static Matrix eye(size_t n, Precision prec = Precision::f64) {
        Matrix m(n, n, prec);
        for (size_t i = 0; i < n; ++i) m.data_[i * n + i] = 1.0;
        return m;
    }
    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows,
                            Precision prec = Precision::f64) {
        const size_t r = rows.size();
        const size_t c = r ? rows.begin()->size() : 0;
        Matrix m(r, c, prec);
        size_t i = 0;
        for (const auto& row : rows) {
            if (row.size() != c) throw ShapeError("from_rows: ragged rows");
            size_t j = 0;
            for (double v : row) m.data_[i * c + j++] = round_to(v, prec);
            ++i;
        }
        return m;
    }

    size_t rows() const { return rows_; }
    size_t cols() const { return cols_; }
    size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }
    Precision precision() const { return prec_; }

    double operator()(size_t i, size_t j) const { return data_[i * cols_ + j]; }
    void set(size_t i, size_t j, double v) { data_[i * cols_ + j] = round_to(v, prec_); }

    const double* data() const { return data_.data(); }
    // Raw write access; call round_to_precision() afterwards when prec is f32.
    double* raw() { return data_.data(); }

    void round_to_precision() {
        if (prec_ == Precision::f32)
            for (auto& x : data_) x = static_cast<double>(static_cast<float>(x));
    }
    Matrix as_precision(Precision p) const {
        Matrix m = *this;
        m.prec_ = p;
        m.round_to_precision();
        return m;
    }

    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  private:
    size_t rows_ = 0, cols_ = 0;
    Precision prec_ = Precision::f64;
    std::vector<double> data_;
};

// Result precision of a binary op: f32 only when both operands are f32.
inline Precision combine(Precision a, Precision b) {
    return (a == Precision::f32 && b == Precision::f32) ? Precision::f32 : Precision::f64;
}

}  // namespace dsattn
