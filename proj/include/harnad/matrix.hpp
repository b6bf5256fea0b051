#pragma once

#include "harnad/scalar.hpp"

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <vector>

namespace harnad {

// Dense row-major matrix over a field F (Scalar or cplx).
template <class F>
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, F(0)) {}
    Matrix(std::initializer_list<std::initializer_list<F>> rows) {
        rows_ = rows.size();
        cols_ = rows_ ? rows.begin()->size() : 0;
        data_.reserve(rows_ * cols_);
        for (const auto& r : rows) {
            if (r.size() != cols_) throw DimensionMismatch("ragged matrix literal");
            for (const auto& x : r) data_.push_back(x);
        }
    }

    static Matrix zero(std::size_t r, std::size_t c) { return Matrix(r, c); }
    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = F(1);
        return m;
    }
    static Matrix scalar(std::size_t n, const F& s) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = s;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool is_square() const { return rows_ == cols_; }
    bool empty() const { return rows_ == 0 || cols_ == 0; }

    F& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const F& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    const std::vector<F>& data() const { return data_; }
    std::vector<F>& data() { return data_; }

    Matrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const {
        if (r0 + nr > rows_ || c0 + nc > cols_) throw DimensionMismatch("block out of range");
        Matrix b(nr, nc);
        for (std::size_t i = 0; i < nr; ++i)
            for (std::size_t j = 0; j < nc; ++j) b(i, j) = (*this)(r0 + i, c0 + j);
        return b;
    }
    void set_block(std::size_t r0, std::size_t c0, const Matrix& b) {
        if (r0 + b.rows_ > rows_ || c0 + b.cols_ > cols_) throw DimensionMismatch("set_block out of range");
        for (std::size_t i = 0; i < b.rows_; ++i)
            for (std::size_t j = 0; j < b.cols_; ++j) (*this)(r0 + i, c0 + j) = b(i, j);
    }
    void add_block(std::size_t r0, std::size_t c0, const Matrix& b) {
        for (std::size_t i = 0; i < b.rows_; ++i)
            for (std::size_t j = 0; j < b.cols_; ++j) (*this)(r0 + i, c0 + j) += b(i, j);
    }

    Matrix column(std::size_t j) const { return block(0, j, rows_, 1); }
    Matrix row(std::size_t i) const { return block(i, 0, 1, cols_); }

    Matrix transpose() const {
        Matrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }
    Matrix adjoint() const {
        Matrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = field_traits<F>::conj((*this)(i, j));
        return t;
    }

    F trace() const {
        F s(0);
        for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) s += (*this)(i, i);
        return s;
    }

    bool is_zero(double tol = 0.0) const {
        for (const auto& x : data_)
            if (!field_traits<F>::is_zero(x, tol)) return false;
        return true;
    }

    double max_abs() const {
        double m = 0.0;
        for (const auto& x : data_) m = std::max(m, field_traits<F>::magnitude(x));
        return m;
    }

    Matrix& operator+=(const Matrix& o) {
        check_same(o);
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
        return *this;
    }
    Matrix& operator-=(const Matrix& o) {
        check_same(o);
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
        return *this;
    }
    Matrix& operator*=(const F& s) {
        for (auto& x : data_) x *= s;
        return *this;
    }

    friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
    friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
    friend Matrix operator-(Matrix a) {
        for (auto& x : a.data_) x = -x;
        return a;
    }
    friend Matrix operator*(Matrix a, const F& s) { return a *= s; }
    friend Matrix operator*(const F& s, Matrix a) { return a *= s; }
    friend Matrix operator*(const Matrix& a, const Matrix& b) {
        if (a.cols_ != b.rows_) throw DimensionMismatch("matrix product shape");
        Matrix c(a.rows_, b.cols_);
        for (std::size_t i = 0; i < a.rows_; ++i)
            for (std::size_t k = 0; k < a.cols_; ++k) {
                const F& aik = a(i, k);
                if (field_traits<F>::is_zero(aik, 0.0)) continue;
                for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
            }
        return c;
    }

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }
    friend bool operator!=(const Matrix& a, const Matrix& b) { return !(a == b); }

private:
    void check_same(const Matrix& o) const {
        if (rows_ != o.rows_ || cols_ != o.cols_) throw DimensionMismatch("matrix sum shape");
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<F> data_;
};

using Mat = Matrix<Scalar>;
using CMat = Matrix<cplx>;

template <class F>
Matrix<F> commutator(const Matrix<F>& a, const Matrix<F>& b) {
    return a * b - b * a;
}

template <class F>
Matrix<F> hstack(const std::vector<Matrix<F>>& parts, std::size_t rows) {
    std::size_t cols = 0;
    for (const auto& p : parts) cols += p.cols();
    Matrix<F> m(rows, cols);
    std::size_t c = 0;
    for (const auto& p : parts) {
        if (p.cols() == 0) continue;
        if (p.rows() != rows) throw DimensionMismatch("hstack row count");
        m.set_block(0, c, p);
        c += p.cols();
    }
    return m;
}

template <class F>
Matrix<F> vstack(const std::vector<Matrix<F>>& parts, std::size_t cols) {
    std::size_t rows = 0;
    for (const auto& p : parts) rows += p.rows();
    Matrix<F> m(rows, cols);
    std::size_t r = 0;
    for (const auto& p : parts) {
        if (p.rows() == 0) continue;
        if (p.cols() != cols) throw DimensionMismatch("vstack column count");
        m.set_block(r, 0, p);
        r += p.rows();
    }
    return m;
}

template <class F>
Matrix<F> block_diag(const std::vector<Matrix<F>>& parts) {
    std::size_t r = 0, c = 0;
    for (const auto& p : parts) { r += p.rows(); c += p.cols(); }
    Matrix<F> m(r, c);
    std::size_t i = 0, j = 0;
    for (const auto& p : parts) {
        m.set_block(i, j, p);
        i += p.rows();
        j += p.cols();
    }
    return m;
}

template <class F>
Matrix<F> power(const Matrix<F>& a, std::size_t e) {
    Matrix<F> r = Matrix<F>::identity(a.rows());
    for (std::size_t k = 0; k < e; ++k) r = r * a;
    return r;
}

// Column-major vectorisation of a matrix into a column.
template <class F>
Matrix<F> vec(const Matrix<F>& a) {
    Matrix<F> v(a.rows() * a.cols(), 1);
    for (std::size_t j = 0; j < a.cols(); ++j)
        for (std::size_t i = 0; i < a.rows(); ++i) v(j * a.rows() + i, 0) = a(i, j);
    return v;
}

template <class F>
Matrix<F> unvec(const Matrix<F>& v, std::size_t rows, std::size_t cols, std::size_t offset = 0) {
    Matrix<F> a(rows, cols);
    for (std::size_t j = 0; j < cols; ++j)
        for (std::size_t i = 0; i < rows; ++i) a(i, j) = v(offset + j * rows + i, 0);
    return a;
}

inline CMat to_complex(const Mat& m) {
    CMat c(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) c(i, j) = m(i, j).to_complex();
    return c;
}

template <class F>
Matrix<F> convert(const Mat& m) {
    if constexpr (std::is_same_v<F, Scalar>) {
        return m;
    } else {
        return to_complex(m);
    }
}

template <class F>
F convert_scalar(const Scalar& s) {
    return field_traits<F>::from_scalar(s);
}

// Frobenius norm, used for float residuals.
inline double frobenius(const CMat& m) {
    double s = 0.0;
    for (const auto& x : m.data()) s += std::norm(x);
    return std::sqrt(s);
}

template <class F>
std::ostream& operator<<(std::ostream& os, const Matrix<F>& m) {
    os << "[";
    for (std::size_t i = 0; i < m.rows(); ++i) {
        os << (i ? "; " : "");
        for (std::size_t j = 0; j < m.cols(); ++j) os << (j ? ", " : "") << m(i, j);
    }
    return os << "]";
}

}  // namespace harnad
