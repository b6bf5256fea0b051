#pragma once

#include "harnad/matrix.hpp"

#include <optional>
#include <type_traits>
#include <utility>
#include <vector>

namespace harnad {

template <class F>
double default_tol(double scale) {
    if constexpr (field_traits<F>::exact) {
        return 0.0;
    } else {
        return 1e-10 * std::max(1.0, scale);
    }
}

template <class F>
struct Echelon {
    Matrix<F> reduced;
    std::vector<std::size_t> pivots;
    std::size_t rank() const { return pivots.size(); }
};

// Reduced row echelon form. Exact fields take the first nonzero pivot, floats the largest.
template <class F>
Echelon<F> rref(Matrix<F> m, double tol = -1.0) {
    using T = field_traits<F>;
    if (tol < 0) tol = default_tol<F>(m.max_abs());
    std::vector<std::size_t> pivots;
    std::size_t row = 0;
    for (std::size_t col = 0; col < m.cols() && row < m.rows(); ++col) {
        std::size_t best = m.rows();
        if constexpr (T::exact) {
            for (std::size_t i = row; i < m.rows(); ++i)
                if (!m(i, col).is_zero()) { best = i; break; }
        } else {
            double bm = tol;
            for (std::size_t i = row; i < m.rows(); ++i) {
                double a = std::abs(m(i, col));
                if (a > bm) { bm = a; best = i; }
            }
        }
        if (best == m.rows()) {
            if constexpr (!T::exact)
                for (std::size_t i = row; i < m.rows(); ++i) m(i, col) = F(0);
            continue;
        }
        if (best != row)
            for (std::size_t j = 0; j < m.cols(); ++j) std::swap(m(row, j), m(best, j));
        F inv = F(1) / m(row, col);
        for (std::size_t j = col; j < m.cols(); ++j) m(row, j) *= inv;
        for (std::size_t i = 0; i < m.rows(); ++i) {
            if (i == row) continue;
            F f = m(i, col);
            if (T::is_zero(f, 0.0)) continue;
            for (std::size_t j = col; j < m.cols(); ++j) m(i, j) -= f * m(row, j);
        }
        pivots.push_back(col);
        ++row;
    }
    return {std::move(m), std::move(pivots)};
}

template <class F>
std::size_t rank(const Matrix<F>& m, double tol = -1.0) {
    return rref(m, tol).rank();
}

// Basis of the right kernel, one column per free variable.
template <class F>
std::vector<Matrix<F>> kernel_basis(const Matrix<F>& m, double tol = -1.0) {
    auto e = rref(m, tol);
    std::vector<bool> is_pivot(m.cols(), false);
    for (auto p : e.pivots) is_pivot[p] = true;
    std::vector<Matrix<F>> basis;
    for (std::size_t f = 0; f < m.cols(); ++f) {
        if (is_pivot[f]) continue;
        Matrix<F> v(m.cols(), 1);
        v(f, 0) = F(1);
        for (std::size_t r = 0; r < e.pivots.size(); ++r) v(e.pivots[r], 0) = -e.reduced(r, f);
        basis.push_back(std::move(v));
    }
    return basis;
}

template <class F>
Matrix<F> kernel_matrix(const Matrix<F>& m, double tol = -1.0) {
    return hstack(kernel_basis(m, tol), m.cols());
}

// Rank factorisation m = C R with C the pivot columns of m and R the nonzero rows of rref(m).
template <class F>
std::pair<Matrix<F>, Matrix<F>> cr_factorize(const Matrix<F>& m, double tol = -1.0) {
    auto e = rref(m, tol);
    std::size_t r = e.rank();
    Matrix<F> c(m.rows(), r);
    for (std::size_t k = 0; k < r; ++k) c.set_block(0, k, m.column(e.pivots[k]));
    return {std::move(c), e.reduced.block(0, 0, r, m.cols())};
}

// Some solution X of A X = B, or nullopt if inconsistent.
template <class F>
std::optional<Matrix<F>> solve(const Matrix<F>& a, const Matrix<F>& b, double tol = -1.0) {
    if (a.rows() != b.rows()) throw DimensionMismatch("solve shape");
    Matrix<F> aug = hstack<F>({a, b}, a.rows());
    if (tol < 0) tol = default_tol<F>(aug.max_abs());
    auto e = rref(aug, tol);
    Matrix<F> x(a.cols(), b.cols());
    for (std::size_t r = 0; r < e.pivots.size(); ++r) {
        if (e.pivots[r] >= a.cols()) return std::nullopt;
        for (std::size_t j = 0; j < b.cols(); ++j) x(e.pivots[r], j) = e.reduced(r, a.cols() + j);
    }
    if constexpr (!field_traits<F>::exact) {
        Matrix<F> res = a * x - b;
        if (res.max_abs() > 1e-8 * std::max(1.0, aug.max_abs())) return std::nullopt;
    }
    return x;
}

template <class F>
bool is_invertible(const Matrix<F>& m, double tol = -1.0) {
    return m.is_square() && rank(m, tol) == m.rows();
}

template <class F>
Matrix<F> inverse(const Matrix<F>& m) {
    if (!m.is_square()) throw DimensionMismatch("inverse of non-square matrix");
    std::size_t n = m.rows();
    auto e = rref(hstack<F>({m, Matrix<F>::identity(n)}, n));
    if (e.rank() < n || (n > 0 && e.pivots[n - 1] != n - 1)) throw SingularMatrix("matrix is not invertible");
    return e.reduced.block(0, n, n, n);
}

template <class F>
F det(Matrix<F> m) {
    if (!m.is_square()) throw DimensionMismatch("det of non-square matrix");
    std::size_t n = m.rows();
    F d(1);
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t best = n;
        if constexpr (field_traits<F>::exact) {
            for (std::size_t i = c; i < n; ++i)
                if (!m(i, c).is_zero()) { best = i; break; }
        } else {
            double bm = 0.0;
            for (std::size_t i = c; i < n; ++i)
                if (std::abs(m(i, c)) > bm) { bm = std::abs(m(i, c)); best = i; }
        }
        if (best == n) return F(0);
        if (best != c) {
            for (std::size_t j = 0; j < n; ++j) std::swap(m(c, j), m(best, j));
            d = -d;
        }
        d *= m(c, c);
        F inv = F(1) / m(c, c);
        for (std::size_t i = c + 1; i < n; ++i) {
            F f = m(i, c) * inv;
            if (field_traits<F>::is_zero(f, 0.0)) continue;
            for (std::size_t j = c; j < n; ++j) m(i, j) -= f * m(c, j);
        }
    }
    return d;
}

// Incrementally grown basis of a subspace of F^dim, used for span membership tests.
template <class F>
class SpanBuilder {
public:
    explicit SpanBuilder(std::size_t dim) : dim_(dim) {}

    // Adds v if independent of the current span; returns whether it was added.
    bool add(const Matrix<F>& v) {
        if (v.rows() != dim_ || v.cols() != 1) throw DimensionMismatch("span vector shape");
        std::vector<F> w(v.data());
        double tol = 0.0;
        if constexpr (!field_traits<F>::exact) tol = 1e-9 * std::max(1.0, v.max_abs());
        for (std::size_t k = 0; k < reduced_.size(); ++k) {
            F f = w[pivots_[k]];
            if (field_traits<F>::is_zero(f, 0.0)) continue;
            for (std::size_t j = 0; j < dim_; ++j) w[j] -= f * reduced_[k][j];
        }
        std::size_t piv = dim_;
        if constexpr (field_traits<F>::exact) {
            for (std::size_t j = 0; j < dim_; ++j)
                if (!w[j].is_zero()) { piv = j; break; }
        } else {
            double bm = tol;
            for (std::size_t j = 0; j < dim_; ++j)
                if (std::abs(w[j]) > bm) { bm = std::abs(w[j]); piv = j; }
        }
        if (piv == dim_) return false;
        F inv = F(1) / w[piv];
        for (auto& x : w) x *= inv;
        reduced_.push_back(std::move(w));
        pivots_.push_back(piv);
        originals_.push_back(v);
        return true;
    }

    std::size_t dim() const { return reduced_.size(); }
    std::size_t ambient() const { return dim_; }
    const std::vector<Matrix<F>>& basis() const { return originals_; }
    // k-th echelon vector: same span as the first k+1 originals, pivot entry 1.
    Matrix<F> reduced(std::size_t k) const {
        Matrix<F> v(dim_, 1);
        for (std::size_t j = 0; j < dim_; ++j) v(j, 0) = reduced_[k][j];
        return v;
    }

private:
    std::size_t dim_;
    std::vector<std::vector<F>> reduced_;
    std::vector<std::size_t> pivots_;
    std::vector<Matrix<F>> originals_;
};

// Smallest t-invariant subspace containing the seed vectors, as a list of basis columns.
template <class F>
std::vector<Matrix<F>> invariant_closure(const Matrix<F>& t, const std::vector<Matrix<F>>& seed) {
    if (!t.is_square()) throw DimensionMismatch("invariant_closure needs a square operator");
    SpanBuilder<F> span(t.rows());
    std::vector<Matrix<F>> queue;
    for (const auto& s : seed)
        if (span.add(s)) queue.push_back(s);
    for (std::size_t k = 0; k < queue.size(); ++k) {
        Matrix<F> next = t * queue[k];
        if (span.add(next)) queue.push_back(std::move(next));
    }
    return span.basis();
}

template <class F>
std::vector<Matrix<F>> columns_of(const Matrix<F>& m) {
    std::vector<Matrix<F>> cols;
    for (std::size_t j = 0; j < m.cols(); ++j) cols.push_back(m.column(j));
    return cols;
}

// Dimension of the unital associative algebra generated by the given n x n matrices.
template <class F>
std::size_t algebra_closure(const std::vector<Matrix<F>>& generators, std::size_t n) {
    for (const auto& g : generators)
        if (g.rows() != n || g.cols() != n) throw DimensionMismatch("algebra generator shape");
    if (n == 0) return 0;
    // Closing the span under left multiplication by the generators suffices; multiplying the
    // echelon vectors instead of the raw words keeps the entries small.
    SpanBuilder<F> span(n * n);
    span.add(vec(Matrix<F>::identity(n)));
    for (std::size_t k = 0; k < span.dim() && span.dim() < n * n; ++k) {
        Matrix<F> b = unvec(span.reduced(k), n, n);
        for (const auto& g : generators) {
            span.add(vec(Matrix<F>(g * b)));
            if (span.dim() == n * n) break;
        }
    }
    return span.dim();
}

// Coefficients c_0..c_n (ascending) of det(x - a), via Faddeev-LeVerrier.
template <class F>
std::vector<F> charpoly_coeffs(const Matrix<F>& a) {
    if (!a.is_square()) throw DimensionMismatch("charpoly of non-square matrix");
    std::size_t n = a.rows();
    std::vector<F> c(n + 1, F(0));
    c[n] = F(1);
    Matrix<F> m(n, n);
    for (std::size_t k = 1; k <= n; ++k) {
        m = a * m;
        for (std::size_t i = 0; i < n; ++i) m(i, i) += c[n - k + 1];
        F tr = (a * m).trace();
        c[n - k] = -tr / field_traits<F>::from_int(static_cast<long>(k));
    }
    return c;
}

}  // namespace harnad
