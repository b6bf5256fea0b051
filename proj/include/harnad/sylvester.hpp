#pragma once

#include "harnad/linalg.hpp"

#include <vector>

namespace harnad {

// Block data of T = diag(t_i + N_i) with N_i nilpotent.
template <class F>
struct TBlocks {
    std::vector<F> t;
    std::vector<Matrix<F>> n;

    std::size_t size() const {
        std::size_t s = 0;
        for (const auto& m : n) s += m.rows();
        return s;
    }
    std::vector<std::size_t> offsets() const {
        std::vector<std::size_t> off{0};
        for (const auto& m : n) off.push_back(off.back() + m.rows());
        return off;
    }
    Matrix<F> assemble() const {
        std::vector<Matrix<F>> parts;
        for (std::size_t i = 0; i < n.size(); ++i) parts.push_back(Matrix<F>::scalar(n[i].rows(), t[i]) + n[i]);
        return block_diag(parts);
    }
};

template <class F>
struct SylvesterResult {
    Matrix<F> xi;
    Matrix<F> residual;
};

// Solves [xi, T] = rhs - residual with residual in Ker(ad_{T*}) and xi Frobenius-orthogonal to Ker(ad_T).
// The diagonal-block systems depend only on the nilpotent parts and are factored once.
template <class F>
class SylvesterSolver {
public:
    explicit SylvesterSolver(std::vector<Matrix<F>> nilpotents) : n_(std::move(nilpotents)) {
        off_.push_back(0);
        for (const auto& m : n_) {
            if (!m.is_square()) throw DimensionMismatch("nilpotent block must be square");
            off_.push_back(off_.back() + m.rows());
            diag_.push_back(factor(m));
        }
    }

    std::size_t size() const { return off_.back(); }

    SylvesterResult<F> solve(const std::vector<F>& t, const Matrix<F>& rhs) const {
        if (t.size() != n_.size()) throw DimensionMismatch("one eigenvalue per block");
        std::size_t dim = size();
        if (rhs.rows() != dim || rhs.cols() != dim) throw DimensionMismatch("rhs shape");
        Matrix<F> xi(dim, dim), res(dim, dim);
        for (std::size_t i = 0; i < n_.size(); ++i) {
            for (std::size_t j = 0; j < n_.size(); ++j) {
                std::size_t di = n_[i].rows(), dj = n_[j].rows();
                if (di == 0 || dj == 0) continue;
                Matrix<F> r = rhs.block(off_[i], off_[j], di, dj);
                if (i == j) {
                    auto [x, k] = solve_diag(i, r);
                    xi.set_block(off_[i], off_[i], x);
                    res.set_block(off_[i], off_[i], k);
                    continue;
                }
                F delta = t[j] - t[i];
                if (field_traits<F>::is_zero(delta, 0.0)) throw DimensionMismatch("block eigenvalues must be distinct");
                F inv = F(1) / delta;
                Matrix<F> term = r * inv;
                Matrix<F> acc = term;
                for (std::size_t m = 1; m < di + dj; ++m) {
                    term = (term * n_[j] - n_[i] * term) * (-inv);
                    if (term.is_zero()) break;
                    acc += term;
                }
                xi.set_block(off_[i], off_[j], acc);
            }
        }
        return {std::move(xi), std::move(res)};
    }

private:
    struct DiagFactor {
        std::size_t m = 0;
        std::vector<Matrix<F>> kernel;  // basis of Ker(ad_N)
        Matrix<F> inv;                  // inverse of the bordered system
    };

    static Matrix<F> ad_matrix(const Matrix<F>& n) {
        std::size_t m = n.rows();
        Matrix<F> a(m * m, m * m);
        for (std::size_t q = 0; q < m; ++q)
            for (std::size_t p = 0; p < m; ++p) {
                Matrix<F> e(m, m);
                e(p, q) = F(1);
                a.set_block(0, q * m + p, vec(Matrix<F>(e * n - n * e)));
            }
        return a;
    }

    static DiagFactor factor(const Matrix<F>& n) {
        DiagFactor f;
        f.m = n.rows();
        std::size_t mm = f.m * f.m;
        if (mm == 0) return f;
        Matrix<F> ad = ad_matrix(n);
        for (const auto& k : kernel_basis(ad)) f.kernel.push_back(unvec(k, f.m, f.m));
        std::size_t kd = f.kernel.size();
        Matrix<F> sys(mm + kd, mm + kd);
        sys.set_block(0, 0, ad);
        for (std::size_t l = 0; l < kd; ++l) {
            sys.set_block(0, mm + l, vec(f.kernel[l].adjoint()));
            Matrix<F> row = vec(f.kernel[l]);
            for (std::size_t e = 0; e < mm; ++e) sys(mm + l, e) = field_traits<F>::conj(row(e, 0));
        }
        f.inv = inverse(sys);
        return f;
    }

    std::pair<Matrix<F>, Matrix<F>> solve_diag(std::size_t i, const Matrix<F>& r) const {
        const DiagFactor& f = diag_[i];
        std::size_t mm = f.m * f.m, kd = f.kernel.size();
        Matrix<F> b(mm + kd, 1);
        b.set_block(0, 0, vec(r));
        Matrix<F> x = f.inv * b;
        Matrix<F> xi = unvec(x, f.m, f.m);
        Matrix<F> res(f.m, f.m);
        for (std::size_t l = 0; l < kd; ++l) res += f.kernel[l].adjoint() * x(mm + l, 0);
        return {std::move(xi), std::move(res)};
    }

    std::vector<Matrix<F>> n_;
    std::vector<std::size_t> off_;
    std::vector<DiagFactor> diag_;
};

template <class F>
SylvesterResult<F> sylvester_block_solve(const TBlocks<F>& t, const Matrix<F>& rhs) {
    return SylvesterSolver<F>(t.n).solve(t.t, rhs);
}

// The block shift of size (d l) x (d l): identity blocks on the block superdiagonal.
template <class F>
Matrix<F> block_shift(std::size_t d, std::size_t l) {
    Matrix<F> n(d * l, d * l);
    for (std::size_t b = 0; b + 1 < l; ++b) n.set_block(b * d, (b + 1) * d, Matrix<F>::identity(d));
    return n;
}

// Whether x lies in the range of ad_N for the block shift N, via the trace-sum criterion.
inline bool in_range_ad_shift(const Mat& x, std::size_t d, std::size_t l) {
    if (x.rows() != d * l || x.cols() != d * l) throw DimensionMismatch("in_range_ad_shift shape");
    Mat n = block_shift<Scalar>(d, l);
    Mat sum(d * l, d * l);
    for (std::size_t j = 1; j <= l; ++j) sum += power(n, l - j) * x * power(n, j - 1);
    return sum.is_zero();
}

}  // namespace harnad
