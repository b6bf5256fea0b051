#pragma once

#include "harnad/connection.hpp"
#include "harnad/sylvester.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace harnad {

struct HBlock {
    Scalar t;
    Mat N;  // nilpotent d x d
    Mat Q;  // n x d
    Mat P;  // d x n
    std::size_t dim() const { return N.rows(); }
};

// Smallest k >= 1 with n^k = 0.
template <class F>
std::size_t nilpotency_index(const Matrix<F>& n) {
    if (n.rows() == 0) return 1;
    Matrix<F> p = n;
    for (std::size_t k = 1; k <= n.rows(); ++k) {
        if (p.is_zero()) return k;
        p = p * n;
    }
    throw InvalidInput("block matrix is not nilpotent");
}

// gamma = [[S, Q], [P, T]] on V + W with T = diag(t_i + N_i).
class HObject {
public:
    HObject() = default;
    HObject(std::size_t dim_v, Mat s, std::vector<HBlock> blocks) : n_(dim_v), s_(std::move(s)), blocks_(std::move(blocks)) {
        validate();
    }

    std::size_t dim_v() const { return n_; }
    const Mat& S() const { return s_; }
    const std::vector<HBlock>& blocks() const { return blocks_; }

    std::size_t dim_w() const {
        std::size_t m = 0;
        for (const auto& b : blocks_) m += b.dim();
        return m;
    }
    std::vector<std::size_t> offsets() const {
        std::vector<std::size_t> off{0};
        for (const auto& b : blocks_) off.push_back(off.back() + b.dim());
        return off;
    }
    Mat T() const {
        std::vector<Mat> parts;
        for (const auto& b : blocks_) parts.push_back(Mat::scalar(b.dim(), b.t) + b.N);
        return block_diag(parts);
    }
    Mat Q() const {
        std::vector<Mat> parts;
        for (const auto& b : blocks_) parts.push_back(b.Q);
        return hstack(parts, n_);
    }
    Mat P() const {
        std::vector<Mat> parts;
        for (const auto& b : blocks_) parts.push_back(b.P);
        return vstack(parts, n_);
    }
    Mat gamma() const {
        std::size_t m = dim_w();
        Mat g(n_ + m, n_ + m);
        g.set_block(0, 0, s_);
        g.set_block(0, n_, Q());
        g.set_block(n_, 0, P());
        g.set_block(n_, n_, T());
        return g;
    }
    TBlocks<Scalar> t_blocks() const {
        TBlocks<Scalar> tb;
        for (const auto& b : blocks_) {
            tb.t.push_back(b.t);
            tb.n.push_back(b.N);
        }
        return tb;
    }

    friend bool operator==(const HObject& a, const HObject& b) {
        if (a.n_ != b.n_ || a.s_ != b.s_ || a.blocks_.size() != b.blocks_.size()) return false;
        for (std::size_t i = 0; i < a.blocks_.size(); ++i) {
            const auto &x = a.blocks_[i], &y = b.blocks_[i];
            if (x.t != y.t || x.N != y.N || x.Q != y.Q || x.P != y.P) return false;
        }
        return true;
    }

private:
    void validate() const {
        if (s_.rows() != n_ || s_.cols() != n_) throw DimensionMismatch("S must be dimV x dimV");
        for (std::size_t i = 0; i < blocks_.size(); ++i) {
            const auto& b = blocks_[i];
            std::size_t d = b.N.rows();
            if (b.N.cols() != d) throw DimensionMismatch("N must be square");
            if (b.Q.rows() != n_ || b.Q.cols() != d) throw DimensionMismatch("Q block must be dimV x d");
            if (b.P.rows() != d || b.P.cols() != n_) throw DimensionMismatch("P block must be d x dimV");
            if (!power(b.N, d).is_zero()) throw InvalidInput("N block is not nilpotent");
            for (std::size_t j = 0; j < i; ++j)
                if (blocks_[j].t == b.t) throw InvalidInput("block eigenvalues must be distinct");
        }
    }

    std::size_t n_ = 0;
    Mat s_;
    std::vector<HBlock> blocks_;
};

inline ConnectionS phi(const HObject& h) {
    std::size_t n = h.dim_v();
    std::vector<Pole> poles;
    for (const auto& b : h.blocks()) {
        Pole p{b.t, {}};
        Mat np = Mat::identity(b.dim());
        for (std::size_t j = 1; j <= b.dim(); ++j) {
            p.coeffs.push_back(b.Q * np * b.P);
            np = np * b.N;
        }
        poles.push_back(std::move(p));
    }
    return ConnectionS(n, h.S(), std::move(poles));
}

// The canonical stable AHHP datum of a connection.
inline HObject kappa(const ConnectionS& a) {
    std::size_t n = a.dim();
    if (n == 0) throw InvalidInput("ZeroDimension: kappa needs dim >= 1");
    std::vector<HBlock> blocks;
    for (const auto& pole : a.poles()) {
        std::size_t k = pole.order(), nk = n * k;
        Mat ahat(nk, nk);
        for (std::size_t l = 0; l < k; ++l)
            for (std::size_t m = 0; l + m < k; ++m) ahat.set_block((l + m) * n, l * n, pole.coeffs[k - 1 - m]);
        auto e = rref(ahat);
        std::size_t r = e.rank();
        Mat c(nk, r), sel(nk, r);
        for (std::size_t j = 0; j < r; ++j) {
            c.set_block(0, j, ahat.column(e.pivots[j]));
            sel(e.pivots[j], j) = Scalar(1);
        }
        Mat rr = e.reduced.block(0, 0, r, nk);
        Mat z(nk, nk);
        for (std::size_t l = 0; l + 1 < k; ++l) z.set_block((l + 1) * n, l * n, Mat::identity(n));
        HBlock b;
        b.t = pole.position;
        b.N = rr * z * sel;
        b.P = rr.block(0, 0, r, n);
        b.Q = c.block((k - 1) * n, 0, n, r);
        blocks.push_back(std::move(b));
    }
    return HObject(n, a.constant_term(), std::move(blocks));
}

// Rewrites (S', T' = op, Q', P') with op blocked by generalized eigenspaces over Q(i).
inline HObject reblock(std::size_t dim_v, const Mat& s, const Mat& op, const Mat& q, const Mat& p) {
    std::size_t m = op.rows();
    if (m == 0) return HObject(dim_v, s, {});
    auto roots = gaussian_rational_roots(charpoly(op));
    if (!roots) throw ReblockFailure("eigenvalues do not lie in Q(i)");
    std::vector<Mat> cols;
    std::vector<std::pair<Scalar, std::size_t>> spans;
    for (const auto& r : *roots) {
        Mat shifted = op - Mat::scalar(m, r.value);
        auto ker = kernel_basis(power(shifted, r.multiplicity));
        if (ker.size() != r.multiplicity) throw ReblockFailure("generalized eigenspace dimension mismatch");
        for (auto& v : ker) cols.push_back(std::move(v));
        spans.emplace_back(r.value, r.multiplicity);
    }
    Mat basis = hstack(cols, m);
    Mat binv = inverse(basis);
    Mat t2 = binv * op * basis;
    Mat q2 = q * basis;
    Mat p2 = binv * p;
    std::vector<HBlock> blocks;
    std::size_t off = 0;
    for (const auto& [val, d] : spans) {
        HBlock b;
        b.t = val;
        b.N = t2.block(off, off, d, d) - Mat::scalar(d, val);
        b.Q = q2.block(0, off, dim_v, d);
        b.P = p2.block(off, 0, d, dim_v);
        blocks.push_back(std::move(b));
        off += d;
    }
    return HObject(dim_v, s, std::move(blocks));
}

// (V, W; S, T, Q, P) -> (W, V; -T, S, P, -Q)
inline HObject sigma(const HObject& h) {
    return reblock(h.dim_w(), -h.T(), h.S(), h.P(), -h.Q());
}

// (V, W; S, T, Q, P) -> (W, V; T, -S, -P, Q)
inline HObject sigma_inv(const HObject& h) {
    return reblock(h.dim_w(), h.T(), -h.S(), -h.P(), h.Q());
}

inline HObject direct_sum(const HObject& a, const HObject& b) {
    std::size_t na = a.dim_v(), nb = b.dim_v(), n = na + nb;
    std::vector<HBlock> blocks;
    auto find = [](const HObject& h, const Scalar& t) -> const HBlock* {
        for (const auto& x : h.blocks())
            if (x.t == t) return &x;
        return nullptr;
    };
    std::vector<Scalar> ts;
    for (const auto& x : a.blocks()) ts.push_back(x.t);
    for (const auto& x : b.blocks())
        if (!find(a, x.t)) ts.push_back(x.t);
    for (const auto& t : ts) {
        const HBlock* xa = find(a, t);
        const HBlock* xb = find(b, t);
        std::size_t da = xa ? xa->dim() : 0, db = xb ? xb->dim() : 0;
        HBlock r;
        r.t = t;
        r.N = Mat(da + db, da + db);
        r.Q = Mat(n, da + db);
        r.P = Mat(da + db, n);
        if (xa) {
            r.N.set_block(0, 0, xa->N);
            r.Q.set_block(0, 0, xa->Q);
            r.P.set_block(0, 0, xa->P);
        }
        if (xb) {
            r.N.set_block(da, da, xb->N);
            r.Q.set_block(na, da, xb->Q);
            r.P.set_block(da, na, xb->P);
        }
        blocks.push_back(std::move(r));
    }
    return HObject(n, block_diag<Scalar>({a.S(), b.S()}), std::move(blocks));
}

inline bool is_stable(const HObject& h) {
    std::size_t m = h.dim_w();
    if (m == 0) return true;
    Mat t = h.T();
    if (invariant_closure(t, columns_of(h.P())).size() != m) return false;
    return invariant_closure(t.transpose(), columns_of(h.Q().transpose())).size() == m;
}

inline bool is_irreducible_S(const ConnectionS& a) {
    std::size_t n = a.dim();
    std::vector<Mat> gens{a.constant_term()};
    for (const auto& p : a.poles())
        for (const auto& c : p.coeffs) gens.push_back(c);
    return algebra_closure(gens, n) == n * n;
}

inline bool is_irreducible_H(const HObject& h) {
    std::size_t n = h.dim_v(), total = n + h.dim_w();
    Mat pi(total, total);
    pi.set_block(0, 0, Mat::identity(n));
    return algebra_closure<Scalar>({h.gamma(), pi}, total) == total * total;
}

struct HIntertwiner {
    Mat phi;  // on V
    Mat psi;  // on W
};

inline bool intertwines(const HObject& a, const HObject& b, const HIntertwiner& f) {
    return f.phi * a.S() == b.S() * f.phi && f.psi * a.T() == b.T() * f.psi && f.phi * a.Q() == b.Q() * f.psi &&
           f.psi * a.P() == b.P() * f.phi;
}

namespace detail {

// With phi = 1 the W-component commutes T into T', so it is block diagonal by eigenvalue:
// each block solves X N_a = N_b X, Q_a = Q_b X, X P_a = P_b.
inline std::optional<HIntertwiner> intertwiner_fixing_v(const HObject& a, const HObject& b) {
    std::size_t n = a.dim_v(), m = a.dim_w();
    if (a.S() != b.S()) return std::nullopt;
    Mat psi(m, m);
    auto offa = a.offsets(), offb = b.offsets();
    std::vector<bool> used(b.blocks().size(), false);
    for (std::size_t i = 0; i < a.blocks().size(); ++i) {
        const HBlock& x = a.blocks()[i];
        if (x.dim() == 0) continue;
        std::size_t j = 0;
        while (j < b.blocks().size() && b.blocks()[j].t != x.t) ++j;
        if (j == b.blocks().size() || b.blocks()[j].dim() != x.dim()) return std::nullopt;
        used[j] = true;
        const HBlock& y = b.blocks()[j];
        std::size_t d = x.dim();
        // Unknown vec(X), X d x d, column-major.
        Mat e1 = sylvester_operator(Mat(d, d), x.N) * Scalar(-1);  // X N_a
        Mat l = sylvester_operator(y.N, Mat(d, d));                 // N_b X
        Mat eq1 = e1 - l;
        Mat eq2(n * d, d * d);  // Q_b X
        for (std::size_t c = 0; c < d; ++c)
            for (std::size_t k = 0; k < d; ++k)
                for (std::size_t r = 0; r < n; ++r) eq2(c * n + r, c * d + k) = y.Q(r, k);
        Mat eq3(d * n, d * d);  // X P_a
        for (std::size_t c = 0; c < n; ++c)
            for (std::size_t k = 0; k < d; ++k)
                if (!x.P(k, c).is_zero())
                    for (std::size_t r = 0; r < d; ++r) eq3(c * d + r, k * d + r) = x.P(k, c);
        Mat rhs(d * d + 2 * n * d, 1);
        rhs.set_block(d * d, 0, vec(x.Q));
        rhs.set_block(d * d + n * d, 0, vec(y.P));
        auto sol = solve(vstack<Scalar>({eq1, eq2, eq3}, d * d), rhs);
        if (!sol) return std::nullopt;
        psi.set_block(offb[j], offa[i], unvec(*sol, d, d));
    }
    for (std::size_t j = 0; j < b.blocks().size(); ++j)
        if (!used[j] && b.blocks()[j].dim() != 0) return std::nullopt;
    HIntertwiner f{Mat::identity(n), psi};
    if (!is_invertible(psi) || !intertwines(a, b, f)) return std::nullopt;
    return f;
}

}  // namespace detail

// An isomorphism (phi + psi) from a to b; with fix_v the V-component is forced to the identity.
inline std::optional<HIntertwiner> hobject_intertwiner(const HObject& a, const HObject& b, bool fix_v,
                                                       std::uint64_t seed = 0x5eedULL) {
    std::size_t n = a.dim_v(), m = a.dim_w();
    if (b.dim_v() != n || b.dim_w() != m) return std::nullopt;
    if (fix_v) return detail::intertwiner_fixing_v(a, b);
    std::size_t nn = n * n, mm = m * m, unknowns = nn + mm;
    Mat sa = a.S(), sb = b.S(), ta = a.T(), tb = b.T(), qa = a.Q(), qb = b.Q(), pa = a.P(), pb = b.P();
    // Equations on vec(phi) (first nn) and vec(psi): phi sa - sb phi, psi ta - tb psi, phi qa - qb psi, psi pa - pb phi.
    auto left = [](const Mat& l, std::size_t q) {  // X -> l X for X p x q
        std::size_t p = l.cols();
        Mat op(l.rows() * q, p * q);
        for (std::size_t c = 0; c < q; ++c) op.set_block(c * l.rows(), c * p, l);
        return op;
    };
    auto right = [](const Mat& r, std::size_t p) {  // X -> X r for X p x q
        std::size_t q = r.rows(), c2 = r.cols();
        Mat op(p * c2, p * q);
        for (std::size_t c = 0; c < c2; ++c)
            for (std::size_t k = 0; k < q; ++k)
                if (!r(k, c).is_zero())
                    for (std::size_t i = 0; i < p; ++i) op(c * p + i, k * p + i) += r(k, c);
        return op;
    };
    Mat e1(nn, unknowns), e2(mm, unknowns), e3(n * m, unknowns), e4(m * n, unknowns);
    e1.set_block(0, 0, right(sa, n) - left(sb, n));
    e2.set_block(0, nn, right(ta, m) - left(tb, m));
    e3.set_block(0, 0, right(qa, n));
    e3.add_block(0, nn, -left(qb, m));
    e4.set_block(0, nn, right(pa, m));
    e4.add_block(0, 0, -left(pb, n));
    Mat system = vstack<Scalar>({e1, e2, e3, e4}, unknowns);
    auto split = [&](const Mat& v) { return HIntertwiner{unvec(v, n, n), unvec(v, m, m, nn)}; };
    auto good = [&](const HIntertwiner& f) {
        return is_invertible(f.phi) && is_invertible(f.psi) && intertwines(a, b, f);
    };
    auto basis = kernel_basis(system);
    for (const auto& v : basis)
        if (auto f = split(v); good(f)) return f;
    if (basis.size() >= 2) {
        std::mt19937_64 rng(seed);
        std::uniform_int_distribution<int> coef(-3, 3);
        for (int attempt = 0; attempt < 64; ++attempt) {
            Mat v(unknowns, 1);
            for (const auto& b : basis) v += b * Scalar(coef(rng));
            if (auto f = split(v); good(f)) return f;
        }
    }
    return std::nullopt;
}

// Closed-form AHHP datum of a normal form: shift blocks for irregular groups, V0 / Ker L0 for the rest.
inline HObject closed_form_hobject(const NormalForm& nf) {
    nf.validate();
    if (!nf.position) throw InvalidInput("normal form must sit at a finite point");
    std::size_t n = nf.dim();
    std::vector<Mat> xs, ys, ns;
    for (std::size_t a = 0; a < nf.groups.size(); ++a) {
        const auto& g = nf.groups[a];
        std::size_t d = g.multiplicity;
        const Mat& l = nf.L_blocks[a];
        if (g.lambda_coeffs.empty()) {
            auto [c, r] = cr_factorize(l);
            xs.push_back(c);
            ys.push_back(r);
            ns.push_back(Mat(c.cols(), c.cols()));
            continue;
        }
        std::size_t k = g.order();
        Mat x(d, d * k), y(d * k, d);
        for (std::size_t b = 0; b + 1 < k; ++b) x.set_block(0, b * d, Mat::scalar(d, g.lambda_coeffs[k - 2 - b]));
        x.set_block(0, (k - 1) * d, l);
        y.set_block((k - 1) * d, 0, Mat::identity(d));
        xs.push_back(std::move(x));
        ys.push_back(std::move(y));
        ns.push_back(block_shift<Scalar>(d, k));
    }
    HBlock b;
    b.t = *nf.position;
    b.Q = block_diag(xs);
    b.P = block_diag(ys);
    b.N = block_diag(ns);
    std::vector<HBlock> blocks;
    if (b.dim() > 0) blocks.push_back(std::move(b));
    return HObject(n, Mat(n, n), std::move(blocks));
}

}  // namespace harnad
