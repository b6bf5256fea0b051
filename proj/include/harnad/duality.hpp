#pragma once

#include "harnad/hobject.hpp"

namespace harnad {

// -(T + P (y - S)^{-1} Q) dy
inline ConnectionS hd(const ConnectionS& a) { return phi(sigma(kappa(a))); }

// (T - P (y + S)^{-1} Q) dy
inline ConnectionS ihd(const ConnectionS& a) { return phi(sigma_inv(kappa(a))); }

inline ConnectionS add_alpha(const ConnectionS& a, const Scalar& alpha) {
    std::size_t n = a.dim();
    std::vector<Pole> poles = a.poles();
    Mat shift = Mat::scalar(n, alpha);
    bool found = false;
    for (auto& p : poles)
        if (p.position.is_zero()) {
            p.coeffs.at(0) += shift;
            found = true;
        }
    if (!found) poles.push_back(Pole{Scalar(0), {shift}});
    return ConnectionS(n, a.constant_term(), std::move(poles));
}

// Rank factorisation m + alpha = p_alpha q_alpha with q_alpha surjective and p_alpha injective.
struct RankFactors {
    Mat q_alpha;  // r x dim
    Mat p_alpha;  // dim x r
};

inline RankFactors rank_factorize(const Mat& m, const Scalar& alpha) {
    if (!m.is_square()) throw DimensionMismatch("rank_factorize needs a square matrix");
    auto [c, r] = cr_factorize(Mat(m + Mat::scalar(m.rows(), alpha)));
    return {std::move(r), std::move(c)};
}

struct McResult {
    ConnectionS connection;
    bool admissible = false;  // every residue eigenvalue lambda has lambda + alpha outside Z
};

inline bool is_scalar_constant(const ConnectionS& a) { return a.dim() == 1 && a.poles().empty(); }

// Residues at the finite poles and at infinity, all shifted by alpha, have no integer eigenvalue.
inline bool mc_admissible(const ConnectionS& a, const Scalar& alpha) {
    std::size_t n = a.dim();
    Mat at_infinity(n, n);
    std::vector<Mat> residues;
    for (const auto& p : a.poles()) {
        residues.push_back(p.coeffs.at(0));
        at_infinity -= p.coeffs.at(0);
    }
    if (a.constant_term().is_zero()) residues.push_back(at_infinity);
    for (const auto& r : residues)
        if (!poly_integer_roots(charpoly(Mat(r + Mat::scalar(n, alpha)))).empty()) return false;
    return true;
}

inline McResult mc_alpha(const ConnectionS& a, const Scalar& alpha) {
    if (a.dim() == 0) throw InvalidInput("ZeroDimension: mc needs dim >= 1");
    if (is_scalar_constant(a)) throw NotDefined("middle convolution of a rank-one constant connection");
    McResult r;
    r.connection = ihd(add_alpha(hd(a), -alpha));
    r.admissible = mc_admissible(a, alpha);
    return r;
}

// Q^alpha (x - T)^{-1} P^alpha for a connection with vanishing constant term.
inline ConnectionS mc_rank_factor_form(const ConnectionS& a, const Scalar& alpha) {
    if (!a.constant_term().is_zero()) throw InvalidInput("rank-factor form needs A0 = 0");
    HObject h = kappa(a);
    RankFactors f = rank_factorize(h.P() * h.Q(), alpha);
    std::size_t r = f.q_alpha.rows();
    std::vector<HBlock> blocks;
    auto off = h.offsets();
    for (std::size_t i = 0; i < h.blocks().size(); ++i) {
        const auto& b = h.blocks()[i];
        HBlock nb;
        nb.t = b.t;
        nb.N = b.N;
        nb.Q = f.q_alpha.block(0, off[i], r, b.dim());
        nb.P = f.p_alpha.block(off[i], 0, b.dim(), r);
        blocks.push_back(std::move(nb));
    }
    return phi(HObject(r, Mat(r, r), std::move(blocks)));
}

}  // namespace harnad
