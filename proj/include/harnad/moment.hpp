#pragma once

#include "harnad/hobject.hpp"

#include <optional>
#include <vector>

namespace harnad {

class SingularLeadingCoefficient : public Error {
public:
    explicit SingularLeadingCoefficient(const std::string& what = {}) : Error("SingularLeadingCoefficient", what) {}
};

// One jet per block, of length the block's nilpotency index.
struct GTildeElement {
    std::vector<GaugeJet> jets;
};

using MomentValue = std::vector<std::vector<Mat>>;

inline std::vector<std::size_t> block_orders(const HObject& h) {
    std::vector<std::size_t> k;
    for (const auto& b : h.blocks()) k.push_back(nilpotency_index(b.N));
    return k;
}

inline void check_jet_shapes(const HObject& h, const GTildeElement& g) {
    auto k = block_orders(h);
    if (g.jets.size() != k.size()) throw DimensionMismatch("one jet per block");
    for (std::size_t i = 0; i < k.size(); ++i) {
        if (g.jets[i].coeffs.size() != k[i]) throw DimensionMismatch("jet length must equal the block order");
        for (const auto& c : g.jets[i].coeffs)
            if (c.rows() != h.dim_v() || c.cols() != h.dim_v()) throw DimensionMismatch("jet coefficient shape");
    }
}

inline HObject gtilde_act(const GTildeElement& g, const HObject& h) {
    check_jet_shapes(h, g);
    std::vector<HBlock> blocks;
    for (std::size_t i = 0; i < h.blocks().size(); ++i) {
        const HBlock& b = h.blocks()[i];
        const GaugeJet& jet = g.jets[i];
        if (!is_invertible(jet.coeffs[0])) throw SingularLeadingCoefficient("jet constant term is singular");
        std::size_t k = jet.coeffs.size();
        auto inv = jet_inverse(jet, k - 1);
        HBlock nb{b.t, b.N, Mat(b.Q.rows(), b.Q.cols()), Mat(b.P.rows(), b.P.cols())};
        Mat np = Mat::identity(b.dim());
        for (std::size_t j = 0; j < k; ++j) {
            nb.Q += jet.coeffs[j] * b.Q * np;
            nb.P += np * b.P * inv[j];
            np = np * b.N;
        }
        blocks.push_back(std::move(nb));
    }
    return HObject(h.dim_v(), h.S(), std::move(blocks));
}

inline MomentValue moment_map(const HObject& h) {
    MomentValue mv;
    for (const auto& b : h.blocks()) {
        std::size_t k = nilpotency_index(b.N);
        std::vector<Mat> stack;
        Mat np = Mat::identity(b.dim());
        for (std::size_t j = 1; j <= k; ++j) {
            stack.push_back(b.Q * np * b.P);
            np = np * b.N;
        }
        mv.push_back(std::move(stack));
    }
    return mv;
}

// Principal part of g (sum_j mu_j x^{-j}) g^{-1} for one block.
inline std::vector<Mat> conjugate_stack(const GaugeJet& g, const std::vector<Mat>& mu) {
    std::size_t k = mu.size();
    if (k == 0) return {};
    std::size_t n = mu.front().rows();
    auto inv = jet_inverse(g, k);
    std::vector<Mat> out(k, Mat(n, n));
    for (std::size_t j = 1; j <= k; ++j)
        for (std::size_t p = 0; j + p <= k; ++p)
            for (std::size_t r = 0; j + p + r <= k; ++r) out[j - 1] += g.at(p) * mu[j + p + r - 1] * inv[r];
    return out;
}

// Tangent vector (dQ, dP) at an HObject: per-block Q and P perturbations.
struct Tangent {
    std::vector<Mat> dq;
    std::vector<Mat> dp;
};

// Infinitesimal action of X = (sum_m X_{i,m} x_i^m)_i.
inline Tangent infinitesimal_action(const HObject& h, const GTildeElement& x) {
    check_jet_shapes(h, x);
    Tangent t;
    for (std::size_t i = 0; i < h.blocks().size(); ++i) {
        const HBlock& b = h.blocks()[i];
        Mat dq(b.Q.rows(), b.Q.cols()), dp(b.P.rows(), b.P.cols());
        Mat np = Mat::identity(b.dim());
        for (const auto& xm : x.jets[i].coeffs) {
            dq += xm * b.Q * np;
            dp -= np * b.P * xm;
            np = np * b.N;
        }
        t.dq.push_back(std::move(dq));
        t.dp.push_back(std::move(dp));
    }
    return t;
}

// omega(rho(X), delta) == <dPhi(delta), X> with omega = tr dQ ^ dP and the residue-trace pairing.
inline bool moment_map_check(const HObject& h, const GTildeElement& x, const Tangent& delta) {
    check_jet_shapes(h, x);
    if (delta.dq.size() != h.blocks().size() || delta.dp.size() != h.blocks().size())
        throw DimensionMismatch("tangent must have one entry per block");
    Tangent rho = infinitesimal_action(h, x);
    Scalar lhs(0), rhs(0);
    for (std::size_t i = 0; i < h.blocks().size(); ++i) {
        const HBlock& b = h.blocks()[i];
        if (delta.dq[i].rows() != b.Q.rows() || delta.dq[i].cols() != b.Q.cols() || delta.dp[i].rows() != b.P.rows() ||
            delta.dp[i].cols() != b.P.cols())
            throw DimensionMismatch("tangent block shape");
        lhs += (rho.dq[i] * delta.dp[i]).trace() - (delta.dq[i] * rho.dp[i]).trace();
        Mat np = Mat::identity(b.dim());
        for (const auto& xm : x.jets[i].coeffs) {
            rhs += (xm * (delta.dq[i] * np * b.P + b.Q * np * delta.dp[i])).trace();
            np = np * b.N;
        }
    }
    return lhs == rhs;
}

// Matrix of X -> L X R on column-major vecs.
inline Mat kron_operator(const Mat& l, const Mat& r) {
    std::size_t p = l.cols(), q = r.rows();
    Mat op(l.rows() * r.cols(), p * q);
    for (std::size_t c = 0; c < r.cols(); ++c)
        for (std::size_t k = 0; k < q; ++k) {
            if (r(k, c).is_zero()) continue;
            for (std::size_t i = 0; i < l.rows(); ++i)
                for (std::size_t j = 0; j < p; ++j)
                    if (!l(i, j).is_zero()) op(c * l.rows() + i, k * p + j) += l(i, j) * r(k, c);
        }
    return op;
}

inline std::vector<Mat> centralizer_basis(const Mat& t) {
    std::vector<Mat> out;
    for (const auto& v : kernel_basis(ad_operator(t))) out.push_back(unvec(v, t.rows(), t.cols()));
    return out;
}

namespace detail {

// Rows of the linear conditions "C commutes with T and Q (x - T)^{-1} C P = 0" on vec(C).
inline Mat stability_system(const HObject& h) {
    std::size_t m = h.dim_w();
    Mat t = h.T(), q = h.Q(), p = h.P();
    std::vector<Mat> rows{ad_operator(t)};
    auto off = h.offsets();
    for (std::size_t i = 0; i < h.blocks().size(); ++i) {
        const HBlock& b = h.blocks()[i];
        Mat np = Mat::identity(b.dim());
        for (std::size_t j = 0; j < nilpotency_index(b.N); ++j) {
            Mat proj(m, m);
            proj.set_block(off[i], off[i], np);
            rows.push_back(kron_operator(Mat(q * proj), p));
            np = np * b.N;
        }
    }
    return vstack(rows, m * m);
}

}  // namespace detail

struct LemmaStability {
    std::size_t kernel_dim = 0;  // solutions C of part (i)
};

inline LemmaStability lemma_stability_check(const HObject& h) {
    if (!is_stable(h)) throw NotStable("lemma_stability_check needs a stable object");
    return {kernel_basis(detail::stability_system(h)).size()};
}

// The unique C in the centralizer of T with q2 = Q C and p2 = C P, if any.
inline std::optional<Mat> stability_solve(const HObject& h, const Mat& q2, const Mat& p2) {
    if (!is_stable(h)) throw NotStable("stability_solve needs a stable object");
    std::size_t m = h.dim_w(), n = h.dim_v();
    Mat t = h.T(), q = h.Q(), p = h.P();
    Mat sys = vstack<Scalar>({ad_operator(t), kron_operator(q, Mat::identity(m)), kron_operator(Mat::identity(m), p)}, m * m);
    Mat rhs(sys.rows(), 1);
    rhs.set_block(m * m, 0, vec(q2));
    rhs.set_block(m * m + n * m, 0, vec(p2));
    auto x = solve(sys, rhs);
    if (!x) return std::nullopt;
    return unvec(*x, m, m);
}

// Lagrange interpolation through (k, values[k]) for k = 0 .. values.size() - 1.
inline ExactPoly interpolate_at_naturals(const std::vector<Scalar>& values) {
    ExactPoly acc;
    std::size_t s = values.size();
    for (std::size_t i = 0; i < s; ++i) {
        ExactPoly basis(std::vector<Scalar>{Scalar(1)});
        Scalar denom(1);
        for (std::size_t j = 0; j < s; ++j) {
            if (j == i) continue;
            basis = basis * ExactPoly::linear_root(Scalar(static_cast<long>(j)));
            denom *= Scalar(static_cast<long>(i) - static_cast<long>(j));
        }
        acc = acc + basis * ExactPoly(std::vector<Scalar>{values[i] / denom});
    }
    return acc;
}

// Per block: the map Ker N -> Coker N induced by P Q + k and its determinant as a polynomial in k.
struct MinimalBlockData {
    Mat M;
    Mat J;
    ExactPoly det_poly;
};

inline MinimalBlockData minimal_block_data(const HBlock& b) {
    Mat iota = kernel_matrix(b.N);
    Mat pi = kernel_matrix(b.N.transpose()).transpose();
    MinimalBlockData out;
    out.M = pi * b.P * b.Q * iota;
    out.J = pi * iota;
    std::size_t c = out.M.rows();
    std::vector<Scalar> values;
    for (std::size_t k = 0; k <= c; ++k) values.push_back(det(Mat(out.M + out.J * Scalar(static_cast<long>(k)))));
    out.det_poly = interpolate_at_naturals(values);
    return out;
}

inline bool minimal_criterion(const HObject& h) {
    for (const auto& b : h.blocks()) {
        if (b.dim() == 0) continue;
        auto data = minimal_block_data(b);
        if (data.det_poly.is_zero()) return false;
        if (!poly_integer_roots(data.det_poly).empty()) return false;
    }
    return true;
}

}  // namespace harnad
