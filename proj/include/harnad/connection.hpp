#pragma once

#include "harnad/linalg.hpp"
#include "harnad/polynomial.hpp"

#include <algorithm>
#include <optional>
#include <random>
#include <vector>

namespace harnad {

class NonResonantRequired : public Error {
public:
    explicit NonResonantRequired(const std::string& what = {}) : Error("NonResonantRequired", what) {}
};

struct Pole {
    Scalar position;
    std::vector<Mat> coeffs;  // coeffs[j - 1] multiplies (x - position)^{-j}
    std::size_t order() const { return coeffs.size(); }
};

// A(x) dx = (A0 + sum_i sum_j A^(i)_j (x - t_i)^{-j}) dx on the trivial bundle of rank dim.
class ConnectionS {
public:
    ConnectionS() = default;
    explicit ConnectionS(std::size_t dim) : dim_(dim), a0_(dim, dim) {}
    ConnectionS(std::size_t dim, Mat a0, std::vector<Pole> poles) : dim_(dim), a0_(std::move(a0)), poles_(std::move(poles)) {
        canonicalize();
    }

    std::size_t dim() const { return dim_; }
    const Mat& constant_term() const { return a0_; }
    const std::vector<Pole>& poles() const { return poles_; }

    std::optional<std::size_t> pole_index(const Scalar& t) const {
        for (std::size_t i = 0; i < poles_.size(); ++i)
            if (poles_[i].position == t) return i;
        return std::nullopt;
    }

    // Order of the pole at t (0 when t is a regular point).
    std::size_t order_at(const Scalar& t) const {
        auto i = pole_index(t);
        return i ? poles_[*i].order() : 0;
    }

    friend bool operator==(const ConnectionS& a, const ConnectionS& b) {
        if (a.dim_ != b.dim_ || a.a0_ != b.a0_ || a.poles_.size() != b.poles_.size()) return false;
        for (const auto& p : a.poles_) {
            auto j = b.pole_index(p.position);
            if (!j || b.poles_[*j].coeffs != p.coeffs) return false;
        }
        return true;
    }

private:
    void canonicalize() {
        if (a0_.rows() != dim_ || a0_.cols() != dim_) throw DimensionMismatch("constant term shape");
        std::vector<Pole> kept;
        for (auto& p : poles_) {
            for (const auto& c : p.coeffs)
                if (c.rows() != dim_ || c.cols() != dim_) throw DimensionMismatch("pole coefficient shape");
            while (!p.coeffs.empty() && p.coeffs.back().is_zero()) p.coeffs.pop_back();
            if (p.coeffs.empty()) continue;
            for (const auto& q : kept)
                if (q.position == p.position) throw InvalidInput("pole positions must be distinct");
            kept.push_back(std::move(p));
        }
        poles_ = std::move(kept);
    }

    std::size_t dim_ = 0;
    Mat a0_;
    std::vector<Pole> poles_;
};

inline std::vector<Mat> laurent_principal(const ConnectionS& a, std::size_t i) {
    if (i >= a.poles().size()) throw InvalidInput("pole index out of range");
    return a.poles()[i].coeffs;
}

// The principal part at infinity in the coordinate x: the constant term.
inline std::vector<Mat> laurent_principal_at_infinity(const ConnectionS& a) { return {a.constant_term()}; }

// Truncated Laurent series sum_{m = low}^{low + size - 1} c_m u^m with matrix coefficients.
struct LaurentSeries {
    std::size_t dim = 0;
    int low = 0;
    std::vector<Mat> coeffs;

    int high() const { return low + static_cast<int>(coeffs.size()) - 1; }
    Mat at(int m) const {
        if (m < low || m > high()) return Mat(dim, dim);
        return coeffs[static_cast<std::size_t>(m - low)];
    }
};

inline mpz_class binomial(unsigned long n, unsigned long k) {
    mpz_class r;
    mpz_bin_uiui(r.get_mpz_t(), n, k);
    return r;
}

// Coefficients of u^m (u = x - center) for m = -k .. order, k the pole order at center.
inline LaurentSeries laurent_expand(const ConnectionS& a, const Scalar& center, int order) {
    std::size_t n = a.dim();
    int k = static_cast<int>(a.order_at(center));
    LaurentSeries s;
    s.dim = n;
    s.low = -k;
    int count = order + k + 1;
    if (count < 0) count = 0;
    s.coeffs.assign(static_cast<std::size_t>(count), Mat(n, n));
    auto slot = [&](int m) -> Mat* {
        if (m < s.low || m > order) return nullptr;
        return &s.coeffs[static_cast<std::size_t>(m - s.low)];
    };
    if (Mat* c = slot(0)) *c += a.constant_term();
    for (const auto& p : a.poles()) {
        if (p.position == center) {
            for (std::size_t j = 1; j <= p.order(); ++j)
                if (Mat* c = slot(-static_cast<int>(j))) *c += p.coeffs[j - 1];
            continue;
        }
        Scalar d = p.position - center;
        Scalar dinv = d.inverse();
        for (std::size_t j = 1; j <= p.order(); ++j) {
            Scalar base(1);
            for (std::size_t e = 0; e < j; ++e) base *= -dinv;
            Scalar dpow(1);
            for (int m = 0; m <= order; ++m) {
                Scalar f = base * dpow * Scalar(mpq_class(binomial(static_cast<unsigned long>(m) + j - 1, j - 1)));
                *slot(m) += p.coeffs[j - 1] * f;
                dpow *= dinv;
            }
        }
    }
    return s;
}

inline ConnectionS direct_sum(const ConnectionS& a, const ConnectionS& b) {
    std::size_t n = a.dim() + b.dim();
    std::vector<Scalar> positions;
    for (const auto& p : a.poles()) positions.push_back(p.position);
    for (const auto& p : b.poles())
        if (!a.pole_index(p.position)) positions.push_back(p.position);
    std::vector<Pole> poles;
    for (const auto& t : positions) {
        std::size_t k = std::max(a.order_at(t), b.order_at(t));
        Pole p{t, {}};
        for (std::size_t j = 1; j <= k; ++j) {
            Mat ca(a.dim(), a.dim()), cb(b.dim(), b.dim());
            if (auto i = a.pole_index(t); i && j <= a.poles()[*i].order()) ca = a.poles()[*i].coeffs[j - 1];
            if (auto i = b.pole_index(t); i && j <= b.poles()[*i].order()) cb = b.poles()[*i].coeffs[j - 1];
            p.coeffs.push_back(block_diag<Scalar>({ca, cb}));
        }
        poles.push_back(std::move(p));
    }
    return ConnectionS(n, block_diag<Scalar>({a.constant_term(), b.constant_term()}), std::move(poles));
}

// Searches the kernel spanned by basis (columns of length rows*cols) for an invertible element.
inline std::optional<Mat> search_invertible(const std::vector<Mat>& basis, std::size_t rows, std::size_t cols,
                                            std::uint64_t seed = 0x5eedULL, int attempts = 64) {
    if (rows != cols) return std::nullopt;
    for (const auto& b : basis) {
        Mat m = unvec(b, rows, cols);
        if (is_invertible(m)) return m;
    }
    if (basis.size() < 2) return std::nullopt;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> coef(-3, 3);
    for (int a = 0; a < attempts; ++a) {
        Mat v(rows * cols, 1);
        for (const auto& b : basis) v += b * Scalar(coef(rng));
        Mat m = unvec(v, rows, cols);
        if (is_invertible(m)) return m;
    }
    return std::nullopt;
}

// Linear map X -> L X - X R on p x q matrices, as a (p q) x (p q) matrix on column-major vecs.
inline Mat sylvester_operator(const Mat& l, const Mat& r) {
    std::size_t p = l.rows(), q = r.rows();
    Mat op(p * q, p * q);
    for (std::size_t c = 0; c < q; ++c)
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t k = 0; k < p; ++k)
                if (!l(i, k).is_zero()) op(c * p + i, c * p + k) += l(i, k);
    for (std::size_t c = 0; c < q; ++c)
        for (std::size_t k = 0; k < q; ++k)
            if (!r(k, c).is_zero())
                for (std::size_t i = 0; i < p; ++i) op(c * p + i, k * p + i) -= r(k, c);
    return op;
}

inline bool intertwines(const ConnectionS& a, const ConnectionS& b, const Mat& phi) {
    if (b.constant_term() * phi != phi * a.constant_term()) return false;
    std::vector<Scalar> positions;
    for (const auto& p : a.poles()) positions.push_back(p.position);
    for (const auto& p : b.poles()) positions.push_back(p.position);
    for (const auto& t : positions) {
        std::size_t k = std::max(a.order_at(t), b.order_at(t));
        auto sa = laurent_expand(a, t, -1), sb = laurent_expand(b, t, -1);
        for (int j = 1; j <= static_cast<int>(k); ++j)
            if (sb.at(-j) * phi != phi * sa.at(-j)) return false;
    }
    return true;
}

// An invertible phi with B phi = phi A coefficientwise, if one is found.
inline std::optional<Mat> iso_search(const ConnectionS& a, const ConnectionS& b, std::uint64_t seed = 0x5eedULL) {
    if (a.dim() != b.dim()) return std::nullopt;
    std::size_t n = a.dim();
    if (n == 0) return Mat(0, 0);
    std::vector<Mat> blocks{sylvester_operator(b.constant_term(), a.constant_term())};
    std::vector<Scalar> positions;
    for (const auto& p : a.poles()) positions.push_back(p.position);
    for (const auto& p : b.poles())
        if (!a.pole_index(p.position)) positions.push_back(p.position);
    for (const auto& t : positions) {
        std::size_t k = std::max(a.order_at(t), b.order_at(t));
        auto sa = laurent_expand(a, t, -1), sb = laurent_expand(b, t, -1);
        for (int j = 1; j <= static_cast<int>(k); ++j) blocks.push_back(sylvester_operator(sb.at(-j), sa.at(-j)));
    }
    Mat system = vstack(blocks, n * n);
    auto phi = search_invertible(kernel_basis(system), n, n, seed);
    if (phi && !intertwines(a, b, *phi)) return std::nullopt;
    return phi;
}

// Polynomial jet g_0 + g_1 u + ... + g_N u^N at a point.
struct GaugeJet {
    std::vector<Mat> coeffs;
    std::size_t dim() const { return coeffs.empty() ? 0 : coeffs.front().rows(); }
    Mat at(std::size_t j) const { return j < coeffs.size() ? coeffs[j] : Mat(dim(), dim()); }
};

inline GaugeJet jet_product(const GaugeJet& g, const GaugeJet& h) {
    std::size_t n = g.dim();
    GaugeJet r;
    r.coeffs.assign(g.coeffs.size() + h.coeffs.size() - 1, Mat(n, n));
    for (std::size_t i = 0; i < g.coeffs.size(); ++i)
        for (std::size_t j = 0; j < h.coeffs.size(); ++j) r.coeffs[i + j] += g.coeffs[i] * h.coeffs[j];
    return r;
}

// Power series inverse of a jet up to u^order.
inline std::vector<Mat> jet_inverse(const GaugeJet& g, std::size_t order) {
    std::size_t n = g.dim();
    Mat h0 = inverse(g.coeffs.at(0));
    std::vector<Mat> h{h0};
    for (std::size_t m = 1; m <= order; ++m) {
        Mat s(n, n);
        for (std::size_t j = 1; j <= m && j < g.coeffs.size(); ++j) s += g.coeffs[j] * h[m - j];
        h.push_back(-(h0 * s));
    }
    return h;
}

// g[A] = g A g^{-1} + dg g^{-1} on a truncated local series, valid through u^trunc.
inline LaurentSeries gauge_series(const LaurentSeries& a, const GaugeJet& g, int trunc) {
    std::size_t n = a.dim;
    int low = std::min(a.low, 0);
    if (a.high() < trunc) throw InvalidInput("series too short for the requested truncation");
    std::vector<Mat> h = jet_inverse(g, static_cast<std::size_t>(std::max(0, trunc - low)));
    LaurentSeries out;
    out.dim = n;
    out.low = low;
    out.coeffs.assign(static_cast<std::size_t>(trunc - low + 1), Mat(n, n));
    // ga[m] = sum_p g_p a_{m-p}
    std::vector<Mat> ga(static_cast<std::size_t>(trunc - low + 1), Mat(n, n));
    for (int m = low; m <= trunc; ++m)
        for (int p = 0; p < static_cast<int>(g.coeffs.size()) && m - p >= a.low; ++p)
            ga[static_cast<std::size_t>(m - low)] += g.coeffs[static_cast<std::size_t>(p)] * a.at(m - p);
    for (int m = low; m <= trunc; ++m) {
        Mat& c = out.coeffs[static_cast<std::size_t>(m - low)];
        for (int q = low; q <= m; ++q)
            c += ga[static_cast<std::size_t>(q - low)] * h[static_cast<std::size_t>(m - q)];
        if (m >= 0)
            for (int r = 0; r <= m; ++r) {
                Mat dg = g.at(static_cast<std::size_t>(m - r + 1)) * Scalar(m - r + 1);
                c += dg * h[static_cast<std::size_t>(r)];
            }
    }
    return out;
}

inline LaurentSeries gauge_polynomial(const ConnectionS& a, const Scalar& t, const GaugeJet& g, int trunc) {
    if (g.dim() != a.dim()) throw DimensionMismatch("jet dimension");
    if (!is_invertible(g.coeffs.at(0))) throw InvalidInput("jet constant term must be invertible");
    return gauge_series(laurent_expand(a, t, trunc), g, trunc);
}

struct NormalFormGroup {
    std::size_t multiplicity = 0;
    std::vector<Scalar> lambda_coeffs;  // lambda_{a,2} .. lambda_{a,k_a}
    std::size_t order() const { return lambda_coeffs.size() + 1; }
};

// d - d Lambda - L dz/z with Lambda and L block diagonal by group; position nullopt means infinity.
struct NormalForm {
    std::optional<Scalar> position;
    std::vector<NormalFormGroup> groups;
    std::vector<Mat> L_blocks;

    std::size_t dim() const {
        std::size_t n = 0;
        for (const auto& g : groups) n += g.multiplicity;
        return n;
    }
    std::size_t pole_order() const {
        std::size_t k = 1;
        for (const auto& g : groups) k = std::max(k, g.order());
        return k;
    }
    Mat L() const { return block_diag(L_blocks); }

    // A_1 = L, A_j = diag(lambda_{a,j} 1_{V_a}) for j >= 2.
    std::vector<Mat> coeffs() const {
        std::size_t n = dim(), k = pole_order();
        std::vector<Mat> c{L()};
        for (std::size_t j = 2; j <= k; ++j) {
            Mat m(n, n);
            std::size_t off = 0;
            for (const auto& g : groups) {
                if (j - 2 < g.lambda_coeffs.size())
                    for (std::size_t r = 0; r < g.multiplicity; ++r) m(off + r, off + r) = g.lambda_coeffs[j - 2];
                off += g.multiplicity;
            }
            c.push_back(std::move(m));
        }
        return c;
    }

    void validate() const {
        if (groups.size() != L_blocks.size()) throw InvalidInput("one L block per group");
        for (std::size_t a = 0; a < groups.size(); ++a) {
            const auto& g = groups[a];
            if (g.multiplicity == 0) throw InvalidInput("group multiplicity must be positive");
            if (L_blocks[a].rows() != g.multiplicity || L_blocks[a].cols() != g.multiplicity)
                throw DimensionMismatch("L block size must equal the group multiplicity");
            if (!g.lambda_coeffs.empty() && g.lambda_coeffs.back().is_zero())
                throw InvalidInput("top irregular coefficient must be nonzero");
            for (std::size_t b = 0; b < a; ++b)
                if (groups[b].lambda_coeffs == g.lambda_coeffs)
                    throw InvalidInput("groups must have distinct irregular coefficients");
        }
    }
};

inline ConnectionS normal_form_connection(const NormalForm& nf) {
    nf.validate();
    if (!nf.position) throw InvalidInput("normal form must sit at a finite point");
    std::size_t n = nf.dim();
    return ConnectionS(n, Mat(n, n), {Pole{*nf.position, nf.coeffs()}});
}

// Matrix of X -> [L, X] on d x d matrices.
inline Mat ad_operator(const Mat& l) { return sylvester_operator(l, l); }

inline ExactPoly charpoly(const Mat& m) { return ExactPoly(charpoly_coeffs(m)); }

// No nonzero integer eigenvalue of ad_L on the block-diagonal algebra of the groups.
inline bool nonresonance_check(const NormalForm& nf) {
    nf.validate();
    for (const auto& l : nf.L_blocks) {
        auto roots = poly_integer_roots(charpoly(ad_operator(l)));
        for (auto r : roots)
            if (r != 0) return false;
    }
    return true;
}

// Solves dg = A g - g A0 through a fixed truncation for a jet g_0..g_N with g_0 invertible.
inline GaugeJet formal_match(const ConnectionS& a, const Scalar& t, const NormalForm& nf, int order = -1,
                             std::uint64_t seed = 0x5eedULL) {
    nf.validate();
    if (nf.dim() != a.dim()) throw DimensionMismatch("normal form dimension");
    if (!nonresonance_check(nf)) throw NonResonantRequired("normal form exponent is resonant");
    std::size_t n = a.dim();
    int k = static_cast<int>(std::max<std::size_t>({a.order_at(t), nf.pole_order(), 1}));
    if (order < 0) order = k + 6;
    int big_n = order;
    NormalForm at_t = nf;
    at_t.position = t;
    LaurentSeries sa = laurent_expand(a, t, big_n - k);
    LaurentSeries sb = laurent_expand(normal_form_connection(at_t), t, big_n - k);
    std::size_t nn = n * n;
    std::size_t unknowns = nn * static_cast<std::size_t>(big_n + 1);
    auto col = [&](int q) { return nn * static_cast<std::size_t>(q); };
    std::vector<Mat> rows;
    for (int p = -k; p <= big_n - k; ++p) {
        Mat eq(nn, unknowns);
        if (p + 1 >= 0 && p + 1 <= big_n) eq.add_block(0, col(p + 1), Mat::identity(nn) * Scalar(p + 1));
        for (int m = -k; m <= p; ++m) {
            int q = p - m;
            if (q < 0 || q > big_n) continue;
            // -(a_m g_q) + g_q b_m
            eq.add_block(0, col(q), -sylvester_operator(sa.at(m), sb.at(m)));
        }
        rows.push_back(std::move(eq));
    }
    Mat system = vstack(rows, unknowns);
    auto to_jet = [&](const Mat& v) {
        GaugeJet g;
        for (int q = 0; q <= big_n; ++q) g.coeffs.push_back(unvec(v, n, n, col(q)));
        return g;
    };
    auto verify = [&](const GaugeJet& g) {
        if (!is_invertible(g.coeffs[0])) return false;
        LaurentSeries tr = gauge_series(sb, g, big_n - k);
        for (int m = -k; m < big_n - k; ++m)
            if (tr.at(m) != sa.at(m)) return false;
        return true;
    };
    Mat fix(nn, unknowns);
    fix.set_block(0, 0, Mat::identity(nn));
    Mat rhs(rows.size() * nn + nn, 1);
    Mat id_vec = vec(Mat::identity(n));
    rhs.set_block(rows.size() * nn, 0, id_vec);
    if (auto x = solve(vstack<Scalar>({system, fix}, unknowns), rhs)) {
        GaugeJet g = to_jet(*x);
        if (verify(g)) return g;
    }
    auto basis = kernel_basis(system);
    std::vector<GaugeJet> candidates;
    for (const auto& b : basis) candidates.push_back(to_jet(b));
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> coef(-3, 3);
    for (const auto& g : candidates)
        if (verify(g)) return g;
    if (basis.size() >= 2)
        for (int attempt = 0; attempt < 64; ++attempt) {
            Mat v(unknowns, 1);
            for (const auto& b : basis) v += b * Scalar(coef(rng));
            GaugeJet g = to_jet(v);
            if (verify(g)) return g;
        }
    throw NoMatch("no invertible formal gauge found");
}

}  // namespace harnad
