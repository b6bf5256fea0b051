#pragma once

#include "harnad/moment.hpp"
#include "harnad/sylvester.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace harnad {

class NotFuchsian : public Error {
public:
    explicit NotFuchsian(const std::string& what = {}) : Error("NotFuchsian", what) {}
};

class SingularXtilde : public Error {
public:
    explicit SingularXtilde(const std::string& what = {}) : Error("SingularXtilde", what) {}
};

struct FamilyParam {
    std::string name;
    Scalar base;
};

struct FamilyGroup {
    std::size_t mult = 0;
    std::vector<std::string> coeff_params;  // lambda_{a,2} .. lambda_{a,k_a}; empty for the regular group
    std::size_t order() const { return coeff_params.size() + 1; }
};

struct FamilyPole {
    std::string t_param;
    std::vector<FamilyGroup> groups;
    Mat L;
};

struct FamilySpec {
    std::vector<FamilyParam> parameters;
    std::vector<FamilyPole> poles;
    std::optional<Mat> L_infinity;
    std::vector<std::string> infinity_coeff_params;
};

// One-form on the parameter space: the coefficient matrix of each parameter differential.
template <class F>
struct DeltaForm {
    std::vector<std::string> names;
    std::vector<Matrix<F>> values;

    const Matrix<F>& at(const std::string& name) const {
        for (std::size_t p = 0; p < names.size(); ++p)
            if (names[p] == name) return values[p];
        throw InvalidInput("unknown parameter '" + name + "'");
    }
    Matrix<F> contract(const std::vector<F>& v) const {
        Matrix<F> s(values.front().rows(), values.front().cols());
        for (std::size_t p = 0; p < values.size(); ++p)
            if (!field_traits<F>::is_zero(v[p], 0.0)) s += values[p] * v[p];
        return s;
    }
};

struct GroupLayout {
    std::size_t v_offset = 0;
    std::size_t v_dim = 0;
    std::size_t w_offset = 0;  // within the pole block
    std::size_t w_dim = 0;
    std::size_t order = 1;
    Mat L;
    std::vector<std::size_t> coeff_index;  // parameter indices of lambda_{a,2..k}
};

struct PoleLayout {
    std::size_t t_index = 0;
    std::size_t w_offset = 0;  // within W
    std::size_t w_dim = 0;
    Mat N;
    std::vector<GroupLayout> groups;
};

class SingularityFamily {
public:
    SingularityFamily() = default;
    explicit SingularityFamily(FamilySpec spec) : spec_(std::move(spec)) { build(); }

    const FamilySpec& spec() const { return spec_; }
    std::size_t dim_v() const { return n_; }
    std::size_t dim_w() const { return m_; }
    std::size_t param_count() const { return spec_.parameters.size(); }
    const std::vector<PoleLayout>& poles() const { return layout_; }
    std::vector<std::string> param_names() const {
        std::vector<std::string> v;
        for (const auto& p : spec_.parameters) v.push_back(p.name);
        return v;
    }
    std::size_t param_index(const std::string& name) const {
        for (std::size_t i = 0; i < spec_.parameters.size(); ++i)
            if (spec_.parameters[i].name == name) return i;
        throw InvalidInput("unknown parameter '" + name + "'");
    }
    std::vector<Scalar> base_point() const {
        std::vector<Scalar> p;
        for (const auto& x : spec_.parameters) p.push_back(x.base);
        return p;
    }
    bool fuchsian() const {
        for (const auto& p : spec_.poles)
            for (const auto& g : p.groups)
                if (!g.coeff_params.empty()) return false;
        return true;
    }
    std::vector<Mat> nilpotents() const {
        std::vector<Mat> v;
        for (const auto& p : layout_) v.push_back(p.N);
        return v;
    }

    NormalForm normal_form(std::size_t i, const std::vector<Scalar>& point) const {
        const FamilyPole& fp = spec_.poles[i];
        const PoleLayout& pl = layout_[i];
        NormalForm nf;
        nf.position = point.at(pl.t_index);
        for (const auto& g : pl.groups) {
            NormalFormGroup ng;
            ng.multiplicity = g.v_dim;
            for (auto idx : g.coeff_index) ng.lambda_coeffs.push_back(point.at(idx));
            nf.groups.push_back(ng);
            nf.L_blocks.push_back(g.L);
        }
        (void)fp;
        return nf;
    }

    // The closed-form datum (X, Y) with T = diag(t_i + N_i) at an exact point.
    HObject closed_form(const std::vector<Scalar>& point) const {
        check_point(point);
        std::vector<HBlock> blocks;
        for (std::size_t i = 0; i < layout_.size(); ++i) {
            HObject h = closed_form_hobject(normal_form(i, point));
            if (h.blocks().empty()) {
                blocks.push_back(HBlock{point[layout_[i].t_index], Mat(0, 0), Mat(n_, 0), Mat(0, n_)});
                continue;
            }
            blocks.push_back(h.blocks().front());
        }
        return HObject(n_, Mat(n_, n_), std::move(blocks));
    }

    // Distinct pole positions and the leading-coefficient condition at a point.
    void check_point(const std::vector<Scalar>& point) const {
        if (point.size() != param_count()) throw DimensionMismatch("point must list every parameter");
        for (std::size_t i = 0; i < layout_.size(); ++i)
            for (std::size_t j = 0; j < i; ++j)
                if (point[layout_[i].t_index] == point[layout_[j].t_index])
                    throw InvalidInput("pole positions must be distinct");
        for (const auto& pl : layout_) {
            for (std::size_t a = 0; a < pl.groups.size(); ++a) {
                const auto& ga = pl.groups[a];
                if (!ga.coeff_index.empty() && point[ga.coeff_index.back()].is_zero())
                    throw LeadingCoefficientZero("top irregular coefficient vanishes");
                for (std::size_t b = 0; b < a; ++b) {
                    const auto& gb = pl.groups[b];
                    if (ga.order != gb.order || ga.coeff_index.empty()) continue;
                    if (point[ga.coeff_index.back()] == point[gb.coeff_index.back()])
                        throw LeadingCoefficientZero("leading coefficient of an irregular-type difference vanishes");
                }
            }
        }
    }

private:
    void build() {
        if (spec_.parameters.empty() && !spec_.poles.empty()) throw InvalidInput("family needs parameters");
        for (std::size_t i = 0; i < spec_.parameters.size(); ++i)
            for (std::size_t j = 0; j < i; ++j)
                if (spec_.parameters[i].name == spec_.parameters[j].name) throw InvalidInput("duplicate parameter name");
        if (!spec_.infinity_coeff_params.empty()) throw InfinityIrregular("the point at infinity must be regular");
        if (spec_.poles.empty()) throw InvalidInput("family needs at least one pole");
        n_ = spec_.poles.front().L.rows();
        m_ = 0;
        for (std::size_t i = 0; i < spec_.poles.size(); ++i) {
            const FamilyPole& fp = spec_.poles[i];
            if (fp.L.rows() != n_ || fp.L.cols() != n_) throw DimensionMismatch("every L must be dimV x dimV");
            PoleLayout pl;
            pl.t_index = param_index(fp.t_param);
            for (std::size_t j = 0; j < i; ++j)
                if (layout_[j].t_index == pl.t_index) throw InvalidInput("poles must use distinct position parameters");
            pl.w_offset = m_;
            std::size_t voff = 0, woff = 0;
            bool have_regular = false;
            std::vector<Mat> ns;
            for (const auto& g : fp.groups) {
                if (g.mult == 0) throw InvalidInput("group multiplicity must be positive");
                GroupLayout gl;
                gl.v_offset = voff;
                gl.v_dim = g.mult;
                gl.order = g.order();
                if (voff + g.mult > n_) throw DimensionMismatch("group multiplicities exceed dimV");
                gl.L = fp.L.block(voff, voff, g.mult, g.mult);
                for (const auto& name : g.coeff_params) gl.coeff_index.push_back(param_index(name));
                if (g.coeff_params.empty()) {
                    if (have_regular) throw InvalidInput("at most one regular group per pole");
                    have_regular = true;
                    gl.w_dim = rank(gl.L);
                    ns.push_back(Mat(gl.w_dim, gl.w_dim));
                } else {
                    gl.w_dim = g.mult * gl.order;
                    ns.push_back(block_shift<Scalar>(g.mult, gl.order));
                }
                gl.w_offset = woff;
                voff += g.mult;
                woff += gl.w_dim;
                pl.groups.push_back(std::move(gl));
            }
            if (voff != n_) throw DimensionMismatch("group multiplicities must sum to dimV");
            Mat blockdiag(n_, n_);
            for (const auto& g : pl.groups) blockdiag.set_block(g.v_offset, g.v_offset, g.L);
            if (blockdiag != fp.L) throw InvalidInput("L must be block diagonal by group");
            pl.w_dim = woff;
            pl.N = block_diag(ns);
            m_ += woff;
            layout_.push_back(std::move(pl));
        }
        check_point(base_point());
        for (std::size_t i = 0; i < layout_.size(); ++i) {
            for (std::size_t a = 0; a < layout_[i].groups.size(); ++a)
                for (std::size_t b = 0; b < a; ++b)
                    if (layout_[i].groups[a].coeff_index == layout_[i].groups[b].coeff_index)
                        throw InvalidInput("groups of one pole must have distinct coefficient parameters");
            if (!nonresonance_check(normal_form(i, base_point())))
                throw ResonantExponent("exponent at pole " + spec_.poles[i].t_param + " is resonant");
        }
        if (spec_.L_infinity) {
            if (spec_.L_infinity->rows() != n_ || spec_.L_infinity->cols() != n_)
                throw DimensionMismatch("L_infinity must be dimV x dimV");
            NormalForm inf;
            inf.groups.push_back(NormalFormGroup{n_, {}});
            inf.L_blocks.push_back(*spec_.L_infinity);
            if (!nonresonance_check(inf)) throw ResonantExponent("exponent at infinity is resonant");
        }
    }

    FamilySpec spec_;
    std::size_t n_ = 0;
    std::size_t m_ = 0;
    std::vector<PoleLayout> layout_;
};

inline SingularityFamily family_make(FamilySpec spec) { return SingularityFamily(std::move(spec)); }

namespace detail {

// Truncated products and inverses in End(V_a)[z]/z^k, coefficients ascending.
template <class F>
std::vector<Matrix<F>> series_mul(const std::vector<Matrix<F>>& a, const std::vector<Matrix<F>>& b) {
    std::size_t k = a.size();
    std::size_t d = a.front().rows();
    std::vector<Matrix<F>> c(k, Matrix<F>(d, d));
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; i + j < k; ++j) c[i + j] += a[i] * b[j];
    return c;
}

template <class F>
std::vector<Matrix<F>> series_inverse(const std::vector<Matrix<F>>& a) {
    std::size_t k = a.size();
    Matrix<F> h0 = inverse(a.front());
    std::vector<Matrix<F>> h{h0};
    for (std::size_t m = 1; m < k; ++m) {
        Matrix<F> s(h0.rows(), h0.cols());
        for (std::size_t j = 1; j <= m; ++j) s += a[j] * h[m - j];
        h.push_back(-(h0 * s));
    }
    return h;
}

// Multiplication by a series on V_a (x) R in the basis z^{k-1}, ..., z^0.
template <class F>
Matrix<F> toeplitz(const std::vector<Matrix<F>>& f) {
    std::size_t k = f.size(), d = f.front().rows();
    Matrix<F> m(d * k, d * k);
    for (std::size_t r = 0; r < k; ++r)
        for (std::size_t c = r; c < k; ++c) m.set_block(r * d, c * d, f[c - r]);
    return m;
}

}  // namespace detail

// Theta at a point: -dt on regular groups, X~^{-1}(z^k dlambda + z^{k-1} L dx) on irregular groups.
template <class F>
DeltaForm<F> theta_build(const SingularityFamily& fam, const std::vector<F>& point) {
    std::size_t m = fam.dim_w(), np = fam.param_count();
    if (point.size() != np) throw DimensionMismatch("point must list every parameter");
    DeltaForm<F> out;
    out.names = fam.param_names();
    out.values.assign(np, Matrix<F>(m, m));
    for (const auto& pl : fam.poles()) {
        for (const auto& g : pl.groups) {
            std::size_t base = pl.w_offset + g.w_offset;
            if (g.coeff_index.empty()) {
                out.values[pl.t_index].add_block(base, base, Matrix<F>::scalar(g.w_dim, F(-1)));
                continue;
            }
            std::size_t k = g.order, d = g.v_dim;
            Matrix<F> l = convert<F>(g.L);
            auto lam = [&](std::size_t j) { return point[g.coeff_index[j - 2]]; };  // lambda_{a,j}
            std::vector<Matrix<F>> xt(k, Matrix<F>(d, d));
            for (std::size_t e = 0; e + 2 <= k; ++e) xt[e] = Matrix<F>::scalar(d, lam(k - e));
            xt[k - 1] = l;
            if (field_traits<F>::is_zero(lam(k), 0.0)) throw SingularXtilde("top irregular coefficient vanishes");
            auto xinv = detail::series_inverse(xt);
            for (std::size_t p = 0; p < np; ++p) {
                bool touches = p == pl.t_index;
                for (auto idx : g.coeff_index) touches = touches || idx == p;
                if (!touches) continue;
                F dt = p == pl.t_index ? F(1) : F(0);
                std::vector<Matrix<F>> num(k, Matrix<F>(d, d));
                for (std::size_t j = 2; j <= k; ++j) {
                    if (g.coeff_index[j - 2] == p)
                        num[k + 1 - j] += Matrix<F>::scalar(d, F(1) / field_traits<F>::from_int(1 - static_cast<long>(j)));
                    num[k - j] -= Matrix<F>::scalar(d, dt * lam(j));
                }
                num[k - 1] -= l * dt;
                out.values[p].add_block(base, base, detail::toeplitz(detail::series_mul(xinv, num)));
            }
        }
    }
    return out;
}

template <class F>
Matrix<F> d_t(const SingularityFamily& fam, std::size_t p) {
    std::size_t m = fam.dim_w();
    Matrix<F> d(m, m);
    for (const auto& pl : fam.poles())
        if (pl.t_index == p)
            for (std::size_t r = 0; r < pl.w_dim; ++r) d(pl.w_offset + r, pl.w_offset + r) = F(1);
    return d;
}

template <class F>
std::vector<F> pole_positions(const SingularityFamily& fam, const std::vector<F>& point) {
    std::vector<F> t;
    for (const auto& pl : fam.poles()) t.push_back(point.at(pl.t_index));
    return t;
}

// Xi solving [Xi, T] = dT + Theta + [PQ, Theta] with the Frobenius-orthogonal gauge.
template <class F>
DeltaForm<F> xi_build(const SingularityFamily& fam, const std::vector<F>& point, const Matrix<F>& q, const Matrix<F>& p,
                      const DeltaForm<F>& theta, const SylvesterSolver<F>* solver = nullptr, double tol = 0.0) {
    std::optional<SylvesterSolver<F>> own;
    if (!solver) {
        std::vector<Matrix<F>> ns;
        for (const auto& n : fam.nilpotents()) ns.push_back(convert<F>(n));
        own.emplace(std::move(ns));
        solver = &*own;
    }
    auto t = pole_positions(fam, point);
    Matrix<F> pq = p * q;
    DeltaForm<F> out;
    out.names = theta.names;
    for (std::size_t k = 0; k < theta.values.size(); ++k) {
        const Matrix<F>& th = theta.values[k];
        Matrix<F> rhs = d_t<F>(fam, k) + th + commutator(pq, th);
        auto res = solver->solve(t, rhs);
        if (!res.residual.is_zero(tol * std::max(1.0, rhs.max_abs())))
            throw NotInRange("Sylvester right-hand side is not in the range of ad_T for " + theta.names[k]);
        out.values.push_back(std::move(res.xi));
    }
    return out;
}

inline DeltaForm<Scalar> xi_build_exact(const SingularityFamily& fam, const std::vector<Scalar>& point, const HObject& h,
                                        const DeltaForm<Scalar>& theta) {
    if (!is_stable(h)) throw NotStable("xi_build needs a stable datum");
    return xi_build<Scalar>(fam, point, h.Q(), h.P(), theta);
}

// Theta = -dT and Xi_ij = -P_i Q_j d log(t_i - t_j) for Fuchsian families.
inline std::pair<DeltaForm<Scalar>, DeltaForm<Scalar>> schlesinger_closed_forms(const SingularityFamily& fam,
                                                                                 const std::vector<Scalar>& point,
                                                                                 const HObject& h) {
    if (!fam.fuchsian()) throw NotFuchsian("closed forms need all irregular types to vanish");
    std::size_t m = fam.dim_w(), np = fam.param_count();
    DeltaForm<Scalar> theta, xi;
    theta.names = xi.names = fam.param_names();
    const auto& pls = fam.poles();
    for (std::size_t k = 0; k < np; ++k) {
        theta.values.push_back(-d_t<Scalar>(fam, k));
        Mat x(m, m);
        for (std::size_t i = 0; i < pls.size(); ++i)
            for (std::size_t j = 0; j < pls.size(); ++j) {
                if (i == j) continue;
                Scalar coef = Scalar(pls[i].t_index == k ? 1 : 0) - Scalar(pls[j].t_index == k ? 1 : 0);
                if (coef.is_zero()) continue;
                Scalar ti = point[pls[i].t_index], tj = point[pls[j].t_index];
                Mat blk = h.blocks()[i].P * h.blocks()[j].Q * (-coef / (ti - tj));
                x.set_block(pls[i].w_offset, pls[j].w_offset, blk);
            }
        xi.values.push_back(std::move(x));
    }
    return {std::move(theta), std::move(xi)};
}

// Initial datum (Q, P) = g . (X, Y) for jets g at every pole.
inline HObject family_datum(const SingularityFamily& fam, const std::vector<Scalar>& point, const GTildeElement& g) {
    HObject cf = fam.closed_form(point);
    std::vector<HBlock> blocks;
    for (const auto& b : cf.blocks()) blocks.push_back(b);
    GTildeElement trimmed;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        GaugeJet j = g.jets.at(i);
        j.coeffs.resize(nilpotency_index(blocks[i].N), Mat(fam.dim_v(), fam.dim_v()));
        trimmed.jets.push_back(std::move(j));
    }
    return gtilde_act(trimmed, cf);
}

// Extended representation: A = Q (x - T)^{-1} P and Omega = Q (x - T)^{-1} Theta P.
struct ExtendedConnection {
    HObject h;
    DeltaForm<Scalar> theta;

    ConnectionS a() const { return phi(HObject(h.dim_v(), Mat(h.dim_v(), h.dim_v()), h.blocks())); }
    // Omega_p as a rational function of x, written in partial fractions at the poles.
    ConnectionS omega(const std::string& param) const {
        const Mat& th = theta.at(param);
        std::vector<HBlock> blocks;
        auto off = h.offsets();
        for (std::size_t i = 0; i < h.blocks().size(); ++i) {
            HBlock b = h.blocks()[i];
            b.P = th.block(off[i], off[i], b.dim(), b.dim()) * b.P;
            blocks.push_back(std::move(b));
        }
        return phi(HObject(h.dim_v(), Mat(h.dim_v(), h.dim_v()), std::move(blocks)));
    }
};

inline ExtendedConnection extended_connection(const HObject& h, const DeltaForm<Scalar>& theta) { return {h, theta}; }

// Dual side: B = -(T + PQ / y) dy together with Theta and Xi.
struct DualConnection {
    ConnectionS b;
    DeltaForm<Scalar> theta;
    DeltaForm<Scalar> xi;
};

inline DualConnection dual_connection(const HObject& h, const DeltaForm<Scalar>& theta, const DeltaForm<Scalar>& xi) {
    std::size_t m = h.dim_w();
    ConnectionS b(m, -h.T(), {Pole{Scalar(0), {-(h.P() * h.Q())}}});
    return {std::move(b), theta, xi};
}

}  // namespace harnad
