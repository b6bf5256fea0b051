#pragma once

#include "harnad/family.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>
#include <string>
#include <tuple>
#include <vector>

namespace harnad {

// How the part of Xi along G_T directions that jets also realise is fixed.
enum class FlowGauge { automatic, orthogonal, coulomb };

struct FlowOptions {
    std::size_t steps = 2000;
    double collision_tol = 1e-6;
    double residual_tol = 1e-3;
    double fd_step = 1e-5;
    double halving_fd_step = 1e-2;
    std::size_t probe_every = 1;  // 0 probes only the first and last step
    std::size_t fd_substeps = 2;
    double stability_tol = 1e-8;
    FlowGauge gauge = FlowGauge::automatic;
};

// Parameters and one jet per pole; (Q, P) = g . (X(s), Y(s)) is cached.
struct FlowState {
    std::vector<cplx> params;
    std::vector<std::vector<CMat>> jets;
    CMat Q;
    CMat P;
};

// Piecewise-linear path from the base point through full parameter vectors.
struct FlowPath {
    std::vector<std::vector<Scalar>> waypoints;
};

struct NamedValues {
    std::vector<std::string> names;
    std::vector<double> values;

    void set(const std::string& name, double v) {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) {
                values[i] = v;
                return;
            }
        names.push_back(name);
        values.push_back(v);
    }
    void raise(const std::string& name, double v) {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) {
                values[i] = std::max(values[i], v);
                return;
            }
        set(name, v);
    }
    double get(const std::string& name) const {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return values[i];
        throw InvalidInput("unknown residual '" + name + "'");
    }
    double max() const {
        double m = 0;
        for (double v : values) m = std::max(m, v);
        return m;
    }
};

inline const std::vector<std::string>& derivative_residual_names() {
    static const std::vector<std::string> names{"dPQ", "dTheta", "dXi", "primal_mixed", "primal_delta"};
    return names;
}

class FlowEngine {
public:
    // h0 fixes the directions of G_T that jets can also realise; Xi is kept Frobenius-orthogonal to them.
    // Orthogonal keeps Xi Frobenius-orthogonal to those directions (the Schlesinger gauge for Fuchsian families);
    // coulomb keeps (Q, P) on the affine slice through h0 orthogonal to their orbit.
    FlowEngine(const SingularityFamily& fam, const HObject& h0, FlowGauge gauge = FlowGauge::automatic)
        : fam_(&fam), solver_(complex_nilpotents(fam)), n_(complex_nilpotents(fam)), q0_(to_complex(h0.Q())), p0_(to_complex(h0.P())) {
        coulomb_ = gauge == FlowGauge::coulomb || (gauge == FlowGauge::automatic && !fam.fuchsian());
        std::size_t m = fam.dim_w();
        for (const auto& pl : fam.poles()) {
            std::vector<std::pair<CMat, CMat>> cr;
            for (const auto& g : pl.groups) {
                if (!g.coeff_index.empty()) {
                    cr.emplace_back();
                    continue;
                }
                auto [c, r] = cr_factorize(g.L);
                cr.emplace_back(to_complex(c), to_complex(r));
            }
            regular_.push_back(std::move(cr));
            for (const auto& kv : kernel_basis(ad_operator(pl.N))) {
                Mat z(m, m);
                z.set_block(pl.w_offset, pl.w_offset, unvec(kv, pl.w_dim, pl.w_dim));
                ker_.push_back(to_complex(z));
            }
        }
        realisable_ = realisable_directions(h0);
        for (const auto& h : realisable_) {
            slice_q_.push_back(-(q0_ * h));
            slice_p_.push_back(h * p0_);
        }
    }

    const SingularityFamily& family() const { return *fam_; }
    std::size_t param_count() const { return fam_->param_count(); }
    std::size_t dim_w() const { return solver_.size(); }

    std::vector<cplx> positions(const std::vector<cplx>& params) const { return pole_positions(*fam_, params); }

    CMat T(const std::vector<cplx>& params) const {
        auto t = positions(params);
        std::vector<CMat> parts;
        for (std::size_t i = 0; i < n_.size(); ++i) parts.push_back(CMat::scalar(n_[i].rows(), t[i]) + n_[i]);
        return block_diag(parts);
    }

    DeltaForm<cplx> theta(const std::vector<cplx>& params) const { return theta_build<cplx>(*fam_, params); }

    // Closed-form X_i (or its derivative along v when deriv is set) and Y_i at every pole.
    std::vector<std::pair<CMat, CMat>> closed_xy(const std::vector<cplx>& params, const std::vector<cplx>* deriv = nullptr) const {
        std::size_t n = fam_->dim_v();
        std::vector<std::pair<CMat, CMat>> out;
        for (std::size_t i = 0; i < fam_->poles().size(); ++i) {
            const auto& pl = fam_->poles()[i];
            CMat x(n, pl.w_dim), y(pl.w_dim, n);
            for (std::size_t a = 0; a < pl.groups.size(); ++a) {
                const auto& g = pl.groups[a];
                if (g.coeff_index.empty()) {
                    if (!deriv) {
                        x.set_block(g.v_offset, g.w_offset, regular_[i][a].first);
                        y.set_block(g.w_offset, g.v_offset, regular_[i][a].second);
                    }
                    continue;
                }
                std::size_t d = g.v_dim, k = g.order;
                const auto& src = deriv ? *deriv : params;
                for (std::size_t r = 0; r + 1 < k; ++r)
                    x.set_block(g.v_offset, g.w_offset + r * d, CMat::scalar(d, src[g.coeff_index[k - 2 - r]]));
                if (!deriv) {
                    x.set_block(g.v_offset, g.w_offset + (k - 1) * d, to_complex(g.L));
                    y.set_block(g.w_offset + (k - 1) * d, g.v_offset, CMat::identity(d));
                }
            }
            out.emplace_back(std::move(x), std::move(y));
        }
        return out;
    }

    // (Q, P) = g . (X, Y) at the state's parameters.
    void assemble(FlowState& s) const {
        auto xy = closed_xy(s.params);
        std::size_t n = fam_->dim_v(), m = dim_w();
        s.Q = CMat(n, m);
        s.P = CMat(m, n);
        for (std::size_t i = 0; i < xy.size(); ++i) {
            const auto& pl = fam_->poles()[i];
            const auto& jet = s.jets[i];
            auto inv = detail::series_inverse(jet);
            CMat np = CMat::identity(pl.w_dim), q(n, pl.w_dim), p(pl.w_dim, n);
            for (std::size_t j = 0; j < jet.size(); ++j) {
                q += jet[j] * xy[i].first * np;
                p += np * xy[i].second * inv[j];
                np = np * n_[i];
            }
            s.Q.set_block(0, pl.w_offset, q);
            s.P.set_block(pl.w_offset, 0, p);
        }
    }

    CMat rhs(const FlowState& s, const CMat& dt, const CMat& th) const {
        CMat pq = s.P * s.Q;
        return dt + th + commutator(pq, th);
    }

    struct Velocity {
        CMat xi;
        std::vector<std::vector<CMat>> eta;  // jet velocity, d g = eta g
        double sylvester = 0;
    };

    // Xi along v, with the jet velocity keeping (Q, P) in the orbit of the closed form.
    Velocity velocity(const FlowState& s, const std::vector<cplx>& v, const DeltaForm<cplx>* th_all = nullptr) const {
        std::size_t n = fam_->dim_v(), m = dim_w();
        CMat th;
        if (th_all) {
            th = th_all->contract(v);
        } else {
            th = theta(s.params).contract(v);
        }
        CMat dt(m, m);
        for (std::size_t p = 0; p < v.size(); ++p)
            if (v[p] != cplx(0)) dt += d_t<cplx>(*fam_, p) * v[p];
        CMat r = rhs(s, dt, th);
        CMat xif = solver_.solve(positions(s.params), r).xi;

        auto dxy = closed_xy(s.params, &v);
        CMat transport(n, m);
        for (std::size_t i = 0; i < dxy.size(); ++i) {
            const auto& pl = fam_->poles()[i];
            CMat np = CMat::identity(pl.w_dim), q(n, pl.w_dim);
            for (std::size_t j = 0; j < s.jets[i].size(); ++j) {
                q += s.jets[i][j] * dxy[i].first * np;
                np = np * n_[i];
            }
            transport.set_block(0, pl.w_offset, q);
        }

        // unknowns: coefficients of K in Ker ad_T, then jet velocities
        std::vector<CMat> cols;
        std::size_t rows = 2 * n * m + realisable_.size();
        for (const auto& z : ker_) {
            CMat c(rows, 1);
            CMat qz = -(s.Q * z), zp = z * s.P;
            c.set_block(0, 0, vec(qz));
            c.set_block(n * m, 0, vec(zp));
            for (std::size_t h = 0; h < realisable_.size(); ++h)
                c(2 * n * m + h, 0) = coulomb_ ? slice_pairing(h, qz, zp) : frob(realisable_[h], z);
            cols.push_back(std::move(c));
        }
        std::vector<std::tuple<std::size_t, std::size_t, std::size_t, std::size_t>> eta_index;
        for (std::size_t i = 0; i < fam_->poles().size(); ++i) {
            const auto& pl = fam_->poles()[i];
            CMat qi = s.Q.block(0, pl.w_offset, n, pl.w_dim), pi = s.P.block(pl.w_offset, 0, pl.w_dim, n);
            CMat np = CMat::identity(pl.w_dim);
            for (std::size_t j = 0; j < s.jets[i].size(); ++j) {
                CMat qn = qi * np, np_p = np * pi;
                for (std::size_t a = 0; a < n; ++a)
                    for (std::size_t b = 0; b < n; ++b) {
                        CMat dq(n, m), dp(m, n);
                        for (std::size_t c = 0; c < pl.w_dim; ++c) dq(a, pl.w_offset + c) = -qn(b, c);
                        for (std::size_t c = 0; c < pl.w_dim; ++c) dp(pl.w_offset + c, b) = np_p(c, a);
                        CMat col(rows, 1);
                        col.set_block(0, 0, vec(dq));
                        col.set_block(n * m, 0, vec(dp));
                        cols.push_back(std::move(col));
                        eta_index.emplace_back(i, j, a, b);
                    }
                np = np * n_[i];
            }
        }
        CMat sys = hstack(cols, rows);
        CMat b(rows, 1);
        b.set_block(0, 0, vec(CMat(s.Q * xif + transport)));
        b.set_block(n * m, 0, vec(CMat(-(xif * s.P))));
        if (coulomb_)
            for (std::size_t h = 0; h < realisable_.size(); ++h)
                b(2 * n * m + h, 0) = -slice_pairing(h, CMat(-(s.Q * xif)), CMat(xif * s.P));
        auto x = solve(sys, b, 1e-11 * std::max(1.0, sys.max_abs()));
        if (!x) throw NotInRange("no jet velocity keeps the datum in the closed-form orbit");
        Velocity out;
        out.xi = xif;
        for (std::size_t k = 0; k < ker_.size(); ++k) out.xi += ker_[k] * (*x)(k, 0);
        out.eta.resize(s.jets.size());
        for (std::size_t i = 0; i < s.jets.size(); ++i) out.eta[i].assign(s.jets[i].size(), CMat(n, n));
        for (std::size_t e = 0; e < eta_index.size(); ++e) {
            auto [i, j, a, bb] = eta_index[e];
            out.eta[i][j](a, bb) = (*x)(ker_.size() + e, 0);
        }
        out.sylvester = (commutator(out.xi, T(s.params)) - r).max_abs();
        return out;
    }

    // Xi for every parameter, with the largest Sylvester residual.
    DeltaForm<cplx> xi(const FlowState& s, const DeltaForm<cplx>& th, double* residual = nullptr) const {
        DeltaForm<cplx> out;
        out.names = th.names;
        double worst = 0;
        for (std::size_t p = 0; p < th.values.size(); ++p) {
            std::vector<cplx> v(param_count(), cplx(0));
            v[p] = 1;
            auto vel = velocity(s, v, &th);
            worst = std::max(worst, vel.sylvester);
            out.values.push_back(std::move(vel.xi));
        }
        if (residual) *residual = worst;
        return out;
    }

    FlowState rk4_step(const FlowState& s, const std::vector<cplx>& v, double h) const {
        using Jets = std::vector<std::vector<CMat>>;
        auto deriv = [&](const FlowState& x) {
            auto vel = velocity(x, v);
            Jets d;
            for (std::size_t i = 0; i < x.jets.size(); ++i) d.push_back(detail::series_mul(vel.eta[i], x.jets[i]));
            return d;
        };
        auto shifted = [&](const FlowState& x, const Jets& d, double a) {
            FlowState y{x.params, x.jets, {}, {}};
            for (std::size_t i = 0; i < d.size(); ++i)
                for (std::size_t j = 0; j < d[i].size(); ++j) y.jets[i][j] += d[i][j] * cplx(a);
            for (std::size_t p = 0; p < v.size(); ++p) y.params[p] += v[p] * a;
            assemble(y);
            return y;
        };
        auto k1 = deriv(s);
        auto k2 = deriv(shifted(s, k1, h / 2));
        auto k3 = deriv(shifted(s, k2, h / 2));
        auto k4 = deriv(shifted(s, k3, h));
        FlowState out{s.params, s.jets, {}, {}};
        cplx w(h / 6);
        for (std::size_t i = 0; i < out.jets.size(); ++i)
            for (std::size_t j = 0; j < out.jets[i].size(); ++j)
                out.jets[i][j] += (k1[i][j] + k2[i][j] * cplx(2) + k3[i][j] * cplx(2) + k4[i][j]) * w;
        for (std::size_t p = 0; p < v.size(); ++p) out.params[p] += v[p] * h;
        assemble(out);
        return out;
    }

    FlowState flow_along(const FlowState& s, std::size_t param, double dist, std::size_t substeps) const {
        std::vector<cplx> v(param_count(), cplx(0));
        v[param] = 1;
        FlowState x = s;
        for (std::size_t k = 0; k < substeps; ++k) x = rk4_step(x, v, dist / static_cast<double>(substeps));
        return x;
    }

    double min_separation(const std::vector<cplx>& params) const {
        auto t = positions(params);
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < t.size(); ++i)
            for (std::size_t j = 0; j < i; ++j) m = std::min(m, std::abs(t[i] - t[j]));
        return m;
    }

    bool stable(const FlowState& s, double tol) const {
        std::size_t m = dim_w();
        if (m == 0) return true;
        CMat t = T(s.params);
        std::vector<CMat> ctrl, obs;
        CMat x = s.P, y = s.Q;
        for (std::size_t k = 0; k < m; ++k) {
            ctrl.push_back(x);
            obs.push_back(y);
            x = t * x;
            y = y * t;
        }
        CMat c = hstack(ctrl, m), o = vstack(obs, m);
        return rank(c, tol * std::max(1.0, c.max_abs())) == m && rank(o, tol * std::max(1.0, o.max_abs())) == m;
    }

    // Probe points on a circle enclosing every pole.
    std::vector<cplx> probe_points(const std::vector<cplx>& params) const {
        auto t = positions(params);
        cplx c(0);
        for (auto x : t) c += x;
        c /= static_cast<double>(t.size());
        double r = 0;
        for (auto x : t) r = std::max(r, std::abs(x - c));
        r += 1;
        return {c + std::polar(r, 0.3), c + std::polar(r, 2.4), c + std::polar(r, 4.4)};
    }

    std::size_t realisable_dim() const { return realisable_.size(); }

private:
    static std::vector<CMat> complex_nilpotents(const SingularityFamily& fam) {
        std::vector<CMat> v;
        for (const auto& n : fam.nilpotents()) v.push_back(to_complex(n));
        return v;
    }

    static cplx frob(const CMat& a, const CMat& b) {
        cplx s(0);
        for (std::size_t i = 0; i < a.data().size(); ++i) s += std::conj(a.data()[i]) * b.data()[i];
        return s;
    }

    // Rate of change of <(-Q0 h, h P0), (Q, P)> when (Q, P) moves by (dq, dp).
    cplx slice_pairing(std::size_t h, const CMat& dq, const CMat& dp) const {
        return frob(slice_q_[h], dq) + frob(slice_p_[h], dp);
    }

    // Basis of the zeta in Ker ad_T whose action (-Q zeta, zeta P) equals a jet action at h0, computed exactly.
    std::vector<CMat> realisable_directions(const HObject& h0) const {
        std::size_t n = fam_->dim_v(), m = dim_w();
        std::vector<Mat> ker;
        for (const auto& pl : fam_->poles())
            for (const auto& kv : kernel_basis(ad_operator(pl.N))) {
                Mat z(m, m);
                z.set_block(pl.w_offset, pl.w_offset, unvec(kv, pl.w_dim, pl.w_dim));
                ker.push_back(std::move(z));
            }
        Mat q = h0.Q(), p = h0.P();
        std::vector<Mat> cols;
        for (const auto& z : ker) cols.push_back(vstack<Scalar>({vec(Mat(-(q * z))), vec(Mat(z * p))}, 1));
        for (std::size_t i = 0; i < fam_->poles().size(); ++i) {
            const auto& pl = fam_->poles()[i];
            const HBlock& b = h0.blocks()[i];
            Mat np = Mat::identity(pl.w_dim);
            for (std::size_t j = 0; j < nilpotency_index(pl.N); ++j) {
                Mat qn = b.Q * np, npp = np * b.P;
                for (std::size_t a = 0; a < n; ++a)
                    for (std::size_t c = 0; c < n; ++c) {
                        Mat dq(n, m), dp(m, n);
                        for (std::size_t w = 0; w < pl.w_dim; ++w) dq(a, pl.w_offset + w) = -qn(c, w);
                        for (std::size_t w = 0; w < pl.w_dim; ++w) dp(pl.w_offset + w, c) = npp(w, a);
                        cols.push_back(vstack<Scalar>({vec(dq), vec(dp)}, 1));
                    }
                np = np * pl.N;
            }
        }
        Mat sys = hstack(cols, 2 * n * m);
        SpanBuilder<Scalar> span(m * m);
        std::vector<CMat> out;
        for (const auto& kv : kernel_basis(sys)) {
            Mat z(m, m);
            for (std::size_t k = 0; k < ker.size(); ++k) z += ker[k] * kv(k, 0);
            if (span.add(vec(z))) out.push_back(to_complex(z));
        }
        return out;
    }

    const SingularityFamily* fam_;
    SylvesterSolver<cplx> solver_;
    std::vector<CMat> n_;
    CMat q0_, p0_;
    bool coulomb_ = false;
    std::vector<std::vector<std::pair<CMat, CMat>>> regular_;
    std::vector<CMat> ker_;
    std::vector<CMat> realisable_;
    std::vector<CMat> slice_q_, slice_p_;
};

// Named flatness residuals at a state; derivatives by central differences of isomonodromic neighbours.
inline NamedValues flatness_residuals(const FlowEngine& eng, const FlowState& s, double fd_step, std::size_t substeps = 2) {
    std::size_t np = eng.param_count();
    NamedValues out;
    CMat t = eng.T(s.params);
    auto th = eng.theta(s.params);
    double syl = 0;
    auto xi = eng.xi(s, th, &syl);
    CMat pq = s.P * s.Q;

    double tc = 0, tw = 0;
    for (std::size_t p = 0; p < np; ++p) {
        tc = std::max(tc, commutator(t, th.values[p]).max_abs());
        for (std::size_t q = p + 1; q < np; ++q) tw = std::max(tw, commutator(th.values[p], th.values[q]).max_abs());
    }
    out.set("sylvester", syl);
    out.set("theta_commutes_T", tc);
    out.set("theta_wedge", tw);

    std::vector<FlowState> plus, minus;
    std::vector<DeltaForm<cplx>> th_plus, th_minus, xi_plus, xi_minus;
    for (std::size_t p = 0; p < np; ++p) {
        plus.push_back(eng.flow_along(s, p, fd_step, substeps));
        minus.push_back(eng.flow_along(s, p, -fd_step, substeps));
        th_plus.push_back(eng.theta(plus.back().params));
        th_minus.push_back(eng.theta(minus.back().params));
        xi_plus.push_back(eng.xi(plus.back(), th_plus.back()));
        xi_minus.push_back(eng.xi(minus.back(), th_minus.back()));
    }
    cplx inv2h(1.0 / (2 * fd_step));
    // d_p of a quantity f(state) along the isomonodromic neighbours
    auto dpq = [&](std::size_t p) { return (plus[p].P * plus[p].Q - minus[p].P * minus[p].Q) * inv2h; };
    auto dth = [&](std::size_t p, std::size_t q) { return (th_plus[p].values[q] - th_minus[p].values[q]) * inv2h; };
    auto dxi = [&](std::size_t p, std::size_t q) { return (xi_plus[p].values[q] - xi_minus[p].values[q]) * inv2h; };

    double r_pq = 0, r_th = 0, r_xi = 0;
    for (std::size_t p = 0; p < np; ++p) {
        r_pq = std::max(r_pq, (dpq(p) - commutator(xi.values[p], pq)).max_abs());
        for (std::size_t q = p + 1; q < np; ++q) {
            CMat a = dth(p, q) - dth(q, p) - commutator(th.values[p], xi.values[q]) + commutator(th.values[q], xi.values[p]);
            r_th = std::max(r_th, a.max_abs());
            CMat b = dxi(p, q) - dxi(q, p) - commutator(xi.values[p], xi.values[q]);
            r_xi = std::max(r_xi, b.max_abs());
        }
    }
    out.set("dPQ", r_pq);
    out.set("dTheta", r_th);
    out.set("dXi", r_xi);

    std::size_t m = t.rows();
    double r_mixed = 0, r_delta = 0;
    for (cplx x : eng.probe_points(s.params)) {
        CMat res = inverse(CMat(CMat::scalar(m, x) - t));
        CMat a = s.Q * res * s.P;
        auto omega = [&](const FlowState& st, const CMat& resolvent, const CMat& theta_p) {
            return st.Q * resolvent * theta_p * st.P;
        };
        std::vector<CMat> om_plus(np), om_minus(np), a_plus(np), a_minus(np);
        std::vector<std::vector<CMat>> omq_plus(np), omq_minus(np);
        for (std::size_t p = 0; p < np; ++p) {
            CMat rp = inverse(CMat(CMat::scalar(m, x) - eng.T(plus[p].params)));
            CMat rm = inverse(CMat(CMat::scalar(m, x) - eng.T(minus[p].params)));
            a_plus[p] = plus[p].Q * rp * plus[p].P;
            a_minus[p] = minus[p].Q * rm * minus[p].P;
            for (std::size_t q = 0; q < np; ++q) {
                omq_plus[p].push_back(omega(plus[p], rp, th_plus[p].values[q]));
                omq_minus[p].push_back(omega(minus[p], rm, th_minus[p].values[q]));
            }
        }
        std::vector<CMat> om;
        for (std::size_t p = 0; p < np; ++p) om.push_back(omega(s, res, th.values[p]));
        for (std::size_t p = 0; p < np; ++p) {
            CMat da = (a_plus[p] - a_minus[p]) * inv2h;
            CMat dx_om = -(s.Q * res * res * th.values[p] * s.P);
            r_mixed = std::max(r_mixed, (da - dx_om + commutator(a, om[p])).max_abs());
            for (std::size_t q = p + 1; q < np; ++q) {
                CMat dpq_om = (omq_plus[p][q] - omq_minus[p][q]) * inv2h;
                CMat dqp_om = (omq_plus[q][p] - omq_minus[q][p]) * inv2h;
                r_delta = std::max(r_delta, (dpq_om - dqp_om - commutator(om[p], om[q])).max_abs());
            }
        }
    }
    out.set("primal_mixed", r_mixed);
    out.set("primal_delta", r_delta);
    return out;
}

// Expected coefficients of the conserved characteristic polynomials at each pole, from the parameters.
struct ExponentProbe {
    std::size_t pole = 0;
    std::size_t group = 0;
    bool leading = false;  // leading coefficient spectrum instead of group exponents
};

inline std::vector<cplx> poly_product(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    std::vector<cplx> c(a.size() + b.size() - 1, cplx(0));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) c[i + j] += a[i] * b[j];
    return c;
}

inline double coeff_distance(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    double d = 0;
    for (std::size_t k = 0; k < std::max(a.size(), b.size()); ++k) {
        cplx x = k < a.size() ? a[k] : cplx(0), y = k < b.size() ? b[k] : cplx(0);
        d = std::max(d, std::abs(x - y));
    }
    return d;
}

// Spectral drift of the formal invariants along the flow:
// at every pole the spectrum of the leading coefficient; at poles of order <= 2 the exponents L_a of each group
// (spectrum of E_a A_1 E_a for the eigenprojections E_a of the leading coefficient); at infinity the spectrum of QP.
inline NamedValues exponent_drift(const FlowEngine& eng, const FlowState& s, const std::vector<cplx>& qp_charpoly0) {
    const SingularityFamily& fam = eng.family();
    std::size_t n = fam.dim_v();
    NamedValues out;
    double worst_residue = 0, worst_leading = 0;
    for (const auto& pl : fam.poles()) {
        std::size_t k = 1;
        for (const auto& g : pl.groups) k = std::max(k, g.order);
        CMat qi = s.Q.block(0, pl.w_offset, n, pl.w_dim), pi = s.P.block(pl.w_offset, 0, pl.w_dim, n);
        CMat nk = to_complex(pl.N);
        CMat npow = CMat::identity(pl.w_dim);
        for (std::size_t j = 1; j < k; ++j) npow = npow * nk;
        CMat lead = qi * npow * pi;
        CMat a1 = qi * pi;
        std::vector<cplx> expect_lead{cplx(1)};
        struct Eig {
            cplx value;
            std::size_t mult;
            const GroupLayout* g;
        };
        std::vector<Eig> eigs;
        for (const auto& g : pl.groups) {
            cplx top = g.order == k && !g.coeff_index.empty() ? s.params[g.coeff_index.back()] : cplx(0);
            if (k == 1) top = 0;
            for (std::size_t r = 0; r < g.v_dim; ++r) expect_lead = poly_product(expect_lead, {-top, cplx(1)});
            eigs.push_back({top, g.v_dim, &g});
        }
        if (k > 1) worst_leading = std::max(worst_leading, coeff_distance(charpoly_coeffs(lead), expect_lead));
        if (k > 2) continue;
        for (const auto& e : eigs) {
            CMat proj = CMat::identity(n);
            if (k == 2)
                for (const auto& f : eigs)
                    if (std::abs(f.value - e.value) > 0) proj = proj * (lead - CMat::scalar(n, f.value)) * (cplx(1) / (e.value - f.value));
            CMat restricted = proj * a1 * proj;
            std::vector<cplx> expect = charpoly_coeffs(to_complex(e.g->L));
            std::vector<cplx> shift(n - e.g->v_dim + 1, cplx(0));
            shift.back() = 1;
            expect = poly_product(expect, shift);
            worst_residue = std::max(worst_residue, coeff_distance(charpoly_coeffs(restricted), expect));
        }
    }
    out.set("drift_exponents", worst_residue);
    out.set("drift_leading", worst_leading);
    out.set("drift_infinity", coeff_distance(charpoly_coeffs(CMat(s.Q * s.P)), qp_charpoly0));
    return out;
}

struct FlowRow {
    std::size_t step = 0;
    std::vector<cplx> params;
    NamedValues residuals;
    NamedValues drift;
};

struct HalvingProbe {
    std::size_t step = 0;
    NamedValues coarse;
    NamedValues fine;
    double min_ratio = std::numeric_limits<double>::infinity();
    std::size_t measured = 0;
};

struct FlowReport {
    std::vector<std::string> param_names;
    std::vector<FlowRow> rows;
    std::vector<HalvingProbe> halving;
    FlowState final_state;
    NamedValues max_residuals;
    NamedValues max_drift;
    double seconds = 0;

    double min_halving_ratio() const {
        double r = std::numeric_limits<double>::infinity();
        for (const auto& h : halving) r = std::min(r, h.min_ratio);
        return r;
    }
    std::size_t halving_measured() const {
        std::size_t k = 0;
        for (const auto& h : halving) k += h.measured;
        return k;
    }
};

// Residuals at fd steps h and h/2; ratios are taken where the coarse residual clears the noise floor.
inline HalvingProbe halving_probe(const FlowEngine& eng, const FlowState& s, double h, std::size_t substeps,
                                  double noise_floor = 1e-10) {
    HalvingProbe hp;
    hp.coarse = flatness_residuals(eng, s, h, substeps);
    hp.fine = flatness_residuals(eng, s, h / 2, substeps);
    for (const auto& name : derivative_residual_names()) {
        double c = hp.coarse.get(name), f = hp.fine.get(name);
        if (c < noise_floor) continue;
        ++hp.measured;
        hp.min_ratio = std::min(hp.min_ratio, f > 0 ? c / f : std::numeric_limits<double>::infinity());
    }
    return hp;
}

inline std::vector<cplx> to_complex_point(const std::vector<Scalar>& p) {
    std::vector<cplx> out;
    for (const auto& x : p) out.push_back(x.to_complex());
    return out;
}

// Jets g with h = g . (X, Y) at the base point. Both Q = sum g_j X N^j and sum N^l P g_l = Y are linear in g;
// when they leave freedom, kernel directions are tried until the leading coefficient is invertible.
inline GTildeElement recover_jets(const SingularityFamily& fam, const HObject& h) {
    if (h.dim_v() != fam.dim_v() || h.dim_w() != fam.dim_w() || h.blocks().size() != fam.poles().size())
        throw DimensionMismatch("datum does not match the family");
    HObject cf = fam.closed_form(fam.base_point());
    std::size_t n = fam.dim_v();
    GTildeElement g;
    for (std::size_t i = 0; i < cf.blocks().size(); ++i) {
        const HBlock& c = cf.blocks()[i];
        const HBlock& b = h.blocks()[i];
        if (b.N != c.N || b.t != c.t) throw InvalidInput("datum blocks must carry the family's T");
        std::size_t k = std::max<std::size_t>(nilpotency_index(c.N), 1), w = c.dim();
        std::vector<Mat> xn, np;
        Mat pw = Mat::identity(w);
        for (std::size_t j = 0; j < k; ++j) {
            xn.push_back(c.Q * pw);
            np.push_back(pw);
            pw = pw * c.N;
        }
        std::vector<Mat> cols;
        for (std::size_t j = 0; j < k; ++j)
            for (std::size_t bb = 0; bb < n; ++bb)
                for (std::size_t a = 0; a < n; ++a) {
                    Mat e(n, n);
                    e(a, bb) = Scalar(1);
                    cols.push_back(vstack<Scalar>({vec(Mat(e * xn[j])), vec(Mat(np[j] * b.P * e))}, 1));
                }
        Mat sys = hstack(cols, 2 * n * w);
        Mat rhs = vstack<Scalar>({vec(b.Q), vec(c.P)}, 1);
        auto x = solve(sys, rhs);
        if (!x) throw InvalidInput("datum is not in the jet orbit of the closed form");
        auto to_jet = [&](const Mat& v) {
            GaugeJet jet;
            for (std::size_t j = 0; j < k; ++j) jet.coeffs.push_back(unvec(v, n, n, j * n * n));
            return jet;
        };
        GaugeJet jet = to_jet(*x);
        if (!is_invertible(jet.coeffs[0])) {
            auto basis = kernel_basis(sys);
            std::mt19937_64 rng(1);
            std::uniform_int_distribution<int> coef(-3, 3);
            bool found = false;
            for (int attempt = 0; attempt < 64 && !found && !basis.empty(); ++attempt) {
                Mat v = *x;
                for (const auto& kv : basis) v += kv * Scalar(coef(rng));
                jet = to_jet(v);
                found = is_invertible(jet.coeffs[0]);
            }
            if (!found) throw InvalidInput("datum is not in the jet orbit of the closed form");
        }
        g.jets.push_back(std::move(jet));
    }
    if (!(gtilde_act(g, cf) == h)) throw InvalidInput("datum is not in the jet orbit of the closed form");
    return g;
}

inline FlowReport flow_integrate(const SingularityFamily& fam, const GTildeElement& g0, const FlowPath& path,
                                 const FlowOptions& opt = {}) {
    auto start = std::chrono::steady_clock::now();
    HObject initial = family_datum(fam, fam.base_point(), g0);
    if (!is_stable(initial)) throw NotStable("initial datum is not stable");
    if (opt.steps == 0) throw InvalidInput("steps must be positive");
    std::vector<std::vector<cplx>> pts;
    pts.push_back(to_complex_point(fam.base_point()));
    for (const auto& w : path.waypoints) {
        if (w.size() != fam.param_count()) throw DimensionMismatch("waypoint must list every parameter");
        pts.push_back(to_complex_point(w));
    }
    std::vector<double> len;
    double total = 0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        double l = 0;
        for (std::size_t p = 0; p < pts[i].size(); ++p) l += std::norm(pts[i][p] - pts[i - 1][p]);
        len.push_back(std::sqrt(l));
        total += len.back();
    }
    std::vector<std::size_t> seg_steps(len.size(), 0);
    if (total > 0) {
        std::size_t assigned = 0;
        for (std::size_t i = 0; i < len.size(); ++i) {
            seg_steps[i] = static_cast<std::size_t>(std::llround(static_cast<double>(opt.steps) * len[i] / total));
            if (len[i] > 0 && seg_steps[i] == 0) seg_steps[i] = 1;
            assigned += seg_steps[i];
        }
        for (std::size_t i = len.size(); i-- > 0 && assigned != opt.steps;) {
            if (len[i] == 0) continue;
            if (assigned > opt.steps && seg_steps[i] > 1) {
                std::size_t cut = std::min(assigned - opt.steps, seg_steps[i] - 1);
                seg_steps[i] -= cut;
                assigned -= cut;
            } else if (assigned < opt.steps) {
                seg_steps[i] += opt.steps - assigned;
                assigned = opt.steps;
            }
        }
    }

    FlowEngine eng(fam, initial, opt.gauge);
    FlowReport rep;
    rep.param_names = fam.param_names();
    FlowState s{pts.front(), {}, {}, {}};
    for (std::size_t i = 0; i < initial.blocks().size(); ++i) {
        std::vector<CMat> jet;
        for (std::size_t j = 0; j < nilpotency_index(initial.blocks()[i].N); ++j) jet.push_back(to_complex(g0.jets[i].at(j)));
        if (jet.empty()) jet.push_back(to_complex(g0.jets[i].at(0)));
        s.jets.push_back(std::move(jet));
    }
    eng.assemble(s);
    std::vector<cplx> qp0 = charpoly_coeffs(CMat(s.Q * s.P));

    std::size_t total_steps = 0;
    for (auto k : seg_steps) total_steps += k;
    std::vector<std::size_t> halving_at{0, total_steps / 2, total_steps};

    auto record = [&](std::size_t step, bool probe) {
        FlowRow row;
        row.step = step;
        row.params = s.params;
        if (probe) {
            row.residuals = flatness_residuals(eng, s, opt.fd_step, opt.fd_substeps);
            for (std::size_t i = 0; i < row.residuals.names.size(); ++i) {
                double v = row.residuals.values[i];
                if (!(v <= opt.residual_tol))
                    throw ResidualExceeded(row.residuals.names[i] + " residual " + std::to_string(v) + " at step " +
                                           std::to_string(step));
                rep.max_residuals.raise(row.residuals.names[i], v);
            }
        }
        row.drift = exponent_drift(eng, s, qp0);
        for (std::size_t i = 0; i < row.drift.names.size(); ++i) rep.max_drift.raise(row.drift.names[i], row.drift.values[i]);
        if (std::find(halving_at.begin(), halving_at.end(), step) != halving_at.end() &&
            (rep.halving.empty() || rep.halving.back().step != step)) {
            auto hp = halving_probe(eng, s, opt.halving_fd_step, opt.fd_substeps);
            hp.step = step;
            rep.halving.push_back(std::move(hp));
        }
        rep.rows.push_back(std::move(row));
    };

    record(0, true);
    std::size_t step = 0;
    for (std::size_t seg = 0; seg < seg_steps.size(); ++seg) {
        if (seg_steps[seg] == 0) continue;
        double h = len[seg] / static_cast<double>(seg_steps[seg]);
        std::vector<cplx> v;
        for (std::size_t p = 0; p < fam.param_count(); ++p) v.push_back((pts[seg + 1][p] - pts[seg][p]) / len[seg]);
        for (std::size_t k = 0; k < seg_steps[seg]; ++k) {
            FlowState next = eng.rk4_step(s, v, h);
            if (k + 1 == seg_steps[seg]) next.params = pts[seg + 1];
            if (eng.min_separation(next.params) < opt.collision_tol)
                throw PoleCollision("poles closer than " + std::to_string(opt.collision_tol) + " at step " +
                                    std::to_string(step + 1));
            for (const auto& x : next.Q.data())
                if (!std::isfinite(x.real()) || !std::isfinite(x.imag()))
                    throw ResidualExceeded("state blew up at step " + std::to_string(step + 1));
            s = std::move(next);
            ++step;
            if (!eng.stable(s, opt.stability_tol)) throw NotStable("datum lost stability at step " + std::to_string(step));
            bool probe = step == total_steps || (opt.probe_every > 0 && step % opt.probe_every == 0);
            record(step, probe);
        }
    }
    rep.final_state = s;
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rep;
}

inline FlowReport flow_integrate(const SingularityFamily& fam, const HObject& initial, const FlowPath& path,
                                 const FlowOptions& opt = {}) {
    return flow_integrate(fam, recover_jets(fam, initial), path, opt);
}

inline void write_flow_csv(std::ostream& os, const FlowReport& rep) {
    std::vector<std::string> res_names, drift_names;
    for (const auto& r : rep.rows) {
        if (res_names.empty() && !r.residuals.names.empty()) res_names = r.residuals.names;
        if (drift_names.empty() && !r.drift.names.empty()) drift_names = r.drift.names;
    }
    os << "step";
    for (const auto& n : rep.param_names) os << ',' << n << ".re," << n << ".im";
    for (const auto& n : res_names) os << ',' << n;
    for (const auto& n : drift_names) os << ',' << n;
    os << '\n';
    auto old = os.precision(17);
    for (const auto& r : rep.rows) {
        os << r.step;
        for (const auto& p : r.params) os << ',' << p.real() << ',' << p.imag();
        for (std::size_t i = 0; i < res_names.size(); ++i) {
            os << ',';
            if (!r.residuals.names.empty()) os << r.residuals.values[i];
        }
        for (std::size_t i = 0; i < drift_names.size(); ++i) os << ',' << r.drift.values[i];
        os << '\n';
    }
    os.precision(old);
}

}  // namespace harnad
