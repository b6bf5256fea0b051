#pragma once

#include "harnad/scalar.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace harnad {

// Univariate polynomial with ascending coefficients; the zero polynomial has no coefficients.
template <class F>
class Polynomial {
public:
    Polynomial() = default;
    explicit Polynomial(std::vector<F> coeffs) : c_(std::move(coeffs)) { trim(); }

    static Polynomial monomial(const F& a, std::size_t deg) {
        std::vector<F> c(deg + 1, F(0));
        c[deg] = a;
        return Polynomial(std::move(c));
    }
    static Polynomial linear_root(const F& r) { return Polynomial({-r, F(1)}); }

    const std::vector<F>& coeffs() const { return c_; }
    bool is_zero() const { return c_.empty(); }
    int degree() const { return static_cast<int>(c_.size()) - 1; }
    const F& leading() const { return c_.back(); }
    F coeff(std::size_t k) const { return k < c_.size() ? c_[k] : F(0); }

    F operator()(const F& x) const {
        F acc(0);
        for (std::size_t k = c_.size(); k-- > 0;) acc = acc * x + c_[k];
        return acc;
    }

    Polynomial derivative() const {
        if (c_.size() <= 1) return {};
        std::vector<F> d(c_.size() - 1, F(0));
        for (std::size_t k = 1; k < c_.size(); ++k) d[k - 1] = c_[k] * field_traits<F>::from_int(static_cast<long>(k));
        return Polynomial(std::move(d));
    }

    Polynomial monic() const {
        if (is_zero()) return {};
        F inv = F(1) / leading();
        std::vector<F> c(c_);
        for (auto& x : c) x *= inv;
        return Polynomial(std::move(c));
    }

    friend Polynomial operator+(const Polynomial& a, const Polynomial& b) {
        std::vector<F> c(std::max(a.c_.size(), b.c_.size()), F(0));
        for (std::size_t k = 0; k < a.c_.size(); ++k) c[k] += a.c_[k];
        for (std::size_t k = 0; k < b.c_.size(); ++k) c[k] += b.c_[k];
        return Polynomial(std::move(c));
    }
    friend Polynomial operator-(const Polynomial& a, const Polynomial& b) {
        std::vector<F> c(std::max(a.c_.size(), b.c_.size()), F(0));
        for (std::size_t k = 0; k < a.c_.size(); ++k) c[k] += a.c_[k];
        for (std::size_t k = 0; k < b.c_.size(); ++k) c[k] -= b.c_[k];
        return Polynomial(std::move(c));
    }
    friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
        if (a.is_zero() || b.is_zero()) return {};
        std::vector<F> c(a.c_.size() + b.c_.size() - 1, F(0));
        for (std::size_t i = 0; i < a.c_.size(); ++i)
            for (std::size_t j = 0; j < b.c_.size(); ++j) c[i + j] += a.c_[i] * b.c_[j];
        return Polynomial(std::move(c));
    }

    // Quotient and remainder of a by b.
    friend std::pair<Polynomial, Polynomial> divmod(const Polynomial& a, const Polynomial& b) {
        if (b.is_zero()) throw ZeroPolynomial("division by the zero polynomial");
        if (a.degree() < b.degree()) return {Polynomial(), a};
        std::vector<F> r(a.c_);
        std::vector<F> q(a.c_.size() - b.c_.size() + 1, F(0));
        F inv = F(1) / b.leading();
        for (std::size_t k = q.size(); k-- > 0;) {
            F f = r[k + b.c_.size() - 1] * inv;
            q[k] = f;
            for (std::size_t j = 0; j < b.c_.size(); ++j) r[k + j] -= f * b.c_[j];
        }
        r.resize(b.c_.size() - 1);
        return {Polynomial(std::move(q)), Polynomial(std::move(r))};
    }

    friend Polynomial gcd(Polynomial a, Polynomial b) {
        while (!b.is_zero()) {
            auto r = divmod(a, b).second;
            a = std::move(b);
            b = std::move(r);
        }
        return a.monic();
    }

    friend bool operator==(const Polynomial& a, const Polynomial& b) { return a.c_ == b.c_; }

private:
    void trim() {
        while (!c_.empty() && field_traits<F>::is_zero(c_.back(), 0.0)) c_.pop_back();
    }
    std::vector<F> c_;
};

using ExactPoly = Polynomial<Scalar>;

namespace detail {

inline mpz_class ceil_q(const mpq_class& q) {
    mpz_class r;
    mpz_cdiv_q(r.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
    return r;
}

// Integer-coefficient multiple of a rational polynomial.
inline std::vector<mpz_class> clear_denominators(const std::vector<mpq_class>& c) {
    mpz_class l = 1;
    for (const auto& x : c) {
        mpz_class d = x.get_den();
        mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), d.get_mpz_t());
    }
    std::vector<mpz_class> z;
    z.reserve(c.size());
    for (const auto& x : c) {
        mpq_class y = x * l;
        z.push_back(y.get_num());
    }
    return z;
}

}  // namespace detail

// All integer roots of a nonzero polynomial over Q(i), scanned over the Cauchy bound.
inline std::vector<std::int64_t> poly_integer_roots(const ExactPoly& p) {
    if (p.is_zero()) throw ZeroPolynomial("integer roots of the zero polynomial");
    // An integer root is a common root of the real and imaginary coefficient polynomials.
    std::vector<Scalar> re, im;
    for (const auto& c : p.coeffs()) {
        re.emplace_back(c.re());
        im.emplace_back(c.im());
    }
    ExactPoly g = gcd(ExactPoly(re), ExactPoly(im));
    if (g.degree() <= 0) return {};
    std::vector<mpq_class> q;
    for (const auto& c : g.coeffs()) q.push_back(c.re());
    std::vector<mpz_class> z = detail::clear_denominators(q);
    std::vector<std::int64_t> roots;
    std::size_t shift = 0;
    while (shift < z.size() && z[shift] == 0) ++shift;
    if (shift > 0) roots.push_back(0);
    z.erase(z.begin(), z.begin() + static_cast<long>(shift));
    if (z.size() <= 1) return roots;
    mpq_class lead = abs(mpq_class(z.back()));
    mpq_class bound = 0;
    for (std::size_t k = 0; k + 1 < z.size(); ++k) {
        mpq_class r = mpq_class(mpz_class(abs(z[k]))) / lead;
        if (r > bound) bound = r;
    }
    mpz_class b = detail::ceil_q(bound) + 1;
    if (b > mpz_class("1000000000")) throw InvalidInput("integer root bound too large to scan");
    long bl = b.get_si();
    const mpz_class& c0 = z.front();
    for (long k = -bl; k <= bl; ++k) {
        if (k == 0) continue;
        mpz_class kk = k;
        if (mpz_divisible_p(c0.get_mpz_t(), kk.get_mpz_t()) == 0) continue;
        mpz_class acc = 0;
        for (std::size_t j = z.size(); j-- > 0;) acc = acc * kk + z[j];
        if (acc == 0) roots.push_back(k);
    }
    std::sort(roots.begin(), roots.end());
    return roots;
}

namespace detail {

inline std::optional<mpq_class> rationalize(long double x, long double tol, long max_den) {
    long double a = x;
    mpz_class h0 = 1, h1 = 0, k0 = 0, k1 = 1;
    for (int it = 0; it < 64; ++it) {
        long double fl = std::floor(a);
        if (std::fabs(fl) > 1e15L) return std::nullopt;
        mpz_class ai = static_cast<long>(fl);
        mpz_class h2 = ai * h0 + h1, k2 = ai * k0 + k1;
        h1 = h0; h0 = h2; k1 = k0; k0 = k2;
        if (k0 > max_den) return std::nullopt;
        mpq_class q(h0, k0);
        q.canonicalize();
        long double approx = static_cast<long double>(h0.get_d()) / static_cast<long double>(k0.get_d());
        if (std::fabs(approx - x) <= tol * std::max<long double>(1, std::fabs(x))) return q;
        long double frac = a - fl;
        if (frac == 0) return q;
        a = 1 / frac;
    }
    return std::nullopt;
}

inline std::vector<std::complex<long double>> numeric_roots(const ExactPoly& p) {
    using C = std::complex<long double>;
    int n = p.degree();
    std::vector<C> c;
    ExactPoly mp = p.monic();
    for (const auto& x : mp.coeffs())
        c.emplace_back(static_cast<long double>(x.re().get_d()), static_cast<long double>(x.im().get_d()));
    auto eval = [&](C z) {
        C acc = 0;
        for (std::size_t k = c.size(); k-- > 0;) acc = acc * z + c[k];
        return acc;
    };
    long double radius = 1;
    for (int k = 0; k < n; ++k) radius = std::max(radius, 1 + std::abs(c[static_cast<std::size_t>(k)]));
    std::vector<C> z(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k)
        z[static_cast<std::size_t>(k)] = std::polar<long double>(radius * 0.7L, 2.0L * 3.14159265358979323846L * k / n + 0.4L);
    for (int it = 0; it < 2000; ++it) {
        long double change = 0;
        for (std::size_t i = 0; i < z.size(); ++i) {
            C den = 1;
            for (std::size_t j = 0; j < z.size(); ++j)
                if (j != i) den *= (z[i] - z[j]);
            if (std::abs(den) == 0) den = 1e-30L;
            C step = eval(z[i]) / den;
            z[i] -= step;
            change = std::max(change, std::abs(step));
        }
        if (change < 1e-18L * radius) break;
    }
    return z;
}

}  // namespace detail

struct ExactRoot {
    Scalar value;
    std::size_t multiplicity;
};

// Every root of p in Q(i) with multiplicity, or nullopt if some root lies outside Q(i).
inline std::optional<std::vector<ExactRoot>> gaussian_rational_roots(const ExactPoly& p) {
    if (p.is_zero()) throw ZeroPolynomial("roots of the zero polynomial");
    std::vector<ExactRoot> out;
    ExactPoly rest = p.monic();
    while (rest.degree() > 0) {
        ExactPoly sq = divmod(rest, gcd(rest, rest.derivative())).first.monic();
        bool found = false;
        for (const auto& z : detail::numeric_roots(sq)) {
            for (long double tol : {1e-15L, 1e-12L, 1e-9L}) {
                auto re = detail::rationalize(z.real(), tol, 1000000000L);
                auto im = detail::rationalize(z.imag(), tol, 1000000000L);
                if (!re || !im) continue;
                Scalar r(*re, *im);
                if (!sq(r).is_zero()) continue;
                std::size_t m = 0;
                ExactPoly lin = ExactPoly::linear_root(r);
                while (true) {
                    auto [q, rem] = divmod(rest, lin);
                    if (!rem.is_zero()) break;
                    rest = q;
                    ++m;
                }
                out.push_back({r, m});
                found = true;
                break;
            }
            if (found) break;
        }
        if (!found) return std::nullopt;
    }
    return out;
}

}  // namespace harnad
