#pragma once

#include "harnad/family.hpp"

#include <random>

namespace harnad::rnd {

using Rng = std::mt19937_64;

inline long uniform(Rng& rng, long lo, long hi) { return std::uniform_int_distribution<long>(lo, hi)(rng); }

inline bool coin(Rng& rng, int percent) { return uniform(rng, 0, 99) < percent; }

// Small Gaussian rational: mostly integers, sometimes halves, sometimes an imaginary part.
inline Scalar small(Rng& rng, long range = 2) {
    mpq_class re(uniform(rng, -range, range));
    if (coin(rng, 15)) re /= 2;
    mpq_class im(0);
    if (coin(rng, 15)) im = uniform(rng, -1, 1);
    return Scalar(re, im);
}

inline Scalar nonzero(Rng& rng, long range = 2) {
    Scalar s;
    do s = small(rng, range);
    while (s.is_zero());
    return s;
}

inline Mat matrix(Rng& rng, std::size_t r, std::size_t c, long range = 2) {
    Mat m(r, c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) m(i, j) = small(rng, range);
    return m;
}

// Random sparse integer matrix, density percent.
inline Mat sparse_int(Rng& rng, std::size_t r, std::size_t c, int density, long range = 1) {
    Mat m(r, c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j)
            if (coin(rng, density)) m(i, j) = Scalar(uniform(rng, -range, range));
    return m;
}

// Product of random unit triangular integer matrices: invertible with small entries and inverse.
inline Mat unimodular(Rng& rng, std::size_t n) {
    Mat l = Mat::identity(n), u = Mat::identity(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) {
            if (coin(rng, 50)) l(i, j) = Scalar(uniform(rng, -1, 1));
            if (coin(rng, 50)) u(j, i) = Scalar(uniform(rng, -1, 1));
        }
    return l * u;
}

inline Mat invertible(Rng& rng, std::size_t n, long range = 2) {
    for (;;) {
        Mat m = matrix(rng, n, n, range);
        if (is_invertible(m)) return m;
    }
}

inline Mat nilpotent(Rng& rng, std::size_t d) {
    Mat n(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i + 1; j < d; ++j)
            if (coin(rng, 60)) n(i, j) = Scalar(uniform(rng, -2, 2));
    Mat g = unimodular(rng, d);
    return g * n * inverse(g);
}

// G D G^{-1} with D upper triangular carrying the given diagonal.
inline Mat with_spectrum(Rng& rng, const std::vector<Scalar>& eig, bool jordan = true) {
    std::size_t n = eig.size();
    Mat d(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        d(i, i) = eig[i];
        if (jordan && i + 1 < n && eig[i + 1] == eig[i] && coin(rng, 50)) d(i, i + 1) = Scalar(1);
    }
    Mat g = unimodular(rng, n);
    return g * d * inverse(g);
}

inline ConnectionS connection(Rng& rng, std::size_t n, std::size_t poles, std::size_t max_order, bool constant_term,
                              long range = 2) {
    std::vector<Pole> ps;
    std::vector<long> used;
    for (std::size_t i = 0; i < poles; ++i) {
        long t;
        do t = uniform(rng, -4, 4);
        while (std::find(used.begin(), used.end(), t) != used.end());
        used.push_back(t);
        std::size_t k = static_cast<std::size_t>(uniform(rng, 1, static_cast<long>(max_order)));
        Pole p{Scalar(t), {}};
        for (std::size_t j = 0; j < k; ++j) p.coeffs.push_back(matrix(rng, n, n, range));
        ps.push_back(std::move(p));
    }
    Mat a0 = constant_term ? matrix(rng, n, n, range) : Mat(n, n);
    return ConnectionS(n, a0, std::move(ps));
}

// A connection whose constant term has a Q(i) spectrum, so its dual can be reblocked exactly.
inline ConnectionS dualizable_connection(Rng& rng, std::size_t n, std::size_t poles, std::size_t max_order) {
    ConnectionS a = connection(rng, n, poles, max_order, false);
    if (coin(rng, 50)) return a;
    std::vector<Scalar> eig;
    for (std::size_t i = 0; i < n; ++i) eig.push_back(coin(rng, 30) && i > 0 ? eig.back() : Scalar(uniform(rng, -2, 2)));
    return ConnectionS(n, with_spectrum(rng, eig), a.poles());
}

inline GaugeJet jet(Rng& rng, std::size_t n, std::size_t length) {
    GaugeJet g;
    g.coeffs.push_back(unimodular(rng, n));
    for (std::size_t j = 1; j < length; ++j) g.coeffs.push_back(matrix(rng, n, n, 1));
    return g;
}

inline GTildeElement gtilde(Rng& rng, const HObject& h) {
    GTildeElement g;
    for (auto k : block_orders(h)) g.jets.push_back(jet(rng, h.dim_v(), k));
    return g;
}

inline GTildeElement gtilde_direction(Rng& rng, const HObject& h) {
    GTildeElement g;
    for (auto k : block_orders(h)) {
        GaugeJet x;
        for (std::size_t j = 0; j < k; ++j) x.coeffs.push_back(matrix(rng, h.dim_v(), h.dim_v(), 2));
        g.jets.push_back(std::move(x));
    }
    return g;
}

// L block whose adjoint action has no nonzero integer eigenvalue: spectrum from a fixed class mod Z spread.
inline Mat nonresonant_block(Rng& rng, std::size_t d) {
    std::vector<Scalar> eig;
    static const long dens[] = {3, 5, 7};
    long den = dens[uniform(rng, 0, 2)];
    for (std::size_t i = 0; i < d; ++i) {
        if (i > 0 && coin(rng, 20)) {
            eig.push_back(eig.back());
            continue;
        }
        Scalar e;
        bool ok;
        do {
            e = Scalar(mpq_class(uniform(rng, -2 * den, 2 * den), den));
            ok = true;
            for (const auto& x : eig) {
                Scalar diff = e - x;
                if (!diff.is_zero() && diff.is_integer()) ok = false;
            }
        } while (!ok);
        eig.push_back(e);
    }
    return with_spectrum(rng, eig);
}

inline NormalForm normal_form(Rng& rng, std::size_t n, std::size_t max_order, bool allow_regular_group, const Scalar& position) {
    NormalForm nf;
    nf.position = position;
    std::size_t left = n;
    bool have_regular = false;
    while (left > 0) {
        std::size_t d = max_order == 1 ? left : static_cast<std::size_t>(uniform(rng, 1, static_cast<long>(left)));
        NormalFormGroup g;
        g.multiplicity = d;
        bool regular = allow_regular_group && !have_regular && (max_order == 1 || coin(rng, 35));
        if (max_order == 1 && !regular) regular = !have_regular;
        if (!regular) {
            std::size_t k = static_cast<std::size_t>(uniform(rng, 2, static_cast<long>(std::max<std::size_t>(2, max_order))));
            for (;;) {
                g.lambda_coeffs.clear();
                for (std::size_t j = 2; j < k; ++j) g.lambda_coeffs.push_back(small(rng, 2));
                g.lambda_coeffs.push_back(nonzero(rng, 2));
                bool distinct = true;
                for (const auto& o : nf.groups)
                    if (o.lambda_coeffs == g.lambda_coeffs) distinct = false;
                if (distinct) break;
            }
        } else {
            have_regular = true;
        }
        nf.groups.push_back(g);
        nf.L_blocks.push_back(nonresonant_block(rng, d));
        left -= d;
    }
    return nf;
}

// Admissible family with `poles` poles on C^n; irregular types of order <= max_order unless fuchsian.
// Parameters are t<i> for positions and c<i>_<a>_<j> for lambda_{a,j} at pole i.
inline SingularityFamily family(Rng& rng, std::size_t n, std::size_t poles, std::size_t max_order, bool fuchsian) {
    for (;;) {
        FamilySpec spec;
        std::vector<long> used;
        for (std::size_t i = 1; i <= poles; ++i) {
            long t;
            do t = uniform(rng, -4, 4);
            while (std::find(used.begin(), used.end(), t) != used.end());
            used.push_back(t);
            std::string tp = "t" + std::to_string(i);
            spec.parameters.push_back({tp, Scalar(t)});
            NormalForm nf = normal_form(rng, n, fuchsian ? 1 : max_order, true, Scalar(t));
            FamilyPole pole{tp, {}, nf.L()};
            for (std::size_t a = 0; a < nf.groups.size(); ++a) {
                FamilyGroup g{nf.groups[a].multiplicity, {}};
                for (std::size_t j = 0; j < nf.groups[a].lambda_coeffs.size(); ++j) {
                    std::string cp = "c" + std::to_string(i) + "_" + std::to_string(a + 1) + "_" + std::to_string(j + 2);
                    spec.parameters.push_back({cp, nf.groups[a].lambda_coeffs[j]});
                    g.coeff_params.push_back(cp);
                }
                pole.groups.push_back(std::move(g));
            }
            spec.poles.push_back(std::move(pole));
        }
        try {
            return family_make(std::move(spec));
        } catch (const LeadingCoefficientZero&) {
            // equal top coefficients on groups of equal order; draw again
        }
    }
}

}  // namespace harnad::rnd
