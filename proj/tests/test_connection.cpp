#include <catch_amalgamated.hpp>

#include "harnad/connection.hpp"
#include "harnad/random.hpp"

using namespace harnad;

namespace {

Mat unit(Scalar s) { return Mat{{s}}; }

ConnectionS single(const Scalar& t, std::vector<Mat> coeffs, Mat a0 = {}) {
    std::size_t n = coeffs.empty() ? a0.rows() : coeffs.front().rows();
    if (a0.rows() == 0) a0 = Mat(n, n);
    return ConnectionS(n, a0, {Pole{t, std::move(coeffs)}});
}

}  // namespace

TEST_CASE("connection invariants") {
    SECTION("zero top coefficients are trimmed and empty poles dropped") {
        ConnectionS a(1, Mat(1, 1), {Pole{Scalar(0), {unit(1), unit(0)}}, Pole{Scalar(2), {unit(0)}}});
        REQUIRE(a.poles().size() == 1);
        REQUIRE(a.order_at(Scalar(0)) == 1);
        REQUIRE(a.order_at(Scalar(2)) == 0);
    }
    SECTION("repeated positions are rejected") {
        REQUIRE_THROWS_AS(ConnectionS(1, Mat(1, 1), {Pole{Scalar(1), {unit(1)}}, Pole{Scalar(1), {unit(2)}}}), InvalidInput);
    }
    SECTION("shapes are checked") {
        REQUIRE_THROWS_AS(ConnectionS(2, Mat(1, 1), {}), DimensionMismatch);
        REQUIRE_THROWS_AS(ConnectionS(1, Mat(1, 1), {Pole{Scalar(0), {Mat(2, 2) + Mat::identity(2)}}}), DimensionMismatch);
    }
}

TEST_CASE("laurent_principal") {
    Mat r{{1, 2}, {0, 3}}, m{{0, 1}, {0, 0}}, n{{5, 0}, {0, 1}};
    REQUIRE(laurent_principal(single(Scalar(1), {r}), 0) == std::vector<Mat>{r});
    ConnectionS c = single(Scalar(0), {n, m});
    REQUIRE(laurent_principal(c, 0) == std::vector<Mat>{n, m});
    ConnectionS only_a0(2, r, {});
    REQUIRE(only_a0.poles().empty());
    REQUIRE(laurent_principal_at_infinity(only_a0) == std::vector<Mat>{r});
    REQUIRE_THROWS_AS(laurent_principal(only_a0, 0), InvalidInput);
}

TEST_CASE("laurent_expand") {
    SECTION("geometric series of 1/(x-1) at 0") {
        auto s = laurent_expand(single(Scalar(1), {unit(1)}), Scalar(0), 2);
        for (int m = 0; m <= 2; ++m) REQUIRE(s.at(m) == unit(-1));
        REQUIRE(s.at(-1) == unit(0));
    }
    SECTION("constant connection") {
        ConnectionS a(1, unit(Scalar(3, 2)), {});
        auto s = laurent_expand(a, Scalar(7), 3);
        REQUIRE(s.at(0) == unit(Scalar(3, 2)));
        for (int m = 1; m <= 3; ++m) REQUIRE(s.at(m).is_zero());
    }
    SECTION("1/x at its own pole") {
        auto s = laurent_expand(single(Scalar(0), {unit(1)}), Scalar(0), 2);
        REQUIRE(s.at(-1) == unit(1));
        for (int m = 0; m <= 2; ++m) REQUIRE(s.at(m).is_zero());
    }
    SECTION("double pole expanded away from it") {
        // 1/(x-2)^2 = sum (m+1) x^m / 2^{m+2}
        auto s = laurent_expand(single(Scalar(2), {unit(0), unit(1)}), Scalar(0), 4);
        for (int m = 0; m <= 4; ++m) REQUIRE(s.at(m) == unit(Scalar(m + 1, 1L << (m + 2))));
    }
}

TEST_CASE("direct_sum") {
    ConnectionS a = single(Scalar(1), {Mat{{2}}});
    SECTION("with the zero-dimensional connection") {
        ConnectionS z(0);
        REQUIRE(direct_sum(a, z) == a);
        REQUIRE(direct_sum(z, a) == a);
    }
    SECTION("poles at the same position merge") {
        ConnectionS s = direct_sum(a, single(Scalar(1), {Mat{{-5}}}));
        REQUIRE(s.poles().size() == 1);
        REQUIRE(s.poles()[0].coeffs[0] == Mat{{2, 0}, {0, -5}});
    }
    SECTION("distinct positions pad with zero blocks") {
        ConnectionS s = direct_sum(a, single(Scalar(3), {Mat{{-5}}}));
        REQUIRE(s.poles().size() == 2);
        REQUIRE(s.poles()[*s.pole_index(Scalar(1))].coeffs[0] == Mat{{2, 0}, {0, 0}});
        REQUIRE(s.poles()[*s.pole_index(Scalar(3))].coeffs[0] == Mat{{0, 0}, {0, -5}});
    }
    SECTION("associativity up to block permutation") {
        rnd::Rng rng(11);
        for (int it = 0; it < 15; ++it) {
            auto x = rnd::connection(rng, 1 + it % 2, 2, 2, true);
            auto y = rnd::connection(rng, 1, 1, 2, true);
            auto z = rnd::connection(rng, 2, 2, 1, false);
            auto l = direct_sum(direct_sum(x, y), z);
            auto r = direct_sum(x, direct_sum(y, z));
            REQUIRE(l == r);
            auto swapped = direct_sum(z, direct_sum(y, x));
            auto phi = iso_search(l, swapped);
            REQUIRE(phi.has_value());
            REQUIRE(intertwines(l, swapped, *phi));
        }
    }
}

TEST_CASE("iso_search") {
    rnd::Rng rng(5);
    SECTION("conjugate connections") {
        for (int it = 0; it < 20; ++it) {
            std::size_t n = 1 + static_cast<std::size_t>(it % 3);
            auto a = rnd::connection(rng, n, 2, 2, true);
            Mat g = rnd::invertible(rng, n);
            Mat gi = inverse(g);
            std::vector<Pole> ps;
            for (const auto& p : a.poles()) {
                Pole q{p.position, {}};
                for (const auto& c : p.coeffs) q.coeffs.push_back(g * c * gi);
                ps.push_back(q);
            }
            ConnectionS b(n, g * a.constant_term() * gi, ps);
            auto phi = iso_search(a, b);
            REQUIRE(phi.has_value());
            REQUIRE(is_invertible(*phi));
            // b phi = phi a coefficientwise
            REQUIRE(b.constant_term() * *phi == *phi * a.constant_term());
            for (std::size_t i = 0; i < a.poles().size(); ++i)
                for (std::size_t j = 0; j < a.poles()[i].coeffs.size(); ++j)
                    REQUIRE(b.poles()[i].coeffs[j] * *phi == *phi * a.poles()[i].coeffs[j]);
        }
    }
    SECTION("different residues") {
        REQUIRE_FALSE(iso_search(single(Scalar(0), {unit(1)}), single(Scalar(0), {unit(2)})).has_value());
    }
    SECTION("identity is accepted") {
        auto a = rnd::connection(rng, 3, 2, 2, true);
        REQUIRE(intertwines(a, a, Mat::identity(3)));
        REQUIRE(iso_search(a, a).has_value());
    }
    SECTION("different pole sets") {
        REQUIRE_FALSE(iso_search(single(Scalar(0), {unit(1)}), single(Scalar(1), {unit(1)})).has_value());
    }
}

TEST_CASE("gauge_polynomial") {
    Mat l{{1, 2}, {3, 4}}, e{{0, 1}, {-1, 2}};
    ConnectionS a = single(Scalar(0), {l});
    SECTION("identity jet") {
        auto s = gauge_polynomial(a, Scalar(0), GaugeJet{{Mat::identity(2)}}, 3);
        auto want = laurent_expand(a, Scalar(0), 3);
        for (int m = -1; m <= 3; ++m) REQUIRE(s.at(m) == want.at(m));
    }
    SECTION("constant jet on the zero connection") {
        auto s = gauge_polynomial(ConnectionS(2), Scalar(0), GaugeJet{{Mat{{2, 1}, {1, 1}}}}, 3);
        for (int m = 0; m <= 3; ++m) REQUIRE(s.at(m).is_zero());
    }
    SECTION("1 + xE on L/x") {
        // (1 + xE) L x^{-1} (1 - xE + x^2 E^2) + E (1 - xE + ...) through order 1
        auto s = gauge_polynomial(a, Scalar(0), GaugeJet{{Mat::identity(2), e}}, 1);
        REQUIRE(s.at(-1) == l);
        REQUIRE(s.at(0) == e * l - l * e + e);
        REQUIRE(s.at(1) == l * e * e - e * l * e - e * e);
    }
    SECTION("non-invertible constant term") {
        REQUIRE_THROWS_AS(gauge_polynomial(a, Scalar(0), GaugeJet{{Mat{{1, 0}, {0, 0}}}}, 1), InvalidInput);
    }
    SECTION("composition (gh)[A] = g[h[A]]") {
        rnd::Rng rng(3);
        for (int it = 0; it < 25; ++it) {
            std::size_t n = 1 + static_cast<std::size_t>(it % 3);
            auto b = rnd::connection(rng, n, 2, 3, true);
            Scalar t = b.poles().empty() ? Scalar(0) : b.poles()[0].position;
            GaugeJet g = rnd::jet(rng, n, static_cast<std::size_t>(rnd::uniform(rng, 1, 5)));
            GaugeJet h = rnd::jet(rng, n, static_cast<std::size_t>(rnd::uniform(rng, 1, 5)));
            int trunc = 3;
            auto base = laurent_expand(b, t, trunc);
            auto lhs = gauge_series(base, jet_product(g, h), trunc);
            auto rhs = gauge_series(gauge_series(base, h, trunc), g, trunc);
            for (int m = lhs.low; m <= trunc; ++m) REQUIRE(lhs.at(m) == rhs.at(m));
        }
    }
}

TEST_CASE("normal forms") {
    SECTION("regular normal form is a simple pole") {
        NormalForm nf{Scalar(2), {{2, {}}}, {Mat{{1, 1}, {0, 1}}}};
        ConnectionS c = normal_form_connection(nf);
        REQUIRE(c.poles().size() == 1);
        REQUIRE(c.poles()[0].coeffs == std::vector<Mat>{Mat{{1, 1}, {0, 1}}});
        REQUIRE(c.poles()[0].position == Scalar(2));
    }
    SECTION("rank one with a double pole") {
        Scalar c(5, 3), ell(1, 7);
        NormalForm nf{Scalar(0), {{1, {-c}}}, {unit(ell)}};
        ConnectionS a = normal_form_connection(nf);
        REQUIRE(a.poles()[0].coeffs == std::vector<Mat>{unit(ell), unit(-c)});
    }
    SECTION("invariants") {
        NormalForm dup{Scalar(0), {{1, {Scalar(1)}}, {1, {Scalar(1)}}}, {unit(0), unit(1)}};
        REQUIRE_THROWS_AS(normal_form_connection(dup), InvalidInput);
        NormalForm zero_top{Scalar(0), {{1, {Scalar(1), Scalar(0)}}}, {unit(0)}};
        REQUIRE_THROWS_AS(zero_top.validate(), InvalidInput);
        NormalForm bad_block{Scalar(0), {{2, {}}}, {unit(0)}};
        REQUIRE_THROWS_AS(bad_block.validate(), DimensionMismatch);
        NormalForm at_inf{std::nullopt, {{1, {}}}, {unit(0)}};
        REQUIRE_THROWS_AS(normal_form_connection(at_inf), InvalidInput);
    }
    SECTION("nonresonance") {
        REQUIRE(nonresonance_check(NormalForm{Scalar(0), {{2, {}}}, {Mat{{Scalar(1, 2), 0}, {0, Scalar(1, 3)}}}}));
        REQUIRE_FALSE(nonresonance_check(NormalForm{Scalar(0), {{2, {}}}, {Mat{{1, 0}, {0, 0}}}}));
        // a Jordan block is nonresonant: ad has only the eigenvalue 0
        REQUIRE(nonresonance_check(NormalForm{Scalar(0), {{2, {}}}, {Mat{{1, 1}, {0, 1}}}}));
    }
}

TEST_CASE("formal_match") {
    SECTION("the normal form itself gives an invertible jet fixing it") {
        NormalForm nf{Scalar(1), {{1, {Scalar(2)}}, {1, {}}}, {unit(Scalar(1, 3)), unit(Scalar(1, 5))}};
        ConnectionS a = normal_form_connection(nf);
        GaugeJet g = formal_match(a, Scalar(1), nf);
        REQUIRE(g.coeffs[0] == Mat::identity(2));
        auto s = gauge_polynomial(a, Scalar(1), g, 3);
        auto want = laurent_expand(a, Scalar(1), 3);
        for (int m = -2; m < 3; ++m) REQUIRE(s.at(m) == want.at(m));
    }
    SECTION("wrong residue eigenvalues") {
        NormalForm nf{Scalar(0), {{1, {}}}, {unit(Scalar(1, 3))}};
        REQUIRE_THROWS_AS(formal_match(single(Scalar(0), {unit(Scalar(2, 3))}), Scalar(0), nf), NoMatch);
    }
    SECTION("resonant normal forms are refused") {
        NormalForm nf{Scalar(0), {{2, {}}}, {Mat{{2, 0}, {0, 1}}}};
        REQUIRE_THROWS_AS(formal_match(single(Scalar(0), {Mat{{2, 0}, {0, 1}}}), Scalar(0), nf), NonResonantRequired);
    }
    SECTION("round trip through random gauges") {
        rnd::Rng rng(2024);
        for (int it = 0; it < 50; ++it) {
            std::size_t n = 1 + static_cast<std::size_t>(rnd::uniform(rng, 0, 3));
            Scalar pos = rnd::small(rng, 2);
            NormalForm nf = rnd::normal_form(rng, n, 3, true, pos);
            ConnectionS a0 = normal_form_connection(nf);
            int k = static_cast<int>(nf.pole_order());
            GaugeJet g = rnd::jet(rng, n, static_cast<std::size_t>(rnd::uniform(rng, 1, 4)));
            auto s = gauge_polynomial(a0, pos, g, 0);
            std::vector<Mat> coeffs;
            for (int j = 1; j <= k; ++j) coeffs.push_back(s.at(-j));
            ConnectionS a(n, s.at(0), {Pole{pos, coeffs}});
            int order = k + 6;
            GaugeJet found = formal_match(a, pos, nf, order);
            REQUIRE(is_invertible(found.coeffs[0]));
            auto got = gauge_polynomial(a0, pos, found, order - k);
            auto want = laurent_expand(a, pos, order - k);
            for (int m = -k; m < order - k; ++m) REQUIRE(got.at(m) == want.at(m));
        }
    }
}
