#include <catch_amalgamated.hpp>

#include "harnad/sylvester.hpp"
#include "harnad/polynomial.hpp"
#include "harnad/random.hpp"
#include "oracle.hpp"

using namespace harnad;

TEST_CASE("scalar arithmetic is exact and canonical") {
    Scalar a(mpq_class(1, 2), mpq_class(-3, 4));
    Scalar b = Scalar::parse_rational("2/4");
    REQUIRE(b == Scalar(1, 2));
    REQUIRE((a * a.inverse()) == Scalar(1));
    REQUIRE((a - a).is_zero());
    REQUIRE((Scalar::i() * Scalar::i()) == Scalar(-1));
    REQUIRE(Scalar::parse_rational("-6/4") == mpq_class(-3, 2));
    REQUIRE_THROWS_AS(Scalar::parse_rational("1/0"), ParseError);
    REQUIRE_THROWS_AS(Scalar::parse_rational("1.5"), ParseError);
    REQUIRE_THROWS_AS(Scalar::parse_rational("/3"), ParseError);
}

TEST_CASE("kernel bases") {
    SECTION("zero map") {
        auto k = kernel_basis(Mat(2, 2));
        REQUIRE(k.size() == 2);
        REQUIRE(k[0] == Mat{{1}, {0}});
        REQUIRE(k[1] == Mat{{0}, {1}});
    }
    SECTION("injective") { REQUIRE(kernel_basis(Mat::identity(3)).empty()); }
    SECTION("rank one diagonal") {
        auto k = kernel_basis(Mat{{1, 0}, {0, 0}});
        REQUIRE(k.size() == 1);
        REQUIRE(k[0] == Mat{{0}, {1}});
    }
    SECTION("random kernels are annihilated") {
        std::mt19937_64 rng(7);
        for (int it = 0; it < 40; ++it) {
            Mat m = rnd::matrix(rng, 3 + it % 3, 4, 2);
            for (const auto& v : kernel_basis(m)) REQUIRE((m * v).is_zero());
            REQUIRE(kernel_basis(m).size() + rank(m) == 4);
        }
    }
}

TEST_CASE("linear solve") {
    Mat b{{3}, {-1}};
    REQUIRE(*solve(Mat::identity(2), b) == b);
    REQUIRE_FALSE(solve(Mat{{1, 0}, {0, 0}}, Mat{{0}, {1}}).has_value());
    REQUIRE(*solve(Mat{{1, 1}}, Mat{{2}}) == Mat{{2}, {0}});
}

TEST_CASE("algebra closure dimensions") {
    REQUIRE(algebra_closure<Scalar>({}, 2) == 1);
    REQUIRE(algebra_closure<Scalar>({Mat{{1, 0}, {0, 2}}}, 2) == 2);
    REQUIRE(algebra_closure<Scalar>({Mat{{0, 1}, {0, 0}}, Mat{{0, 0}, {1, 0}}}, 2) == 4);
    REQUIRE(algebra_closure<Scalar>({Mat{{0, 1, 0}, {0, 0, 1}, {0, 0, 0}}}, 3) == 3);
}

TEST_CASE("invariant closure") {
    Mat e1{{1}, {0}}, e2{{0}, {1}};
    REQUIRE(invariant_closure(Mat(2, 2), {e1}).size() == 1);
    auto basis = invariant_closure(Mat{{0, 1}, {0, 0}}, {e2});
    REQUIRE(basis.size() == 2);
    REQUIRE(invariant_closure(Mat{{1, 2}, {3, 4}}, {}).empty());
}

TEST_CASE("sylvester block solve") {
    SECTION("two scalar blocks") {
        TBlocks<Scalar> t{{Scalar(0), Scalar(1)}, {Mat(1, 1), Mat(1, 1)}};
        auto r = sylvester_block_solve(t, Mat{{0, 1}, {0, 0}});
        REQUIRE(r.xi == Mat{{0, 1}, {0, 0}});
        REQUIRE(r.residual.is_zero());
        auto id = sylvester_block_solve(t, Mat::identity(2));
        REQUIRE(id.xi.is_zero());
        REQUIRE(id.residual == Mat::identity(2));
    }
    SECTION("zero operator") {
        TBlocks<Scalar> t{{Scalar(0)}, {Mat(2, 2)}};
        Mat rhs{{1, 2}, {3, 4}};
        auto r = sylvester_block_solve(t, rhs);
        REQUIRE(r.xi.is_zero());
        REQUIRE(r.residual == rhs);
    }
    SECTION("random nilpotent blocks") {
        std::mt19937_64 rng(11);
        for (int it = 0; it < 25; ++it) {
            TBlocks<Scalar> t;
            std::size_t blocks = 1 + it % 3;
            for (std::size_t b = 0; b < blocks; ++b) {
                std::size_t d = 1 + (it + b) % 3;
                t.t.push_back(Scalar(static_cast<long>(b)) + Scalar(1, 3));
                t.n.push_back(rnd::nilpotent(rng, d));
            }
            std::size_t m = t.size();
            Mat rhs = rnd::matrix(rng, m, m, 2);
            auto r = sylvester_block_solve(t, rhs);
            Mat tm = t.assemble();
            REQUIRE(commutator(r.xi, tm) + r.residual == rhs);
            REQUIRE(commutator(r.residual, tm.adjoint()).is_zero());
            Mat ad = oracle::ad_matrix(tm);
            for (const auto& kv : kernel_basis(ad)) {
                Mat k = unvec(kv, m, m);
                REQUIRE((k.adjoint() * r.xi).trace().is_zero());
            }
        }
    }
}

TEST_CASE("range of ad for block shifts") {
    std::mt19937_64 rng(3);
    Mat n = block_shift<Scalar>(2, 3);
    Mat y = rnd::matrix(rng, 6, 6, 2);
    REQUIRE(in_range_ad_shift(commutator(n, y), 2, 3));
    REQUIRE(in_range_ad_shift(Mat(2, 2), 2, 1));
    REQUIRE_FALSE(in_range_ad_shift(Mat{{1, 0}, {0, 0}}, 2, 1));
    REQUIRE_FALSE(in_range_ad_shift(Mat::identity(2), 1, 2));
    for (std::size_t d = 1; d <= 3; ++d)
        for (std::size_t l = 1; d * l <= 6; ++l)
            for (int it = 0; it < 6; ++it) {
                std::size_t s = d * l;
                Mat x = it % 2 ? rnd::matrix(rng, s, s, 1) : commutator(block_shift<Scalar>(d, l), rnd::matrix(rng, s, s, 2));
                Mat nn = block_shift<Scalar>(d, l);
                Mat op = oracle::ad_matrix(nn);
                bool brute = solve(op, vec(Matrix<Scalar>(-x))).has_value();
                REQUIRE(in_range_ad_shift(x, d, l) == brute);
            }
}

TEST_CASE("integer roots") {
    REQUIRE(poly_integer_roots(ExactPoly({Scalar(-6), Scalar(1), Scalar(1)})) == std::vector<std::int64_t>{-3, 2});
    REQUIRE(poly_integer_roots(ExactPoly({Scalar(1), Scalar(0), Scalar(1)})).empty());
    REQUIRE(poly_integer_roots(ExactPoly({Scalar(0), Scalar(-1, 2), Scalar(1)})) == std::vector<std::int64_t>{0});
    REQUIRE(poly_integer_roots(ExactPoly({Scalar(5)})).empty());
    REQUIRE_THROWS_AS(poly_integer_roots(ExactPoly()), ZeroPolynomial);
    // (x - 2)(x - i) has only the integer root 2
    ExactPoly p = ExactPoly::linear_root(Scalar(2)) * ExactPoly::linear_root(Scalar::i());
    REQUIRE(poly_integer_roots(p) == std::vector<std::int64_t>{2});
    std::mt19937_64 rng(5);
    for (int it = 0; it < 30; ++it) {
        ExactPoly q({Scalar(1)});
        std::vector<std::int64_t> expect;
        for (int j = 0; j < 3; ++j) {
            long r = static_cast<long>(rng() % 11) - 5;
            if (j == 2) {
                q = q * ExactPoly({Scalar(1, 2), Scalar(0), Scalar(1)});
                continue;
            }
            q = q * ExactPoly::linear_root(Scalar(r));
            expect.push_back(r);
        }
        std::sort(expect.begin(), expect.end());
        expect.erase(std::unique(expect.begin(), expect.end()), expect.end());
        REQUIRE(poly_integer_roots(q) == expect);
        for (long k = -10; k <= 10; ++k) {
            bool listed = std::find(expect.begin(), expect.end(), k) != expect.end();
            REQUIRE(q(Scalar(k)).is_zero() == listed);
        }
    }
}

TEST_CASE("gaussian rational roots") {
    ExactPoly p = ExactPoly::linear_root(Scalar(mpq_class(1, 3), mpq_class(2))) *
                  ExactPoly::linear_root(Scalar(mpq_class(1, 3), mpq_class(2))) * ExactPoly::linear_root(Scalar(-4));
    auto roots = gaussian_rational_roots(p);
    REQUIRE(roots.has_value());
    REQUIRE(roots->size() == 2);
    std::size_t total = 0;
    for (const auto& r : *roots) total += r.multiplicity;
    REQUIRE(total == 3);
    REQUIRE_FALSE(gaussian_rational_roots(ExactPoly({Scalar(-2), Scalar(0), Scalar(1)})).has_value());
}

TEST_CASE("characteristic polynomial") {
    auto c = charpoly_coeffs(Mat{{1, 2}, {3, 4}});
    REQUIRE(c == std::vector<Scalar>{Scalar(-2), Scalar(-5), Scalar(1)});
    std::mt19937_64 rng(9);
    for (int it = 0; it < 10; ++it) {
        Mat m = rnd::matrix(rng, 4, 4, 3);
        auto p = ExactPoly(charpoly_coeffs(m));
        for (long x = -2; x <= 2; ++x) REQUIRE(p(Scalar(x)) == det(Mat(Mat::scalar(4, Scalar(x)) - m)));
    }
}
