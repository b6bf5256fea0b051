#include <catch_amalgamated.hpp>

#include "harnad/moment.hpp"
#include "harnad/random.hpp"

using namespace harnad;

namespace {

HObject one_block(const Mat& s, const Scalar& t, const Mat& n, const Mat& q, const Mat& p) {
    return HObject(s.rows(), s, {HBlock{t, n, q, p}});
}

// Jets c(x) 1_V act trivially on the moment map; the block basis change R conjugates N.
HObject same_phi_variant(rnd::Rng& rng, const HObject& h) {
    std::vector<HBlock> blocks;
    for (const auto& b : h.blocks()) {
        std::size_t k = nilpotency_index(b.N);
        GaugeJet c;
        c.coeffs.push_back(Mat::scalar(h.dim_v(), rnd::nonzero(rng, 2)));
        for (std::size_t j = 1; j < k; ++j) c.coeffs.push_back(Mat::scalar(h.dim_v(), rnd::small(rng, 2)));
        HObject single(h.dim_v(), h.S(), {b});
        HBlock nb = gtilde_act(GTildeElement{{c}}, single).blocks()[0];
        Mat r = rnd::invertible(rng, b.dim());
        Mat ri = inverse(r);
        blocks.push_back(HBlock{nb.t, r * nb.N * ri, nb.Q * ri, r * nb.P});
    }
    return HObject(h.dim_v(), h.S(), std::move(blocks));
}

}  // namespace

TEST_CASE("HObject invariants") {
    REQUIRE_THROWS(one_block(Mat(1, 1), Scalar(0), Mat{{1}}, Mat{{1}}, Mat{{1}}));
    HBlock b{Scalar(0), Mat(1, 1), Mat{{1}}, Mat{{1}}};
    REQUIRE_THROWS(HObject(1, Mat(1, 1), {b, b}));
    REQUIRE(nilpotency_index(Mat{{0, 1, 0}, {0, 0, 1}, {0, 0, 0}}) == 3);
    REQUIRE(nilpotency_index(Mat(2, 2)) == 1);
}

TEST_CASE("phi") {
    SECTION("no blocks") {
        Mat s{{1, 2}, {3, 4}};
        REQUIRE(phi(HObject(2, s, {})) == ConnectionS(2, s, {}));
    }
    SECTION("rank one product") {
        auto a = phi(one_block(Mat(1, 1), Scalar(2), Mat(1, 1), Mat{{3}}, Mat{{5}}));
        REQUIRE(a == ConnectionS(1, Mat(1, 1), {Pole{Scalar(2), {Mat{{15}}}}}));
    }
    SECTION("shift block gives -c/x^2 + L/x") {
        Scalar c(7, 2), ell(1, 3);
        // X = (lambda_2, L) with lambda_2 = -c, Y = (0, 1)^T, N = shift
        auto a = phi(one_block(Mat(1, 1), Scalar(0), Mat{{0, 1}, {0, 0}}, Mat{{-c, ell}}, Mat{{0}, {1}}));
        NormalForm nf{Scalar(0), {{1, {-c}}}, {Mat{{ell}}}};
        REQUIRE(a == normal_form_connection(nf));
        REQUIRE(a.poles()[0].coeffs == std::vector<Mat>{Mat{{ell}}, Mat{{-c}}});
    }
    SECTION("trailing zero coefficients are trimmed") {
        auto a = phi(one_block(Mat(1, 1), Scalar(0), Mat{{0, 1}, {0, 0}}, Mat{{1, 0}}, Mat{{1}, {0}}));
        REQUIRE(a.poles()[0].order() == 1);
    }
}

TEST_CASE("kappa") {
    SECTION("rank one residue on C^2") {
        HObject h = kappa(ConnectionS(2, Mat(2, 2), {Pole{Scalar(0), {Mat{{1, 0}, {0, 0}}}}}));
        REQUIRE(h.dim_w() == 1);
        REQUIRE(h.blocks()[0].t == Scalar(0));
        REQUIRE(h.blocks()[0].N == Mat(1, 1));
        REQUIRE(h.blocks()[0].Q == Mat{{1}, {0}});
        REQUIRE(h.blocks()[0].P == Mat{{1, 0}});
    }
    SECTION("c dx / x") {
        HObject h = kappa(ConnectionS(1, Mat(1, 1), {Pole{Scalar(0), {Mat{{Scalar(-4, 3)}}}}}));
        REQUIRE(h.blocks().size() == 1);
        REQUIRE(h.blocks()[0].Q == Mat{{Scalar(-4, 3)}});
        REQUIRE(h.blocks()[0].P == Mat{{1}});
    }
    SECTION("constant connection") {
        HObject h = kappa(ConnectionS(2, Mat{{0, 1}, {1, 0}}, {}));
        REQUIRE(h.blocks().empty());
        REQUIRE(h.S() == Mat{{0, 1}, {1, 0}});
    }
    SECTION("zero dimension") { REQUIRE_THROWS(kappa(ConnectionS(0))); }
    SECTION("phi after kappa is the identity and kappa is stable") {
        rnd::Rng rng(100);
        for (int it = 0; it < 100; ++it) {
            std::size_t n = 1 + static_cast<std::size_t>(it % 5);
            auto a = rnd::connection(rng, n, static_cast<std::size_t>(rnd::uniform(rng, 0, 3)), 3, rnd::coin(rng, 50));
            HObject h = kappa(a);
            REQUIRE(phi(h) == a);
            REQUIRE(is_stable(h));
        }
    }
}

TEST_CASE("stability") {
    REQUIRE_FALSE(is_stable(one_block(Mat(1, 1), Scalar(0), Mat(1, 1), Mat{{0}}, Mat{{1}})));
    REQUIRE_FALSE(is_stable(one_block(Mat(1, 1), Scalar(0), Mat(1, 1), Mat{{1}}, Mat{{0}})));
    REQUIRE(is_stable(one_block(Mat(1, 1), Scalar(0), Mat(1, 1), Mat{{1}}, Mat{{1}})));
    REQUIRE(is_stable(HObject(2, Mat(2, 2), {})));
    // P generates W under N from e2 alone; Q sees e1 only.
    REQUIRE(is_stable(one_block(Mat(1, 1), Scalar(0), Mat{{0, 1}, {0, 0}}, Mat{{1, 0}}, Mat{{0}, {1}})));
    REQUIRE_FALSE(is_stable(one_block(Mat(1, 1), Scalar(0), Mat{{0, 1}, {0, 0}}, Mat{{0, 1}}, Mat{{0}, {1}})));
}

TEST_CASE("irreducibility") {
    REQUIRE(is_irreducible_S(ConnectionS(1, Mat(1, 1), {Pole{Scalar(0), {Mat{{2}}}}})));
    REQUIRE_FALSE(is_irreducible_S(ConnectionS(2, Mat(2, 2), {Pole{Scalar(0), {Mat{{1, 0}, {0, 2}}}}})));
    REQUIRE(is_irreducible_S(ConnectionS(2, Mat(2, 2), {Pole{Scalar(0), {Mat{{0, 1}, {0, 0}}}}, Pole{Scalar(1), {Mat{{0, 0}, {1, 0}}}}})));
    SECTION("connection and canonical object agree") {
        rnd::Rng rng(17);
        int irreducible = 0;
        for (int it = 0; it < 40; ++it) {
            std::size_t n = 1 + static_cast<std::size_t>(it % 3);
            auto a = rnd::connection(rng, n, static_cast<std::size_t>(rnd::uniform(rng, 1, 2)), 2, rnd::coin(rng, 30), 1);
            bool s = is_irreducible_S(a);
            irreducible += s;
            REQUIRE(s == is_irreducible_H(kappa(a)));
        }
        REQUIRE(irreducible > 0);
        REQUIRE(irreducible < 40);
    }
}

TEST_CASE("sigma") {
    rnd::Rng rng(8);
    SECTION("S = 0 gives one block at 0") {
        HObject h = kappa(ConnectionS(2, Mat(2, 2), {Pole{Scalar(1), {Mat{{1, 2}, {0, 1}}}}}));
        HObject s = sigma(h);
        REQUIRE(s.dim_v() == h.dim_w());
        REQUIRE(s.blocks().size() == 1);
        REQUIRE(s.blocks()[0].t == Scalar(0));
        REQUIRE(s.blocks()[0].N.is_zero());
        REQUIRE(s.T().is_zero());
    }
    SECTION("sigma_inv undoes sigma, sigma squared negates") {
        for (int it = 0; it < 20; ++it) {
            std::size_t n = 1 + static_cast<std::size_t>(it % 3);
            HObject h = kappa(rnd::dualizable_connection(rng, n, 2, 2));
            HObject back = sigma_inv(sigma(h));
            auto f = hobject_intertwiner(h, back, false);
            REQUIRE(f.has_value());
            REQUIRE(intertwines(h, back, *f));

            std::vector<HBlock> neg;
            for (const auto& b : h.blocks()) neg.push_back(HBlock{-b.t, -b.N, -b.Q, -b.P});
            HObject want(h.dim_v(), -h.S(), neg);
            HObject twice = sigma(sigma(h));
            auto g = hobject_intertwiner(want, twice, false);
            REQUIRE(g.has_value());
        }
    }
    SECTION("irrational spectrum cannot be reblocked") {
        HObject h(2, Mat{{0, 2}, {1, 0}}, {});
        REQUIRE_THROWS_AS(sigma(h), ReblockFailure);
    }
}

TEST_CASE("uniqueness of stable objects with equal phi") {
    rnd::Rng rng(31);
    for (int it = 0; it < 30; ++it) {
        std::size_t n = 1 + static_cast<std::size_t>(it % 3);
        auto a = rnd::connection(rng, n, static_cast<std::size_t>(rnd::uniform(rng, 1, 3)), 3, rnd::coin(rng, 50));
        HObject h = kappa(a);
        HObject h2 = same_phi_variant(rng, h);
        REQUIRE(phi(h2) == a);
        REQUIRE(is_stable(h2));
        auto f = hobject_intertwiner(h, h2, true);
        REQUIRE(f.has_value());
        REQUIRE(f->phi == Mat::identity(n));
        REQUIRE(intertwines(h, h2, *f));
    }
}

TEST_CASE("canonical object of a direct sum") {
    rnd::Rng rng(41);
    for (int it = 0; it < 20; ++it) {
        auto a = rnd::connection(rng, 1 + static_cast<std::size_t>(it % 2), 2, 2, true);
        auto b = rnd::connection(rng, 1 + static_cast<std::size_t>(it % 3), 2, 2, false);
        HObject k = kappa(direct_sum(a, b));
        HObject s = direct_sum(kappa(a), kappa(b));
        REQUIRE(is_stable(k));
        REQUIRE(is_stable(s));
        REQUIRE(phi(k) == phi(s));
        auto f = hobject_intertwiner(k, s, true);
        REQUIRE(f.has_value());
        REQUIRE(intertwines(k, s, *f));
    }
}

TEST_CASE("closed form of a normal form") {
    SECTION("hand example with a regular group") {
        NormalForm nf{Scalar(0), {{1, {Scalar(3)}}, {2, {}}}, {Mat{{Scalar(1, 2)}}, Mat{{1, 0}, {0, 0}}}};
        HObject h = closed_form_hobject(nf);
        // shift block of size 2 for the irregular group, W0 = V0 / Ker L0 of dimension 1
        REQUIRE(h.dim_w() == 3);
        REQUIRE(phi(h) == normal_form_connection(nf));
    }
    SECTION("isomorphic to the canonical object") {
        rnd::Rng rng(52);
        for (int it = 0; it < 40; ++it) {
            std::size_t n = 1 + static_cast<std::size_t>(it % 4);
            NormalForm nf = rnd::normal_form(rng, n, 3, true, rnd::small(rng, 2));
            HObject cf = closed_form_hobject(nf);
            HObject k = kappa(normal_form_connection(nf));
            REQUIRE(phi(cf) == normal_form_connection(nf));
            REQUIRE(is_stable(cf));
            auto f = hobject_intertwiner(k, cf, true);
            REQUIRE(f.has_value());
            REQUIRE(intertwines(k, cf, *f));
        }
    }
}
