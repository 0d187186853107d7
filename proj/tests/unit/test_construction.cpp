#include <doctest.h>

#include <cmath>

#include "spectral/construction.hpp"
#include "spectral/datasets.hpp"
#include "spectral/error.hpp"
#include "spectral/gmm.hpp"
#include "spectral/piecewise.hpp"
#include "test_util.hpp"

using namespace spectral;

TEST_CASE("pca auxiliary layout") {
    Rng rng(1);
    const AuxMatrix aux = build_aux_pca(2, 3, 1, rng);
    REQUIRE(aux.p.rows() == 8);
    REQUIRE(aux.p.cols() == 3);
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(aux.p(0, j) == 0);
        CHECK(aux.p(1, j) == 0);
        CHECK(aux.p(6, j) == 0);
        CHECK(aux.p(7, j) == 0);
    }
    CHECK(aux.p.block(2, 0, 2, 3) == Mat{{1, 0, 0}, {0, 1, 0}});
    CHECK(std::hypot(aux.p(4, 0), aux.p(5, 0)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(aux.p(4, 1) == 0);
    CHECK(aux.p(5, 2) == 0);
    CHECK(aux.layout.rows() == (1 + 3) * 2);

    Rng a(7), b(7);
    CHECK(build_aux_pca(3, 5, 2, a).p == build_aux_pca(3, 5, 2, b).p);
    CHECK_THROWS_AS(build_aux_pca(4, 3, 1, rng), Error);
    CHECK_THROWS_AS(build_aux_pca(3, 5, 4, rng), Error);
}

TEST_CASE("gmm auxiliary layout") {
    Rng rng(2);
    const std::size_t d = 2, n = 7, n1 = 4;
    const AuxMatrix aux = build_aux_gmm(d, n, n1, rng);
    // placeholder d, indicator N1, sphere d, placeholder d, bias row
    CHECK(aux.p.rows() == d + n1 + d + d + 1);
    const Mat ind = aux.p.block(d, 0, n1, n);
    for (std::size_t i = 0; i < n1; ++i) {
        for (std::size_t j = 0; j < n; ++j) CHECK(ind(i, j) == (i == j ? 1.0 : 0.0));
    }
    for (std::size_t j = 0; j < n; ++j) CHECK(aux.p(aux.p.rows() - 1, j) == 1.0);
    CHECK_THROWS_AS(build_aux_gmm(2, 4, 2, rng), Error);
    CHECK_THROWS_AS(build_aux_gmm(2, 5, 5, rng), Error);
}

TEST_CASE("reciprocal square root table") {
    const RecipSqrtTable t = relu_recip_sqrt(1, 4, 2);
    CHECK(t.ridges(1.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(t.ridges(4.0) == doctest::Approx(0.5).epsilon(1e-14));
    // chord minus 1/sqrt(x) peaks where the derivatives match: x = 3^(2/3)
    const double xs = std::cbrt(9.0);
    const double chord_err = (1.0 - (xs - 1.0) / 6.0) - 1.0 / std::sqrt(xs);
    CHECK(t.error.abs == doctest::Approx(chord_err).epsilon(1e-3));

    const RecipSqrtTable big = relu_recip_sqrt(0.25, 100, 4096);
    for (double k : big.interp.xs()) CHECK(std::abs(big.ridges(k) - 1 / std::sqrt(k)) <= 1e-9 / std::sqrt(k));
    CHECK(big.error.abs <= 1e-3);

    double prev = INFINITY;
    for (std::size_t knots = 2; knots <= 1024; knots *= 2) {
        const double e = relu_recip_sqrt(0.5, 50, knots).error.abs;
        CHECK(e <= prev);
        prev = e;
    }
    CHECK_THROWS_AS(relu_recip_sqrt(2, 1, 8), Error);
    CHECK_THROWS_AS(relu_recip_sqrt(0, 1, 8), Error);
}

TEST_CASE("ridge forms agree with the interpolant") {
    const PiecewiseLinear g = interpolate([](double x) { return 1 / std::sqrt(x); }, geometric_knots(0.01, 10, 33));
    const RidgeSum r = g.right_ridges(), l = g.left_ridges();
    for (double x = 0.01; x <= 10; x *= 1.07) {
        CHECK(r(x) == doctest::Approx(g(x)).epsilon(1e-9));
        CHECK(l(x) == doctest::Approx(g(x)).epsilon(1e-9));
    }
}

TEST_CASE("calibrated tanh") {
    const Calibration c = calibrate_tanh(20, 1e-3);
    CHECK(c.error.abs <= 1e-3);
    for (double x = 0; x < 25; x += 0.37) {
        CHECK(std::abs(c.interp(x) - std::tanh(x)) <= 1e-3 + 1e-12);
        CHECK(c.interp(x) < 1.0);
    }
}

TEST_CASE("layer-count identities") {
    for (std::size_t tau = 1; tau <= 8; ++tau) {
        CHECK(gmm_layer_count(tau) == 2 * tau + 7);
        for (std::size_t k = 1; k <= 3; ++k) CHECK(pca_layer_count(tau, k) == 2 * tau + 4 * k + 1);
    }
    CHECK(pca_layer_count(3, 2) == 15);
    CHECK(pca_layer_count(1, 1) == 7);
    CHECK(gmm_layer_count(3) == 13);
}

TEST_CASE("built networks have the stated depth") {
    ConstructionConfig cfg;
    cfg.eps = 0.1;
    cfg.lambda_lo = 1;
    cfg.lambda_hi = 10;
    Rng rng(3);
    for (std::size_t tau : {1u, 3u, 8u}) {
        cfg.tau = tau;
        for (std::size_t k : {1u, 2u, 3u}) {
            const AuxMatrix aux = build_aux_pca(3, 5, k, rng);
            ConstructionInfo info;
            const TransformerParams p = build_pca_network(3, 5, k, cfg, aux.layout, &info);
            CHECK(p.depth() == 2 * tau + 4 * k + 1);
            CHECK(info.layers == p.depth());
        }
        const AuxMatrix g = build_aux_gmm(2, 9, 4, rng);
        CHECK(build_gmm_network(2, 9, 4, cfg, g.layout).depth() == 2 * tau + 7);
    }
}

TEST_CASE("implied eps0 inverts the iteration bound") {
    for (std::size_t tau : {3u, 8u, 50u}) {
        const double e = implied_eps0(tau, 0.2);
        CHECK(std::log(1 / (e * 0.2)) / e == doctest::Approx(static_cast<double>(tau)).epsilon(1e-6));
    }
}

TEST_CASE("constructed pca network reproduces the power method") {
    const std::size_t d = 4, n = 6, tau = 8;
    for (std::size_t k : {1u, 2u}) {
        for (std::uint64_t seed = 0; seed < 3; ++seed) {
            Rng rng(seed);
            const Mat x = gen_synthetic_pca(d, n, rng);
            const SpectralResult o = eigh_oracle(symmetrize(x), k);
            const AuxMatrix aux = build_aux_pca(d, n, k, rng);
            const auto init = sphere_vectors(aux.p, aux.layout);
            ConstructionConfig cfg;
            cfg.tau = tau;
            cfg.eps = 1e-2;
            cfg.lambda_hi = 1.5 * o.eigvals[0];
            cfg.lambda_lo = 0.5 * o.eigvals[k - 1];
            const TransformerParams p = build_pca_network(d, n, k, cfg, aux.layout);
            const SpectralResult ref = power_method(x, tau, k, init);
            const VerifyReport rep = verify_construction(p, make_episode(x, aux.p, aux.layout), ref);
            CHECK(rep.layer_count == 2 * tau + 4 * k + 1);
            CHECK(rep.max_vec_error <= 0.05);
        }
    }
}

TEST_CASE("constructed gmm network matches the clustering signs") {
    const std::size_t d = 3, n = 40, n1 = 20;
    for (double sigma2 : {1e-12, 1.0}) {
        Rng rng(17);
        const GmmInstance g = gen_gmm(d, n, 6, sigma2, rng);
        const AuxMatrix aux = build_aux_gmm(d, n, n1, rng);
        const Vec init = sphere_vectors(aux.p, aux.layout)[0];
        const ClusterAssignment sc = spectral_cluster(g.x, n1, 8, init);
        const SpectralResult o = eigh_oracle(empirical_cov(g.x, n1).cov, 1);
        ConstructionConfig cfg;
        cfg.lambda_hi = 1.5 * o.eigvals[0];
        cfg.lambda_lo = 0.5 * o.eigvals[0];
        cfg.x_bound = 20;
        const TransformerParams p = build_gmm_network(d, n, n1, cfg, aux.layout);
        const GmmVerifyReport rep = verify_gmm_construction(p, make_episode(g.x, aux.p, aux.layout), sc.labels);
        CHECK(rep.sign_agreement == 1.0);
        CHECK(rep.max_abs_output < 1.0);
        if (sigma2 < 1e-6) {
            const ClusterAssignment bayes = bayes_cluster(g.x, g.mu0, g.mu1);
            const GmmVerifyReport vb =
                verify_gmm_construction(p, make_episode(g.x, aux.p, aux.layout), bayes.labels);
            CHECK(vb.sign_agreement >= 0.95);
        }
    }
}

TEST_CASE("configuration validation") {
    ConstructionConfig cfg;
    cfg.lambda_lo = 5;
    cfg.lambda_hi = 1;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = ConstructionConfig{};
    cfg.eps = 1.5;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = ConstructionConfig{};
    cfg.eps = 1e-9;
    Rng rng(1);
    const AuxMatrix aux = build_aux_pca(3, 4, 1, rng);
    CHECK_THROWS_AS(build_pca_network(3, 4, 1, cfg, aux.layout), Error);
}
