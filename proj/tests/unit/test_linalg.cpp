#include <doctest.h>

#include <cmath>

#include "spectral/datasets.hpp"
#include "spectral/error.hpp"
#include "spectral/linalg.hpp"
#include "test_util.hpp"

using namespace spectral;

TEST_CASE("mat basics") {
    Mat a{{1, 2, 3}, {4, 5, 6}};
    CHECK(a.rows() == 2);
    CHECK(a.cols() == 3);
    CHECK(a.transpose()(2, 1) == 6);
    const Mat p = matmul(a, a.transpose());
    CHECK(p == Mat{{14, 32}, {32, 77}});
    CHECK(matmul_tn(a, a) == matmul(a.transpose(), a));
    CHECK(matmul_nt(a, a) == p);
    CHECK(a.block(0, 1, 2, 2) == Mat{{2, 3}, {5, 6}});
    CHECK_THROWS_AS(matmul(a, a), Error);
}

TEST_CASE("symmetrize") {
    CHECK(symmetrize(Mat{{1, 2}, {3, 4}}) == Mat{{5, 11}, {11, 25}});
    CHECK(symmetrize(Mat::identity(2)) == Mat::identity(2));
    CHECK(symmetrize(Mat(2, 3)) == Mat(2, 2));

    Rng rng(11);
    const Mat x = test::gaussian(5, 9, rng);
    const Mat a = symmetrize(x);
    CHECK(asymmetry(a) == 0.0);
    for (int t = 0; t < 100; ++t) {
        const Vec v = test::gaussian_vec(5, rng);
        CHECK(dot(v, matvec(a, v)) >= -1e-10);
    }
}

TEST_CASE("eigh_oracle small cases") {
    const auto r = eigh_oracle(Mat{{4, 0}, {0, 1}}, 2);
    CHECK(r.eigvals[0] == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(r.eigvals[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(r.eigvecs(0, 0) - 1.0) < 1e-12);
    CHECK(std::abs(r.eigvecs(1, 1) - 1.0) < 1e-12);

    // 2x2 closed form: (a+c)/2 +- sqrt(((a-c)/2)^2 + b^2)
    const auto s = eigh_oracle(Mat{{2, 1}, {1, 2}}, 1);
    CHECK(s.eigvals[0] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(std::abs(s.eigvecs(0, 0) - 1 / std::sqrt(2.0)) < 1e-10);
    CHECK(std::abs(s.eigvecs(1, 0) - 1 / std::sqrt(2.0)) < 1e-10);

    const auto id = eigh_oracle(Mat::identity(3), 1);
    const Vec v = id.vector(0);
    CHECK(norm2(subtract(matvec(Mat::identity(3), v), scaled(v, id.eigvals[0]))) <= 1e-9);

    CHECK_THROWS_AS(eigh_oracle(Mat{{1, 2}, {0, 1}}, 1), Error);
    CHECK_THROWS_AS(eigh_oracle(Mat::identity(2), 3), Error);
}

TEST_CASE("eigh_oracle on random matrices: residual, ordering, sign convention") {
    Rng rng(5);
    for (int t = 0; t < 20; ++t) {
        const std::size_t d = 2 + rng.below(7);
        const Mat a = symmetrize(test::gaussian(d, d + 3, rng));
        const auto r = eigh_oracle(a, d);
        for (std::size_t i = 0; i < d; ++i) {
            const Vec v = r.vector(i);
            CHECK(std::abs(norm2(v) - 1.0) <= 1e-10);
            CHECK(norm2(subtract(matvec(a, v), scaled(v, r.eigvals[i]))) <= 1e-9 * frobenius_norm(a));
            if (i + 1 < d) CHECK(r.eigvals[i] >= r.eigvals[i + 1]);
            std::size_t big = 0;
            for (std::size_t j = 1; j < d; ++j) {
                if (std::abs(v[j]) > std::abs(v[big])) big = j;
            }
            CHECK(v[big] >= 0.0);
        }
        // trace and Frobenius identities against the full spectrum
        double tr = 0, sq = 0, fr = frobenius_norm(a);
        for (double l : r.eigvals) {
            tr += l;
            sq += l * l;
        }
        double atr = 0;
        for (std::size_t i = 0; i < d; ++i) atr += a(i, i);
        CHECK(tr == doctest::Approx(atr).epsilon(1e-10));
        CHECK(std::sqrt(sq) == doctest::Approx(fr).epsilon(1e-10));
    }
}

TEST_CASE("sign convention is idempotent and breaks ties by lowest index") {
    Vec v{-0.5, 0.5, 0.1};
    apply_sign_convention(v);
    CHECK(v[0] == 0.5);
    Vec w = v;
    apply_sign_convention(w);
    CHECK(w == v);
}

TEST_CASE("power_iterate") {
    const Vec a = power_iterate(Mat{{4, 0}, {0, 1}}, Vec{1, 0});
    CHECK(a == Vec{1, 0});
    const Vec b = power_iterate(Mat{{2, 0}, {0, 1}}, Vec{1 / std::sqrt(2.0), 1 / std::sqrt(2.0)});
    CHECK(b[0] == doctest::Approx(std::sqrt(2.0) / std::sqrt(2.5)));
    CHECK(b[1] == doctest::Approx(1 / std::sqrt(2.0) / std::sqrt(2.5)));
    CHECK(std::abs(b[0] - 0.894427) < 1e-6);
    CHECK(power_iterate(Mat{{0, 1}, {1, 0}}, Vec{1, 0}) == Vec{0, 1});
    CHECK_THROWS_AS(power_iterate(Mat{{1, 0}, {0, 0}}, Vec{0, 1}), Error);
}

TEST_CASE("deflate") {
    CHECK(deflate(Mat{{4, 0}, {0, 1}}, 4, Vec{1, 0}) == Mat{{0, 0}, {0, 1}});
    const Mat a{{2, 1}, {1, 2}};
    CHECK(deflate(a, 0, Vec{1, 0}) == a);
    const double r = 1 / std::sqrt(2.0);
    const Mat d = deflate(a, 3, Vec{r, r});
    CHECK(max_abs_diff(d, Mat{{0.5, -0.5}, {-0.5, 0.5}}) < 1e-12);
    CHECK(asymmetry(d) == 0.0);
}

TEST_CASE("power_method small cases") {
    const auto r = power_method(Mat{{2, 0}, {0, 1}}, 50, 2, {{0.6, 0.8}, {0.8, -0.6}});
    CHECK(std::abs(r.eigvals[0] - 4) < 1e-8);
    CHECK(std::abs(r.eigvals[1] - 1) < 1e-8);
    CHECK(std::abs(r.eigvecs(0, 0) - 1) < 1e-8);
    CHECK(std::abs(r.eigvecs(1, 1) - 1) < 1e-8);

    const auto f = power_method(Mat{{2, 0}, {0, 1}}, 1, 1, {{1, 0}});
    CHECK(f.eigvals[0] == 4.0);

    CHECK_THROWS_AS(power_method(Mat{{2, 0}, {0, 1}}, 5, 3, {{1, 0}, {0, 1}, {1, 0}}), Error);
}

TEST_CASE("power_method matches the oracle when the gap is large") {
    Rng rng(23);
    int tested = 0;
    while (tested < 20) {
        const Mat x = test::gaussian(5, 8, rng);
        const auto o = eigh_oracle(symmetrize(x), 5);
        if (o.eigvals[0] - o.eigvals[1] < 0.5 * o.eigvals[0] || o.eigvals[1] - o.eigvals[2] < 0.2 * o.eigvals[1]) continue;
        ++tested;
        const auto p = power_method(x, 200, 2, {sample_unit_sphere(5, rng), sample_unit_sphere(5, rng)});
        for (std::size_t i = 0; i < 2; ++i) {
            CHECK(std::abs(dot(p.vector(i), o.vector(i))) >= 1 - 1e-6);
            CHECK(std::abs(p.eigvals[i] - o.eigvals[i]) <= 1e-6 * o.eigvals[i]);
        }
    }
}

TEST_CASE("deflation then power_method recovers the second pair") {
    Rng rng(29);
    const Mat a = test::spd_with_spectrum({9, 4, 1, 0.5}, rng);
    const auto o = eigh_oracle(a, 4);
    const Mat a2 = deflate(a, o.eigvals[0], o.vector(0));
    const auto p = power_method_sym(a2, 200, 1, {sample_unit_sphere(4, rng)});
    CHECK(std::abs(dot(p.vector(0), o.vector(1))) >= 1 - 1e-6);
    CHECK(std::abs(p.eigvals[0] - o.eigvals[1]) <= 1e-6 * o.eigvals[1]);
}

TEST_CASE("sample_unit_sphere") {
    Rng rng(3);
    const Vec one = sample_unit_sphere(1, rng);
    CHECK(std::abs(one[0]) == 1.0);
    for (std::size_t d : {2u, 7u, 50u}) CHECK(std::abs(norm2(sample_unit_sphere(d, rng)) - 1.0) <= 1e-12);
    Rng a(9), b(9);
    CHECK(sample_unit_sphere(6, a) == sample_unit_sphere(6, b));
}

TEST_CASE("spectral_norm against the oracle") {
    Rng rng(8);
    const Mat w = test::gaussian(4, 6, rng);
    const auto o = eigh_oracle(symmetrize(w), 1);
    CHECK(spectral_norm(w) == doctest::Approx(std::sqrt(o.eigvals[0])).epsilon(1e-8));
}

TEST_CASE("gap accessor") {
    SpectralResult r;
    r.eigvals = {5, 3, 2.5};
    CHECK(r.gap() == doctest::Approx(0.5));
}
