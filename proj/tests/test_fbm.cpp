#include <doctest.h>

#include <cmath>
#include <vector>

#include "fbmlab/fbm.hpp"
#include "fbmlab/fracpath.hpp"
#include "fbmlab/stats.hpp"

using namespace fbmlab;

TEST_CASE("fbm covariance closed forms") {
    for (double H : {0.6, 0.75, 0.9})
        CHECK(fbm::fbm_covariance(1.0, 1.0, H) == doctest::Approx(1.0));
    CHECK(fbm::fbm_covariance(0.5, 1.0, 0.75) == doctest::Approx(0.5));
    CHECK(fbm::fbm_covariance(2.0, 2.0, 0.6) == doctest::Approx(std::pow(2.0, 1.2)));
    // H = 1/2 degenerates to Brownian covariance min(s,t)
    CHECK(fbm::fbm_covariance(0.3, 0.9, 0.5) == doctest::Approx(0.3));
    CHECK_THROWS(fbm::fbm_covariance(-0.1, 1.0, 0.75));
    CHECK_THROWS(fbm::fbm_covariance(0.1, 1.0, 1.5));
}

TEST_CASE("single step gaussian law") {
    // M = 1 grid: B^H_1 ~ N(0,1) for any H
    fbm::FbmSpec spec;
    spec.hurst = 0.75;
    spec.steps = 1;
    spec.horizon = 1.0;
    fbm::CholeskyFbmSampler s(1.0, 1, 0.75);
    const std::size_t n = 100000;
    std::vector<double> xs(n);
    parallel_for(n, [&](std::size_t p) { xs[p] = s.sample(1, 99, p).at(1, 0); });
    CHECK(sample_variance(xs).var == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("cholesky route empirical covariance") {
    fbm::CholeskyFbmSampler s(1.0, 2, 0.75);
    const std::size_t n = 100000;
    std::vector<double> a(n), b(n);
    parallel_for(n, [&](std::size_t p) {
        const GridPath x = s.sample(1, 17, p);
        a[p] = x.at(1, 0);
        b[p] = x.at(2, 0);
    });
    CHECK(sample_covariance(a, b) == doctest::Approx(0.5).epsilon(0.04));

    fbm::CholeskyFbmSampler bm(1.0, 2, 0.5);
    parallel_for(n, [&](std::size_t p) {
        const GridPath x = bm.sample(1, 18, p);
        a[p] = x.at(1, 0);
        b[p] = x.at(2, 0);
    });
    CHECK(sample_covariance(a, b) == doctest::Approx(0.5).epsilon(0.04));
}

TEST_CASE("volterra kernel identities") {
    SUBCASE("variance reproduction") {
        CHECK(fbm::kernel_sq_norm(1.0, 0.75, 4096) ==
              doctest::Approx(1.0).epsilon(1e-3));
    }
    SUBCASE("covariance reproduction on a grid of pairs") {
        for (double s : {0.2, 0.5, 0.8})
            for (double t : {0.4, 1.0}) {
                const double v = fbm::kernel_product_integral(t, s, 0.75, 4096);
                CHECK(v == doctest::Approx(fbm::fbm_covariance(s, t, 0.75))
                               .epsilon(1e-3));
            }
    }
    SUBCASE("positivity and domain errors") {
        for (double s : {0.1, 0.5, 0.9})
            CHECK(fbm::volterra_kernel(1.0, s, 0.9) > 0.0);
        CHECK_THROWS(fbm::volterra_kernel(1.0, 1.0, 0.75));
        CHECK_THROWS(fbm::volterra_kernel(1.0, 0.0, 0.75));
        CHECK_THROWS(fbm::volterra_kernel(1.0, 0.5, 0.4));
    }
}

TEST_CASE("volterra sampler") {
    const std::size_t M = 256;
    SUBCASE("zero driver gives zero path") {
        fbm::VolterraFbmSampler s(1.0, M, 0.75);
        GridPath zero(1.0, M, 1);
        const GridPath out = s.from_bm(zero);
        CHECK(out.sup_norm() == 0.0);
    }
    SUBCASE("H=1/2 reproduces the Brownian partial sums exactly") {
        fbm::VolterraFbmSampler s(1.0, M, 0.5);
        const GridPath w = fbm::sample_bm(1, 1.0, M, 4, 0);
        const GridPath out = s.from_bm(w);
        for (std::size_t i = 0; i <= M; i += 32)
            CHECK(out.at(i, 0) == doctest::Approx(w.at(i, 0)).epsilon(1e-14));
    }
    SUBCASE("covariance agreement with the exact law") {
        fbm::VolterraFbmSampler s(1.0, M, 0.75);
        const std::size_t n = 4000;
        std::vector<double> a(n), b(n);
        parallel_for(n, [&](std::size_t p) {
            const GridPath x = s.sample(1, 19, p);
            a[p] = x.at(M / 2, 0);
            b[p] = x.at(M, 0);
        });
        CHECK(std::abs(sample_covariance(a, b) - 0.5) < 0.03);
    }
    SUBCASE("grid mismatch") {
        fbm::VolterraFbmSampler s(1.0, M, 0.75);
        CHECK_THROWS_WITH(s.from_bm(GridPath(1.0, 2 * M, 1)), "grid mismatch");
        fbm::FbmSpec spec;
        spec.hurst = 0.75;
        spec.steps = M;
        CHECK_THROWS_WITH(fbm::sample_fbm_volterra(spec, GridPath(1.0, 2 * M, 1)),
                          "grid mismatch");
        const GridPath w = fbm::sample_bm(1, 1.0, M, 4, 1);
        const GridPath out = fbm::sample_fbm_volterra(spec, w);
        CHECK(out.at(0, 0) == 0.0);
        CHECK(out.all_finite());
    }
}

TEST_CASE("circulant sampler matches the exact law") {
    const std::size_t M = 512, n = 20000;
    for (double H : {0.6, 0.9}) {
        fbm::CirculantFbmSampler s(1.0, M, H);
        std::vector<double> a(n), b(n);
        parallel_for(n, [&](std::size_t p) {
            const GridPath x = s.sample(1, 23, p);
            a[p] = x.at(M / 2, 0);
            b[p] = x.at(M, 0);
        });
        const double exact = fbm::fbm_covariance(0.5, 1.0, H);
        const double se = std::sqrt((sample_variance(a).var * sample_variance(b).var +
                                     exact * exact) /
                                    n);
        CHECK(std::abs(sample_covariance(a, b) - exact) < 3.5 * se);
        CHECK(sample_variance(b).var == doctest::Approx(1.0).epsilon(0.03));
    }
}

TEST_CASE("sampler determinism and method dispatch") {
    fbm::FbmSpec spec;
    spec.hurst = 0.8;
    spec.dim = 2;
    spec.horizon = 2.0;
    spec.steps = 64;
    spec.seed = 12345;
    for (auto m : {fbm::Method::cholesky, fbm::Method::volterra,
                   fbm::Method::circulant}) {
        spec.method = m;
        const GridPath a = fbm::sample_fbm(spec);
        const GridPath b = fbm::sample_fbm(spec);
        CHECK(a.values() == b.values());  // bit-identical per spec+seed
        CHECK(a.at(0, 0) == 0.0);
        CHECK(a.at(0, 1) == 0.0);
    }
    spec.hurst = 1.2;
    CHECK_THROWS(fbm::sample_fbm(spec));
}

TEST_CASE("stationary increments and component independence") {
    const std::size_t M = 64, n = 30000;
    const double H = 0.7;
    fbm::CholeskyFbmSampler s(1.0, M, H);
    std::vector<double> inc(n), c0(n), c1(n);
    parallel_for(n, [&](std::size_t p) {
        const GridPath x = s.sample(2, 31, p);
        inc[p] = x.at(48, 0) - x.at(16, 0);
        c0[p] = x.at(M, 0);
        c1[p] = x.at(M, 1);
    });
    const auto v = sample_variance(inc);
    CHECK(std::abs(v.var - std::pow(0.5, 2.0 * H)) < 3.0 * v.stderr_);
    const double cross = sample_covariance(c0, c1);
    CHECK(std::abs(cross) < 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("self similarity of the covariance in law") {
    for (double H : {0.6, 0.75, 0.9})
        for (double c : {2.0, 3.5})
            CHECK(fbm::fbm_covariance(c * 1.0, c * 1.0, H) ==
                  doctest::Approx(std::pow(c, 2.0 * H) * fbm::fbm_covariance(1.0, 1.0, H)));
}

TEST_CASE("brownian skeleton") {
    const std::size_t n = 100000;
    std::vector<double> wT(n), i0(n), i1(n);
    parallel_for(n, [&](std::size_t p) {
        const GridPath w = fbm::sample_bm(1, 2.0, 32, 5, p);
        wT[p] = w.at(32, 0);
        i0[p] = w.at(8, 0) - w.at(4, 0);
        i1[p] = w.at(12, 0) - w.at(8, 0);
    });
    CHECK(sample_variance(wT).var == doctest::Approx(2.0).epsilon(0.02));
    const double rho = sample_covariance(i0, i1) /
                       std::sqrt(sample_variance(i0).var * sample_variance(i1).var);
    CHECK(std::abs(rho) < 0.02);
    const GridPath w = fbm::sample_bm(3, 1.0, 8, 5, 0);
    for (std::size_t c = 0; c < 3; ++c) CHECK(w.at(0, c) == 0.0);
}

TEST_CASE("cameron martin operator") {
    const double H = 0.6;
    const std::size_t M = 4096;
    SUBCASE("zero density") {
        const auto ctl = fbm::zero_control(1.0, M, 1, H);
        CHECK(ctl.u.sup_norm() == 0.0);
        CHECK(ctl.u_prime.sup_norm() == 0.0);
        CHECK(ctl.cm_norm_sq == 0.0);
        CHECK(ctl.in_ball(0.0));
    }
    SUBCASE("kernel column reproduces the endpoint") {
        // dot_u = K_H(T,.)/T^{2H}: u(T) = 1, 0.5||dot_u||^2 = T^{-2H}/2
        const auto row = fbm::weighted_kernel_row(1.0, M, H, M);
        GridPath du(1.0, M, 1);
        for (std::size_t j = 0; j <= M; ++j) du.at(j, 0) = row[j];
        const auto ctl = fbm::cameron_martin_apply(du, H);
        CHECK(ctl.u.at(M, 0) == doctest::Approx(1.0).epsilon(1e-3));
        CHECK(ctl.cm_norm_sq == doctest::Approx(1.0).epsilon(1e-3));
    }
    SUBCASE("constant density closed forms") {
        GridPath du(1.0, M, 1);
        for (std::size_t j = 0; j <= M; ++j) du.at(j, 0) = 1.0;
        const auto ctl = fbm::cameron_martin_apply(du, H);
        const double c = fbm::volterra_c(H) * std::tgamma(1.5 - H);
        CHECK(ctl.u.at(M, 0) == doctest::Approx(c / (H + 0.5)).epsilon(1e-4));
        CHECK(ctl.u_prime.at(M / 2, 0) ==
              doctest::Approx(c * std::pow(0.5, H - 0.5)).epsilon(1e-4));
        CHECK(ctl.u_prime.at(0, 0) == 0.0);
        CHECK(ctl.cm_norm_sq == doctest::Approx(1.0));
    }
    SUBCASE("derivative integrates back to u") {
        GridPath du(1.0, M, 1);
        for (std::size_t j = 0; j <= M; ++j)
            du.at(j, 0) = std::cos(2.0 * std::numbers::pi * du.time(j));
        const auto ctl = fbm::cameron_martin_apply(du, H);
        double acc = 0.0, worst = 0.0;
        const double dt = ctl.u.step();
        for (std::size_t i = 1; i <= M; ++i) {
            acc += 0.5 * dt * (ctl.u_prime.at(i - 1, 0) + ctl.u_prime.at(i, 0));
            worst = std::max(worst, std::abs(acc - ctl.u.at(i, 0)));
        }
        CHECK(worst / ctl.u.sup_norm() < 1e-3);
        CHECK(ctl.u.at(0, 0) == 0.0);
    }
    SUBCASE("regularity of the induced path") {
        // bounded density => u is Holder up to H; check stability just below
        GridPath du(1.0, 2048, 1);
        for (std::size_t j = 0; j <= 2048; ++j)
            du.at(j, 0) = std::sin(3.0 * du.time(j)) + 0.5;
        const auto ctl = fbm::cameron_martin_apply(du, 0.75);
        const double n1 = fracpath::holder_norm(ctl.u, 0.70);
        const double n2 = fracpath::holder_norm(ctl.u.subsample(2), 0.70);
        CHECK(std::isfinite(n1));
        CHECK(std::abs(n1 - n2) / n1 < 0.05);
    }
}

TEST_CASE("trapezoid weights") {
    const auto w = fbm::trapezoid_weights(2.0, 4);
    CHECK(w.front() == doctest::Approx(0.25));
    CHECK(w[2] == doctest::Approx(0.5));
    CHECK(w.back() == doctest::Approx(0.25));
}
