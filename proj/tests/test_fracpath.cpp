#include <doctest.h>

#include <cmath>

#include "fbmlab/fbm.hpp"
#include "fbmlab/fracpath.hpp"
#include "oracles.hpp"

using namespace fbmlab;
using fracpath::AlphaExponent;

namespace {

GridPath linear_path(double horizon, std::size_t steps) {
    GridPath g(horizon, steps, 1);
    for (std::size_t i = 0; i <= steps; ++i) g.at(i, 0) = g.time(i);
    return g;
}

GridPath constant_path(double horizon, std::size_t steps, double c) {
    GridPath g(horizon, steps, 1);
    for (std::size_t i = 0; i <= steps; ++i) g.at(i, 0) = c;
    return g;
}

GridPath smooth_path(double horizon, std::size_t steps) {
    GridPath g(horizon, steps, 1);
    for (std::size_t i = 0; i <= steps; ++i) {
        const double t = g.time(i);
        g.at(i, 0) = std::sin(2.0 * std::numbers::pi * t / horizon) + t;
    }
    return g;
}

}  // namespace

TEST_CASE("alpha exponent window") {
    CHECK_NOTHROW(AlphaExponent(0.3, 0.75));
    CHECK_THROWS(AlphaExponent(0.2, 0.75));  // below 1-H
    CHECK_THROWS(AlphaExponent(0.5, 0.75));
    CHECK_THROWS(AlphaExponent(0.3, 0.5));
}

TEST_CASE("holder norm closed forms") {
    CHECK(fracpath::holder_norm(constant_path(1.0, 64, -2.5), 0.4) ==
          doctest::Approx(2.5));
    CHECK(fracpath::holder_norm(linear_path(1.0, 64), 1.0) == doctest::Approx(2.0));
    CHECK_THROWS(fracpath::holder_norm(linear_path(1.0, 64), 1.5));
}

TEST_CASE("holder norm of sampled fbm under refinement") {
    // one underlying path, viewed at several resolutions
    fbm::CirculantFbmSampler s(1.0, 1 << 14, 0.75);
    const GridPath fine = s.sample(1, 2024, 0);
    const GridPath mid2 = fine.subsample(2);   // 2^13
    const GridPath mid = mid2.subsample(2);    // 2^12
    // below H: stable under refinement
    const double n12 = fracpath::holder_norm(mid, 0.70);
    const double n13 = fracpath::holder_norm(mid2, 0.70);
    CHECK(std::abs(n13 - n12) / n12 < 0.05);
    // above H: diverges as the grid resolves rougher increments
    const GridPath coarse = fine.subsample(1 << 8);  // 2^6
    const double c6 = fracpath::holder_norm(coarse, 0.80);
    const double c14 = fracpath::holder_norm(fine, 0.80);
    CHECK(c14 / c6 >= 1.5);
}

TEST_CASE("w_alpha_inf norm") {
    CHECK(fracpath::w_alpha_inf_norm(constant_path(1.0, 256, 0.0), 0.25) ==
          doctest::Approx(0.0));
    // g(t)=t: sup_t [t + t^{1-a}/(1-a)] = 1 + 4/3
    CHECK(fracpath::w_alpha_inf_norm(linear_path(1.0, 4096), 0.25) ==
          doctest::Approx(1.0 + 4.0 / 3.0).epsilon(1e-4));
    // fbm sample: finite, stable across resolutions
    fbm::CirculantFbmSampler s(1.0, 1 << 12, 0.9);
    const GridPath fine = s.sample(1, 5, 0);
    const GridPath coarse = fine.subsample(2);
    const double nf = fracpath::w_alpha_inf_norm(fine, 0.25);
    const double nc = fracpath::w_alpha_inf_norm(coarse, 0.25);
    CHECK(std::isfinite(nf));
    CHECK(std::abs(nf - nc) / nf < 0.02);
}

TEST_CASE("w_one_minus_alpha norm") {
    CHECK(fracpath::w_one_minus_alpha_norm(constant_path(1.0, 256, 0.0), 0.25) ==
          doctest::Approx(0.0));
    CHECK(fracpath::w_one_minus_alpha_norm(linear_path(1.0, 2048), 0.25) ==
          doctest::Approx(5.0).epsilon(1e-4));
    fbm::CirculantFbmSampler s(1.0, 1 << 12, 0.8);
    const GridPath fine = s.sample(1, 6, 0);
    const GridPath coarse = fine.subsample(2);
    const double nf = fracpath::w_one_minus_alpha_norm(fine, 0.25);
    const double nc = fracpath::w_one_minus_alpha_norm(coarse, 0.25);
    CHECK(std::isfinite(nf));
    CHECK(std::abs(nf - nc) / nf < 0.05);
}

TEST_CASE("lambda_alpha bound and homogeneity") {
    CHECK(fracpath::lambda_alpha(constant_path(1.0, 256, 0.0), 0.25) ==
          doctest::Approx(0.0));
    const GridPath lin = linear_path(1.0, 1024);
    const double lam = fracpath::lambda_alpha(lin, 0.25);
    CHECK(lam <= 5.0 / (std::tgamma(0.75) * std::tgamma(0.25)) + 1e-9);

    fbm::CirculantFbmSampler s(1.0, 1 << 10, 0.8);
    GridPath b = s.sample(1, 7, 0);
    const double l1 = fracpath::lambda_alpha(b, 0.25);
    CHECK(std::isfinite(l1));
    GridPath b3 = b;
    for (std::size_t i = 0; i <= b.steps(); ++i) b3.at(i, 0) *= -3.0;
    CHECK(fracpath::lambda_alpha(b3, 0.25) == doctest::Approx(3.0 * l1));
    // bound against the 1-alpha norm holds on samples
    CHECK(l1 <= fracpath::w_one_minus_alpha_norm(b, 0.25) /
                    (std::tgamma(0.75) * std::tgamma(0.25)) +
                1e-9);
}

TEST_CASE("weyl derivatives") {
    const double alpha = 0.25;
    const std::size_t M = 1024;
    SUBCASE("constant path") {
        const GridPath c = constant_path(1.0, M, 2.0);
        const auto dl = fracpath::weyl_left(c, alpha, 0, M);
        CHECK(dl[0] == doctest::Approx(2.0 / std::tgamma(0.75)));
        const auto dr = fracpath::weyl_right(c, alpha, 0, M);
        CHECK(dr[0] == doctest::Approx(0.0));
    }
    SUBCASE("linear path closed form and quadrature oracle") {
        const GridPath lin = linear_path(1.0, M);
        const auto dl = fracpath::weyl_left(lin, alpha, 0, M);
        // D^a t = t^{1-a}/Gamma(2-a); exact for the piecewise-linear rule
        CHECK(dl[0] == doctest::Approx(1.0 / std::tgamma(2.0 - alpha)).epsilon(1e-12));
        const double oracle = oracles::weyl_left_quadrature(
            [](double t) { return t; }, alpha, 1.0, 4096);
        CHECK(dl[0] == doctest::Approx(oracle).epsilon(1e-4));
    }
    SUBCASE("quadratic path against Riemann-Liouville form") {
        GridPath q(1.0, M, 1);
        for (std::size_t i = 0; i <= M; ++i) q.at(i, 0) = q.time(i) * q.time(i);
        const auto dl = fracpath::weyl_left(q, alpha, 0, M);
        CHECK(dl[0] == doctest::Approx(2.0 / std::tgamma(3.0 - alpha)).epsilon(1e-5));
        const double oracle = oracles::weyl_left_quadrature(
            [](double t) { return t * t; }, alpha, 1.0, 4096);
        CHECK(dl[0] == doctest::Approx(oracle).epsilon(1e-4));
    }
    SUBCASE("linearity to machine precision") {
        fbm::CirculantFbmSampler s(1.0, M, 0.8);
        const GridPath g1 = s.sample(1, 8, 0);
        const GridPath g2 = s.sample(1, 8, 1);
        GridPath sum(1.0, M, 1);
        for (std::size_t i = 0; i <= M; ++i) sum.at(i, 0) = g1.at(i, 0) + g2.at(i, 0);
        const auto a = fracpath::weyl_left(g1, alpha, 0, M);
        const auto b = fracpath::weyl_left(g2, alpha, 0, M);
        const auto ab = fracpath::weyl_left(sum, alpha, 0, M);
        CHECK(ab[0] == doctest::Approx(a[0] + b[0]).epsilon(1e-12));
        const auto ra = fracpath::weyl_right(g1, alpha, 0, M);
        const auto rb = fracpath::weyl_right(g2, alpha, 0, M);
        const auto rab = fracpath::weyl_right(sum, alpha, 0, M);
        CHECK(rab[0] == doctest::Approx(ra[0] + rb[0]).epsilon(1e-12));
    }
    SUBCASE("bad windows throw") {
        const GridPath lin = linear_path(1.0, M);
        CHECK_THROWS(fracpath::weyl_left(lin, alpha, 5, 5));
        CHECK_THROWS(fracpath::weyl_right(lin, alpha, 6, 5));
    }
}

TEST_CASE("young integral basics") {
    const double alpha = 0.25;
    const std::size_t M = 4096;
    SUBCASE("unit integrand reproduces increments") {
        fbm::CirculantFbmSampler s(1.0, M, 0.8);
        const GridPath h = s.sample(1, 9, 0);
        const GridPath one = constant_path(1.0, M, 1.0);
        const auto F = fracpath::young_integral(one, h, alpha);
        for (std::size_t i = 0; i <= M; i += 512)
            CHECK(F.at(i, 0) == doctest::Approx(h.at(i, 0) - h.at(0, 0)).epsilon(1e-12));
    }
    SUBCASE("chain rule on a smooth path") {
        const GridPath h = smooth_path(1.0, M);
        const auto F = fracpath::young_integral(h, h, alpha);
        const double exact = 0.5 * (h.at(M, 0) * h.at(M, 0) - h.at(0, 0) * h.at(0, 0));
        CHECK(F.at(M, 0) == doctest::Approx(exact).epsilon(1e-3));
    }
    SUBCASE("fbm pair against left-point sums at 4x resolution") {
        fbm::CirculantFbmSampler s(1.0, 4 * M, 0.8);
        const GridPath gf = s.sample(1, 10, 0);
        const GridPath hf = s.sample(1, 10, 1);
        const GridPath g = gf.subsample(4), h = hf.subsample(4);
        const auto y = fracpath::young_integral(g, h, alpha);
        const auto rs = fracpath::riemann_stieltjes_sum(gf, hf);
        const double scale = std::max(1.0, std::abs(rs.at(4 * M, 0)));
        CHECK(std::abs(y.at(M, 0) - rs.at(4 * M, 0)) / scale < 1e-2);
    }
    SUBCASE("scalar integrand broadcasts over components") {
        fbm::CirculantFbmSampler s(1.0, 256, 0.8);
        const GridPath h2 = s.sample(2, 16, 0);
        const GridPath one = constant_path(1.0, 256, 1.0);
        const auto F = fracpath::young_integral(one, h2, alpha);
        CHECK(F.dim() == 2);
        for (std::size_t c = 0; c < 2; ++c)
            CHECK(F.at(256, c) ==
                  doctest::Approx(h2.at(256, c) - h2.at(0, c)).epsilon(1e-12));
    }
    SUBCASE("grid mismatch throws") {
        const GridPath a = linear_path(1.0, 128);
        const GridPath b = linear_path(1.0, 256);
        CHECK_THROWS_WITH(fracpath::young_integral(a, b, alpha), "grid mismatch");
        CHECK_THROWS(fracpath::young_integral(a, a, 0.75));  // exponent window empty
    }
}

TEST_CASE("young integral properties") {
    const double alpha = 0.25;
    const std::size_t M = 1024;
    fbm::CirculantFbmSampler s09(1.0, M, 0.9);

    SUBCASE("bilinearity") {
        const GridPath g = s09.sample(1, 11, 0);
        const GridPath h = s09.sample(1, 11, 1);
        const GridPath k = s09.sample(1, 11, 2);
        GridPath g2h3(1.0, M, 1), hk(1.0, M, 1);
        for (std::size_t i = 0; i <= M; ++i) {
            g2h3.at(i, 0) = 2.0 * g.at(i, 0);
            hk.at(i, 0) = h.at(i, 0) + k.at(i, 0);
        }
        const auto a = fracpath::young_integral(g2h3, hk, alpha);
        const auto b1 = fracpath::young_integral(g, h, alpha);
        const auto b2 = fracpath::young_integral(g, k, alpha);
        CHECK(a.at(M, 0) ==
              doctest::Approx(2.0 * (b1.at(M, 0) + b2.at(M, 0))).epsilon(1e-10));
    }
    SUBCASE("integration by parts, smooth against rough") {
        const GridPath g = smooth_path(1.0, M);
        const GridPath h = s09.sample(1, 12, 0);
        const auto gdh = fracpath::young_integral(g, h, alpha);
        const auto hdg = fracpath::young_integral(h, g, alpha);
        const double lhs = gdh.at(M, 0) + hdg.at(M, 0);
        const double rhs = g.at(M, 0) * h.at(M, 0) - g.at(0, 0) * h.at(0, 0);
        const double scale = std::max(1.0, g.sup_norm() * h.sup_norm());
        CHECK(std::abs(lhs - rhs) / scale < 1e-3);
    }
    SUBCASE("pathwise bound on random pairs") {
        fbm::CirculantFbmSampler s08(1.0, M, 0.8);
        for (int p = 0; p < 20; ++p) {
            const GridPath g =
                (p % 2 == 0) ? smooth_path(1.0, M) : s09.sample(1, 13, 2 * p);
            const GridPath h = s08.sample(1, 13, 2 * p + 1);
            const auto F = fracpath::young_integral(g, h, alpha);
            const double lhs = std::abs(F.at(M, 0));
            const double rhs = fracpath::lambda_alpha(h, alpha) *
                               fracpath::w_alpha_one_norm(g, alpha);
            CHECK(lhs <= rhs * 1.02 + 1e-12);
        }
    }
    SUBCASE("window bound") {
        const GridPath g = smooth_path(1.0, M);
        const GridPath h = s09.sample(1, 14, 0);
        const auto F = fracpath::young_integral(g, h, alpha);
        const double lam = fracpath::lambda_alpha(h, alpha);
        const std::size_t windows[][2] = {{0, M}, {M / 4, M / 2}, {M / 8, 7 * M / 8}};
        for (const auto& w : windows) {
            const double lhs = std::abs(F.at(w[1], 0) - F.at(w[0], 0));
            const double rhs =
                lam * oracles::window_bound_integral(g, w[0], w[1], alpha);
            CHECK(lhs <= rhs * 1.05 + 5e-3);  // both sides carry O(h^theta) quadrature
        }
    }
    SUBCASE("additivity at quadrature accuracy") {
        // the compensated pairing is evaluated per endpoint, so additivity
        // holds at the scheme's accuracy, not to machine precision
        const GridPath g = smooth_path(1.0, M);
        const GridPath h = s09.sample(1, 15, 0);
        const auto F = fracpath::young_integral(g, h, alpha);
        for (std::size_t a : {M / 4, M / 2}) {
            const double window = oracles::rs_window(g, h, a, M);
            const double scale = std::max(1.0, g.sup_norm() * h.sup_norm());
            CHECK(std::abs((F.at(M, 0) - F.at(a, 0)) - window) / scale < 2e-2);
        }
    }
}

TEST_CASE("riemann stieltjes sums") {
    SUBCASE("unit integrand") {
        const GridPath h = smooth_path(1.0, 128);
        const GridPath one = constant_path(1.0, 128, 1.0);
        const auto F = fracpath::riemann_stieltjes_sum(one, h);
        CHECK(F.at(128, 0) == doctest::Approx(h.at(128, 0) - h.at(0, 0)));
    }
    SUBCASE("t dt on four cells") {
        const GridPath t4 = linear_path(1.0, 4);
        const auto F = fracpath::riemann_stieltjes_sum(t4, t4);
        CHECK(F.at(4, 0) == doctest::Approx(0.375));
    }
    SUBCASE("monotone refinement toward 1/2") {
        double prev = 0.0;
        for (std::size_t M : {4u, 16u, 64u, 256u}) {
            const GridPath t = linear_path(1.0, M);
            const auto F = fracpath::riemann_stieltjes_sum(t, t);
            CHECK(F.at(M, 0) > prev);
            CHECK(F.at(M, 0) < 0.5);
            prev = F.at(M, 0);
        }
    }
    SUBCASE("grid mismatch") {
        CHECK_THROWS_WITH(fracpath::riemann_stieltjes_sum(linear_path(1.0, 4),
                                                          linear_path(1.0, 8)),
                          "grid mismatch");
    }
}

TEST_CASE("norm chain finiteness on sampled paths") {
    // C^{alpha+kappa} ⊂ W^{alpha,inf} ⊂ C^{alpha-kappa}: all discrete norms of
    // a sampled path with Holder index above alpha+kappa stay finite and
    // refinement-stable (constants are not asserted)
    fbm::CirculantFbmSampler s(1.0, 1 << 11, 0.9);
    const GridPath b = s.sample(1, 77, 0);
    const double alpha = 0.3, kappa = 0.1;
    const double c_hi = fracpath::holder_norm(b, alpha + kappa);
    const double w = fracpath::w_alpha_inf_norm(b, alpha);
    const double c_lo = fracpath::holder_norm(b, alpha - kappa);
    CHECK(std::isfinite(c_hi));
    CHECK(std::isfinite(w));
    CHECK(std::isfinite(c_lo));
    CHECK(c_lo <= c_hi);  // the weaker exponent can only shrink the seminorm
}

TEST_CASE("holder exponent estimator") {
    fbm::CirculantFbmSampler s(1.0, 1 << 12, 0.75);
    const GridPath b = s.sample(1, 21, 0);
    CHECK(fracpath::estimate_holder_exponent(b) == doctest::Approx(0.75).epsilon(0.12));
    CHECK(fracpath::estimate_holder_exponent(linear_path(1.0, 256)) ==
          doctest::Approx(1.0).epsilon(0.01));
}
