#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "fbmlab/harness.hpp"
#include "fbmlab/sde.hpp"
#include "fbmlab/stats.hpp"

using namespace fbmlab;

namespace {

double ks_distance(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j])
            ++i;
        else
            ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / a.size() -
                                 static_cast<double>(j) / b.size()));
    }
    return d;
}

}  // namespace

TEST_CASE("scale params") {
    const auto p = sde::ScaleParams::from_theta(1e-2, 0.4);
    CHECK(p.h_eps == doctest::Approx(std::pow(1e-2, -0.2)));
    CHECK(p.b_eps == doctest::Approx(1.0 / (p.h_eps * p.h_eps)));
    CHECK(p.sqrt_eps_h() == doctest::Approx(std::pow(1e-2, 0.3)));
    CHECK(p.sqrt_eps_h() <= 1.0);
    CHECK(p.h_eps >= 1.0);
    CHECK_THROWS(sde::ScaleParams::from_theta(0.0, 0.4));
    CHECK_THROWS(sde::ScaleParams::from_theta(0.5, 1.0));
    // theta = 0 is the CLT normalization h == 1
    CHECK(sde::ScaleParams::from_theta(0.5, 0.0).h_eps == doctest::Approx(1.0));
}

TEST_CASE("ode solver") {
    auto lin = harness::make_system("SS-LIN");
    const std::vector<double> x0{1.0};
    SUBCASE("zero drift is constant") {
        auto flat = harness::make_system("SS-FLAT");
        const GridPath x = sde::solve_ode(flat.spec, x0, 1.0, 64);
        for (std::size_t i = 0; i <= 64; ++i) CHECK(x.at(i, 0) == 1.0);
    }
    SUBCASE("linear decay to 1e-8") {
        const GridPath x = sde::solve_ode(lin.spec, x0, 1.0, 1024);
        CHECK(std::abs(x.at(1024, 0) - std::exp(-1.0)) < 1e-8);
    }
    SUBCASE("averaged drift reaches its fixed point") {
        auto ou = harness::make_system("TS-OU");
        const GridPath x = sde::solve_ode(ou.f1bar, x0, 20.0, 4096);
        CHECK(std::abs(x.at(4096, 0) - std::exp(-0.125)) < 1e-6);
    }
}

TEST_CASE("single scale solver") {
    auto lin = harness::make_system("SS-LIN");
    auto flat = harness::make_system("SS-FLAT");
    const std::vector<double> x0{1.0};
    const std::size_t M = 1024;
    fbm::CirculantFbmSampler sampler(1.0, M, 0.75);
    const GridPath driver = sampler.sample(1, 3, 0);

    SUBCASE("eps = 0 reproduces the euler ODE exactly") {
        const auto det = sde::ScaleParams::deterministic();
        const GridPath a = sde::solve_single_scale(lin.spec, det, driver, x0);
        const GridPath b = sde::solve_ode(lin.spec, x0, 1.0, M, sde::OdeMethod::euler);
        CHECK(a.values() == b.values());
        const GridPath c = sde::solve_ode(lin.spec, x0, 1.0, M);
        double worst = 0.0;
        for (std::size_t i = 0; i <= M; ++i)
            worst = std::max(worst, std::abs(a.at(i, 0) - c.at(i, 0)));
        CHECK(worst < 2.0 / M);  // euler-vs-rk4 gap is O(dt)
    }
    SUBCASE("zero drift telescopes to x0 + sqrt(eps) B") {
        const auto params = sde::ScaleParams::from_theta(0.04, 0.4);
        std::vector<double> z0{0.0};
        const GridPath x = sde::solve_single_scale(flat.spec, params, driver, z0);
        for (std::size_t i = 0; i <= M; i += 128)
            CHECK(x.at(i, 0) ==
                  doctest::Approx(0.2 * driver.at(i, 0)).epsilon(1e-13));
    }
    SUBCASE("self refinement strong error") {
        fbm::CirculantFbmSampler fine_s(1.0, 1 << 14, 0.75);
        const GridPath fine_driver = fine_s.sample(1, 4, 0);
        const GridPath coarse_driver = fine_driver.subsample(4);
        const auto params = sde::ScaleParams::from_theta(0.01, 0.4);
        const GridPath ref =
            sde::solve_single_scale(lin.spec, params, fine_driver, x0);
        const GridPath sol =
            sde::solve_single_scale(lin.spec, params, coarse_driver, x0);
        double worst = 0.0;
        for (std::size_t i = 0; i <= coarse_driver.steps(); ++i)
            worst = std::max(worst, std::abs(sol.at(i, 0) - ref.at(4 * i, 0)));
        CHECK(worst < 1e-3);
    }
    SUBCASE("blow-up guard") {
        sde::SystemSpec bad = flat.spec;
        bad.f = [](std::span<const double> x, std::span<double> o) {
            o[0] = x[0] * x[0] * x[0];
        };
        const auto params = sde::ScaleParams::from_theta(0.01, 0.4);
        std::vector<double> big{50.0};
        CHECK_THROWS_AS(sde::solve_single_scale(bad, params, driver, big),
                        std::runtime_error);
    }
}

TEST_CASE("deviation path") {
    auto flat = harness::make_system("SS-FLAT");
    const std::size_t M = 512;
    fbm::CirculantFbmSampler sampler(1.0, M, 0.75);
    const GridPath driver = sampler.sample(1, 6, 0);
    const auto params = sde::ScaleParams::from_theta(0.01, 0.4);
    std::vector<double> z0{0.0};
    const GridPath xe = sde::solve_single_scale(flat.spec, params, driver, z0);
    const GridPath xl = sde::solve_ode(flat.spec, z0, 1.0, M);

    SUBCASE("identical inputs give the zero path") {
        const GridPath z = sde::deviation_path(xe, xe, params);
        CHECK(z.sup_norm() == 0.0);
        CHECK(z.at(0, 0) == 0.0);
    }
    SUBCASE("zero drift algebra z = B/h") {
        const GridPath z = sde::deviation_path(xe, xl, params);
        for (std::size_t i = 0; i <= M; i += 64)
            CHECK(z.at(i, 0) ==
                  doctest::Approx(driver.at(i, 0) / params.h_eps).epsilon(1e-12));
    }
    SUBCASE("theta = 0 is the CLT normalization") {
        const auto clt = sde::ScaleParams::from_theta(0.01, 0.0);
        const GridPath z = sde::deviation_path(xe, xl, clt);
        CHECK(z.at(M, 0) ==
              doctest::Approx((xe.at(M, 0) - xl.at(M, 0)) / 0.1).epsilon(1e-12));
    }
}

TEST_CASE("controlled single-scale solver") {
    auto lin = harness::make_system("SS-LIN");
    auto flat = harness::make_system("SS-FLAT");
    const std::size_t M = 4096;
    const double H = 0.6;
    const std::vector<double> x0{1.0};
    fbm::CirculantFbmSampler sampler(1.0, M, H);
    const GridPath driver = sampler.sample(1, 12, 0);
    const auto params = sde::ScaleParams::from_theta(1e-2, 0.4);

    SUBCASE("zero control reproduces the plain solver") {
        const auto zero = fbm::zero_control(1.0, M, 1, H);
        const GridPath a = sde::solve_controlled_single(lin.spec, params, driver,
                                                        zero, x0);
        const GridPath b = sde::solve_single_scale(lin.spec, params, driver, x0);
        CHECK(a.values() == b.values());
    }
    SUBCASE("kernel-column control moves the endpoint by sqrt(eps) h") {
        const auto row = fbm::weighted_kernel_row(1.0, M, H, M);
        GridPath du(1.0, M, 1);
        for (std::size_t j = 0; j <= M; ++j) du.at(j, 0) = row[j];
        const auto ctl = fbm::cameron_martin_apply(du, H);
        GridPath zero_driver(1.0, M, 1);
        std::vector<double> z0{0.0};
        const GridPath x =
            sde::solve_controlled_single(flat.spec, params, zero_driver, ctl, z0);
        CHECK(x.at(M, 0) ==
              doctest::Approx(params.sqrt_eps_h()).epsilon(1.5e-3));
    }
    SUBCASE("shift consistency") {
        // adding the control inside the step equals shifting the driver by
        // the same left-point control increments
        const auto ctl = fbm::cameron_martin_apply(
            harness::sine_density(1.0, M, 1, 1.0), H);
        const GridPath a =
            sde::solve_controlled_single(lin.spec, params, driver, ctl, x0);
        GridPath shifted(1.0, M, 1);
        double acc = 0.0;
        shifted.at(0, 0) = driver.at(0, 0);
        for (std::size_t i = 0; i < M; ++i) {
            acc += params.h_eps * ctl.u_prime.at(i, 0) * driver.step();
            shifted.at(i + 1, 0) = driver.at(i + 1, 0) + acc;
        }
        const GridPath b = sde::solve_single_scale(lin.spec, params, shifted, x0);
        double worst = 0.0;
        for (std::size_t i = 0; i <= M; ++i)
            worst = std::max(worst, std::abs(a.at(i, 0) - b.at(i, 0)));
        CHECK(worst < 1e-10);
    }
}

TEST_CASE("two scale solver") {
    auto ou = harness::make_system("TS-OU");
    const std::vector<double> x0{0.5}, y0{0.0};

    SUBCASE("decoupled fast stays at zero") {
        sde::SystemSpec dec = ou.spec;
        dec.f2 = [](std::span<const double>, std::span<const double> y,
                    std::span<double> o) { o[0] = -y[0]; };
        dec.sigma2 = [](std::span<const double>, std::span<const double>,
                        std::span<double> o) { o[0] = 0.0; };
        const double eps = 0.05;
        const auto params = sde::ScaleParams::from_theta(eps, 0.4);
        const std::size_t M = sde::two_scale_min_steps(dec, eps, 1.0);
        fbm::CirculantFbmSampler fs(1.0, M, 0.75);
        const GridPath bh = fs.sample(1, 7, 0);
        const GridPath w = fbm::sample_bm(1, 1.0, M, 7, 0);
        const auto st = sde::solve_two_scale(dec, params, bh, w, x0, y0);
        CHECK(st.y.sup_norm() == 0.0);
        // slow coincides with the single-scale solve under f1(., 0)
        sde::SystemSpec ss;
        ss.mode = sde::Mode::single_scale;
        ss.m = 1;
        ss.d1 = 1;
        ss.f = [&](std::span<const double> x, std::span<double> o) {
            const double y_zero[1] = {0.0};
            dec.f1(x, y_zero, o);
        };
        ss.sigma = dec.sigma1;
        const GridPath xe = sde::solve_single_scale(ss, params, bh, x0);
        for (std::size_t i = 0; i <= M; i += M / 8)
            CHECK(st.x.at(i, 0) == doctest::Approx(xe.at(i, 0)).epsilon(1e-14));
    }
    SUBCASE("stability guard rejects coarse grids") {
        const auto params = sde::ScaleParams::from_theta(1e-3, 0.4);
        fbm::CirculantFbmSampler fs(1.0, 256, 0.75);
        const GridPath bh = fs.sample(1, 8, 0);
        const GridPath w = fbm::sample_bm(1, 1.0, 256, 8, 0);
        CHECK_THROWS_WITH(sde::solve_two_scale(ou.spec, params, bh, w, x0, y0),
                          "grid too coarse for epsilon");
    }
    SUBCASE("fast component reaches the OU stationary variance") {
        const double eps = 1e-3;
        const auto params = sde::ScaleParams::from_theta(eps, 0.6);
        const std::size_t M = sde::two_scale_min_steps(ou.spec, eps, 1.0);
        const std::size_t n = 2000;
        fbm::CirculantFbmSampler fs(1.0, M, 0.75);
        std::vector<double> yT(n);
        parallel_for(n, [&](std::size_t p) {
            const GridPath bh = fs.sample(1, 9, p);
            const GridPath w = fbm::sample_bm(1, 1.0, M, 9, p);
            yT[p] = sde::solve_two_scale(ou.spec, params, bh, w, x0, y0).y.at(M, 0);
        });
        CHECK(sample_variance(yT).var == doctest::Approx(0.25).epsilon(0.05));
    }
    SUBCASE("fast second moment uniformly bounded in epsilon") {
        double bound = 0.0;
        for (double eps : {1e-1, 1e-2}) {
            const auto params = sde::ScaleParams::from_theta(eps, 0.6);
            const std::size_t M = sde::two_scale_min_steps(ou.spec, eps, 1.0);
            fbm::CirculantFbmSampler fs(1.0, M, 0.75);
            const std::size_t n = 200;
            std::vector<double> integral(n);
            parallel_for(n, [&](std::size_t p) {
                const GridPath bh = fs.sample(1, 10, p);
                const GridPath w = fbm::sample_bm(1, 1.0, M, 10, p);
                const auto st = sde::solve_two_scale(ou.spec, params, bh, w, x0, y0);
                double acc = 0.0;
                for (std::size_t i = 0; i < M; ++i)
                    acc += st.y.at(i, 0) * st.y.at(i, 0) * st.y.step();
                integral[p] = acc;
            });
            const double est = mean_stderr(integral).mean;
            if (eps == 1e-1) bound = 2.0 * est;
            CHECK(est <= bound);
        }
    }
}

TEST_CASE("controlled two scale solver") {
    auto ou = harness::make_system("TS-OU");
    const std::vector<double> x0{0.5}, y0{0.0};
    const double eps = 1e-2;
    const auto params = sde::ScaleParams::from_theta(eps, 0.6);
    const std::size_t M = sde::two_scale_min_steps(ou.spec, eps, 1.0);
    fbm::CirculantFbmSampler fs(1.0, M, 0.75);
    const GridPath bh = fs.sample(1, 11, 0);
    const GridPath w = fbm::sample_bm(1, 1.0, M, 11, 0);

    SUBCASE("zero controls reproduce the plain system") {
        sde::TwoScaleControls none;
        none.u = fbm::zero_control(1.0, M, 1, 0.75);
        none.v_prime = GridPath(1.0, M, 1);
        none.has_u = true;
        none.has_v = true;
        const auto a = sde::solve_controlled_two_scale(ou.spec, params, bh, w, none,
                                                       x0, y0);
        const auto b = sde::solve_two_scale(ou.spec, params, bh, w, x0, y0);
        CHECK(a.x.values() == b.x.values());
        CHECK(a.y.values() == b.y.values());
    }
    SUBCASE("fast-only control leaves the slow path nearly unchanged") {
        sde::TwoScaleControls vonly;
        vonly.u = fbm::zero_control(1.0, M, 1, 0.75);
        vonly.v_prime = harness::sine_density(1.0, M, 1, 1.0);
        vonly.has_u = true;
        vonly.has_v = true;
        const auto a = sde::solve_controlled_two_scale(ou.spec, params, bh, w, vonly,
                                                       x0, y0);
        const auto b = sde::solve_two_scale(ou.spec, params, bh, w, x0, y0);
        double fast_gap = 0.0, slow_gap = 0.0;
        for (std::size_t i = 0; i <= M; ++i) {
            fast_gap = std::max(fast_gap, std::abs(a.y.at(i, 0) - b.y.at(i, 0)));
            slow_gap = std::max(slow_gap, std::abs(a.x.at(i, 0) - b.x.at(i, 0)));
        }
        CHECK(fast_gap > 0.1);             // the control genuinely acts on y
        CHECK(slow_gap < 0.5 * fast_gap);  // and only indirectly on x
    }
    SUBCASE("joint budget invariant") {
        const auto u = fbm::cameron_martin_apply(
            harness::sine_density(1.0, M, 1, 0.4), 0.75);
        CHECK_NOTHROW(sde::make_admissible_controls(
            u, harness::sine_density(1.0, M, 1, 0.4), 1.0));
        CHECK_THROWS(sde::make_admissible_controls(
            u, harness::sine_density(1.0, M, 1, 0.8), 1.0));
    }
}

TEST_CASE("frozen fast process") {
    auto ou = harness::make_system("TS-OU");
    const std::vector<double> x{0.3}, y0{0.0};
    SUBCASE("long-run law") {
        const GridPath y = sde::solve_frozen_fast(ou.spec, x, 600.0, 120000, 3, 0, y0);
        // subsample every ~1.5 time units for near-independent draws
        std::vector<double> tail;
        for (std::size_t i = 60000; i <= 120000; i += 300)
            tail.push_back(y.at(i, 0));
        const auto ms = mean_stderr(tail);
        CHECK(std::abs(ms.mean) < 3.0 * ms.stderr_ + 0.01);
        CHECK(sample_variance(tail).var == doctest::Approx(0.25).epsilon(0.05));
    }
    SUBCASE("two seeds share the invariant law") {
        std::vector<double> s1, s2;
        const std::size_t steps = 4000000;
        const GridPath y1 = sde::solve_frozen_fast(ou.spec, x, 20000.0, steps, 5, 0, y0);
        const GridPath y2 = sde::solve_frozen_fast(ou.spec, x, 20000.0, steps, 6, 0, y0);
        for (std::size_t i = steps / 50; i <= steps; i += 260) {
            s1.push_back(y1.at(i, 0));
            s2.push_back(y2.at(i, 0));
        }
        CHECK(ks_distance(s1, s2) < 0.02);
    }
    SUBCASE("exponential forgetting of the initial condition") {
        // synchronous coupling: the gap contracts at rate beta1/2 in L2
        std::vector<double> ya{3.0}, yb{-2.0};
        const GridPath p1 = sde::solve_frozen_fast(ou.spec, x, 2.0, 4096, 7, 0, ya);
        const GridPath p2 = sde::solve_frozen_fast(ou.spec, x, 2.0, 4096, 7, 0, yb);
        std::vector<double> ts, lg;
        for (std::size_t i = 256; i <= 2048; i += 256) {
            ts.push_back(p1.time(i));
            lg.push_back(std::log(std::abs(p1.at(i, 0) - p2.at(i, 0))));
        }
        const double rate = -regression_slope(ts, lg);      // decay of |gap|
        CHECK(rate > 0.5 * (ou.spec.beta1 / 2.0));
        CHECK(rate < 2.0 * (ou.spec.beta1 / 2.0));
    }
}

TEST_CASE("khasminskii auxiliary processes") {
    auto sys = harness::make_system("TS-OUVAR");
    const std::vector<double> x0{0.5}, y0{0.0};
    const double eps = 1e-2;
    const auto params = sde::ScaleParams::from_theta(eps, 0.6);
    const std::size_t M = sde::two_scale_min_steps(sys.spec, eps, 1.0);
    fbm::CirculantFbmSampler fs(1.0, M, 0.75);
    const GridPath bh = fs.sample(1, 13, 0);
    const GridPath w = fbm::sample_bm(1, 1.0, M, 13, 0);
    sde::TwoScaleControls controls;
    controls.u = fbm::cameron_martin_apply(harness::sine_density(1.0, M, 1, 0.5), 0.75);
    controls.has_u = true;
    const auto controlled =
        sde::solve_controlled_two_scale(sys.spec, params, bh, w, controls, x0, y0);

    SUBCASE("one-step blocks track the controlled system") {
        const auto aux = sde::solve_khasminskii_auxiliary(
            sys.spec, params, bh, w, controls, controlled.x, bh.step(), x0, y0);
        double worst = 0.0;
        for (std::size_t i = 0; i <= M; ++i)
            worst = std::max(worst, std::abs(aux.x.at(i, 0) - controlled.x.at(i, 0)));
        CHECK(worst < 5.0 * bh.step());
    }
    SUBCASE("block length T freezes the slow argument at x0") {
        const auto aux = sde::solve_khasminskii_auxiliary(
            sys.spec, params, bh, w, controls, controlled.x, 1.0, x0, y0);
        GridPath const_ref(1.0, M, 1);
        for (std::size_t i = 0; i <= M; ++i) const_ref.at(i, 0) = x0[0];
        const auto ref = sde::solve_khasminskii_auxiliary(
            sys.spec, params, bh, w, controls, const_ref, 0.25, x0, y0);
        CHECK(aux.x.values() == ref.x.values());
        CHECK(aux.y.values() == ref.y.values());
    }
    SUBCASE("freezing error grows with the block length") {
        double prev = 0.0;
        for (double delta : {bh.step() * 8, 0.0625, 0.25}) {
            const auto aux = sde::solve_khasminskii_auxiliary(
                sys.spec, params, bh, w, controls, controlled.x, delta, x0, y0);
            double worst = 0.0;
            for (std::size_t i = 0; i <= M; ++i)
                worst = std::max(worst,
                                 std::abs(aux.x.at(i, 0) - controlled.x.at(i, 0)));
            CHECK(worst >= prev);
            prev = worst;
        }
    }
    SUBCASE("misaligned block length throws") {
        CHECK_THROWS_WITH(sde::solve_khasminskii_auxiliary(sys.spec, params, bh, w,
                                                           controls, controlled.x,
                                                           bh.step() * 1.5, x0, y0),
                          "Delta not grid-aligned");
    }
}
