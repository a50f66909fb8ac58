#include "fbmlab/sde.hpp"

#include <cmath>
#include <iostream>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "fbmlab/rng.hpp"

namespace fbmlab::sde {

namespace {

constexpr double kBlowUpThreshold = 1e8;

void check_state(std::span<const double> x, std::size_t step) {
    double n2 = 0.0;
    for (double v : x) n2 += v * v;
    if (!(n2 < kBlowUpThreshold * kBlowUpThreshold))
        throw std::runtime_error("solution blow-up at step " + std::to_string(step));
}

void mat_vec_acc(std::span<const double> m_rowmajor, std::size_t rows,
                 std::size_t cols, std::span<const double> v, double scale,
                 std::span<double> acc) {
    for (std::size_t r = 0; r < rows; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < cols; ++c) s += m_rowmajor[r * cols + c] * v[c];
        acc[r] += scale * s;
    }
}

std::once_flag beta2_warn_flag;

void warn_beta2(const SystemSpec& spec, const ScaleParams& params) {
    if (params.sqrt_eps_h() >= spec.beta2 / 2.0) {
        std::call_once(beta2_warn_flag, [&] {
            std::cerr << "warning: sqrt(eps)h(eps) = " << params.sqrt_eps_h()
                      << " exceeds beta2/2 = " << spec.beta2 / 2.0
                      << "; fast moment bound not guaranteed\n";
        });
    }
}

}  // namespace

void SystemSpec::validate() const {
    if (m < 1) throw std::invalid_argument("SystemSpec: m >= 1 required");
    if (!(lipschitz > 0.0) || !(growth > 0.0))
        throw std::invalid_argument("SystemSpec: constants must be positive");
    if (mode == Mode::single_scale) {
        if (!f || !sigma)
            throw std::invalid_argument("SystemSpec: single-scale needs f and sigma");
        if (d1 < 1) throw std::invalid_argument("SystemSpec: d1 >= 1 required");
    } else {
        if (!f1 || !f2 || !sigma1 || !sigma2)
            throw std::invalid_argument("SystemSpec: two-scale needs f1,f2,sigma1,sigma2");
        if (n < 1 || d1 < 1 || d2 < 1)
            throw std::invalid_argument("SystemSpec: two-scale dimensions invalid");
        if (!(beta1 > 0.0) || !(beta2 > 0.0))
            throw std::invalid_argument("SystemSpec: dissipativity constants must be positive");
    }
}

ScaleParams ScaleParams::from_theta(double epsilon, double theta) {
    if (!(epsilon > 0.0 && epsilon <= 1.0))
        throw std::invalid_argument("ScaleParams: epsilon must lie in (0,1]");
    if (!(theta >= 0.0 && theta < 1.0))
        throw std::invalid_argument("ScaleParams: theta must lie in [0,1)");
    ScaleParams p;
    p.epsilon = epsilon;
    p.theta = theta;
    p.h_eps = std::pow(epsilon, -theta / 2.0);
    p.b_eps = 1.0 / (p.h_eps * p.h_eps);
    return p;
}

ScaleParams ScaleParams::deterministic() {
    ScaleParams p;
    p.epsilon = 0.0;
    p.theta = 0.0;
    p.h_eps = 1.0;
    p.b_eps = 1.0;
    return p;
}

double ScaleParams::sqrt_eps_h() const { return std::sqrt(epsilon) * h_eps; }

double joint_control_energy(const TwoScaleControls& controls) {
    double e = controls.has_u ? 0.5 * controls.u.cm_norm_sq : 0.0;
    if (controls.has_v) {
        const std::size_t M = controls.v_prime.steps();
        const double h = controls.v_prime.step();
        double nrm = 0.0;
        for (std::size_t i = 0; i <= M; ++i) {
            const double w = (i == 0 || i == M) ? 0.5 * h : h;
            for (std::size_t c = 0; c < controls.v_prime.dim(); ++c)
                nrm += w * controls.v_prime.at(i, c) * controls.v_prime.at(i, c);
        }
        e += 0.5 * nrm;
    }
    return e;
}

TwoScaleControls make_admissible_controls(fbm::Control u, GridPath v_prime,
                                          double budget_n) {
    TwoScaleControls c;
    c.u = std::move(u);
    c.v_prime = std::move(v_prime);
    c.has_u = true;
    c.has_v = true;
    if (joint_control_energy(c) > budget_n + 1e-12)
        throw std::invalid_argument("controls exceed the joint ball budget");
    return c;
}

GridPath solve_single_scale(const SystemSpec& spec, const ScaleParams& params,
                            const GridPath& driver, std::span<const double> x0) {
    spec.validate();
    if (spec.mode != Mode::single_scale)
        throw std::invalid_argument("solve_single_scale: wrong mode");
    if (driver.dim() != spec.d1 || x0.size() != spec.m)
        throw std::invalid_argument("solve_single_scale: dimension mismatch");
    const std::size_t M = driver.steps();
    const double dt = driver.step();
    const double se = std::sqrt(params.epsilon);

    GridPath out(driver.horizon(), M, spec.m);
    std::vector<double> x(x0.begin(), x0.end());
    std::vector<double> fx(spec.m), sig(spec.m * spec.d1), db(spec.d1);
    for (std::size_t c = 0; c < spec.m; ++c) out.at(0, c) = x[c];
    for (std::size_t i = 0; i < M; ++i) {
        spec.f(x, fx);
        spec.sigma(x, sig);
        for (std::size_t c = 0; c < spec.d1; ++c)
            db[c] = driver.at(i + 1, c) - driver.at(i, c);
        for (std::size_t c = 0; c < spec.m; ++c) x[c] += fx[c] * dt;
        mat_vec_acc(sig, spec.m, spec.d1, db, se, x);
        check_state(x, i + 1);
        for (std::size_t c = 0; c < spec.m; ++c) out.at(i + 1, c) = x[c];
    }
    return out;
}

GridPath solve_ode(const VecFn& drift, std::span<const double> x0, double horizon,
                   std::size_t steps, OdeMethod method) {
    const std::size_t m = x0.size();
    const double dt = horizon / static_cast<double>(steps);
    GridPath out(horizon, steps, m);
    std::vector<double> x(x0.begin(), x0.end());
    std::vector<double> k1(m), k2(m), k3(m), k4(m), tmp(m);
    for (std::size_t c = 0; c < m; ++c) out.at(0, c) = x[c];
    for (std::size_t i = 0; i < steps; ++i) {
        if (method == OdeMethod::euler) {
            drift(x, k1);
            for (std::size_t c = 0; c < m; ++c) x[c] += dt * k1[c];
        } else {
            drift(x, k1);
            for (std::size_t c = 0; c < m; ++c) tmp[c] = x[c] + 0.5 * dt * k1[c];
            drift(tmp, k2);
            for (std::size_t c = 0; c < m; ++c) tmp[c] = x[c] + 0.5 * dt * k2[c];
            drift(tmp, k3);
            for (std::size_t c = 0; c < m; ++c) tmp[c] = x[c] + dt * k3[c];
            drift(tmp, k4);
            for (std::size_t c = 0; c < m; ++c)
                x[c] += dt / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }
        check_state(x, i + 1);
        for (std::size_t c = 0; c < m; ++c) out.at(i + 1, c) = x[c];
    }
    return out;
}

GridPath solve_ode(const SystemSpec& spec, std::span<const double> x0,
                   double horizon, std::size_t steps, OdeMethod method) {
    if (!spec.f) throw std::invalid_argument("solve_ode: spec has no drift");
    return solve_ode(spec.f, x0, horizon, steps, method);
}

GridPath deviation_path(const GridPath& x_eps, const GridPath& x_limit,
                        const ScaleParams& params) {
    if (!x_eps.same_grid(x_limit)) throw std::invalid_argument("grid mismatch");
    const double scale = 1.0 / (std::sqrt(params.epsilon) * params.h_eps);
    GridPath out(x_eps.horizon(), x_eps.steps(), x_eps.dim());
    for (std::size_t i = 0; i <= x_eps.steps(); ++i)
        for (std::size_t c = 0; c < x_eps.dim(); ++c)
            out.at(i, c) = (x_eps.at(i, c) - x_limit.at(i, c)) * scale;
    return out;
}

GridPath solve_controlled_single(const SystemSpec& spec, const ScaleParams& params,
                                 const GridPath& driver, const fbm::Control& control,
                                 std::span<const double> x0) {
    spec.validate();
    if (spec.mode != Mode::single_scale)
        throw std::invalid_argument("solve_controlled_single: wrong mode");
    if (!control.u_prime.same_grid(driver) || control.u_prime.dim() != spec.d1)
        throw std::invalid_argument("grid mismatch");
    const std::size_t M = driver.steps();
    const double dt = driver.step();
    const double se = std::sqrt(params.epsilon);
    const double seh = se * params.h_eps;

    GridPath out(driver.horizon(), M, spec.m);
    std::vector<double> x(x0.begin(), x0.end());
    std::vector<double> fx(spec.m), sig(spec.m * spec.d1), db(spec.d1), du(spec.d1);
    for (std::size_t c = 0; c < spec.m; ++c) out.at(0, c) = x[c];
    for (std::size_t i = 0; i < M; ++i) {
        spec.f(x, fx);
        spec.sigma(x, sig);
        for (std::size_t c = 0; c < spec.d1; ++c) {
            db[c] = driver.at(i + 1, c) - driver.at(i, c);
            du[c] = control.u_prime.at(i, c) * dt;  // left-point control action
        }
        for (std::size_t c = 0; c < spec.m; ++c) x[c] += fx[c] * dt;
        mat_vec_acc(sig, spec.m, spec.d1, du, seh, x);
        mat_vec_acc(sig, spec.m, spec.d1, db, se, x);
        check_state(x, i + 1);
        for (std::size_t c = 0; c < spec.m; ++c) out.at(i + 1, c) = x[c];
    }
    return out;
}

namespace {

TwoScaleState two_scale_core(const SystemSpec& spec, const ScaleParams& params,
                             const GridPath& fbm_driver, const GridPath& bm_driver,
                             const TwoScaleControls* controls,
                             const GridPath* slow_reference, std::size_t frozen_stride,
                             std::span<const double> x0, std::span<const double> y0) {
    spec.validate();
    if (spec.mode != Mode::two_scale)
        throw std::invalid_argument("two-scale solver: wrong mode");
    if (fbm_driver.steps() != bm_driver.steps() ||
        fbm_driver.horizon() != bm_driver.horizon())
        throw std::invalid_argument("grid mismatch");
    if (fbm_driver.dim() != spec.d1 || bm_driver.dim() != spec.d2)
        throw std::invalid_argument("two-scale solver: driver dimension mismatch");
    if (x0.size() != spec.m || y0.size() != spec.n)
        throw std::invalid_argument("two-scale solver: initial condition mismatch");

    const std::size_t M = fbm_driver.steps();
    const double dt = fbm_driver.step();
    const double eps = params.epsilon;
    if (dt / eps > 0.1 / (2.0 * spec.lipschitz) * (1.0 + 1e-12))
        throw std::invalid_argument("grid too coarse for epsilon");
    warn_beta2(spec, params);

    const double se = std::sqrt(eps);
    const double seh = se * params.h_eps;
    const double inv_se = 1.0 / se;
    const double h_over_se = params.h_eps * inv_se;

    const bool with_u = controls && controls->has_u;
    const bool with_v = controls && controls->has_v;
    if (with_u && (!controls->u.u_prime.same_grid(fbm_driver) ||
                   controls->u.u_prime.dim() != spec.d1))
        throw std::invalid_argument("grid mismatch");
    if (with_v && (!controls->v_prime.same_grid(bm_driver) ||
                   controls->v_prime.dim() != spec.d2))
        throw std::invalid_argument("grid mismatch");
    if (slow_reference && !slow_reference->same_grid(fbm_driver))
        throw std::invalid_argument("grid mismatch");

    TwoScaleState st{GridPath(fbm_driver.horizon(), M, spec.m),
                     GridPath(fbm_driver.horizon(), M, spec.n)};
    std::vector<double> x(x0.begin(), x0.end());
    std::vector<double> y(y0.begin(), y0.end());
    std::vector<double> fx(spec.m), fy(spec.n);
    std::vector<double> s1(spec.m * spec.d1), s2(spec.n * spec.d2);
    std::vector<double> db(spec.d1), dw(spec.d2), du(spec.d1), dv(spec.d2);
    std::vector<double> frozen(spec.m);

    for (std::size_t c = 0; c < spec.m; ++c) st.x.at(0, c) = x[c];
    for (std::size_t c = 0; c < spec.n; ++c) st.y.at(0, c) = y[c];

    for (std::size_t i = 0; i < M; ++i) {
        std::span<const double> slow_arg(x);
        if (slow_reference) {
            const std::size_t fi = (i / frozen_stride) * frozen_stride;
            for (std::size_t c = 0; c < spec.m; ++c)
                frozen[c] = slow_reference->at(fi, c);
            slow_arg = frozen;
        }
        spec.f1(slow_arg, y, fx);
        spec.f2(slow_arg, y, fy);
        spec.sigma1(x, s1);
        // the auxiliary fast equation keeps the frozen slow argument in its
        // diffusion as well
        spec.sigma2(slow_arg, y, s2);

        for (std::size_t c = 0; c < spec.d1; ++c)
            db[c] = fbm_driver.at(i + 1, c) - fbm_driver.at(i, c);
        for (std::size_t c = 0; c < spec.d2; ++c)
            dw[c] = bm_driver.at(i + 1, c) - bm_driver.at(i, c);

        for (std::size_t c = 0; c < spec.m; ++c) x[c] += fx[c] * dt;
        if (with_u) {
            for (std::size_t c = 0; c < spec.d1; ++c)
                du[c] = controls->u.u_prime.at(i, c) * dt;
            mat_vec_acc(s1, spec.m, spec.d1, du, seh, x);
        }
        mat_vec_acc(s1, spec.m, spec.d1, db, se, x);

        for (std::size_t c = 0; c < spec.n; ++c) y[c] += fy[c] * dt / eps;
        if (with_v && !slow_reference) {
            for (std::size_t c = 0; c < spec.d2; ++c)
                dv[c] = controls->v_prime.at(i, c) * dt;
            mat_vec_acc(s2, spec.n, spec.d2, dv, h_over_se, y);
        }
        mat_vec_acc(s2, spec.n, spec.d2, dw, inv_se, y);

        check_state(x, i + 1);
        check_state(y, i + 1);
        for (std::size_t c = 0; c < spec.m; ++c) st.x.at(i + 1, c) = x[c];
        for (std::size_t c = 0; c < spec.n; ++c) st.y.at(i + 1, c) = y[c];
    }
    return st;
}

}  // namespace

TwoScaleState solve_two_scale(const SystemSpec& spec, const ScaleParams& params,
                              const GridPath& fbm_driver, const GridPath& bm_driver,
                              std::span<const double> x0, std::span<const double> y0) {
    return two_scale_core(spec, params, fbm_driver, bm_driver, nullptr, nullptr, 1,
                          x0, y0);
}

TwoScaleState solve_controlled_two_scale(const SystemSpec& spec,
                                         const ScaleParams& params,
                                         const GridPath& fbm_driver,
                                         const GridPath& bm_driver,
                                         const TwoScaleControls& controls,
                                         std::span<const double> x0,
                                         std::span<const double> y0) {
    return two_scale_core(spec, params, fbm_driver, bm_driver, &controls, nullptr, 1,
                          x0, y0);
}

GridPath solve_frozen_fast(const SystemSpec& spec, std::span<const double> x_frozen,
                           double horizon, std::size_t steps, std::uint64_t seed,
                           std::uint64_t path_index, std::span<const double> y0) {
    spec.validate();
    if (spec.mode != Mode::two_scale)
        throw std::invalid_argument("solve_frozen_fast: two-scale spec required");
    if (x_frozen.size() != spec.m || y0.size() != spec.n)
        throw std::invalid_argument("solve_frozen_fast: dimension mismatch");
    const double dt = horizon / static_cast<double>(steps);
    const double sqrt_dt = std::sqrt(dt);

    GridPath out(horizon, steps, spec.n);
    std::vector<double> y(y0.begin(), y0.end());
    std::vector<double> fy(spec.n), s2(spec.n * spec.d2), dw(spec.d2);
    std::vector<RngStream> rngs;
    rngs.reserve(spec.d2);
    for (std::size_t c = 0; c < spec.d2; ++c)
        rngs.emplace_back(seed, stream_id(stream_purpose::kFrozenFast, path_index, c));

    for (std::size_t c = 0; c < spec.n; ++c) out.at(0, c) = y[c];
    for (std::size_t i = 0; i < steps; ++i) {
        spec.f2(x_frozen, y, fy);
        spec.sigma2(x_frozen, y, s2);
        for (std::size_t c = 0; c < spec.d2; ++c) dw[c] = sqrt_dt * rngs[c].gauss();
        for (std::size_t c = 0; c < spec.n; ++c) y[c] += fy[c] * dt;
        mat_vec_acc(s2, spec.n, spec.d2, dw, 1.0, y);
        check_state(y, i + 1);
        for (std::size_t c = 0; c < spec.n; ++c) out.at(i + 1, c) = y[c];
    }
    return out;
}

TwoScaleState solve_khasminskii_auxiliary(const SystemSpec& spec,
                                          const ScaleParams& params,
                                          const GridPath& fbm_driver,
                                          const GridPath& bm_driver,
                                          const TwoScaleControls& controls,
                                          const GridPath& slow_reference,
                                          double block_delta,
                                          std::span<const double> x0,
                                          std::span<const double> y0) {
    const double dt = fbm_driver.step();
    const double ratio = block_delta / dt;
    const auto stride = static_cast<std::size_t>(std::llround(ratio));
    if (stride == 0 || std::abs(ratio - static_cast<double>(stride)) > 1e-9)
        throw std::invalid_argument("Delta not grid-aligned");
    return two_scale_core(spec, params, fbm_driver, bm_driver, &controls,
                          &slow_reference, stride, x0, y0);
}

TwoScaleState solve_khasminskii_auxiliary(const SystemSpec& spec,
                                          const ScaleParams& params,
                                          const GridPath& fbm_driver,
                                          const GridPath& bm_driver,
                                          const TwoScaleControls& controls,
                                          double block_delta,
                                          std::span<const double> x0,
                                          std::span<const double> y0) {
    const TwoScaleState controlled =
        solve_controlled_two_scale(spec, params, fbm_driver, bm_driver, controls, x0, y0);
    return solve_khasminskii_auxiliary(spec, params, fbm_driver, bm_driver, controls,
                                       controlled.x, block_delta, x0, y0);
}

std::size_t two_scale_min_steps(const SystemSpec& spec, double epsilon,
                                double horizon) {
    const double max_dt = 0.1 / (2.0 * spec.lipschitz) * epsilon;
    std::size_t steps = 64;
    while (horizon / static_cast<double>(steps) > max_dt) steps *= 2;
    return steps;
}

}  // namespace fbmlab::sde
