#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "fbmlab/fbm.hpp"
#include "fbmlab/grid_path.hpp"

namespace fbmlab::sde {

using VecFn = std::function<void(std::span<const double>, std::span<double>)>;
using VecFn2 =
    std::function<void(std::span<const double>, std::span<const double>, std::span<double>)>;
// matrices are written row-major into the out span
using MatFn = VecFn;
using MatFn2 = VecFn2;

enum class Mode { single_scale, two_scale };

// Coefficient functions plus the declared assumption constants.  The
// Lipschitz/dissipativity constants are inputs, not measured quantities;
// solvers use them only for stability guards and validation messages.
struct SystemSpec {
    Mode mode = Mode::single_scale;
    std::size_t m = 1, n = 0, d1 = 1, d2 = 0;

    VecFn f;       // single-scale drift, R^m -> R^m
    MatFn sigma;   // single-scale diffusion, R^m -> R^{m x d1}
    MatFn jac_f;   // Df, R^m -> R^{m x m}

    VecFn2 f1;      // slow drift, R^m x R^n -> R^m
    VecFn2 f2;      // fast drift, R^m x R^n -> R^n
    MatFn sigma1;   // slow diffusion, R^m -> R^{m x d1}
    MatFn2 sigma2;  // fast diffusion, R^m x R^n -> R^{n x d2}

    double lipschitz = 1.0;
    double growth = 1.0;
    double beta1 = 1.0;
    double beta2 = 1.0;
    std::string name;

    void validate() const;
};

// epsilon together with the moderate-deviation normalization
// h(eps) = eps^{-theta/2}, b(eps) = 1/h(eps)^2.
struct ScaleParams {
    double epsilon = 1.0;
    double theta = 0.0;
    double h_eps = 1.0;
    double b_eps = 1.0;

    static ScaleParams from_theta(double epsilon, double theta);
    // noise-free surrogate used by the eps -> 0 contract tests
    static ScaleParams deterministic();
    double sqrt_eps_h() const;
};

struct TwoScaleState {
    GridPath x;
    GridPath y;
};

struct TwoScaleControls {
    fbm::Control u;          // Cameron-Martin control on the fBm driver
    GridPath v_prime;        // plain L2 density driving the fast control term
    bool has_u = false;
    bool has_v = false;
};

// 0.5 (||dot u||^2 + ||v'||^2) in the product Cameron-Martin norm.
double joint_control_energy(const TwoScaleControls& controls);

// enforces the joint ball constraint 0.5||(u,v)||^2 <= budget_n on construction
TwoScaleControls make_admissible_controls(fbm::Control u, GridPath v_prime,
                                          double budget_n);

enum class OdeMethod { rk4, euler };

// x_{i+1} = x_i + f(x_i) dt + sqrt(eps) sigma(x_i) dB^H_i
GridPath solve_single_scale(const SystemSpec& spec, const ScaleParams& params,
                            const GridPath& driver, std::span<const double> x0);

GridPath solve_ode(const VecFn& drift, std::span<const double> x0, double horizon,
                   std::size_t steps, OdeMethod method = OdeMethod::rk4);
GridPath solve_ode(const SystemSpec& spec, std::span<const double> x0,
                   double horizon, std::size_t steps,
                   OdeMethod method = OdeMethod::rk4);

// (x_eps - x_limit) / (sqrt(eps) h(eps)) pointwise; zero at t = 0.
GridPath deviation_path(const GridPath& x_eps, const GridPath& x_limit,
                        const ScaleParams& params);

// adds sqrt(eps) h(eps) sigma(x_i) u'(t_i) dt to the Euler step
GridPath solve_controlled_single(const SystemSpec& spec, const ScaleParams& params,
                                 const GridPath& driver, const fbm::Control& control,
                                 std::span<const double> x0);

TwoScaleState solve_two_scale(const SystemSpec& spec, const ScaleParams& params,
                              const GridPath& fbm_driver, const GridPath& bm_driver,
                              std::span<const double> x0, std::span<const double> y0);

TwoScaleState solve_controlled_two_scale(const SystemSpec& spec,
                                         const ScaleParams& params,
                                         const GridPath& fbm_driver,
                                         const GridPath& bm_driver,
                                         const TwoScaleControls& controls,
                                         std::span<const double> x0,
                                         std::span<const double> y0);

// Euler-Maruyama path of the fast process with the slow argument frozen.
GridPath solve_frozen_fast(const SystemSpec& spec, std::span<const double> x_frozen,
                           double horizon, std::size_t steps, std::uint64_t seed,
                           std::uint64_t path_index, std::span<const double> y0);

// Auxiliary pair with the slow argument of the drifts frozen at breakpoints
// t(Delta) = floor(t/Delta) Delta along a given controlled slow path.
TwoScaleState solve_khasminskii_auxiliary(const SystemSpec& spec,
                                          const ScaleParams& params,
                                          const GridPath& fbm_driver,
                                          const GridPath& bm_driver,
                                          const TwoScaleControls& controls,
                                          const GridPath& slow_reference,
                                          double block_delta,
                                          std::span<const double> x0,
                                          std::span<const double> y0);

// spec-shaped convenience: runs the controlled system first
TwoScaleState solve_khasminskii_auxiliary(const SystemSpec& spec,
                                          const ScaleParams& params,
                                          const GridPath& fbm_driver,
                                          const GridPath& bm_driver,
                                          const TwoScaleControls& controls,
                                          double block_delta,
                                          std::span<const double> x0,
                                          std::span<const double> y0);

// smallest power-of-two step count respecting the fast-subsystem guard
// dt/eps <= 0.1/(2L)
std::size_t two_scale_min_steps(const SystemSpec& spec, double epsilon,
                                double horizon);

}  // namespace fbmlab::sde
