#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "fbmlab/sde.hpp"
#include "fbmlab/stats.hpp"

namespace fbmlab::averaging {

enum class F1BarMethod { ergodic, gauss_hermite, analytic };

// x -> f1bar(x) together with how it was obtained and a rough error scale.
struct AveragedDrift {
    sde::VecFn evaluator;
    F1BarMethod method = F1BarMethod::analytic;
    double error_estimate = 0.0;
};

struct ErgodicEstimate {
    std::vector<double> value;
    double stderr_ = 0.0;  // batch-mean standard error, max over components
};

// Time average of f1(x, y_t) over [t_burn, t_burn + t_avg] along the frozen
// fast path.  t_burn must respect the mixing-time precondition
// t_burn >= 5/beta1.
ErgodicEstimate ergodic_f1bar(const sde::SystemSpec& spec, std::span<const double> x,
                              double t_burn, double t_avg, std::size_t steps,
                              std::uint64_t seed, std::uint64_t path_index = 0);

// Gauss-Hermite nodes/weights for the physicists' weight exp(-z^2)
// (Golub-Welsch; weights sum to sqrt(pi)).
void gauss_hermite_rule(std::size_t order, std::vector<double>& nodes,
                        std::vector<double>& weights);

// Averages f1(x, .) against the explicit Gaussian invariant density
// (2a(x)/pi)^{n/2} exp(-2a(x)|y|^2) by tensor quadrature; n_fast <= 3.
std::vector<double> gauss_hermite_f1bar(const sde::VecFn2& f1,
                                        const std::function<double(std::span<const double>)>& a,
                                        std::span<const double> x,
                                        std::size_t n_fast, std::size_t m_slow,
                                        std::size_t order = 32);

// builds an AveragedDrift backed by the ergodic route (any n) or the
// quadrature route (n <= 3)
AveragedDrift make_averaged_drift(const sde::SystemSpec& spec, F1BarMethod method,
                                  const std::function<double(std::span<const double>)>& a,
                                  std::uint64_t seed);

// MC estimate of E sup_t |x^eps_t - xbar_t|^2 for the uncontrolled two-scale
// system against the averaged ODE.
MeanStderr averaging_gap(const sde::SystemSpec& spec, const sde::ScaleParams& params,
                         const sde::VecFn& f1bar, double hurst, double horizon,
                         std::size_t steps, std::size_t n_paths, std::uint64_t seed,
                         std::span<const double> x0, std::span<const double> y0);

// Tabulated averaged drift row: x, f1bar(x), stderr (CSV schema helper).
struct F1BarRow {
    double x = 0.0;
    double f1bar = 0.0;
    double stderr_ = 0.0;
};

}  // namespace fbmlab::averaging
