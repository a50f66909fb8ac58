#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fbmlab/fbm.hpp"
#include "fbmlab/grid_path.hpp"
#include "fbmlab/sde.hpp"

namespace fbmlab::mdp {

// Linearization data for the skeleton ODE dz = Df(x_t) z dt + sigma(x_t) du_t
// along a deterministic base path (the ODE limit or the averaged path).
struct SkeletonProblem {
    GridPath base_path;
    sde::MatFn jacobian;   // m x m at a base point
    sde::MatFn diffusion;  // m x d1 at a base point
    double hurst = 0.75;
    double alpha = 0.3;
    std::size_t m = 1;
    std::size_t d1 = 1;
    void validate() const;
};

SkeletonProblem make_single_scale_skeleton(const sde::SystemSpec& spec,
                                           GridPath base_path, double hurst,
                                           double alpha);

// two-scale variant: same structure around the averaged path with
// (Df1bar, sigma1); the fast control never enters
SkeletonProblem make_two_scale_skeleton(const sde::MatFn& jac_f1bar,
                                        const sde::MatFn& sigma1,
                                        GridPath averaged_path, double hurst,
                                        double alpha, std::size_t m,
                                        std::size_t d1);

// RK4 integration of the skeleton under the control's u'.
GridPath solve_skeleton(const SkeletonProblem& problem, const fbm::Control& control);

// Pin of the contract that the two-scale solution map ignores the fast
// control: returns solve_skeleton(problem, u) for any v.
GridPath solve_two_scale_skeleton(const SkeletonProblem& problem,
                                  const fbm::Control& u, const GridPath& v_prime);
bool two_scale_skeleton_v_independence(const SkeletonProblem& problem,
                                       const fbm::Control& u,
                                       const GridPath& v_prime);

// Fundamental matrix Phi(T, t_i) of dz = Df(x_t) z, every node, row-major
// m x m blocks (backward RK4 sweep).
std::vector<Eigen::MatrixXd> fundamental_matrix(const SkeletonProblem& problem);

// Endpoint response: z(T) = R * vec(dot_u) for node densities, columns
// ordered node-major then component.  Built on the same discrete kernel
// quadrature as cameron_martin_apply.
Eigen::MatrixXd build_response_matrix(const SkeletonProblem& problem);

struct RateFunctionSolution {
    GridPath optimal_dot_u;
    double cost = 0.0;
    GridPath achieved_path;
    Eigen::MatrixXd response_matrix;
};

// minimum-L2-norm density reproducing the endpoint target through the
// skeleton flow; cost = 0.5 ||dot_u||^2 in the trapezoid inner product
RateFunctionSolution rate_function_endpoint(const SkeletonProblem& problem,
                                            std::span<const double> target);

// min over the two endpoint targets +-delta (scalar slow dimension)
double rate_function_exit_level(const SkeletonProblem& problem, double delta);

struct CltVarianceRow {
    double epsilon = 0.0;
    double h_eps = 0.0;
    double estimate = 0.0;  // h(eps)^2 Var(z^eps_T)
    double stderr_ = 0.0;
};
struct CltVarianceReport {
    std::vector<CltVarianceRow> rows;
    double limit_variance = 0.0;  // increment-based double-sum oracle
};

// h(eps)^2 Var(z^eps_T) along the epsilon chain against the Gaussian limit
// variance of int_0^T Phi(T,s) sigma(x_s) dB^H_s (scalar slow dimension).
CltVarianceReport clt_variance_check(const sde::SystemSpec& spec,
                                     const std::vector<double>& epsilon_chain,
                                     double theta, double hurst, double horizon,
                                     std::size_t steps, std::size_t n_paths,
                                     std::uint64_t seed, std::span<const double> x0);

struct MdpTrendRow {
    double epsilon = 0.0;
    double h_eps = 0.0;
    double b_eps = 0.0;
    std::optional<double> exact;        // b log(2 tail), f = 0 shortcut
    std::optional<double> mc_estimate;  // b log(Phat)
    std::optional<double> mc_lo, mc_hi;
    std::size_t hits = 0;
    std::size_t n_paths = 0;
    bool below_resolution = false;
};
struct MdpTrendReport {
    std::vector<MdpTrendRow> rows;
    double neg_rate = 0.0;  // -inf_F I = -rate_function_exit_level
};

// b(eps) log P(|z^eps_T| >= delta) table: plain MC with Wilson intervals
// plus the exact Gaussian branch when the drift vanishes.
MdpTrendReport empirical_mdp_rate(const sde::SystemSpec& spec,
                                  const std::vector<double>& epsilon_chain,
                                  double theta, double hurst, double delta,
                                  double horizon, std::size_t steps,
                                  std::size_t n_paths, std::uint64_t seed,
                                  std::span<const double> x0, bool drift_is_zero);

}  // namespace fbmlab::mdp
