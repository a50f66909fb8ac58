#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "fbmlab/grid_path.hpp"

namespace fbmlab::fbm {

enum class Method { cholesky, volterra, circulant };

// Everything needed to sample a fractional Brownian path reproducibly.
struct FbmSpec {
    double hurst = 0.75;
    std::size_t dim = 1;
    double horizon = 1.0;
    std::size_t steps = 1024;
    std::uint64_t seed = 0;
    Method method = Method::cholesky;
    void validate() const;
};

// 0.5 (t^{2H} + s^{2H} - |t-s|^{2H})
double fbm_covariance(double s, double t, double hurst);

// E[(B_t - B_s)(B_t - B_s)] = |t-s|^{2H} per component
double fbm_increment_covariance(double s1, double t1, double s2, double t2,
                                double hurst);

// Normalization constant c_H of the Volterra representation.
double volterra_c(double hurst);

// Volterra kernel K_H(t,s) for 0 < s < t, H in (1/2,1); H == 1/2 gives the
// Brownian indicator kernel.  Evaluated through the power-integral form of
// the kernel with product integration, uniformly accurate in s.
double volterra_kernel(double t, double s, double hurst, std::size_t cells = 128);

// int_0^T K_H(T,s)^2 ds on a singularity-graded midpoint grid with n cells;
// equals T^{2H} analytically.
double kernel_sq_norm(double T, double hurst, std::size_t n);

// int_0^{min(s,t)} K(t,r) K(s,r) dr; equals fbm_covariance(s,t).
double kernel_product_integral(double t, double s, double hurst, std::size_t n);

// Exact finite-dimensional law via Cholesky factorization of the grid
// covariance (diagonal jitter retries on round-off failures).
class CholeskyFbmSampler {
public:
    CholeskyFbmSampler(double horizon, std::size_t steps, double hurst);
    GridPath sample(std::size_t dim, std::uint64_t seed,
                    std::uint64_t path_index = 0) const;

private:
    double T_;
    std::size_t M_;
    double H_;
    Eigen::MatrixXd chol_;
};

// Kernel-matrix route: B^H_{t_i} = sum_j K(t_i, s_j^mid) dB_j.
class VolterraFbmSampler {
public:
    VolterraFbmSampler(double horizon, std::size_t steps, double hurst);
    GridPath from_bm(const GridPath& bm) const;
    GridPath sample(std::size_t dim, std::uint64_t seed,
                    std::uint64_t path_index = 0) const;
    const Eigen::MatrixXd& kernel_matrix() const { return K_; }

private:
    double T_;
    std::size_t M_;
    double H_;
    Eigen::MatrixXd K_;  // K(t_i, s_j^mid), lower-triangular in (i, j)
};

// O(M log M) circulant embedding of fractional Gaussian noise; same law as
// the Cholesky route (checked in tests), used where dense factorization is
// infeasible.
class CirculantFbmSampler {
public:
    CirculantFbmSampler(double horizon, std::size_t steps, double hurst);
    GridPath sample(std::size_t dim, std::uint64_t seed,
                    std::uint64_t path_index = 0) const;

private:
    double T_;
    std::size_t M_;
    double H_;
    std::vector<double> sqrt_eigs_;
};

// One-shot sampler dispatch; bit-deterministic in the spec (incl. seed).
GridPath sample_fbm(const FbmSpec& spec);

// Kernel transform of a given Brownian skeleton on the spec's grid.
GridPath sample_fbm_volterra(const FbmSpec& spec, const GridPath& bm);

// Standard d2-dimensional BM skeleton; stream split keeps it independent of
// any fBm sampled from the same seed.
GridPath sample_bm(std::size_t dim, double horizon, std::size_t steps,
                   std::uint64_t seed, std::uint64_t path_index = 0);

// An admissible shift: L2 density dot_u on the nodes, the induced
// Cameron-Martin path u = K_H dot_u, its derivative u', and the squared
// norm int |dot_u|^2 dt (trapezoid).
struct Control {
    GridPath dot_u;
    GridPath u;
    GridPath u_prime;
    double cm_norm_sq = 0.0;
    bool in_ball(double budget_n) const {
        return 0.5 * cm_norm_sq <= budget_n + 1e-12;
    }
};

Control cameron_martin_apply(const GridPath& dot_u, double hurst);
Control zero_control(double horizon, std::size_t steps, std::size_t dim,
                     double hurst);

// Row R_j ~ (c_H/Gamma(H-1/2)) r_j^{1/2-H} int_{r_j}^{T} (s-r_j)^{H-3/2}
// s^{H-1/2} phi(s) ds over the grid nodes (node 0 carries the half-cell
// average, node M is 0).  With phi == 1 this is the discrete kernel row
// K_H(T, r_j); with phi = Phi(T,s) sigma(x_s) it is the endpoint response
// kernel of the linear skeleton flow.  Shared by cameron_martin_apply and
// the rate-function response matrix so that the two agree exactly.
std::vector<double> weighted_kernel_row(double horizon, std::size_t steps,
                                        double hurst, std::size_t t_idx,
                                        std::span<const double> phi_nodes = {});

// Trapezoid weights (h/2, h, ..., h, h/2) used as the discrete L2 inner
// product on node densities.
std::vector<double> trapezoid_weights(double horizon, std::size_t steps);

}  // namespace fbmlab::fbm
