#pragma once

#include <cstddef>
#include <vector>

#include "fbmlab/grid_path.hpp"

namespace fbmlab::fracpath {

// Hölder / roughness exponent pair used throughout: alpha in (1-H, 1/2)
// for a driver of Hurst index H in (1/2, 1).
struct AlphaExponent {
    double alpha;
    double hurst;
    AlphaExponent(double alpha_, double hurst_);
};

// throws unless 0 < alpha < 1/2
void check_alpha(double alpha);

// ||g||_inf + sup over grid pairs s<t of |g(t)-g(s)| / (t-s)^eta
double holder_norm(const GridPath& g, double eta);

// sup_t [ |g(t)| + int_0^t |g(t)-g(s)| (t-s)^{-alpha-1} ds ]
double w_alpha_inf_norm(const GridPath& g, double alpha);

// int_0^T |g(s)| s^{-alpha} ds + int_0^T int_0^s |g(s)-g(y)| (s-y)^{-alpha-1} dy ds
double w_alpha_one_norm(const GridPath& g, double alpha);

// sup over grid pairs s<t of
//   |h(t)-h(s)|/(t-s)^{1-alpha} + int_s^t |h(y)-h(s)| (y-s)^{alpha-2} dy
double w_one_minus_alpha_norm(const GridPath& h, double alpha);

// (1/Gamma(1-alpha)) sup over grid pairs of |D^{1-alpha}_{t-} h_{t-}(s)|;
// bounded by w_one_minus_alpha_norm(h)/(Gamma(1-alpha)Gamma(alpha)).
double lambda_alpha(const GridPath& h, double alpha);

// Left Weyl derivative D^alpha_{a+} g(t) evaluated at grid nodes a_idx < t_idx.
std::vector<double> weyl_left(const GridPath& g, double alpha, std::size_t a_idx,
                              std::size_t t_idx);

// Right Weyl derivative D^{1-alpha}_{b-} h_{b-}(s) at nodes s_idx < b_idx,
// real-valued (the complex phase is absorbed into young_integral).
std::vector<double> weyl_right(const GridPath& h, double alpha, std::size_t s_idx,
                               std::size_t b_idx);

// Running generalized Riemann-Stieltjes integral t -> int_0^t g dh via the
// compensated Weyl-derivative pairing.  g must be scalar (broadcast over the
// components of h) or have the same dimension as h (componentwise pairing).
GridPath young_integral(const GridPath& g, const GridPath& h, double alpha);

// Running left-point sums; independent oracle for young_integral.
GridPath riemann_stieltjes_sum(const GridPath& g, const GridPath& h);

// Log-log regression of mean increment size against lag; diagnostic used by
// the Young-integral precondition (warning only, sampled paths only estimate
// their exponent).
double estimate_holder_exponent(const GridPath& g);

}  // namespace fbmlab::fracpath
