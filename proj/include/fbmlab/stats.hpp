#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace fbmlab {

struct MeanStderr {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::size_t n = 0;
};

MeanStderr mean_stderr(std::span<const double> xs);

// Unbiased sample variance together with its own standard error
// (Gaussian-based, SE ~ var * sqrt(2/(n-1))).
struct VarEstimate {
    double var = 0.0;
    double stderr_ = 0.0;
};
VarEstimate sample_variance(std::span<const double> xs);

double sample_covariance(std::span<const double> xs, std::span<const double> ys);

// Least-squares slope of y against x.
double regression_slope(std::span<const double> x, std::span<const double> y);

// 95% Wilson score interval for a binomial proportion.
struct WilsonInterval {
    double lo = 0.0;
    double hi = 0.0;
    double point = 0.0;
};
WilsonInterval wilson_interval(std::size_t successes, std::size_t n);

// Upper Gaussian tail P(Z > x).
double gaussian_tail(double x);

// Runs fn(i) for i in [0, n).  Worker count comes from FBM_MDP_THREADS or
// hardware concurrency; results must be written to per-index slots so that
// output is independent of the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

std::size_t worker_count();

}  // namespace fbmlab
