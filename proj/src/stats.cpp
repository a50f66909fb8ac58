#include "fbmlab/stats.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace fbmlab {

MeanStderr mean_stderr(std::span<const double> xs) {
    MeanStderr out;
    out.n = xs.size();
    if (xs.empty()) return out;
    double s = 0.0;
    for (double x : xs) s += x;
    out.mean = s / static_cast<double>(xs.size());
    if (xs.size() < 2) return out;
    double q = 0.0;
    for (double x : xs) q += (x - out.mean) * (x - out.mean);
    const double var = q / static_cast<double>(xs.size() - 1);
    out.stderr_ = std::sqrt(var / static_cast<double>(xs.size()));
    return out;
}

VarEstimate sample_variance(std::span<const double> xs) {
    VarEstimate out;
    if (xs.size() < 2) return out;
    const auto ms = mean_stderr(xs);
    double q = 0.0;
    for (double x : xs) q += (x - ms.mean) * (x - ms.mean);
    out.var = q / static_cast<double>(xs.size() - 1);
    out.stderr_ = out.var * std::sqrt(2.0 / static_cast<double>(xs.size() - 1));
    return out;
}

double sample_covariance(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw std::invalid_argument("sample_covariance: need equal sizes >= 2");
    const double mx = mean_stderr(xs).mean;
    const double my = mean_stderr(ys).mean;
    double q = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) q += (xs[i] - mx) * (ys[i] - my);
    return q / static_cast<double>(xs.size() - 1);
}

double regression_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("regression_slope: need equal sizes >= 2");
    const double mx = mean_stderr(x).mean;
    const double my = mean_stderr(y).mean;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        num += (x[i] - mx) * (y[i] - my);
        den += (x[i] - mx) * (x[i] - mx);
    }
    if (den == 0.0) throw std::invalid_argument("regression_slope: degenerate x");
    return num / den;
}

WilsonInterval wilson_interval(std::size_t successes, std::size_t n) {
    WilsonInterval w;
    if (n == 0) return w;
    const double z = 1.959963984540054;
    const double p = static_cast<double>(successes) / static_cast<double>(n);
    const double nn = static_cast<double>(n);
    const double denom = 1.0 + z * z / nn;
    const double center = (p + z * z / (2.0 * nn)) / denom;
    const double half =
        z * std::sqrt(p * (1.0 - p) / nn + z * z / (4.0 * nn * nn)) / denom;
    w.point = p;
    w.lo = std::max(0.0, center - half);
    w.hi = std::min(1.0, center + half);
    return w;
}

double gaussian_tail(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

std::size_t worker_count() {
    if (const char* env = std::getenv("FBM_MDP_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<std::size_t>(v);
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : hc;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min(worker_count(), n == 0 ? 1 : n);
    if (workers <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n || failed.load()) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    failed.store(true);
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace fbmlab
