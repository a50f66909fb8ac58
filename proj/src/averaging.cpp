#include "fbmlab/averaging.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "fbmlab/fbm.hpp"
#include "fbmlab/rng.hpp"

namespace fbmlab::averaging {

ErgodicEstimate ergodic_f1bar(const sde::SystemSpec& spec, std::span<const double> x,
                              double t_burn, double t_avg, std::size_t steps,
                              std::uint64_t seed, std::uint64_t path_index) {
    spec.validate();
    if (spec.mode != sde::Mode::two_scale)
        throw std::invalid_argument("ergodic_f1bar: two-scale spec required");
    if (t_burn < 5.0 / spec.beta1 - 1e-12)
        throw std::invalid_argument("ergodic_f1bar: burn-in shorter than 5/beta1");
    const double horizon = t_burn + t_avg;
    std::vector<double> y0(spec.n, 0.0);
    GridPath ypath = sde::solve_frozen_fast(spec, x, horizon, steps, seed,
                                            path_index, y0);
    const auto burn_idx =
        static_cast<std::size_t>(std::ceil(t_burn / ypath.step()));
    if (burn_idx >= steps)
        throw std::invalid_argument("ergodic_f1bar: empty averaging window");

    // batch means over ~16 blocks give the error estimate
    const std::size_t n_used = steps - burn_idx + 1;
    const std::size_t n_batches = 16;
    const std::size_t batch = std::max<std::size_t>(1, n_used / n_batches);
    std::vector<double> fy(spec.m);
    std::vector<double> acc(spec.m, 0.0);
    std::vector<std::vector<double>> batch_acc;
    std::vector<double> cur(spec.m, 0.0);
    std::size_t cur_n = 0, total_n = 0;
    for (std::size_t i = burn_idx; i <= steps; ++i) {
        spec.f1(x, ypath.row(i), fy);
        for (std::size_t c = 0; c < spec.m; ++c) {
            acc[c] += fy[c];
            cur[c] += fy[c];
        }
        ++cur_n;
        ++total_n;
        if (cur_n == batch) {
            for (auto& v : cur) v /= static_cast<double>(batch);
            batch_acc.push_back(cur);
            std::fill(cur.begin(), cur.end(), 0.0);
            cur_n = 0;
        }
    }
    ErgodicEstimate est;
    est.value.resize(spec.m);
    for (std::size_t c = 0; c < spec.m; ++c)
        est.value[c] = acc[c] / static_cast<double>(total_n);
    double max_se = 0.0;
    if (batch_acc.size() >= 2) {
        std::vector<double> bs(batch_acc.size());
        for (std::size_t c = 0; c < spec.m; ++c) {
            for (std::size_t b = 0; b < batch_acc.size(); ++b) bs[b] = batch_acc[b][c];
            max_se = std::max(max_se, mean_stderr(bs).stderr_);
        }
    }
    est.stderr_ = max_se;
    return est;
}

void gauss_hermite_rule(std::size_t order, std::vector<double>& nodes,
                        std::vector<double>& weights) {
    if (order < 1) throw std::invalid_argument("gauss_hermite_rule: order >= 1");
    const auto n = static_cast<Eigen::Index>(order);
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index k = 1; k < n; ++k) {
        const double off = std::sqrt(static_cast<double>(k) / 2.0);
        J(k, k - 1) = off;
        J(k - 1, k) = off;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("gauss_hermite_rule: eigensolver failed");
    nodes.resize(order);
    weights.resize(order);
    const double mu0 = std::sqrt(std::numbers::pi);
    for (Eigen::Index k = 0; k < n; ++k) {
        nodes[static_cast<std::size_t>(k)] = es.eigenvalues()(k);
        const double v0 = es.eigenvectors()(0, k);
        weights[static_cast<std::size_t>(k)] = mu0 * v0 * v0;
    }
}

std::vector<double> gauss_hermite_f1bar(
    const sde::VecFn2& f1, const std::function<double(std::span<const double>)>& a,
    std::span<const double> x, std::size_t n_fast, std::size_t m_slow,
    std::size_t order) {
    if (n_fast < 1 || n_fast > 3)
        throw std::invalid_argument("gauss_hermite_f1bar: n must be in {1,2,3}");
    const double ax = a(x);
    if (!(ax > 0.0)) throw std::invalid_argument("dissipativity violated");
    std::vector<double> nodes, weights;
    gauss_hermite_rule(order, nodes, weights);
    // y = z / sqrt(2 a(x)) maps the invariant density onto exp(-z^2)
    const double scale = 1.0 / std::sqrt(2.0 * ax);
    const double norm = std::pow(std::numbers::pi, -0.5 * static_cast<double>(n_fast));

    std::vector<double> out(m_slow, 0.0);
    std::vector<double> y(n_fast), fy(m_slow);
    std::vector<std::size_t> idx(n_fast, 0);
    for (;;) {
        double w = 1.0;
        for (std::size_t c = 0; c < n_fast; ++c) {
            w *= weights[idx[c]];
            y[c] = nodes[idx[c]] * scale;
        }
        f1(x, y, fy);
        for (std::size_t c = 0; c < m_slow; ++c) out[c] += w * fy[c];
        std::size_t c = 0;
        for (; c < n_fast; ++c) {
            if (++idx[c] < order) break;
            idx[c] = 0;
        }
        if (c == n_fast) break;
    }
    for (auto& v : out) v *= norm;
    return out;
}

AveragedDrift make_averaged_drift(const sde::SystemSpec& spec, F1BarMethod method,
                                  const std::function<double(std::span<const double>)>& a,
                                  std::uint64_t seed) {
    spec.validate();
    AveragedDrift drift;
    drift.method = method;
    if (method == F1BarMethod::gauss_hermite) {
        if (spec.n > 3)
            throw std::invalid_argument("tensor quadrature limited to n <= 3");
        auto f1 = spec.f1;
        const std::size_t n = spec.n, m = spec.m;
        drift.error_estimate = 1e-10;
        drift.evaluator = [f1, a, n, m](std::span<const double> x,
                                        std::span<double> out) {
            auto v = gauss_hermite_f1bar(f1, a, x, n, m);
            for (std::size_t c = 0; c < m; ++c) out[c] = v[c];
        };
        return drift;
    }
    if (method == F1BarMethod::ergodic) {
        auto spec_copy = spec;
        const double t_burn = 10.0 / spec.beta1;
        const double t_avg = 2400.0 / spec.beta1;
        const auto steps = static_cast<std::size_t>(
            std::ceil((t_burn + t_avg) * 80.0 * spec.beta1));
        drift.error_estimate = 0.01;
        drift.evaluator = [spec_copy, t_burn, t_avg, steps, seed](
                              std::span<const double> x, std::span<double> out) {
            auto est = ergodic_f1bar(spec_copy, x, t_burn, t_avg, steps, seed);
            for (std::size_t c = 0; c < est.value.size(); ++c) out[c] = est.value[c];
        };
        return drift;
    }
    throw std::invalid_argument("make_averaged_drift: analytic drift must be user-supplied");
}

MeanStderr averaging_gap(const sde::SystemSpec& spec, const sde::ScaleParams& params,
                         const sde::VecFn& f1bar, double hurst, double horizon,
                         std::size_t steps, std::size_t n_paths, std::uint64_t seed,
                         std::span<const double> x0, std::span<const double> y0) {
    spec.validate();
    GridPath xbar = sde::solve_ode(f1bar, x0, horizon, steps);
    fbm::CirculantFbmSampler fsampler(horizon, steps, hurst);
    std::vector<double> sup2(n_paths);
    std::vector<double> x0v(x0.begin(), x0.end()), y0v(y0.begin(), y0.end());
    parallel_for(n_paths, [&](std::size_t p) {
        GridPath bh = fsampler.sample(spec.d1, seed, p);
        GridPath w = fbm::sample_bm(spec.d2, horizon, steps, seed, p);
        auto st = sde::solve_two_scale(spec, params, bh, w, x0v, y0v);
        double worst = 0.0;
        for (std::size_t i = 0; i <= steps; ++i) {
            double n2 = 0.0;
            for (std::size_t c = 0; c < spec.m; ++c) {
                const double d = st.x.at(i, c) - xbar.at(i, c);
                n2 += d * d;
            }
            worst = std::max(worst, n2);
        }
        sup2[p] = worst;
    });
    return mean_stderr(sup2);
}

}  // namespace fbmlab::averaging
