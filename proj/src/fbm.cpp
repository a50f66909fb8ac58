#include "fbmlab/fbm.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

#include "fbmlab/fft.hpp"
#include "fbmlab/rng.hpp"

namespace fbmlab::fbm {

namespace {

constexpr double kHalfTol = 1e-14;

bool is_brownian(double hurst) { return std::abs(hurst - 0.5) < kHalfTol; }

void check_hurst_open(double hurst) {
    if (!(hurst > 0.0 && hurst < 1.0))
        throw std::invalid_argument("Hurst parameter must lie in (0,1)");
}

void check_hurst_rough(double hurst) {
    if (!(hurst > 0.5 && hurst < 1.0))
        throw std::invalid_argument("Volterra kernel requires H in (1/2,1)");
}

// prefactor of the H>1/2 kernel integral form, K = kc * s^{1/2-H} * I(s,t);
// equals c_H / Gamma(H-1/2), the normalization under which the kernel is the
// antiderivative in t of the Cameron-Martin derivative weight.
double kernel_prefactor(double hurst) {
    return volterra_c(hurst) / std::tgamma(hurst - 0.5);
}

}  // namespace

void FbmSpec::validate() const {
    check_hurst_open(hurst);
    if (steps < 1) throw std::invalid_argument("FbmSpec: need steps >= 1");
    if (!(horizon > 0.0)) throw std::invalid_argument("FbmSpec: need horizon > 0");
    if (dim < 1) throw std::invalid_argument("FbmSpec: need dim >= 1");
}

double fbm_covariance(double s, double t, double hurst) {
    check_hurst_open(hurst);
    if (s < 0.0 || t < 0.0)
        throw std::invalid_argument("fbm_covariance: negative time");
    const double th = 2.0 * hurst;
    return 0.5 * (std::pow(t, th) + std::pow(s, th) - std::pow(std::abs(t - s), th));
}

double fbm_increment_covariance(double s1, double t1, double s2, double t2,
                                double hurst) {
    return fbm_covariance(s1, s2, hurst) + fbm_covariance(t1, t2, hurst) -
           fbm_covariance(s1, t2, hurst) - fbm_covariance(t1, s2, hurst);
}

double volterra_c(double hurst) {
    return std::sqrt(2.0 * hurst * std::tgamma(1.5 - hurst) *
                     std::tgamma(hurst + 0.5) / std::tgamma(2.0 - 2.0 * hurst));
}

// K(t,s) = kc * s^{H-1/2} * int_0^{(t-s)/s} (1+w)^{H-1/2} w^{H-3/2} dw.
// [0,1]: product integration of the w^{H-3/2} weight; [1,W]: log-spaced
// cells with the w^{2H-2} tail weight integrated exactly.
double volterra_kernel(double t, double s, double hurst, std::size_t cells) {
    if (is_brownian(hurst)) return (s > 0.0 && s < t) ? 1.0 : 0.0;
    check_hurst_rough(hurst);
    if (!(s > 0.0) || !(s < t))
        throw std::invalid_argument("volterra_kernel: need 0 < s < t");
    const double W = (t - s) / s;
    const double a = hurst - 0.5;
    double integral = 0.0;
    const double w_head = std::min(W, 1.0);
    {
        const double dw = w_head / static_cast<double>(cells);
        double left_pow = 0.0;
        for (std::size_t j = 0; j < cells; ++j) {
            const double wr = dw * static_cast<double>(j + 1);
            const double wm = dw * (static_cast<double>(j) + 0.5);
            const double right_pow = std::pow(wr, a);
            integral += std::pow(1.0 + wm, a) * (right_pow - left_pow) / a;
            left_pow = right_pow;
        }
    }
    if (W > 1.0) {
        const double b = 2.0 * hurst - 1.0;
        const double step = std::log(W) / static_cast<double>(cells);
        double left = 1.0, left_pow = 1.0;
        for (std::size_t j = 0; j < cells; ++j) {
            const double right = std::exp(step * static_cast<double>(j + 1));
            const double wm = std::sqrt(left * right);
            const double right_pow = std::pow(right, b);
            integral += std::pow(1.0 + 1.0 / wm, a) * (right_pow - left_pow) / b;
            left = right;
            left_pow = right_pow;
        }
    }
    return kernel_prefactor(hurst) * std::pow(s, a) * integral;
}

namespace {

// int_0^{upper} f(r) dr with f ~ r^{1-2H} at 0: graded midpoint rule.
template <typename F>
double graded_integral(double upper, double hurst, std::size_t n, F&& f) {
    const double gamma = 1.0 / (1.0 - hurst) + 1.0;
    double acc = 0.0;
    double left_r = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double vr = static_cast<double>(j + 1) / static_cast<double>(n);
        const double vm = (static_cast<double>(j) + 0.5) / static_cast<double>(n);
        const double right_r = upper * std::pow(vr, gamma);
        acc += f(upper * std::pow(vm, gamma)) * (right_r - left_r);
        left_r = right_r;
    }
    return acc;
}

}  // namespace

double kernel_sq_norm(double T, double hurst, std::size_t n) {
    check_hurst_rough(hurst);
    return graded_integral(T, hurst, n, [&](double r) {
        const double k = volterra_kernel(T, r, hurst);
        return k * k;
    });
}

double kernel_product_integral(double t, double s, double hurst, std::size_t n) {
    check_hurst_rough(hurst);
    const double upper = std::min(s, t);
    return graded_integral(upper, hurst, n, [&](double r) {
        return volterra_kernel(t, r, hurst) * volterra_kernel(s, r, hurst);
    });
}

CholeskyFbmSampler::CholeskyFbmSampler(double horizon, std::size_t steps,
                                       double hurst)
    : T_(horizon), M_(steps), H_(hurst) {
    check_hurst_open(hurst);
    const auto n = static_cast<Eigen::Index>(M_);
    Eigen::MatrixXd cov(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double ti = T_ * static_cast<double>(i + 1) / static_cast<double>(M_);
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double tj =
                T_ * static_cast<double>(j + 1) / static_cast<double>(M_);
            const double c = fbm_covariance(ti, tj, H_);
            cov(i, j) = c;
            cov(j, i) = c;
        }
    }
    const double jitter0 = 1e-12 * cov.trace() / static_cast<double>(M_);
    for (int attempt = 0; attempt < 4; ++attempt) {
        Eigen::LLT<Eigen::MatrixXd> llt(cov);
        if (llt.info() == Eigen::Success) {
            chol_ = llt.matrixL();
            return;
        }
        const double jitter = jitter0 * std::pow(10.0, attempt);
        cov.diagonal().array() += jitter;
    }
    throw std::runtime_error("covariance factorization failed");
}

GridPath CholeskyFbmSampler::sample(std::size_t dim, std::uint64_t seed,
                                    std::uint64_t path_index) const {
    GridPath out(T_, M_, dim);
    Eigen::VectorXd z(static_cast<Eigen::Index>(M_));
    for (std::size_t c = 0; c < dim; ++c) {
        RngStream rng(seed, stream_id(stream_purpose::kFbm, path_index, c));
        for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.gauss();
        Eigen::VectorXd v = chol_ * z;
        out.at(0, c) = 0.0;
        for (std::size_t i = 1; i <= M_; ++i)
            out.at(i, c) = v(static_cast<Eigen::Index>(i - 1));
    }
    return out;
}

VolterraFbmSampler::VolterraFbmSampler(double horizon, std::size_t steps,
                                       double hurst)
    : T_(horizon), M_(steps), H_(hurst) {
    if (!is_brownian(hurst)) check_hurst_rough(hurst);
    const double h = T_ / static_cast<double>(M_);
    const auto n = static_cast<Eigen::Index>(M_);
    K_ = Eigen::MatrixXd::Zero(n, n);
    if (is_brownian(hurst)) {
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j <= i; ++j) K_(i, j) = 1.0;
        return;
    }
    const double a = H_ - 0.5;
    const double kc = kernel_prefactor(H_);
    // half-integer lag table: hp[m] = (m*h/2)^{H-1/2}
    std::vector<double> hp(2 * M_ + 1);
    for (std::size_t m = 0; m <= 2 * M_; ++m)
        hp[m] = std::pow(0.5 * static_cast<double>(m) * h, a);
    for (std::size_t j = 1; j < M_; ++j) {
        const double s = (static_cast<double>(j) + 0.5) * h;
        const double pref = kc * std::pow(s, -a);
        double integral = 0.0;
        for (std::size_t i = j + 1; i <= M_; ++i) {
            // cell [max(s, t_{i-1}), t_i]; the (u-s)^{H-3/2} weight is
            // integrated exactly, u^{H-1/2} is sampled at the cell midpoint
            double left_lag_pow, mid_u_pow;
            if (i == j + 1) {
                left_lag_pow = 0.0;
                mid_u_pow = std::pow((static_cast<double>(j) + 0.75) * h, a);
            } else {
                left_lag_pow = hp[2 * (i - 1 - j) - 1];
                mid_u_pow = hp[2 * (i - 1) + 1];
            }
            const double right_lag_pow = hp[2 * (i - j) - 1];
            integral += mid_u_pow * (right_lag_pow - left_lag_pow) / a;
            K_(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(j)) =
                pref * integral;
        }
    }
    // The first cell holds the r^{1-2H} bulk of the kernel's L2 mass, which a
    // midpoint sample misses badly for large H.  Its column instead carries
    // the root-mean-square kernel value over (0, h), which reproduces every
    // Var(B_{t_i}) contribution of the cell exactly.
    K_(0, 0) = std::pow(h, a);  // sqrt(t_1^{2H}/h) from the squared-norm identity
    // product integration: exact r^{1-2H} weight against the smooth factor
    // (K(t_i, r) r^{H-1/2})^2, sampled on a mildly graded mesh
    for (std::size_t i = 2; i <= M_; ++i) {
        const double ti = static_cast<double>(i) * h;
        const std::size_t q = 8;
        double mass = 0.0;
        double left = 0.0, left_w = 0.0;
        for (std::size_t k = 0; k < q; ++k) {
            const double v1 = static_cast<double>(k + 1) / q;
            const double right = h * v1 * v1;
            const double rm = 0.5 * (left + right);
            const double kv = volterra_kernel(ti, rm, H_, 64);
            const double psi2 = kv * kv * std::pow(rm, 2.0 * H_ - 1.0);
            const double right_w = std::pow(right, 2.0 - 2.0 * H_);
            mass += psi2 * (right_w - left_w) / (2.0 - 2.0 * H_);
            left = right;
            left_w = right_w;
        }
        K_(static_cast<Eigen::Index>(i - 1), 0) = std::sqrt(mass / h);
    }
}

GridPath VolterraFbmSampler::from_bm(const GridPath& bm) const {
    if (bm.steps() != M_ || bm.horizon() != T_)
        throw std::invalid_argument("grid mismatch");
    GridPath out(T_, M_, bm.dim());
    Eigen::VectorXd db(static_cast<Eigen::Index>(M_));
    for (std::size_t c = 0; c < bm.dim(); ++c) {
        for (std::size_t j = 0; j < M_; ++j)
            db(static_cast<Eigen::Index>(j)) = bm.at(j + 1, c) - bm.at(j, c);
        Eigen::VectorXd v = K_ * db;
        out.at(0, c) = 0.0;
        for (std::size_t i = 1; i <= M_; ++i)
            out.at(i, c) = v(static_cast<Eigen::Index>(i - 1));
    }
    return out;
}

GridPath VolterraFbmSampler::sample(std::size_t dim, std::uint64_t seed,
                                    std::uint64_t path_index) const {
    const double sqrt_h = std::sqrt(T_ / static_cast<double>(M_));
    GridPath bm(T_, M_, dim);
    for (std::size_t c = 0; c < dim; ++c) {
        RngStream rng(seed, stream_id(stream_purpose::kFbm, path_index, c));
        double acc = 0.0;
        bm.at(0, c) = 0.0;
        for (std::size_t i = 1; i <= M_; ++i) {
            acc += sqrt_h * rng.gauss();
            bm.at(i, c) = acc;
        }
    }
    return from_bm(bm);
}

CirculantFbmSampler::CirculantFbmSampler(double horizon, std::size_t steps,
                                         double hurst)
    : T_(horizon), M_(steps), H_(hurst) {
    check_hurst_open(hurst);
    if (!is_power_of_two(steps))
        throw std::invalid_argument("circulant sampler requires steps = 2^k");
    const double h = T_ / static_cast<double>(M_);
    const double th = 2.0 * H_;
    auto gamma = [&](std::size_t k) {
        const double kk = static_cast<double>(k);
        return 0.5 * std::pow(h, th) *
               (std::pow(kk + 1.0, th) - 2.0 * std::pow(kk, th) +
                std::pow(std::abs(kk - 1.0), th));
    };
    const std::size_t N = 2 * M_;
    std::vector<std::complex<double>> c(N);
    for (std::size_t k = 0; k <= M_; ++k) c[k] = gamma(k);
    for (std::size_t k = M_ + 1; k < N; ++k) c[k] = gamma(N - k);
    fft_inplace(c, false);
    sqrt_eigs_.resize(N);
    double max_eig = 0.0, min_eig = 0.0;
    for (std::size_t k = 0; k < N; ++k) {
        max_eig = std::max(max_eig, c[k].real());
        min_eig = std::min(min_eig, c[k].real());
    }
    if (min_eig < -1e-8 * max_eig)
        throw std::runtime_error("covariance factorization failed");
    for (std::size_t k = 0; k < N; ++k)
        sqrt_eigs_[k] =
            std::sqrt(std::max(0.0, c[k].real()) / static_cast<double>(N));
}

GridPath CirculantFbmSampler::sample(std::size_t dim, std::uint64_t seed,
                                     std::uint64_t path_index) const {
    const std::size_t N = 2 * M_;
    GridPath out(T_, M_, dim);
    std::vector<std::complex<double>> v(N);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (std::size_t c = 0; c < dim; ++c) {
        RngStream rng(seed, stream_id(stream_purpose::kFbm, path_index, c));
        v[0] = rng.gauss();
        v[M_] = rng.gauss();
        for (std::size_t k = 1; k < M_; ++k) {
            const double a = rng.gauss();
            const double b = rng.gauss();
            v[k] = std::complex<double>(a * inv_sqrt2, b * inv_sqrt2);
            v[N - k] = std::conj(v[k]);
        }
        for (std::size_t k = 0; k < N; ++k) v[k] *= sqrt_eigs_[k];
        fft_inplace(v, false);
        double acc = 0.0;
        out.at(0, c) = 0.0;
        for (std::size_t i = 0; i < M_; ++i) {
            acc += v[i].real();
            out.at(i + 1, c) = acc;
        }
    }
    return out;
}

GridPath sample_fbm(const FbmSpec& spec) {
    spec.validate();
    switch (spec.method) {
        case Method::cholesky: {
            CholeskyFbmSampler s(spec.horizon, spec.steps, spec.hurst);
            return s.sample(spec.dim, spec.seed);
        }
        case Method::volterra: {
            VolterraFbmSampler s(spec.horizon, spec.steps, spec.hurst);
            return s.sample(spec.dim, spec.seed);
        }
        case Method::circulant: {
            CirculantFbmSampler s(spec.horizon, spec.steps, spec.hurst);
            return s.sample(spec.dim, spec.seed);
        }
    }
    throw std::logic_error("unknown sampling method");
}

GridPath sample_fbm_volterra(const FbmSpec& spec, const GridPath& bm) {
    spec.validate();
    VolterraFbmSampler sampler(spec.horizon, spec.steps, spec.hurst);
    return sampler.from_bm(bm);
}

GridPath sample_bm(std::size_t dim, double horizon, std::size_t steps,
                   std::uint64_t seed, std::uint64_t path_index) {
    if (steps < 1 || !(horizon > 0.0))
        throw std::invalid_argument("sample_bm: invalid grid");
    GridPath out(horizon, steps, dim);
    const double sqrt_h = std::sqrt(horizon / static_cast<double>(steps));
    for (std::size_t c = 0; c < dim; ++c) {
        RngStream rng(seed, stream_id(stream_purpose::kBm, path_index, c));
        double acc = 0.0;
        out.at(0, c) = 0.0;
        for (std::size_t i = 1; i <= steps; ++i) {
            acc += sqrt_h * rng.gauss();
            out.at(i, c) = acc;
        }
    }
    return out;
}

std::vector<double> trapezoid_weights(double horizon, std::size_t steps) {
    const double h = horizon / static_cast<double>(steps);
    std::vector<double> w(steps + 1, h);
    w.front() = 0.5 * h;
    w.back() = 0.5 * h;
    return w;
}

std::vector<double> weighted_kernel_row(double horizon, std::size_t steps,
                                        double hurst, std::size_t t_idx,
                                        std::span<const double> phi_nodes) {
    check_hurst_rough(hurst);
    if (t_idx == 0 || t_idx > steps)
        throw std::invalid_argument("weighted_kernel_row: bad endpoint index");
    if (!phi_nodes.empty() && phi_nodes.size() != steps + 1)
        throw std::invalid_argument("weighted_kernel_row: phi size mismatch");
    const double h = horizon / static_cast<double>(steps);
    const double a = hurst - 0.5;
    const double kc = kernel_prefactor(hurst);
    auto phi = [&](std::size_t i) {
        return phi_nodes.empty() ? 1.0 : phi_nodes[i];
    };
    std::vector<double> lag_pow(t_idx + 1);
    for (std::size_t m = 0; m <= t_idx; ++m)
        lag_pow[m] = std::pow(static_cast<double>(m) * h, a);
    std::vector<double> row(steps + 1, 0.0);
    for (std::size_t j = 1; j < t_idx; ++j) {
        double integral = 0.0;
        for (std::size_t l = j; l < t_idx; ++l) {
            const double mid_fac =
                std::pow((static_cast<double>(l) + 0.5) * h, a) * 0.5 *
                (phi(l) + phi(l + 1));
            integral += mid_fac * (lag_pow[l + 1 - j] - lag_pow[l - j]) / a;
        }
        row[j] = kc * std::pow(static_cast<double>(j) * h, -a) * integral;
    }
    {
        // node 0: half-cell average of the kernel; the s^{2H-2} moment is
        // product-integrated with phi at cell midpoints
        const double avg_w = (2.0 / h) * std::pow(0.5 * h, 1.5 - hurst) / (1.5 - hurst);
        const double b = 2.0 * hurst - 1.0;
        double moment = 0.0;
        double left_pow = 0.0;
        for (std::size_t l = 0; l < t_idx; ++l) {
            const double right_pow = std::pow(static_cast<double>(l + 1) * h, b);
            moment += 0.5 * (phi(l) + phi(l + 1)) * (right_pow - left_pow) / b;
            left_pow = right_pow;
        }
        row[0] = kc * avg_w * moment;
    }
    return row;
}

Control cameron_martin_apply(const GridPath& dot_u, double hurst) {
    check_hurst_rough(hurst);
    if (!dot_u.all_finite())
        throw std::invalid_argument("cameron_martin_apply: non-finite density");
    const std::size_t M = dot_u.steps();
    const std::size_t d = dot_u.dim();
    const double T = dot_u.horizon();
    const double h = T / static_cast<double>(M);
    const double a = hurst - 0.5;
    const double kc = kernel_prefactor(hurst);

    Control ctl;
    ctl.dot_u = dot_u;
    ctl.u = GridPath(T, M, d);
    ctl.u_prime = GridPath(T, M, d);

    const auto W = trapezoid_weights(T, M);

    // lag tables
    std::vector<double> pw_a(M + 1), pw_b(M + 1);
    for (std::size_t m = 0; m <= M; ++m) {
        pw_a[m] = std::pow(static_cast<double>(m) * h, a);            // (mh)^{H-1/2}
        pw_b[m] = std::pow(static_cast<double>(m) * h, 1.5 - hurst);  // (mh)^{3/2-H}
    }
    std::vector<double> mid_pow_a(M), mid_neg_a(M), mid_am32(M);
    for (std::size_t l = 0; l < M; ++l) {
        const double sm = (static_cast<double>(l) + 0.5) * h;
        mid_pow_a[l] = std::pow(sm, a);             // s_mid^{H-1/2}
        mid_neg_a[l] = std::pow(sm, -a);            // s_mid^{1/2-H}
        mid_am32[l] = std::pow(sm, hurst - 1.5);    // s_mid^{H-3/2} (as lag)
    }
    const double avg_w = (2.0 / h) * std::pow(0.5 * h, 1.5 - hurst) / (1.5 - hurst);
    const double b2h = 2.0 * hurst - 1.0;

    // u(t_i): node-0 closed form + incremental kernel columns j >= 1
    std::vector<double> node_neg_a(M + 1, 0.0);
    for (std::size_t j = 1; j <= M; ++j)
        node_neg_a[j] = std::pow(static_cast<double>(j) * h, -a);
    for (std::size_t c = 0; c < d; ++c) {
        std::vector<double> col_int(M, 0.0);  // partial integral of column j
        ctl.u.at(0, c) = 0.0;
        for (std::size_t i = 1; i <= M; ++i) {
            for (std::size_t j = 1; j < i; ++j)
                col_int[j] += mid_pow_a[i - 1] * (pw_a[i - j] - pw_a[i - 1 - j]) / a;
            double acc = 0.0;
            for (std::size_t j = 1; j < i; ++j)
                acc += kc * node_neg_a[j] * col_int[j] * W[j] * dot_u.at(j, c);
            const double ti = dot_u.time(i);
            const double k0 =
                kc * avg_w * std::pow(ti, b2h) / b2h;  // node-0 kernel value
            acc += k0 * W[0] * dot_u.at(0, c);
            ctl.u.at(i, c) = acc;
        }
    }

    // u'(t_i) = (c_H/Gamma(H-1/2)) t^{H-1/2} int_0^t (t-s)^{H-3/2} s^{1/2-H} du
    // split at t/2: left cells get the s^{1/2-H} weight exactly, right cells
    // the (t-s)^{H-3/2} weight exactly
    for (std::size_t c = 0; c < d; ++c) {
        ctl.u_prime.at(0, c) = 0.0;
        for (std::size_t i = 1; i <= M; ++i) {
            const std::size_t split = i / 2;
            double q = 0.0;
            for (std::size_t l = 0; l < i; ++l) {
                const double du_mid = 0.5 * (dot_u.at(l, c) + dot_u.at(l + 1, c));
                if (l < split) {
                    const double wexact = (pw_b[l + 1] - pw_b[l]) / (1.5 - hurst);
                    q += du_mid * mid_am32[i - 1 - l] * wexact;
                } else {
                    const double wexact = (pw_a[i - l] - pw_a[i - l - 1]) / a;
                    q += du_mid * mid_neg_a[l] * wexact;
                }
            }
            ctl.u_prime.at(i, c) =
                kc * std::pow(dot_u.time(i), a) * q;
        }
    }

    double nrm = 0.0;
    for (std::size_t i = 0; i <= M; ++i) {
        double r2 = 0.0;
        for (std::size_t c = 0; c < d; ++c) r2 += dot_u.at(i, c) * dot_u.at(i, c);
        nrm += W[i] * r2;
    }
    ctl.cm_norm_sq = nrm;
    return ctl;
}

Control zero_control(double horizon, std::size_t steps, std::size_t dim,
                     double hurst) {
    GridPath z(horizon, steps, dim);
    Control ctl;
    ctl.dot_u = z;
    ctl.u = z;
    ctl.u_prime = z;
    ctl.cm_norm_sq = 0.0;
    (void)hurst;
    return ctl;
}

}  // namespace fbmlab::fbm
