#include "fbmlab/mdp.hpp"

#include <cmath>
#include <stdexcept>

#include "fbmlab/fracpath.hpp"
#include "fbmlab/stats.hpp"

namespace fbmlab::mdp {

void SkeletonProblem::validate() const {
    if (!jacobian || !diffusion)
        throw std::invalid_argument("SkeletonProblem: jacobian and diffusion required");
    if (base_path.dim() != m)
        throw std::invalid_argument("SkeletonProblem: base path dimension mismatch");
    fracpath::AlphaExponent check(alpha, hurst);
    (void)check;
}

SkeletonProblem make_single_scale_skeleton(const sde::SystemSpec& spec,
                                           GridPath base_path, double hurst,
                                           double alpha) {
    if (!spec.jac_f)
        throw std::invalid_argument("make_single_scale_skeleton: spec lacks jac_f");
    SkeletonProblem p;
    p.base_path = std::move(base_path);
    p.jacobian = spec.jac_f;
    p.diffusion = spec.sigma;
    p.hurst = hurst;
    p.alpha = alpha;
    p.m = spec.m;
    p.d1 = spec.d1;
    p.validate();
    return p;
}

SkeletonProblem make_two_scale_skeleton(const sde::MatFn& jac_f1bar,
                                        const sde::MatFn& sigma1,
                                        GridPath averaged_path, double hurst,
                                        double alpha, std::size_t m,
                                        std::size_t d1) {
    SkeletonProblem p;
    p.base_path = std::move(averaged_path);
    p.jacobian = jac_f1bar;
    p.diffusion = sigma1;
    p.hurst = hurst;
    p.alpha = alpha;
    p.m = m;
    p.d1 = d1;
    p.validate();
    return p;
}

namespace {

// A(t_i), Sigma(t_i) along the base path
struct Linearization {
    std::vector<Eigen::MatrixXd> A;   // m x m
    std::vector<Eigen::MatrixXd> S;   // m x d1
};

Linearization linearize(const SkeletonProblem& p) {
    const std::size_t M = p.base_path.steps();
    Linearization lin;
    lin.A.resize(M + 1);
    lin.S.resize(M + 1);
    std::vector<double> abuf(p.m * p.m), sbuf(p.m * p.d1);
    for (std::size_t i = 0; i <= M; ++i) {
        p.jacobian(p.base_path.row(i), abuf);
        p.diffusion(p.base_path.row(i), sbuf);
        Eigen::MatrixXd A(p.m, p.m), S(p.m, p.d1);
        for (std::size_t r = 0; r < p.m; ++r) {
            for (std::size_t c = 0; c < p.m; ++c)
                A(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                    abuf[r * p.m + c];
            for (std::size_t c = 0; c < p.d1; ++c)
                S(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                    sbuf[r * p.d1 + c];
        }
        lin.A[i] = A;
        lin.S[i] = S;
    }
    return lin;
}

}  // namespace

GridPath solve_skeleton(const SkeletonProblem& p, const fbm::Control& control) {
    p.validate();
    if (!control.u_prime.same_grid(p.base_path) || control.u_prime.dim() != p.d1)
        throw std::invalid_argument("grid mismatch");
    const std::size_t M = p.base_path.steps();
    const double dt = p.base_path.step();
    const auto lin = linearize(p);

    GridPath out(p.base_path.horizon(), M, p.m);
    Eigen::VectorXd z = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.m));
    Eigen::VectorXd up_l(static_cast<Eigen::Index>(p.d1)),
        up_r(static_cast<Eigen::Index>(p.d1)), up_m(static_cast<Eigen::Index>(p.d1));
    for (std::size_t i = 0; i < M; ++i) {
        for (std::size_t c = 0; c < p.d1; ++c) {
            up_l(static_cast<Eigen::Index>(c)) = control.u_prime.at(i, c);
            up_r(static_cast<Eigen::Index>(c)) = control.u_prime.at(i + 1, c);
        }
        up_m = 0.5 * (up_l + up_r);
        const Eigen::MatrixXd A_m = 0.5 * (lin.A[i] + lin.A[i + 1]);
        const Eigen::MatrixXd S_m = 0.5 * (lin.S[i] + lin.S[i + 1]);
        const Eigen::VectorXd k1 = lin.A[i] * z + lin.S[i] * up_l;
        const Eigen::VectorXd k2 = A_m * (z + 0.5 * dt * k1) + S_m * up_m;
        const Eigen::VectorXd k3 = A_m * (z + 0.5 * dt * k2) + S_m * up_m;
        const Eigen::VectorXd k4 = lin.A[i + 1] * (z + dt * k3) + lin.S[i + 1] * up_r;
        z += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        for (std::size_t c = 0; c < p.m; ++c)
            out.at(i + 1, c) = z(static_cast<Eigen::Index>(c));
    }
    return out;
}

GridPath solve_two_scale_skeleton(const SkeletonProblem& problem,
                                  const fbm::Control& u, const GridPath& v_prime) {
    (void)v_prime;  // the fast control never enters the skeleton
    return solve_skeleton(problem, u);
}

bool two_scale_skeleton_v_independence(const SkeletonProblem& problem,
                                       const fbm::Control& u,
                                       const GridPath& v_prime) {
    const GridPath with_v = solve_two_scale_skeleton(problem, u, v_prime);
    GridPath zero_v(v_prime.horizon(), v_prime.steps(), v_prime.dim());
    const GridPath without_v = solve_two_scale_skeleton(problem, u, zero_v);
    return with_v.values() == without_v.values();
}

std::vector<Eigen::MatrixXd> fundamental_matrix(const SkeletonProblem& p) {
    p.validate();
    const std::size_t M = p.base_path.steps();
    const double dt = p.base_path.step();
    const auto lin = linearize(p);
    std::vector<Eigen::MatrixXd> phi(M + 1);
    phi[M] = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(p.m),
                                       static_cast<Eigen::Index>(p.m));
    // dPhi(T,s)/ds = -Phi(T,s) A(s), integrated backward
    for (std::size_t i = M; i-- > 0;) {
        const Eigen::MatrixXd& P = phi[i + 1];
        const Eigen::MatrixXd A_m = 0.5 * (lin.A[i] + lin.A[i + 1]);
        const Eigen::MatrixXd k1 = P * lin.A[i + 1];
        const Eigen::MatrixXd k2 = (P + 0.5 * dt * k1) * A_m;
        const Eigen::MatrixXd k3 = (P + 0.5 * dt * k2) * A_m;
        const Eigen::MatrixXd k4 = (P + dt * k3) * lin.A[i];
        phi[i] = P + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return phi;
}

Eigen::MatrixXd build_response_matrix(const SkeletonProblem& p) {
    p.validate();
    const std::size_t M = p.base_path.steps();
    const auto lin = linearize(p);
    const auto phi = fundamental_matrix(p);
    const auto W = fbm::trapezoid_weights(p.base_path.horizon(), M);

    Eigen::MatrixXd R(static_cast<Eigen::Index>(p.m),
                      static_cast<Eigen::Index>((M + 1) * p.d1));
    std::vector<double> phi_nodes(M + 1);
    for (std::size_t a = 0; a < p.m; ++a) {
        for (std::size_t c = 0; c < p.d1; ++c) {
            // scalar weight s -> [Phi(T,s) Sigma(s)]_{a,c}
            for (std::size_t i = 0; i <= M; ++i) {
                double v = 0.0;
                for (std::size_t k = 0; k < p.m; ++k)
                    v += phi[i](static_cast<Eigen::Index>(a),
                                static_cast<Eigen::Index>(k)) *
                         lin.S[i](static_cast<Eigen::Index>(k),
                                  static_cast<Eigen::Index>(c));
                phi_nodes[i] = v;
            }
            const auto row = fbm::weighted_kernel_row(p.base_path.horizon(), M,
                                                      p.hurst, M, phi_nodes);
            for (std::size_t j = 0; j <= M; ++j)
                R(static_cast<Eigen::Index>(a),
                  static_cast<Eigen::Index>(j * p.d1 + c)) = row[j] * W[j];
        }
    }
    return R;
}

RateFunctionSolution rate_function_endpoint(const SkeletonProblem& p,
                                            std::span<const double> target) {
    p.validate();
    if (target.size() != p.m)
        throw std::invalid_argument("rate_function_endpoint: target dimension mismatch");
    const std::size_t M = p.base_path.steps();
    const auto W = fbm::trapezoid_weights(p.base_path.horizon(), M);

    RateFunctionSolution sol;
    sol.response_matrix = build_response_matrix(p);
    const Eigen::MatrixXd& R = sol.response_matrix;

    // G = R W^{-1} R^T with the trapezoid weights as the L2 inner product
    Eigen::MatrixXd RWinv = R;
    for (std::size_t j = 0; j <= M; ++j)
        for (std::size_t c = 0; c < p.d1; ++c)
            RWinv.col(static_cast<Eigen::Index>(j * p.d1 + c)) /= W[j];
    const Eigen::MatrixXd G = RWinv * R.transpose();

    Eigen::VectorXd xi(static_cast<Eigen::Index>(p.m));
    for (std::size_t a = 0; a < p.m; ++a) xi(static_cast<Eigen::Index>(a)) = target[a];

    // rank-revealing solve with relative cutoff 1e-10
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("rate_function_endpoint: eigensolver failed");
    const double cutoff = 1e-10 * es.eigenvalues().cwiseAbs().maxCoeff();
    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.m));
    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
        const double ev = es.eigenvalues()(k);
        if (ev > cutoff) {
            const double coef = es.eigenvectors().col(k).dot(xi) / ev;
            lambda += coef * es.eigenvectors().col(k);
        }
    }
    if ((G * lambda - xi).norm() > 1e-8 * std::max(1.0, xi.norm()))
        throw std::runtime_error("unreachable target");

    const Eigen::VectorXd dot_u_vec = RWinv.transpose() * lambda;
    sol.cost = 0.5 * lambda.dot(xi);

    sol.optimal_dot_u = GridPath(p.base_path.horizon(), M, p.d1);
    for (std::size_t j = 0; j <= M; ++j)
        for (std::size_t c = 0; c < p.d1; ++c)
            sol.optimal_dot_u.at(j, c) =
                dot_u_vec(static_cast<Eigen::Index>(j * p.d1 + c));

    const fbm::Control ctl = fbm::cameron_martin_apply(sol.optimal_dot_u, p.hurst);
    sol.achieved_path = solve_skeleton(p, ctl);
    return sol;
}

double rate_function_exit_level(const SkeletonProblem& p, double delta) {
    if (p.m != 1)
        throw std::invalid_argument("rate_function_exit_level: scalar slow dimension required");
    if (delta == 0.0) return 0.0;
    const double plus[1] = {delta};
    const double minus[1] = {-delta};
    // linear skeleton: the boundary of {|xi(T)| >= delta} is optimal
    return std::min(rate_function_endpoint(p, plus).cost,
                    rate_function_endpoint(p, minus).cost);
}

CltVarianceReport clt_variance_check(const sde::SystemSpec& spec,
                                     const std::vector<double>& epsilon_chain,
                                     double theta, double hurst, double horizon,
                                     std::size_t steps, std::size_t n_paths,
                                     std::uint64_t seed, std::span<const double> x0) {
    spec.validate();
    if (spec.m != 1 || spec.d1 != 1)
        throw std::invalid_argument("clt_variance_check: scalar system required");
    CltVarianceReport rep;

    const GridPath x_limit = sde::solve_ode(spec, x0, horizon, steps);
    // limit variance through the increment double sum of the covariance
    {
        SkeletonProblem p = make_single_scale_skeleton(
            spec, x_limit, hurst, 0.5 * (1.0 - hurst) + 0.25);
        const auto phi = fundamental_matrix(p);
        const auto lin_phi = [&](std::size_t i) {
            std::vector<double> s(1);
            spec.sigma(x_limit.row(i), s);
            return phi[i](0, 0) * s[0];
        };
        std::vector<double> w(steps);
        for (std::size_t i = 0; i < steps; ++i) w[i] = lin_phi(i);
        double var = 0.0;
        for (std::size_t i = 0; i < steps; ++i) {
            const double si = x_limit.time(i), ti = x_limit.time(i + 1);
            for (std::size_t j = 0; j < steps; ++j) {
                const double sj = x_limit.time(j), tj = x_limit.time(j + 1);
                var += w[i] * w[j] *
                       fbm::fbm_increment_covariance(si, ti, sj, tj, hurst);
            }
        }
        rep.limit_variance = var;
    }

    // dense factorization below 2^11 nodes, circulant embedding above
    const bool big = steps > 2048;
    std::optional<fbm::CholeskyFbmSampler> chol;
    std::optional<fbm::CirculantFbmSampler> circ;
    if (big)
        circ.emplace(horizon, steps, hurst);
    else
        chol.emplace(horizon, steps, hurst);

    std::vector<double> x0v(x0.begin(), x0.end());
    for (double eps : epsilon_chain) {
        const auto params = sde::ScaleParams::from_theta(eps, theta);
        std::vector<double> z_end(n_paths);
        parallel_for(n_paths, [&](std::size_t pidx) {
            GridPath bh = chol ? chol->sample(1, seed, pidx)
                               : circ->sample(1, seed, pidx);
            const GridPath xe = sde::solve_single_scale(spec, params, bh, x0v);
            const GridPath z = sde::deviation_path(xe, x_limit, params);
            z_end[pidx] = z.at(steps, 0);
        });
        const auto v = sample_variance(z_end);
        CltVarianceRow row;
        row.epsilon = eps;
        row.h_eps = params.h_eps;
        row.estimate = params.h_eps * params.h_eps * v.var;
        row.stderr_ = params.h_eps * params.h_eps * v.stderr_;
        rep.rows.push_back(row);
    }
    return rep;
}

MdpTrendReport empirical_mdp_rate(const sde::SystemSpec& spec,
                                  const std::vector<double>& epsilon_chain,
                                  double theta, double hurst, double delta,
                                  double horizon, std::size_t steps,
                                  std::size_t n_paths, std::uint64_t seed,
                                  std::span<const double> x0, bool drift_is_zero) {
    spec.validate();
    if (spec.m != 1 || spec.d1 != 1)
        throw std::invalid_argument("empirical_mdp_rate: scalar system required");
    MdpTrendReport rep;

    const GridPath x_limit = sde::solve_ode(spec, x0, horizon, steps);
    {
        SkeletonProblem p = make_single_scale_skeleton(
            spec, x_limit, hurst, 0.5 * (1.0 - hurst) + 0.25);
        rep.neg_rate = -rate_function_exit_level(p, delta);
    }

    fbm::CholeskyFbmSampler sampler(horizon, steps, hurst);
    std::vector<double> x0v(x0.begin(), x0.end());
    for (double eps : epsilon_chain) {
        const auto params = sde::ScaleParams::from_theta(eps, theta);
        MdpTrendRow row;
        row.epsilon = eps;
        row.h_eps = params.h_eps;
        row.b_eps = params.b_eps;
        row.n_paths = n_paths;
        if (drift_is_zero) {
            const double tail_arg = delta * params.h_eps / std::pow(horizon, hurst);
            row.exact = params.b_eps * std::log(2.0 * gaussian_tail(tail_arg));
        }
        std::vector<unsigned char> hit(n_paths, 0);
        parallel_for(n_paths, [&](std::size_t pidx) {
            GridPath bh = sampler.sample(1, seed, pidx);
            const GridPath xe = sde::solve_single_scale(spec, params, bh, x0v);
            const GridPath z = sde::deviation_path(xe, x_limit, params);
            hit[pidx] = std::abs(z.at(steps, 0)) >= delta ? 1 : 0;
        });
        std::size_t hits = 0;
        for (auto hflag : hit) hits += hflag;
        row.hits = hits;
        if (hits < 10) {
            row.below_resolution = true;  // no log of zero / unstable tail
        } else {
            const auto ci = wilson_interval(hits, n_paths);
            row.mc_estimate = params.b_eps * std::log(ci.point);
            // log is increasing: interval endpoints map monotonically
            row.mc_lo = params.b_eps * std::log(ci.lo);
            row.mc_hi = params.b_eps * std::log(ci.hi);
        }
        rep.rows.push_back(row);
    }
    return rep;
}

}  // namespace fbmlab::mdp
