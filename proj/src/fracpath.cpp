#include "fbmlab/fracpath.hpp"

#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>

#include "fbmlab/stats.hpp"

namespace fbmlab::fracpath {

namespace {

// Power-of-lag tables: tab[l] = (l*h)^e for l = 0..M.  All singular-cell
// quadratures below reduce to differences of these.
std::vector<double> pow_table(std::size_t M, double h, double e) {
    std::vector<double> t(M + 1);
    t[0] = (e > 0.0) ? 0.0 : std::numeric_limits<double>::infinity();
    for (std::size_t l = 1; l <= M; ++l)
        t[l] = std::pow(static_cast<double>(l) * h, e);
    return t;
}

// Product integration of a piecewise-linear factor against the weight
// tau^mu over one grid cell [l1*h, (l1+1)*h].  The factor takes values f1
// at the left edge and f2 at the right edge; p1/p2 are tables for
// exponents mu+1 and mu+2.  At l1 == 0 the weight is non-integrable and
// the caller guarantees f1 == 0 (the factor vanishes at the singularity),
// which kills the divergent term exactly.
inline double pl_cell(std::size_t l1, double h, double ex1, double ex2,
                      const std::vector<double>& p1, const std::vector<double>& p2,
                      double f1, double f2) {
    const double B = (f2 - f1) / h;
    if (l1 == 0) return B * p2[1] / ex2;
    const double A = f1 - B * (static_cast<double>(l1) * h);
    return A * (p1[l1 + 1] - p1[l1]) / ex1 + B * (p2[l1 + 1] - p2[l1]) / ex2;
}

double row_dist(const GridPath& g, std::size_t i, std::size_t j) {
    double s = 0.0;
    for (std::size_t c = 0; c < g.dim(); ++c) {
        const double d = g.at(i, c) - g.at(j, c);
        s += d * d;
    }
    return std::sqrt(s);
}

void require_finite(const GridPath& g, const char* who) {
    if (!g.all_finite())
        throw std::invalid_argument(std::string(who) + ": path has non-finite entries");
}

}  // namespace

AlphaExponent::AlphaExponent(double alpha_, double hurst_)
    : alpha(alpha_), hurst(hurst_) {
    if (!(hurst > 0.5 && hurst < 1.0))
        throw std::invalid_argument("AlphaExponent: H must lie in (1/2, 1)");
    if (!(alpha > 1.0 - hurst && alpha < 0.5))
        throw std::invalid_argument("AlphaExponent: alpha must lie in (1-H, 1/2)");
}

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 0.5))
        throw std::invalid_argument("alpha must lie in (0, 1/2)");
}

double holder_norm(const GridPath& g, double eta) {
    if (!(eta > 0.0 && eta <= 1.0))
        throw std::invalid_argument("holder_norm: eta must lie in (0, 1]");
    require_finite(g, "holder_norm");
    const std::size_t M = g.steps();
    const double h = g.step();
    std::vector<double> inv_lag = pow_table(M, h, -eta);
    double seminorm = 0.0;
    for (std::size_t i = 0; i < M; ++i)
        for (std::size_t j = i + 1; j <= M; ++j)
            seminorm = std::max(seminorm, row_dist(g, j, i) * inv_lag[j - i]);
    return g.sup_norm() + seminorm;
}

double w_alpha_inf_norm(const GridPath& g, double alpha) {
    check_alpha(alpha);
    require_finite(g, "w_alpha_inf_norm");
    const std::size_t M = g.steps();
    const double h = g.step();
    // weight tau^{-alpha-1}: tables for exponents -alpha and 1-alpha
    const auto p1 = pow_table(M, h, -alpha);
    const auto p2 = pow_table(M, h, 1.0 - alpha);
    double best = g.row_norm(0);
    for (std::size_t k = 1; k <= M; ++k) {
        double integral = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            // cell [t_j, t_{j+1}], tau = t_k - s, lag l1 = k-j-1
            const double f_right = row_dist(g, k, j);      // at tau = (k-j) h
            const double f_left = row_dist(g, k, j + 1);   // at tau = (k-j-1) h
            integral += pl_cell(k - j - 1, h, -alpha, 1.0 - alpha, p1, p2,
                                f_left, f_right);
        }
        best = std::max(best, g.row_norm(k) + integral);
    }
    return best;
}

double w_alpha_one_norm(const GridPath& g, double alpha) {
    check_alpha(alpha);
    require_finite(g, "w_alpha_one_norm");
    const std::size_t M = g.steps();
    const double h = g.step();
    // |g(s)| s^{-alpha} ds: integrable weight, PL factor of |g|
    const auto q1 = pow_table(M, h, 1.0 - alpha);
    const auto q2 = pow_table(M, h, 2.0 - alpha);
    double single = 0.0;
    for (std::size_t j = 0; j < M; ++j) {
        const double f1 = g.row_norm(j);
        const double f2 = g.row_norm(j + 1);
        const double B = (f2 - f1) / h;
        const double A = f1 - B * (static_cast<double>(j) * h);
        single += A * (q1[j + 1] - q1[j]) / (1.0 - alpha) +
                  B * (q2[j + 1] - q2[j]) / (2.0 - alpha);
    }
    // double term: trapezoid in s of the inner singular integrals
    const auto p1 = pow_table(M, h, -alpha);
    const auto p2 = pow_table(M, h, 1.0 - alpha);
    double dbl = 0.0;
    for (std::size_t k = 1; k <= M; ++k) {
        double inner = 0.0;
        for (std::size_t j = 0; j < k; ++j)
            inner += pl_cell(k - j - 1, h, -alpha, 1.0 - alpha, p1, p2,
                             row_dist(g, k, j + 1), row_dist(g, k, j));
        dbl += inner * ((k == M) ? 0.5 * h : h);
    }
    return single + dbl;
}

double w_one_minus_alpha_norm(const GridPath& g, double alpha) {
    check_alpha(alpha);
    require_finite(g, "w_one_minus_alpha_norm");
    const std::size_t M = g.steps();
    const double h = g.step();
    const auto inv_pow = pow_table(M, h, alpha - 1.0);  // (t-s)^{alpha-1}
    // weight tau^{alpha-2}: tables for exponents alpha-1 and alpha
    const auto p1 = pow_table(M, h, alpha - 1.0);
    const auto p2 = pow_table(M, h, alpha);
    double best = 0.0;
    for (std::size_t i = 0; i < M; ++i) {
        double inner = 0.0;
        for (std::size_t k = i + 1; k <= M; ++k) {
            inner += pl_cell(k - 1 - i, h, alpha - 1.0, alpha, p1, p2,
                             row_dist(g, k - 1, i), row_dist(g, k, i));
            best = std::max(best, row_dist(g, k, i) * inv_pow[k - i] + inner);
        }
    }
    return best;
}

double lambda_alpha(const GridPath& g, double alpha) {
    check_alpha(alpha);
    require_finite(g, "lambda_alpha");
    const std::size_t M = g.steps();
    const std::size_t d = g.dim();
    const double h = g.step();
    const auto inv_pow = pow_table(M, h, alpha - 1.0);
    const auto p1 = pow_table(M, h, alpha - 1.0);
    const auto p2 = pow_table(M, h, alpha);
    const double inv_gamma_a = 1.0 / std::tgamma(alpha);
    double best = 0.0;
    std::vector<double> inner(d);
    for (std::size_t i = 0; i < M; ++i) {
        std::fill(inner.begin(), inner.end(), 0.0);
        for (std::size_t k = i + 1; k <= M; ++k) {
            double norm2 = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                // signed factor g(s)-g(y) along the cell, vanishing at y=s
                inner[c] += pl_cell(k - 1 - i, h, alpha - 1.0, alpha, p1, p2,
                                    g.at(i, c) - g.at(k - 1, c),
                                    g.at(i, c) - g.at(k, c));
                const double v = (g.at(i, c) - g.at(k, c)) * inv_pow[k - i] +
                                 (1.0 - alpha) * inner[c];
                norm2 += v * v;
            }
            best = std::max(best, std::sqrt(norm2) * inv_gamma_a);
        }
    }
    return best / std::tgamma(1.0 - alpha);
}

std::vector<double> weyl_left(const GridPath& g, double alpha, std::size_t a_idx,
                              std::size_t t_idx) {
    check_alpha(alpha);
    require_finite(g, "weyl_left");
    if (!(a_idx < t_idx && t_idx <= g.steps()))
        throw std::invalid_argument("weyl_left: need a < t within the grid");
    const double h = g.step();
    const std::size_t span = t_idx - a_idx;
    const auto p1 = pow_table(span, h, -alpha);
    const auto p2 = pow_table(span, h, 1.0 - alpha);
    const double c0 = 1.0 / std::tgamma(1.0 - alpha);
    std::vector<double> out(g.dim());
    for (std::size_t c = 0; c < g.dim(); ++c) {
        double integral = 0.0;
        for (std::size_t j = a_idx; j < t_idx; ++j)
            integral += pl_cell(t_idx - j - 1, h, -alpha, 1.0 - alpha, p1, p2,
                                g.at(t_idx, c) - g.at(j + 1, c),
                                g.at(t_idx, c) - g.at(j, c));
        out[c] = c0 * (g.at(t_idx, c) * p1[span] + alpha * integral);
    }
    return out;
}

std::vector<double> weyl_right(const GridPath& g, double alpha, std::size_t s_idx,
                               std::size_t b_idx) {
    check_alpha(alpha);
    require_finite(g, "weyl_right");
    if (!(s_idx < b_idx && b_idx <= g.steps()))
        throw std::invalid_argument("weyl_right: need s < b within the grid");
    const double h = g.step();
    const std::size_t span = b_idx - s_idx;
    const auto p1 = pow_table(span, h, alpha - 1.0);
    const auto p2 = pow_table(span, h, alpha);
    const double c0 = 1.0 / std::tgamma(alpha);
    std::vector<double> out(g.dim());
    for (std::size_t c = 0; c < g.dim(); ++c) {
        double integral = 0.0;
        for (std::size_t k = s_idx + 1; k <= b_idx; ++k)
            integral += pl_cell(k - 1 - s_idx, h, alpha - 1.0, alpha, p1, p2,
                                g.at(s_idx, c) - g.at(k - 1, c),
                                g.at(s_idx, c) - g.at(k, c));
        out[c] = c0 * ((g.at(s_idx, c) - g.at(b_idx, c)) * p1[span] +
                       (1.0 - alpha) * integral);
    }
    return out;
}

GridPath young_integral(const GridPath& g, const GridPath& h, double alpha) {
    check_alpha(alpha);
    require_finite(g, "young_integral");
    require_finite(h, "young_integral");
    if (g.steps() != h.steps() || g.horizon() != h.horizon())
        throw std::invalid_argument("grid mismatch");
    const bool broadcast = (g.dim() == 1 && h.dim() > 1);
    if (!broadcast && g.dim() != h.dim())
        throw std::invalid_argument("young_integral: incompatible dimensions");

    {
        // exponent-window precondition is empirical on sampled paths: warn only
        const double eg = estimate_holder_exponent(g);
        const double eh = estimate_holder_exponent(h);
        if (eg + 0.1 < alpha || eh + 0.1 < 1.0 - alpha)
            std::cerr << "young_integral: warning: estimated Holder exponents ("
                      << eg << ", " << eh << ") look incompatible with alpha="
                      << alpha << "\n";
    }

    const std::size_t M = g.steps();
    const std::size_t d = h.dim();
    const double dt = g.step();
    const auto powA = pow_table(M, dt, -alpha);         // tau^{-alpha}
    const auto pow1mA = pow_table(M, dt, 1.0 - alpha);  // tau^{1-alpha}
    const auto powAm1 = pow_table(M, dt, alpha - 1.0);  // tau^{alpha-1}
    const auto powAl = pow_table(M, dt, alpha);         // tau^{alpha}
    const double cg = 1.0 / std::tgamma(1.0 - alpha);
    const double ch = 1.0 / std::tgamma(alpha);

    GridPath out(g.horizon(), M, d);
    std::vector<double> J(M, 0.0);  // running right-derivative integrals
    std::vector<double> G(M, 0.0);  // left Weyl transform of g - g(0)

    for (std::size_t c = 0; c < d; ++c) {
        const std::size_t gc = broadcast ? 0 : c;
        // G(x_i) = D^alpha_{0+}(g - g(0))(x_i), exact for piecewise-linear g
        for (std::size_t i = 1; i < M; ++i) {
            double integral = 0.0;
            for (std::size_t j = 0; j < i; ++j)
                integral += pl_cell(i - j - 1, dt, -alpha, 1.0 - alpha, powA, pow1mA,
                                    g.at(i, gc) - g.at(j + 1, gc),
                                    g.at(i, gc) - g.at(j, gc));
            G[i] = cg * ((g.at(i, gc) - g.at(0, gc)) * powA[i] + alpha * integral);
        }
        std::fill(J.begin(), J.end(), 0.0);
        out.at(0, c) = 0.0;
        for (std::size_t k = 1; k <= M; ++k) {
            // extend J(x_i) = int_{x_i}^{t_k} (h(x_i)-h(y)) (y-x_i)^{alpha-2} dy
            for (std::size_t i = 0; i < k; ++i)
                J[i] += pl_cell(k - 1 - i, dt, alpha - 1.0, alpha, powAm1, powAl,
                                h.at(i, c) - h.at(k - 1, c),
                                h.at(i, c) - h.at(k, c));
            // x-integral over (0, t_k): both endpoint factors vanish, so the
            // node sum is a trapezoid rule; the two endpoint cells are
            // re-weighted for the known power behaviors x^{1-alpha} at 0 and
            // (t_k - x)^{alpha} at t_k (product integration of the local model)
            double q = 0.0;
            double first = 0.0, last = 0.0;
            for (std::size_t i = 1; i < k; ++i) {
                const double Hk = ch * ((h.at(i, c) - h.at(k, c)) * powAm1[k - i] +
                                        (1.0 - alpha) * J[i]);
                const double term = G[i] * Hk;
                q += term;
                if (i == 1) first = term;
                if (i == k - 1) last = term;
            }
            q += first * (1.0 / (2.0 - alpha) - 0.5) +
                 last * (1.0 / (1.0 + alpha) - 0.5);
            out.at(k, c) =
                g.at(0, gc) * (h.at(k, c) - h.at(0, c)) - dt * q;
        }
    }
    return out;
}

GridPath riemann_stieltjes_sum(const GridPath& g, const GridPath& h) {
    require_finite(g, "riemann_stieltjes_sum");
    require_finite(h, "riemann_stieltjes_sum");
    if (g.steps() != h.steps() || g.horizon() != h.horizon())
        throw std::invalid_argument("grid mismatch");
    const bool broadcast = (g.dim() == 1 && h.dim() > 1);
    if (!broadcast && g.dim() != h.dim())
        throw std::invalid_argument("riemann_stieltjes_sum: incompatible dimensions");
    GridPath out(g.horizon(), g.steps(), h.dim());
    for (std::size_t c = 0; c < h.dim(); ++c) {
        const std::size_t gc = broadcast ? 0 : c;
        double acc = 0.0;
        out.at(0, c) = 0.0;
        for (std::size_t i = 0; i < g.steps(); ++i) {
            acc += g.at(i, gc) * (h.at(i + 1, c) - h.at(i, c));
            out.at(i + 1, c) = acc;
        }
    }
    return out;
}

double estimate_holder_exponent(const GridPath& g) {
    const std::size_t M = g.steps();
    std::vector<double> xs, ys;
    for (std::size_t lag = 1; lag <= M / 16; lag *= 2) {
        double acc = 0.0;
        std::size_t n = 0;
        for (std::size_t i = 0; i + lag <= M; ++i, ++n) acc += row_dist(g, i + lag, i);
        if (n == 0 || acc == 0.0) continue;
        xs.push_back(std::log(static_cast<double>(lag) * g.step()));
        ys.push_back(std::log(acc / static_cast<double>(n)));
    }
    if (xs.size() < 2) return 1.0;  // constant or too-short path: treat as smooth
    return regression_slope(xs, ys);
}

}  // namespace fbmlab::fracpath
