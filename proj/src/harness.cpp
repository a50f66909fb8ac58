#include "fbmlab/harness.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <stdexcept>

#include "fbmlab/fracpath.hpp"
#include "fbmlab/mdp.hpp"
#include "fbmlab/rng.hpp"

namespace fbmlab::harness {

using nlohmann::json;

namespace {

bool is_pow2(std::size_t v) { return v != 0 && (v & (v - 1)) == 0; }

// ---------------------------------------------------------------- systems

NamedSystem make_ss_lin() {
    NamedSystem s;
    s.spec.mode = sde::Mode::single_scale;
    s.spec.m = 1;
    s.spec.d1 = 1;
    s.spec.f = [](std::span<const double> x, std::span<double> o) { o[0] = -x[0]; };
    s.spec.sigma = [](std::span<const double>, std::span<double> o) { o[0] = 1.0; };
    s.spec.jac_f = [](std::span<const double>, std::span<double> o) { o[0] = -1.0; };
    s.spec.lipschitz = 1.0;
    s.spec.growth = 1.0;
    s.spec.name = "SS-LIN";
    return s;
}

NamedSystem make_ss_flat() {
    NamedSystem s;
    s.spec.mode = sde::Mode::single_scale;
    s.spec.m = 1;
    s.spec.d1 = 1;
    s.spec.f = [](std::span<const double>, std::span<double> o) { o[0] = 0.0; };
    s.spec.sigma = [](std::span<const double>, std::span<double> o) { o[0] = 1.0; };
    s.spec.jac_f = [](std::span<const double>, std::span<double> o) { o[0] = 0.0; };
    s.spec.lipschitz = 1.0;
    s.spec.growth = 1.0;
    s.spec.name = "SS-FLAT";
    return s;
}

NamedSystem make_ss_nl() {
    NamedSystem s;
    s.spec.mode = sde::Mode::single_scale;
    s.spec.m = 1;
    s.spec.d1 = 1;
    s.spec.f = [](std::span<const double> x, std::span<double> o) {
        o[0] = -x[0] + std::sin(x[0]);
    };
    s.spec.sigma = [](std::span<const double> x, std::span<double> o) {
        o[0] = 1.0 + 0.1 * std::tanh(x[0]);
    };
    s.spec.jac_f = [](std::span<const double> x, std::span<double> o) {
        o[0] = -1.0 + std::cos(x[0]);
    };
    s.spec.lipschitz = 2.0;
    s.spec.growth = 2.0;
    s.spec.name = "SS-NL";
    return s;
}

NamedSystem make_ts_ou(bool variable_a) {
    NamedSystem s;
    s.spec.mode = sde::Mode::two_scale;
    s.spec.m = 1;
    s.spec.n = 1;
    s.spec.d1 = 1;
    s.spec.d2 = 1;
    auto a_of = variable_a
        ? std::function<double(std::span<const double>)>(
              [](std::span<const double> x) {
                  const double t = std::tanh(x[0]);
                  return 1.0 + 0.5 * t * t;
              })
        : std::function<double(std::span<const double>)>(
              [](std::span<const double>) { return 1.0; });
    s.a = a_of;
    s.spec.f1 = [](std::span<const double> x, std::span<const double> y,
                   std::span<double> o) { o[0] = -x[0] + std::cos(y[0]); };
    s.spec.f2 = [a_of](std::span<const double> x, std::span<const double> y,
                       std::span<double> o) { o[0] = -2.0 * a_of(x) * y[0]; };
    s.spec.sigma1 = [](std::span<const double>, std::span<double> o) { o[0] = 1.0; };
    s.spec.sigma2 = [](std::span<const double>, std::span<const double>,
                       std::span<double> o) { o[0] = 1.0; };
    s.spec.lipschitz = variable_a ? 3.0 : 2.0;
    s.spec.growth = 2.0;
    s.spec.beta1 = 4.0;  // 2<y1-y2, f2(y1)-f2(y2)> = -4a|dy|^2, a >= 1
    s.spec.beta2 = 4.0;
    s.spec.name = variable_a ? "TS-OUVAR" : "TS-OU";
    // invariant measure N(0, 1/(4a)); E cos(Y) = exp(-1/(8a))
    s.f1bar = [a_of](std::span<const double> x, std::span<double> o) {
        o[0] = -x[0] + std::exp(-1.0 / (8.0 * a_of(x)));
    };
    s.jac_f1bar = [a_of, variable_a](std::span<const double> x, std::span<double> o) {
        if (!variable_a) {
            o[0] = -1.0;
            return;
        }
        const double t = std::tanh(x[0]);
        const double da = t * (1.0 - t * t);  // d/dx [1 + tanh^2/2]
        const double ax = 1.0 + 0.5 * t * t;
        o[0] = -1.0 + std::exp(-1.0 / (8.0 * ax)) * da / (8.0 * ax * ax);
    };
    s.has_analytic_f1bar = true;
    return s;
}

// ------------------------------------------------------------- CSV writer

class CsvFile {
public:
    CsvFile(const std::string& path, const std::string& header) : path_(path) {
        f_ = std::fopen(path.c_str(), "wb");
        if (!f_) throw std::runtime_error("cannot open " + path);
        std::fprintf(f_, "%s\n", header.c_str());
    }
    ~CsvFile() {
        if (f_) std::fclose(f_);
    }
    CsvFile(const CsvFile&) = delete;
    CsvFile& operator=(const CsvFile&) = delete;

    void field(double v) {
        sep();
        std::fprintf(f_, "%.17g", v);
    }
    void field(const std::string& v) {
        sep();
        std::fprintf(f_, "%s", v.c_str());
    }
    void end_row() {
        std::fprintf(f_, "\n");
        first_ = true;
    }
    const std::string& path() const { return path_; }

private:
    void sep() {
        if (!first_) std::fprintf(f_, ",");
        first_ = false;
    }
    std::FILE* f_ = nullptr;
    std::string path_;
    bool first_ = true;
};

const char* kReportHeader = "epsilon,h_eps,b_eps,quantity,estimate,stderr,exact";

struct ExperimentInfo {
    std::string description;
    std::string validates;  // the mathematical claim the run checks
    std::string default_system;
    std::size_t default_steps;
    std::size_t default_paths;
};

const std::map<std::string, ExperimentInfo>& registry() {
    static const std::map<std::string, ExperimentInfo> reg = {
        {"exp-fbm-cov",
         {"empirical covariance of sampled fBm against the closed form",
          "fBm covariance identity Cov(B_s,B_t) = (s^2H + t^2H - |t-s|^2H)/2",
          "", 1024, 10000}},
        {"exp-young-ibp",
         {"integration-by-parts and integral-bound checks on random path pairs",
          "Young integral: integration by parts and the Lambda_alpha bound",
          "", 1024, 200}},
        {"exp-ode-limit",
         {"mean-square convergence rate of the slow system to its ODE limit",
          "E sup|x^eps - x|^2 = O(eps) as the noise vanishes", "SS-LIN", 1024,
          1000}},
        {"exp-clt-variance",
         {"normalized deviation variance against the Gaussian limit variance",
          "h(eps)^2 Var(z^eps_T) converges to the limit-functional variance",
          "SS-LIN", 1024, 10000}},
        {"exp-averaging",
         {"averaged drift agreement and the strong averaging gap",
          "slow component converges to the ODE driven by the averaged drift",
          "TS-OU", 0, 500}},
        {"exp-khasminskii-delta",
         {"time-block error budget scan over the block length",
          "block decomposition error balances as C(eps/Delta + Delta)",
          "TS-OUVAR", 0, 300}},
        {"exp-rate-endpoint",
         {"endpoint rate function against the kernel-norm closed form",
          "I(target) = min 0.5||dot u||^2 over controls hitting the target",
          "SS-FLAT", 8192, 1}},
        {"exp-mdp-trend",
         {"tail-probability decay toward the rate-function level",
          "b(eps) log P(|z^eps_T| >= delta) -> -inf_F I", "SS-FLAT", 1024,
          10000}},
    };
    return reg;
}

ExperimentConfig resolve(const ExperimentConfig& raw) {
    auto it = registry().find(raw.experiment);
    if (it == registry().end())
        throw std::invalid_argument("unknown experiment: " + raw.experiment);
    ExperimentConfig cfg = raw;
    if (cfg.steps == 0) cfg.steps = it->second.default_steps;
    if (cfg.n_paths == 0) cfg.n_paths = it->second.default_paths;
    if (cfg.system.empty()) cfg.system = it->second.default_system;
    return cfg;
}

std::string report_path(const ExperimentConfig& cfg) {
    return cfg.output_dir + "/" + cfg.experiment + ".csv";
}

double sup_sq_distance(const GridPath& a, const GridPath& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i <= a.steps(); ++i) {
        double n2 = 0.0;
        for (std::size_t c = 0; c < a.dim(); ++c) {
            const double d = a.at(i, c) - b.at(i, c);
            n2 += d * d;
        }
        worst = std::max(worst, n2);
    }
    return worst;
}

// smooth random path: linear drift plus a short trigonometric series
GridPath random_smooth_path(double horizon, std::size_t steps, std::uint64_t seed,
                            std::uint64_t index) {
    RngStream rng(seed, stream_id(stream_purpose::kScratch, index, 7));
    const double a0 = 2.0 * rng.uniform01() - 1.0;
    double ak[4], ph[4];
    for (int k = 0; k < 4; ++k) {
        ak[k] = (2.0 * rng.uniform01() - 1.0) / static_cast<double>(k + 1);
        ph[k] = 2.0 * std::numbers::pi * rng.uniform01();
    }
    GridPath g(horizon, steps, 1);
    for (std::size_t i = 0; i <= steps; ++i) {
        const double t = g.time(i);
        double v = a0 * t;
        for (int k = 0; k < 4; ++k)
            v += ak[k] * std::sin(2.0 * std::numbers::pi * (k + 1) * t / horizon +
                                  ph[k]);
        g.at(i, 0) = v;
    }
    return g;
}

}  // namespace

NamedSystem make_system(const std::string& name) {
    if (name == "SS-LIN") return make_ss_lin();
    if (name == "SS-NL") return make_ss_nl();
    if (name == "SS-FLAT") return make_ss_flat();
    if (name == "TS-OU") return make_ts_ou(false);
    if (name == "TS-OUVAR") return make_ts_ou(true);
    throw std::invalid_argument("unknown system: " + name);
}

std::vector<std::string> system_names() {
    return {"SS-LIN", "SS-NL", "SS-FLAT", "TS-OU", "TS-OUVAR"};
}

std::vector<Violation> validate_config(const ExperimentConfig& cfg) {
    std::vector<Violation> out;
    auto err = [&](const std::string& m) { out.push_back({true, m}); };
    auto warn = [&](const std::string& m) { out.push_back({false, m}); };

    if (!cfg.experiment.empty() && registry().find(cfg.experiment) == registry().end())
        err("unknown experiment: " + cfg.experiment);
    if (!(cfg.hurst > 0.5 && cfg.hurst < 1.0)) err("H must lie in (1/2, 1)");
    if (cfg.hurst > 0.5 && cfg.hurst < 1.0) {
        if (cfg.alpha <= 1.0 - cfg.hurst) err("alpha below 1-H");
        if (cfg.alpha >= 0.5) err("alpha at or above 1/2");
    }
    if (!(cfg.theta >= 0.0 && cfg.theta < 1.0)) err("theta must lie in [0, 1)");
    if (cfg.epsilon_chain.empty()) err("epsilon_chain is empty");
    for (std::size_t i = 0; i < cfg.epsilon_chain.size(); ++i) {
        const double e = cfg.epsilon_chain[i];
        if (!(e > 0.0 && e <= 1.0)) err("epsilon_chain values must lie in (0, 1]");
        if (i > 0 && !(e < cfg.epsilon_chain[i - 1]))
            err("epsilon_chain must be strictly decreasing");
    }
    if (cfg.steps != 0 && !is_pow2(cfg.steps))
        err("M must be a power of two");
    if (!(cfg.horizon > 0.0)) err("T must be positive");
    if (!(cfg.delta > 0.0)) err("delta must be positive");
    if (!cfg.system.empty()) {
        bool known = false;
        for (const auto& n : system_names()) known = known || n == cfg.system;
        if (!known) err("unknown system: " + cfg.system);
    }

    // fast-moment hypothesis: sqrt(eps) h(eps) < beta2/2
    double beta2 = 0.0;
    if (cfg.beta2_override) {
        beta2 = *cfg.beta2_override;
    } else if (!cfg.system.empty()) {
        try {
            beta2 = make_system(cfg.system).spec.beta2;
        } catch (const std::exception&) {
            beta2 = 0.0;
        }
    }
    if (beta2 > 0.0 && !cfg.epsilon_chain.empty() && cfg.theta >= 0.0 &&
        cfg.theta < 1.0) {
        const double eps = cfg.epsilon_chain.front();
        const double seh = std::pow(eps, (1.0 - cfg.theta) / 2.0);
        if (seh >= beta2 / 2.0) warn("sqrt(eps)h(eps) exceeds beta2/2");
    }
    return out;
}

std::string config_to_json_string(const ExperimentConfig& cfg) {
    json j;
    j["experiment"] = cfg.experiment;
    j["H"] = cfg.hurst;
    j["alpha"] = cfg.alpha;
    j["theta"] = cfg.theta;
    j["epsilon_chain"] = cfg.epsilon_chain;
    j["delta"] = cfg.delta;
    j["T"] = cfg.horizon;
    j["M"] = cfg.steps;
    j["Delta"] = cfg.block_delta;
    j["n_paths"] = cfg.n_paths;
    j["seed"] = cfg.seed;
    j["system"] = cfg.system;
    j["output_dir"] = cfg.output_dir;
    if (cfg.beta2_override) j["beta2"] = *cfg.beta2_override;
    return j.dump(2);
}

ExperimentConfig config_from_json_string(const std::string& text) {
    const json j = json::parse(text);
    ExperimentConfig cfg;
    if (j.contains("experiment")) cfg.experiment = j["experiment"].get<std::string>();
    if (j.contains("H")) cfg.hurst = j["H"].get<double>();
    if (j.contains("alpha")) cfg.alpha = j["alpha"].get<double>();
    if (j.contains("theta")) cfg.theta = j["theta"].get<double>();
    if (j.contains("epsilon_chain"))
        cfg.epsilon_chain = j["epsilon_chain"].get<std::vector<double>>();
    if (j.contains("delta")) cfg.delta = j["delta"].get<double>();
    if (j.contains("T")) cfg.horizon = j["T"].get<double>();
    if (j.contains("M")) cfg.steps = j["M"].get<std::size_t>();
    if (j.contains("Delta")) cfg.block_delta = j["Delta"].get<double>();
    if (j.contains("n_paths")) cfg.n_paths = j["n_paths"].get<std::size_t>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("system")) cfg.system = j["system"].get<std::string>();
    if (j.contains("output_dir")) cfg.output_dir = j["output_dir"].get<std::string>();
    if (j.contains("beta2")) cfg.beta2_override = j["beta2"].get<double>();
    return cfg;
}

ExperimentConfig config_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot read config file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    return config_from_json_string(text);
}

std::string content_hash(const std::string& bytes) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

double khasminskii_delta_schedule(double epsilon, double theta, double gamma) {
    if (!(theta > 0.5 && theta < 1.0))
        throw std::invalid_argument(
            "block schedule defined for theta in (1/2, 1) only");
    if (!(gamma > 0.0 && gamma < theta - 0.5))
        throw std::invalid_argument("gamma must lie in (0, theta - 1/2)");
    const double h2 = std::pow(epsilon, -theta);
    return std::pow(epsilon, gamma + 1.0) * h2 * std::abs(std::log(epsilon));
}

GridPath sine_density(double horizon, std::size_t steps, std::size_t dim,
                      double energy) {
    // 0.5 int (A sin(2 pi t/T))^2 dt = A^2 T/4
    const double amp = std::sqrt(4.0 * energy / horizon / static_cast<double>(dim));
    GridPath g(horizon, steps, dim);
    for (std::size_t i = 0; i <= steps; ++i)
        for (std::size_t c = 0; c < dim; ++c)
            g.at(i, c) = amp * std::sin(2.0 * std::numbers::pi *
                                        (static_cast<double>(c) + 1.0) *
                                        g.time(i) / horizon);
    return g;
}

GridPath random_admissible_density(double horizon, std::size_t steps,
                                   std::size_t dim, double budget_n,
                                   std::uint64_t seed, std::uint64_t index) {
    RngStream rng(seed, stream_id(stream_purpose::kControls, index, 0));
    GridPath g(horizon, steps, dim);
    for (std::size_t c = 0; c < dim; ++c) {
        double coef[4], ph[4];
        for (int k = 0; k < 4; ++k) {
            coef[k] = 2.0 * rng.uniform01() - 1.0;
            ph[k] = 2.0 * std::numbers::pi * rng.uniform01();
        }
        for (std::size_t i = 0; i <= steps; ++i) {
            const double t = g.time(i);
            double v = 0.0;
            for (int k = 0; k < 4; ++k)
                v += coef[k] *
                     std::sin(2.0 * std::numbers::pi * (k + 1) * t / horizon + ph[k]);
            g.at(i, c) = v;
        }
    }
    // scale to a uniformly random energy inside the ball
    const auto W = fbm::trapezoid_weights(horizon, steps);
    double nrm = 0.0;
    for (std::size_t i = 0; i <= steps; ++i)
        for (std::size_t c = 0; c < dim; ++c) nrm += W[i] * g.at(i, c) * g.at(i, c);
    const double target = 2.0 * budget_n * (0.4 + 0.55 * rng.uniform01());
    const double scale = nrm > 0.0 ? std::sqrt(target / nrm) : 0.0;
    for (std::size_t i = 0; i <= steps; ++i)
        for (std::size_t c = 0; c < dim; ++c) g.at(i, c) *= scale;
    return g;
}

KhasminskiiScan khasminskii_scan(const NamedSystem& sys, double epsilon,
                                 double theta, double hurst, double alpha,
                                 double horizon, std::vector<double> block_deltas,
                                 std::size_t n_paths, std::uint64_t seed) {
    if (!sys.has_analytic_f1bar)
        throw std::invalid_argument("khasminskii_scan: analytic averaged drift required");
    const auto params = sde::ScaleParams::from_theta(epsilon, theta);
    const std::size_t M =
        sde::two_scale_min_steps(sys.spec, epsilon, horizon);
    const double dt = horizon / static_cast<double>(M);

    // snap the scan grid to block lengths that divide the grid
    std::vector<double> deltas;
    for (double d : block_deltas) {
        const auto stride = static_cast<std::size_t>(std::llround(d / dt));
        if (stride >= 1 && stride <= M) {
            const double snapped = static_cast<double>(stride) * dt;
            if (deltas.empty() || std::abs(deltas.back() - snapped) > 1e-15)
                deltas.push_back(snapped);
        }
    }
    if (deltas.empty())
        throw std::invalid_argument("khasminskii_scan: no grid-aligned block lengths");

    sde::TwoScaleControls controls;
    controls.u = fbm::cameron_martin_apply(sine_density(horizon, M, sys.spec.d1, 0.5),
                                           hurst);
    controls.has_u = true;

    const std::vector<double> x0{0.5};
    const std::vector<double> y0{0.0};
    const std::size_t norm_stride = M > 512 ? M / 512 : 1;

    fbm::CirculantFbmSampler fsampler(horizon, M, hurst);

    struct PerPath {
        std::vector<double> q2;           // per delta
        std::vector<double> q1_blockmax;  // per delta: max_k |block integral|^2
    };
    std::vector<PerPath> acc(n_paths);

    parallel_for(n_paths, [&](std::size_t p) {
        GridPath bh = fsampler.sample(sys.spec.d1, seed, p);
        GridPath w = fbm::sample_bm(sys.spec.d2, horizon, M, seed, p);
        const auto controlled = sde::solve_controlled_two_scale(
            sys.spec, params, bh, w, controls, x0, y0);
        PerPath res;
        res.q2.resize(deltas.size());
        res.q1_blockmax.resize(deltas.size());
        std::vector<double> f1v(1), f1b(1), xfrozen(1);
        for (std::size_t di = 0; di < deltas.size(); ++di) {
            const auto aux = sde::solve_khasminskii_auxiliary(
                sys.spec, params, bh, w, controls, controlled.x, deltas[di], x0, y0);
            GridPath gap = path_difference(controlled.x, aux.x);
            if (norm_stride > 1) gap = gap.subsample(norm_stride);
            const double nrm = fracpath::w_alpha_inf_norm(gap, alpha);
            res.q2[di] = nrm * nrm;

            // block fluctuation integrals along the auxiliary fast path
            const auto stride = static_cast<std::size_t>(
                std::llround(deltas[di] / dt));
            double worst = 0.0;
            for (std::size_t k0 = 0; k0 + stride <= M; k0 += stride) {
                xfrozen[0] = controlled.x.at(k0, 0);
                sys.f1bar(xfrozen, f1b);
                double acc_blk = 0.0;
                for (std::size_t i = k0; i < k0 + stride; ++i) {
                    sys.spec.f1(xfrozen, aux.y.row(i), f1v);
                    acc_blk += (f1v[0] - f1b[0]) * dt;
                }
                worst = std::max(worst, acc_blk * acc_blk);
            }
            res.q1_blockmax[di] = worst;
        }
        acc[p] = std::move(res);
    });

    KhasminskiiScan scan;
    scan.scan_epsilon = epsilon;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t di = 0; di < deltas.size(); ++di) {
        std::vector<double> q2s(n_paths), q1s(n_paths);
        for (std::size_t p = 0; p < n_paths; ++p) {
            q2s[p] = acc[p].q2[di];
            q1s[p] = acc[p].q1_blockmax[di];
        }
        const auto m2 = mean_stderr(q2s);
        const auto m1 = mean_stderr(q1s);
        KhasminskiiScanRow row;
        row.block_delta = deltas[di];
        row.q1 = m1.mean / (deltas[di] * deltas[di]);
        row.q2 = m2.mean;
        row.q2_stderr = m2.stderr_;
        row.total = row.q1 + row.q2;
        scan.rows.push_back(row);
        if (row.total < best) {
            best = row.total;
            scan.argmin_delta = deltas[di];
        }
    }
    return scan;
}

// ------------------------------------------------------------ experiments

namespace {

json run_fbm_cov(const ExperimentConfig& cfg, std::vector<std::string>& outputs,
                 std::vector<std::string>& streams) {
    const double T = cfg.horizon;
    const double s_probe = T / 2.0;
    const std::size_t M = cfg.steps;
    const std::size_t half = M / 2;
    const double exact = fbm::fbm_covariance(s_probe, T, cfg.hurst);

    CsvFile csv(report_path(cfg), "s,t,hurst,method,estimate,stderr,exact");
    json results;
    for (const std::string method : {"cholesky", "volterra"}) {
        std::vector<double> vs(cfg.n_paths), vt(cfg.n_paths);
        if (method == "cholesky") {
            fbm::CholeskyFbmSampler sampler(T, M, cfg.hurst);
            parallel_for(cfg.n_paths, [&](std::size_t p) {
                GridPath b = sampler.sample(1, cfg.seed, p);
                vs[p] = b.at(half, 0);
                vt[p] = b.at(M, 0);
            });
        } else {
            fbm::VolterraFbmSampler sampler(T, M, cfg.hurst);
            parallel_for(cfg.n_paths, [&](std::size_t p) {
                GridPath b = sampler.sample(1, cfg.seed, p);
                vs[p] = b.at(half, 0);
                vt[p] = b.at(M, 0);
            });
        }
        const double cov = sample_covariance(vs, vt);
        const double var_s = sample_variance(vs).var;
        const double var_t = sample_variance(vt).var;
        const double se =
            std::sqrt((var_s * var_t + cov * cov) / static_cast<double>(cfg.n_paths));
        csv.field(s_probe);
        csv.field(T);
        csv.field(cfg.hurst);
        csv.field(method);
        csv.field(cov);
        csv.field(se);
        csv.field(exact);
        csv.end_row();
        results[method + "_cov"] = cov;
        results[method + "_stderr"] = se;
    }
    results["exact"] = exact;
    outputs.push_back(csv.path());
    streams.push_back("fbm(path,component)");
    return results;
}

json run_young_ibp(const ExperimentConfig& cfg, std::vector<std::string>& outputs,
                   std::vector<std::string>& streams) {
    const double T = cfg.horizon;
    const std::size_t M = cfg.steps;
    const double alpha = cfg.alpha;
    const std::size_t n_pairs = cfg.n_paths;

    fbm::CirculantFbmSampler rough(T, M, 0.9);
    fbm::CirculantFbmSampler bound_driver(T, M, 0.8);

    CsvFile csv(report_path(cfg), "pair,kind,ibp_residual,scale,bound_lhs,bound_rhs");
    double worst_rel = 0.0;
    std::size_t bound_violations = 0;
    for (std::size_t p = 0; p < n_pairs; ++p) {
        const int kind = static_cast<int>(p % 4);
        GridPath g = (kind == 0 || kind == 1)
                         ? random_smooth_path(T, M, cfg.seed, 2 * p)
                         : rough.sample(1, cfg.seed, 2 * p);
        GridPath h = (kind == 0) ? random_smooth_path(T, M, cfg.seed, 2 * p + 1)
                                 : rough.sample(1, cfg.seed, 2 * p + 1);
        const GridPath gdh = fracpath::young_integral(g, h, alpha);
        const GridPath hdg = fracpath::young_integral(h, g, alpha);
        const double lhs = gdh.at(M, 0) + hdg.at(M, 0);
        const double rhs = g.at(M, 0) * h.at(M, 0) - g.at(0, 0) * h.at(0, 0);
        const double scale =
            std::max(1.0, g.sup_norm() * h.sup_norm());
        const double rel = std::abs(lhs - rhs) / scale;
        worst_rel = std::max(worst_rel, rel);

        // pathwise bound |int g dB| <= Lambda_alpha(B) ||g||_{alpha,1}
        GridPath drv = bound_driver.sample(1, cfg.seed, 3 * p + 2);
        const GridPath gdb = fracpath::young_integral(g, drv, alpha);
        const double blhs = std::abs(gdb.at(M, 0));
        const double brhs = fracpath::lambda_alpha(drv, alpha) *
                            fracpath::w_alpha_one_norm(g, alpha);
        if (blhs > brhs * 1.02 + 1e-12) ++bound_violations;

        csv.field(static_cast<double>(p));
        csv.field(std::string(kind == 0 ? "smooth-smooth"
                              : kind == 1 ? "smooth-fbm"
                                          : "fbm-fbm"));
        csv.field(rel);
        csv.field(scale);
        csv.field(blhs);
        csv.field(brhs);
        csv.end_row();
    }

    // chain rule on a smooth path at the reference resolution
    const std::size_t Mc = std::max<std::size_t>(M, 4096);
    GridPath hsm = random_smooth_path(T, Mc, cfg.seed, 991);
    const GridPath hdh = fracpath::young_integral(hsm, hsm, alpha);
    const double exact_val =
        0.5 * (hsm.at(Mc, 0) * hsm.at(Mc, 0) - hsm.at(0, 0) * hsm.at(0, 0));
    const double chain_rel =
        std::abs(hdh.at(Mc, 0) - exact_val) / std::max(1e-12, std::abs(exact_val));

    json results;
    results["max_ibp_residual_rel"] = worst_rel;
    results["bound_violations"] = bound_violations;
    results["chain_rule_rel_error"] = chain_rel;
    outputs.push_back(csv.path());
    streams.push_back("fbm(path,component)");
    streams.push_back("scratch(pair)");
    return results;
}

json run_ode_limit(const ExperimentConfig& cfg, std::vector<std::string>& outputs,
                   std::vector<std::string>& streams) {
    const NamedSystem sys = make_system(cfg.system);
    if (sys.spec.mode != sde::Mode::single_scale)
        throw std::invalid_argument("exp-ode-limit needs a single-scale system");
    const std::vector<double> x0{1.0};
    const GridPath x_limit = sde::solve_ode(sys.spec, x0, cfg.horizon, cfg.steps);
    fbm::CholeskyFbmSampler sampler(cfg.horizon, cfg.steps, cfg.hurst);

    CsvFile csv(report_path(cfg), kReportHeader);
    std::vector<double> log_eps, log_est;
    json rows = json::array();
    for (double eps : cfg.epsilon_chain) {
        const auto params = sde::ScaleParams::from_theta(eps, cfg.theta);
        std::vector<double> sup2(cfg.n_paths);
        parallel_for(cfg.n_paths, [&](std::size_t p) {
            GridPath b = sampler.sample(1, cfg.seed, p);
            const GridPath xe = sde::solve_single_scale(sys.spec, params, b, x0);
            sup2[p] = sup_sq_distance(xe, x_limit);
        });
        const auto ms = mean_stderr(sup2);
        csv.field(eps);
        csv.field(params.h_eps);
        csv.field(params.b_eps);
        csv.field(std::string("E_sup_sq_deviation"));
        csv.field(ms.mean);
        csv.field(ms.stderr_);
        csv.field(0.0);
        csv.end_row();
        log_eps.push_back(std::log(eps));
        log_est.push_back(std::log(ms.mean));
        rows.push_back({{"epsilon", eps}, {"estimate", ms.mean}});
    }
    const double slope = regression_slope(log_eps, log_est);
    json results;
    results["slope"] = slope;
    results["rows"] = rows;
    outputs.push_back(csv.path());
    streams.push_back("fbm(path,component)");
    return results;
}

json run_clt_variance(const ExperimentConfig& cfg, std::vector<std::string>& outputs,
                      std::vector<std::string>& streams) {
    const NamedSystem sys = make_system(cfg.system);
    const std::vector<double> x0{1.0};
    const auto rep = mdp::clt_variance_check(sys.spec, cfg.epsilon_chain, cfg.theta,
                                             cfg.hurst, cfg.horizon, cfg.steps,
                                             cfg.n_paths, cfg.seed, x0);
    CsvFile csv(report_path(cfg), kReportHeader);
    for (const auto& row : rep.rows) {
        csv.field(row.epsilon);
        csv.field(row.h_eps);
        csv.field(1.0 / (row.h_eps * row.h_eps));
        csv.field(std::string("h2_var_z_T"));
        csv.field(row.estimate);
        csv.field(row.stderr_);
        csv.field(rep.limit_variance);
        csv.end_row();
    }
    json results;
    results["limit_variance"] = rep.limit_variance;
    results["final_estimate"] = rep.rows.back().estimate;
    outputs.push_back(csv.path());
    streams.push_back("fbm(path,component)");
    return results;
}

json run_averaging(const ExperimentConfig& cfg, std::vector<std::string>& outputs,
                   std::vector<std::string>& streams) {
    const NamedSystem sys = make_system(cfg.system);
    if (sys.spec.mode != sde::Mode::two_scale)
        throw std::invalid_argument("exp-averaging needs a two-scale system");

    // averaged drift at probe points: ergodic vs quadrature
    const std::string f1bar_path = cfg.output_dir + "/" + cfg.experiment + "_f1bar.csv";
    double worst_gap = 0.0;
    {
        CsvFile csv(f1bar_path, "x,f1bar,stderr");
        const double t_burn = 10.0 / sys.spec.beta1;
        const double t_avg = 2400.0 / sys.spec.beta1;
        const auto steps_erg = static_cast<std::size_t>(
            std::llround((t_burn + t_avg) * 80.0 * sys.spec.beta1));
        for (double xp : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
            const std::vector<double> x{xp};
            const auto erg = averaging::ergodic_f1bar(sys.spec, x, t_burn, t_avg,
                                                      steps_erg, cfg.seed);
            const auto gh = averaging::gauss_hermite_f1bar(sys.spec.f1, sys.a, x,
                                                           sys.spec.n, sys.spec.m);
            worst_gap = std::max(worst_gap, std::abs(erg.value[0] - gh[0]));
            csv.field(xp);
            csv.field(erg.value[0]);
            csv.field(erg.stderr_);
            csv.end_row();
        }
    }

    CsvFile csv(report_path(cfg), kReportHeader);
    std::vector<double> gaps;
    for (double eps : cfg.epsilon_chain) {
        const auto params = sde::ScaleParams::from_theta(eps, cfg.theta);
        const std::size_t M = sde::two_scale_min_steps(sys.spec, eps, cfg.horizon);
        const std::vector<double> x0{0.5}, y0{0.0};
        const auto gap = averaging::averaging_gap(sys.spec, params, sys.f1bar,
                                                  cfg.hurst, cfg.horizon, M,
                                                  cfg.n_paths, cfg.seed, x0, y0);
        gaps.push_back(gap.mean);
        csv.field(eps);
        csv.field(params.h_eps);
        csv.field(params.b_eps);
        csv.field(std::string("E_sup_sq_avg_gap"));
        csv.field(gap.mean);
        csv.field(gap.stderr_);
        csv.field(0.0);
        csv.end_row();
    }
    bool monotone = true;
    for (std::size_t i = 1; i < gaps.size(); ++i)
        monotone = monotone && gaps[i] < gaps[i - 1];

    json results;
    results["f1bar_max_method_gap"] = worst_gap;
    results["gaps"] = gaps;
    results["gap_monotone_decreasing"] = monotone;
    outputs.push_back(f1bar_path);
    outputs.push_back(csv.path());
    streams.push_back("frozen_fast(path,component)");
    streams.push_back("fbm(path,component)");
    streams.push_back("bm(path,component)");
    return results;
}

json run_khasminskii(const ExperimentConfig& cfg, std::vector<std::string>& outputs,
                     std::vector<std::string>& streams) {
    const NamedSystem sys = make_system(cfg.system);
    const double eps = cfg.epsilon_chain[cfg.epsilon_chain.size() / 2];
    const double root = std::sqrt(eps);
    std::vector<double> deltas;
    for (int k = -4; k <= 4; ++k) deltas.push_back(root * std::pow(2.0, k));
    const auto scan = khasminskii_scan(sys, eps, cfg.theta, cfg.hurst, cfg.alpha,
                                       cfg.horizon, deltas, cfg.n_paths, cfg.seed);
    CsvFile csv(report_path(cfg), "delta,q1,q2,q2_stderr,total");
    for (const auto& row : scan.rows) {
        csv.field(row.block_delta);
        csv.field(row.q1);
        csv.field(row.q2);
        csv.field(row.q2_stderr);
        csv.field(row.total);
        csv.end_row();
    }
    json results;
    results["scan_epsilon"] = scan.scan_epsilon;
    results["argmin_delta"] = scan.argmin_delta;
    results["sqrt_eps"] = root;
    results["argmin_over_sqrt_eps"] = scan.argmin_delta / root;
    outputs.push_back(csv.path());
    streams.push_back("fbm(path,component)");
    streams.push_back("bm(path,component)");
    return results;
}

json run_rate_endpoint(const ExperimentConfig& cfg, std::vector<std::string>& outputs,
                       std::vector<std::string>& streams) {
    (void)streams;  // deterministic experiment, no sampling
    const NamedSystem sys = make_system(cfg.system);
    const std::vector<double> x0{0.0};
    const GridPath base = sde::solve_ode(sys.spec, x0, cfg.horizon, cfg.steps);
    const auto problem =
        mdp::make_single_scale_skeleton(sys.spec, base, cfg.hurst, cfg.alpha);
    const std::vector<double> target{cfg.delta};
    const auto sol = mdp::rate_function_endpoint(problem, target);
    const double exact =
        cfg.delta * cfg.delta / (2.0 * std::pow(cfg.horizon, 2.0 * cfg.hurst));

    CsvFile csv(report_path(cfg), kReportHeader);
    csv.field(0.0);
    csv.field(1.0);
    csv.field(1.0);
    csv.field(std::string("rate_endpoint"));
    csv.field(sol.cost);
    csv.field(0.0);
    csv.field(exact);
    csv.end_row();

    json results;
    results["rate"] = sol.cost;
    results["exact_flat_case"] = exact;
    results["achieved_endpoint"] = sol.achieved_path.at(cfg.steps, 0);
    outputs.push_back(csv.path());
    return results;
}

json run_mdp_trend(const ExperimentConfig& cfg, std::vector<std::string>& outputs,
                   std::vector<std::string>& streams) {
    const NamedSystem sys = make_system(cfg.system);
    const bool flat = cfg.system == "SS-FLAT";
    const std::vector<double> x0{0.0};
    const auto rep = mdp::empirical_mdp_rate(sys.spec, cfg.epsilon_chain, cfg.theta,
                                             cfg.hurst, cfg.delta, cfg.horizon,
                                             cfg.steps, cfg.n_paths, cfg.seed, x0,
                                             flat);
    CsvFile csv(report_path(cfg), kReportHeader);
    for (const auto& row : rep.rows) {
        csv.field(row.epsilon);
        csv.field(row.h_eps);
        csv.field(row.b_eps);
        csv.field(std::string(row.below_resolution ? "b_log_tail(below MC resolution)"
                                                   : "b_log_tail"));
        csv.field(row.mc_estimate.value_or(std::nan("")));
        csv.field(row.mc_estimate ? (*row.mc_hi - *row.mc_lo) / 2.0 : std::nan(""));
        csv.field(row.exact.value_or(std::nan("")));
        csv.end_row();
    }
    json results;
    results["neg_rate"] = rep.neg_rate;
    if (flat && rep.rows.back().exact)
        results["final_exact_gap_rel"] =
            std::abs(*rep.rows.back().exact - rep.neg_rate) / std::abs(rep.neg_rate);
    outputs.push_back(csv.path());
    streams.push_back("fbm(path,component)");
    return results;
}

}  // namespace

std::vector<std::string> experiment_names() {
    std::vector<std::string> names;
    for (const auto& [k, v] : registry()) names.push_back(k);
    return names;
}

std::string list_experiments() {
    std::string out;
    for (const auto& [name, info] : registry()) {
        out += name + " - " + info.description + "\n    validates: " +
               info.validates + "\n";
    }
    return out;
}

RunManifest run_experiment(const ExperimentConfig& raw) {
    const ExperimentConfig cfg = resolve(raw);
    const auto violations = validate_config(cfg);
    for (const auto& v : violations)
        if (v.is_error) throw std::invalid_argument("invalid config: " + v.message);

    std::filesystem::create_directories(cfg.output_dir);
    const auto t0 = std::chrono::steady_clock::now();

    RunManifest man;
    man.experiment = cfg.experiment;
    man.config_json = config_to_json_string(cfg);
    man.content_hash = content_hash(man.config_json);

    json results;
    if (cfg.experiment == "exp-fbm-cov")
        results = run_fbm_cov(cfg, man.outputs, man.rng_streams);
    else if (cfg.experiment == "exp-young-ibp")
        results = run_young_ibp(cfg, man.outputs, man.rng_streams);
    else if (cfg.experiment == "exp-ode-limit")
        results = run_ode_limit(cfg, man.outputs, man.rng_streams);
    else if (cfg.experiment == "exp-clt-variance")
        results = run_clt_variance(cfg, man.outputs, man.rng_streams);
    else if (cfg.experiment == "exp-averaging")
        results = run_averaging(cfg, man.outputs, man.rng_streams);
    else if (cfg.experiment == "exp-khasminskii-delta")
        results = run_khasminskii(cfg, man.outputs, man.rng_streams);
    else if (cfg.experiment == "exp-rate-endpoint")
        results = run_rate_endpoint(cfg, man.outputs, man.rng_streams);
    else if (cfg.experiment == "exp-mdp-trend")
        results = run_mdp_trend(cfg, man.outputs, man.rng_streams);
    else
        throw std::invalid_argument("unknown experiment: " + cfg.experiment);

    man.results_json = results.dump(2);
    const auto t1 = std::chrono::steady_clock::now();
    man.wall_seconds = std::chrono::duration<double>(t1 - t0).count();

    json mj;
    mj["experiment"] = man.experiment;
    mj["config"] = json::parse(man.config_json);
    mj["content_hash"] = man.content_hash;
    mj["outputs"] = man.outputs;
    mj["rng_streams"] = man.rng_streams;
    mj["results"] = results;
    mj["wall_seconds"] = man.wall_seconds;
    const std::string mpath =
        cfg.output_dir + "/" + cfg.experiment + "_manifest.json";
    std::ofstream mf(mpath);
    mf << mj.dump(2) << "\n";
    man.outputs.push_back(mpath);
    return man;
}

}  // namespace fbmlab::harness
