#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fbmlab/averaging.hpp"
#include "fbmlab/sde.hpp"

namespace fbmlab::harness {

// One reproducible run: everything an experiment needs, JSON-serializable.
// steps/n_paths of 0 mean "use the experiment's default".
struct ExperimentConfig {
    std::string experiment;
    double hurst = 0.75;
    double alpha = 0.3;
    double theta = 0.4;
    std::vector<double> epsilon_chain{1e-1, 1e-2, 1e-3};
    double delta = 1.0;
    double horizon = 1.0;
    std::size_t steps = 0;
    double block_delta = 0.05;
    std::size_t n_paths = 0;
    std::uint64_t seed = 12345;
    std::string system = "";  // empty = experiment default
    std::string output_dir = "out";
    std::optional<double> beta2_override;
};

struct Violation {
    bool is_error = true;
    std::string message;
};

// Encodes the theorem hypotheses as checks; warnings are soft entries.
std::vector<Violation> validate_config(const ExperimentConfig& cfg);

std::string config_to_json_string(const ExperimentConfig& cfg);
ExperimentConfig config_from_json_string(const std::string& text);
ExperimentConfig config_from_json_file(const std::string& path);

struct RunManifest {
    std::string experiment;
    std::string config_json;
    std::string content_hash;     // hash of the canonical config echo
    std::vector<std::string> outputs;
    std::vector<std::string> rng_streams;
    std::string results_json;     // experiment-level scalar results
    double wall_seconds = 0.0;
};

// Executes one registered experiment; throws std::invalid_argument on bad
// configs and std::runtime_error on numerical failures.
RunManifest run_experiment(const ExperimentConfig& cfg);

std::vector<std::string> experiment_names();
std::string list_experiments();

// Named coefficient sets used across experiments and tests.
struct NamedSystem {
    sde::SystemSpec spec;
    // two-scale extras (Gaussian invariant-measure family)
    std::function<double(std::span<const double>)> a;
    sde::VecFn f1bar;      // analytic averaged drift when available
    sde::MatFn jac_f1bar;  // its Jacobian
    bool has_analytic_f1bar = false;
};
NamedSystem make_system(const std::string& name);
std::vector<std::string> system_names();

// Delta(eps) = eps^{gamma+1} h(eps)^2 |ln eps|; defined for theta > 1/2 and
// gamma in (0, theta - 1/2), flagged otherwise.
double khasminskii_delta_schedule(double epsilon, double theta, double gamma);

// Time-block error budget of the averaging decomposition, measured by MC:
// q1 is the block-fluctuation rate max_k E|int_block (f1 - f1bar)|^2 / Delta^2
// (the eps/Delta-shaped side), q2 = E sup_t ||xtilde - xhat||^2_{alpha,[0,t]}
// (the freezing side, CDelta-shaped).  The two sides trade off at
// Delta ~ sqrt(eps).
struct KhasminskiiScanRow {
    double block_delta = 0.0;
    double q1 = 0.0;
    double q2 = 0.0;
    double q2_stderr = 0.0;
    double total = 0.0;
};
struct KhasminskiiScan {
    std::vector<KhasminskiiScanRow> rows;
    double scan_epsilon = 0.0;
    double argmin_delta = 0.0;
};
KhasminskiiScan khasminskii_scan(const NamedSystem& sys, double epsilon,
                                 double theta, double hurst, double alpha,
                                 double horizon, std::vector<double> block_deltas,
                                 std::size_t n_paths, std::uint64_t seed);

// Smooth deterministic density with 0.5 * ||dot_u||^2_{L2} = energy.
GridPath sine_density(double horizon, std::size_t steps, std::size_t dim,
                      double energy);

// Random admissible density inside the budget-N ball (trig polynomial).
GridPath random_admissible_density(double horizon, std::size_t steps,
                                   std::size_t dim, double budget_n,
                                   std::uint64_t seed, std::uint64_t index);

// FNV-1a over a string; used as the manifest content hash.
std::string content_hash(const std::string& bytes);

}  // namespace fbmlab::harness
