#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "fbmlab/harness.hpp"

namespace {

// --set key=value patches on top of a config
void apply_overrides(fbmlab::harness::ExperimentConfig& cfg,
                     const std::vector<std::string>& sets) {
    for (const auto& kv : sets) {
        const auto pos = kv.find('=');
        if (pos == std::string::npos)
            throw std::invalid_argument("--set expects key=value, got: " + kv);
        const std::string key = kv.substr(0, pos);
        const std::string val = kv.substr(pos + 1);
        if (key == "H") cfg.hurst = std::stod(val);
        else if (key == "alpha") cfg.alpha = std::stod(val);
        else if (key == "theta") cfg.theta = std::stod(val);
        else if (key == "delta") cfg.delta = std::stod(val);
        else if (key == "T") cfg.horizon = std::stod(val);
        else if (key == "M") cfg.steps = std::stoul(val);
        else if (key == "Delta") cfg.block_delta = std::stod(val);
        else if (key == "n_paths") cfg.n_paths = std::stoul(val);
        else if (key == "seed") cfg.seed = std::stoull(val);
        else if (key == "system") cfg.system = val;
        else if (key == "output_dir") cfg.output_dir = val;
        else if (key == "beta2") cfg.beta2_override = std::stod(val);
        else if (key == "epsilon_chain") {
            cfg.epsilon_chain.clear();
            std::string rest = val;
            while (!rest.empty()) {
                const auto comma = rest.find(',');
                cfg.epsilon_chain.push_back(std::stod(rest.substr(0, comma)));
                if (comma == std::string::npos) break;
                rest = rest.substr(comma + 1);
            }
        } else {
            throw std::invalid_argument("unknown config key: " + key);
        }
    }
}

int print_violations(const std::vector<fbmlab::harness::Violation>& vs) {
    bool any_error = false;
    for (const auto& v : vs) {
        std::cout << (v.is_error ? "error: " : "warning: ") << v.message << "\n";
        any_error = any_error || v.is_error;
    }
    if (vs.empty()) std::cout << "config ok\n";
    return any_error ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for slow-fast systems driven by mixed fBm"};
    app.require_subcommand(1);

    std::string config_path;
    std::string experiment;
    std::vector<std::string> overrides;

    auto* run = app.add_subcommand("run", "run a registered experiment");
    run->add_option("--config", config_path, "JSON config file");
    run->add_option("--experiment", experiment, "experiment name");
    run->add_option("--set", overrides, "override config entries key=value");

    auto* list = app.add_subcommand("list", "list registered experiments");

    std::string val_config;
    auto* validate = app.add_subcommand("validate", "validate a JSON config");
    validate->add_option("--config", val_config, "JSON config file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (list->parsed()) {
            std::cout << fbmlab::harness::list_experiments();
            return 0;
        }
        if (validate->parsed()) {
            const auto cfg = fbmlab::harness::config_from_json_file(val_config);
            return print_violations(fbmlab::harness::validate_config(cfg));
        }
        // run
        fbmlab::harness::ExperimentConfig cfg;
        if (!config_path.empty()) cfg = fbmlab::harness::config_from_json_file(config_path);
        if (!experiment.empty()) cfg.experiment = experiment;
        apply_overrides(cfg, overrides);
        if (cfg.experiment.empty()) {
            std::cerr << "error: no experiment given (use --experiment or --config)\n";
            return 2;
        }
        const auto man = fbmlab::harness::run_experiment(cfg);
        std::cout << "experiment: " << man.experiment << "\n"
                  << "content_hash: " << man.content_hash << "\n"
                  << "wall_seconds: " << man.wall_seconds << "\n"
                  << "results: " << man.results_json << "\n";
        for (const auto& o : man.outputs) std::cout << "wrote " << o << "\n";
        return 0;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
}
