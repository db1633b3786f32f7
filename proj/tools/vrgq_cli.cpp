#include "vrgq/harness/config.hpp"
#include "vrgq/harness/experiment.hpp"
#include "vrgq/numfmt.hpp"
#include "vrgq/theory.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

namespace {

enum ExitCode { kOk = 0, kIoError = 1, kConfigError = 2, kAssumption = 3 };

vrgq::harness::ExperimentConfig load(const std::string& path) {
    auto cfg = vrgq::harness::load_config(path);
    vrgq::harness::apply_environment_overrides(cfg);
    cfg.validate();
    return cfg;
}

std::vector<std::string> split_values(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

int cmd_run(const std::string& config, const std::string& out) {
    auto cfg = load(config);
    if (!out.empty()) cfg.run.output_dir = out;
    if (cfg.run.output_dir.empty()) throw vrgq::ConfigError("run: no output directory (--out or [run] output_dir)");
    const auto result = vrgq::harness::run_experiment(cfg);
    vrgq::harness::write_outputs(cfg.run.output_dir, cfg, result);
    for (const auto& s : result.summaries)
        std::cout << s.algo << " seed=" << s.seed
                  << " final_min_grad_norm_sq=" << vrgq::format_double(s.final_min_grad_norm_sq) << '\n';
    return kOk;
}

int cmd_sweep(const std::string& config, const std::string& param, const std::string& values,
              const std::string& out) {
    const auto cfg = load(config);
    const auto points = vrgq::harness::run_sweep(cfg, param, split_values(values), out);
    for (const auto& p : points)
        for (const auto& s : p.summaries)
            std::cout << param << '=' << p.value << ' ' << s.algo << " seed=" << s.seed
                      << " asymptotic_error=" << vrgq::format_double(s.asymptotic_error) << '\n';
    return kOk;
}

int cmd_validate(const std::string& config) {
    const auto cfg = load(config);
    const auto v = vrgq::harness::validate_rates(cfg);
    vrgq::theory::print_report(std::cout, v.constants, v.report);
    std::cout << "Lambda_hat=" << vrgq::format_double(v.mixing.lambda_hat) << '\n'
              << "rho_hat=" << vrgq::format_double(v.mixing.rho_hat) << '\n';
    const double kappa = cfg.theory.kappa > 0.0 ? cfg.theory.kappa : 1.0 / (3.0 + 16.0 * cfg.theory.L1);
    std::cout << "kappa=" << vrgq::format_double(kappa) << '\n';
    try {
        std::cout << "threshold_M=" << vrgq::theory::find_feasible_batch(v.constants, kappa) << '\n';
    } catch (const vrgq::ParameterError&) {
        std::cout << "threshold_M=none\n";
    }
    return kOk;
}

int cmd_mixing(const std::string& config) {
    const auto cfg = load(config);
    const auto ctx = vrgq::harness::build_environment(cfg.environment, cfg.algorithm.sigma, cfg.environment.seed);
    const auto m = vrgq::estimate_mixing(ctx.mdp, ctx.behavior, cfg.theory.mixing_horizon);
    std::cout << "Lambda_hat=" << vrgq::format_double(m.lambda_hat) << '\n'
              << "rho_hat=" << vrgq::format_double(m.rho_hat) << '\n'
              << "lambda_C=" << vrgq::format_double(ctx.lambda_C) << '\n';
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"VR-Greedy-GQ experiments"};
    app.require_subcommand(1);

    std::string config, out, param, values;

    auto* run = app.add_subcommand("run", "run every configured algorithm and seed, write CSVs");
    run->add_option("--config", config)->required();
    run->add_option("--out", out);

    auto* sweep = app.add_subcommand("sweep", "repeat the experiment over values of one parameter");
    sweep->add_option("--config", config)->required();
    sweep->add_option("--param", param)->required();
    sweep->add_option("--values", values)->required();
    sweep->add_option("--out", out)->required();

    auto* validate = app.add_subcommand("validate-rates", "check learning-rate conditions for the configured run");
    validate->add_option("--config", config)->required();

    auto* mixing = app.add_subcommand("mixing", "estimate mixing constants of the behavior chain");
    mixing->add_option("--config", config)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfigError;
    }

    try {
        if (*run) return cmd_run(config, out);
        if (*sweep) return cmd_sweep(config, param, values, out);
        if (*validate) return cmd_validate(config);
        if (*mixing) return cmd_mixing(config);
    } catch (const vrgq::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const vrgq::ParameterError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const vrgq::SolvabilityError& e) {
        std::cerr << "assumption violated: " << e.what() << '\n';
        return kAssumption;
    } catch (const vrgq::ErgodicityError& e) {
        std::cerr << "assumption violated: " << e.what() << '\n';
        return kAssumption;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kIoError;
    }
    return kOk;
}
