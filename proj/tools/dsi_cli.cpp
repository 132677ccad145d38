// Experiment harness for the dual-schedule inversion library.
//
// Subcommands: reconstruct, ablate, irreversibility, edit. Each takes a JSON
// config (--config) and an optional CSV output override (--out).
//
// Exit codes: 0 success, 1 config error, 2 runtime/numerical error,
// 3 assertion failure (ablate tolerance miss).

#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dsi/config.hpp"
#include "dsi/errors.hpp"
#include "dsi/experiment.hpp"

namespace {

dsi::ExperimentConfig load_config(const std::string& path, const std::string& out_override) {
    dsi::ExperimentConfig config = dsi::ExperimentConfig::from_file(path);
    if (!out_override.empty()) config.outputs.csv = out_override;
    if (config.outputs.csv.empty()) {
        throw dsi::ConfigError("no CSV output path (set outputs.csv or pass --out)");
    }
    config.validate();
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dual-schedule inversion experiments"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_override;
    std::string axis = "tau";
    std::vector<double> axis_values;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON experiment config")->required();
        cmd->add_option("--out", out_override, "override outputs.csv");
    };

    CLI::App* reconstruct = app.add_subcommand(
        "reconstruct", "DDIM vs dual round-trip reconstruction metrics per sample and scale");
    add_common(reconstruct);

    CLI::App* ablate = app.add_subcommand(
        "ablate", "dual round trips along one ablation axis, asserting the grid-gap bound");
    add_common(ablate);
    ablate->add_option("--axis", axis, "tau | steps")->check(CLI::IsMember({"tau", "steps"}));
    ablate->add_option("--values", axis_values,
                       "axis values (default: tau 0.25 0.5 0.75 | steps 19 49)");

    CLI::App* irrev = app.add_subcommand(
        "irreversibility", "DDIM round-trip gap vs dual grid gap across guidance scales");
    add_common(irrev);

    CLI::App* edit = app.add_subcommand(
        "edit", "prompt-swap editing: distances to source/target component means");
    add_common(edit);

    CLI11_PARSE(app, argc, argv);

    try {
        const dsi::ExperimentConfig config = load_config(config_path, out_override);
        if (reconstruct->parsed()) return dsi::run_reconstruct(config, std::cout);
        if (ablate->parsed()) return dsi::run_ablate(config, axis, axis_values, std::cout);
        if (irrev->parsed()) return dsi::run_irreversibility(config, std::cout);
        if (edit->parsed()) return dsi::run_edit(config, std::cout);
        return dsi::kExitConfigError;
    } catch (const dsi::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return dsi::kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return dsi::kExitRuntimeError;
    }
}
