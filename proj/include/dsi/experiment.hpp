#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "dsi/config.hpp"
#include "dsi/dualsched.hpp"
#include "dsi/predictor.hpp"

namespace dsi {

// Everything a command needs, materialized from a validated config:
// schedule, dual grid, predictor, and the seeded z0 dataset.
struct ExperimentSetup {
    DiffusionSchedule schedule = DiffusionSchedule::make_default();
    DualTimeGrid grid;
    std::shared_ptr<const NoisePredictor> predictor;
    std::vector<LatentArray> dataset;
};

ExperimentSetup build_experiment(const ExperimentConfig& config);

// Deterministic dataset generation (always from data.seed): mixture-backed
// configs draw z0 from the source-condition component (or the full mixture
// when the source is unconditional); other predictor kinds draw i.i.d.
// N(0, 0.5).
std::vector<LatentArray> generate_dataset(const ExperimentConfig& config,
                                          const NoisePredictor* predictor);

// Exit codes shared by the commands and the CLI.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 1;
inline constexpr int kExitRuntimeError = 2;
inline constexpr int kExitAssertionFailure = 3;

// Per-sample, per-scale DDIM vs dual round-trip comparison (CSV rows
// sample_id,guidance_scale,method,mse,psnr_db,ssim,max_abs_gap,runtime_ms,
// with per-(method, scale) mean rows appended).
int run_reconstruct(const ExperimentConfig& config, std::ostream& log);

// Dual round trips along one ablation axis ("tau": tau_fraction values;
// "steps": grid transition counts). Asserts the grid-gap tolerance for
// every value; returns kExitAssertionFailure when any run misses it.
int run_ablate(const ExperimentConfig& config, const std::string& axis,
               const std::vector<double>& axis_values, std::ostream& log);

// DDIM round-trip gap vs dual grid gap per sample across guidance scales.
int run_irreversibility(const ExperimentConfig& config, std::ostream& log);

// Prompt-swap editing: distance to source/target component means plus the
// equal-prompt reconstruction control.
int run_edit(const ExperimentConfig& config, std::ostream& log);

}  // namespace dsi
