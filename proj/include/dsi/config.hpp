#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dsi/latent.hpp"
#include "dsi/schedule.hpp"

namespace dsi {

struct ScheduleParams {
    int total_steps = DiffusionSchedule::kDefaultTotalSteps;
    double beta_start = DiffusionSchedule::kDefaultBetaStart;
    double beta_end = DiffusionSchedule::kDefaultBetaEnd;
};

struct GridParams {
    int t0 = 1;
    int stride = 20;
    // Strided transitions; steps+1 grid points. 49 gives the 50-point grid
    // [1, 21, ..., 981] under the defaults.
    int steps = 49;
    double tau_fraction = 0.5;
    std::optional<int> aux_offset;  // direct delta override
};

enum class PredictorKind { zero, procedural, mixture, trace };

struct MixtureParams {
    int components = 2;
    double sigma0 = 0.05;
    double mean_scale = 0.8;
    std::vector<double> weights;                            // default: uniform
    std::optional<std::vector<std::vector<double>>> means;  // explicit, else seeded
};

struct PredictorParams {
    PredictorKind kind = PredictorKind::mixture;
    std::optional<std::uint64_t> seed;  // required when means are generated
    MixtureParams mixture;
    std::string trace_path;  // kind == trace
};

struct GuidanceParams {
    std::vector<double> scales{1.0, 4.0, 7.5};
    int source_condition = 0;                  // -1 = unconditional
    std::optional<int> target_condition;       // edit target
};

struct DataParams {
    Shape shape{16, 16};
    int count = 20;
    std::optional<std::uint64_t> seed;  // mandatory
};

struct OutputParams {
    std::string csv;
    std::optional<std::string> trace;
};

// One experiment description, loaded from a single JSON document. All
// randomness is seeded; identical configs reproduce identical results.
struct ExperimentConfig {
    ScheduleParams schedule;
    GridParams grid;
    PredictorParams predictor;
    GuidanceParams guidance;
    DataParams data;
    OutputParams outputs;

    static ExperimentConfig from_file(const std::filesystem::path& path);
    static ExperimentConfig from_json_text(const std::string& text);

    std::string to_json_text() const;

    // Throws ConfigError on any inconsistency (bad ranges, missing seeds,
    // unknown condition ids, oversized latents, unwritable outputs).
    void validate() const;
};

}  // namespace dsi
