#include "dsi/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <string>

#include <json.hpp>

#include "dsi/errors.hpp"
#include "dsi/predictor.hpp"

namespace dsi {

using nlohmann::json;

namespace {

constexpr std::size_t kMaxLatentElements = 4096;

[[noreturn]] void fail(const std::string& message) { throw ConfigError(message); }

void check_known_keys(const json& obj, const char* section,
                      std::initializer_list<const char*> known) {
    const std::set<std::string> allowed(known.begin(), known.end());
    for (const auto& [key, _] : obj.items()) {
        if (!allowed.contains(key)) {
            fail(std::string("unknown key \"") + key + "\" in config section " + section);
        }
    }
}

PredictorKind parse_kind(const std::string& kind) {
    if (kind == "zero") return PredictorKind::zero;
    if (kind == "procedural") return PredictorKind::procedural;
    if (kind == "mixture") return PredictorKind::mixture;
    if (kind == "trace") return PredictorKind::trace;
    fail("unknown predictor kind \"" + kind + "\"");
}

const char* kind_name(PredictorKind kind) {
    switch (kind) {
        case PredictorKind::zero: return "zero";
        case PredictorKind::procedural: return "procedural";
        case PredictorKind::mixture: return "mixture";
        case PredictorKind::trace: return "trace";
    }
    return "?";
}

}  // namespace

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open config file: " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json_text(text);
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        fail(std::string("config is not valid JSON: ") + e.what());
    }

    ExperimentConfig cfg;
    try {
        check_known_keys(doc, "(root)",
                         {"schedule", "grid", "predictor", "guidance", "data", "outputs"});

        if (doc.contains("schedule")) {
            const auto& s = doc["schedule"];
            check_known_keys(s, "schedule", {"total_steps", "beta_start", "beta_end"});
            cfg.schedule.total_steps = s.value("total_steps", cfg.schedule.total_steps);
            cfg.schedule.beta_start = s.value("beta_start", cfg.schedule.beta_start);
            cfg.schedule.beta_end = s.value("beta_end", cfg.schedule.beta_end);
        }

        if (doc.contains("grid")) {
            const auto& g = doc["grid"];
            check_known_keys(g, "grid", {"t0", "stride", "steps", "tau_fraction", "aux_offset"});
            cfg.grid.t0 = g.value("t0", cfg.grid.t0);
            cfg.grid.stride = g.value("stride", cfg.grid.stride);
            cfg.grid.steps = g.value("steps", cfg.grid.steps);
            cfg.grid.tau_fraction = g.value("tau_fraction", cfg.grid.tau_fraction);
            if (g.contains("aux_offset")) cfg.grid.aux_offset = g["aux_offset"].get<int>();
        }

        if (doc.contains("predictor")) {
            const auto& p = doc["predictor"];
            check_known_keys(p, "predictor",
                             {"kind", "seed", "components", "sigma0", "mean_scale", "weights",
                              "means", "trace_path"});
            cfg.predictor.kind = parse_kind(p.value("kind", std::string("mixture")));
            if (p.contains("seed")) cfg.predictor.seed = p["seed"].get<std::uint64_t>();
            cfg.predictor.mixture.components =
                p.value("components", cfg.predictor.mixture.components);
            cfg.predictor.mixture.sigma0 = p.value("sigma0", cfg.predictor.mixture.sigma0);
            cfg.predictor.mixture.mean_scale =
                p.value("mean_scale", cfg.predictor.mixture.mean_scale);
            if (p.contains("weights")) {
                cfg.predictor.mixture.weights = p["weights"].get<std::vector<double>>();
            }
            if (p.contains("means")) {
                cfg.predictor.mixture.means =
                    p["means"].get<std::vector<std::vector<double>>>();
            }
            cfg.predictor.trace_path = p.value("trace_path", std::string());
        }

        if (doc.contains("guidance")) {
            const auto& g = doc["guidance"];
            check_known_keys(g, "guidance", {"scales", "source_condition", "target_condition"});
            if (g.contains("scales")) cfg.guidance.scales = g["scales"].get<std::vector<double>>();
            cfg.guidance.source_condition =
                g.value("source_condition", cfg.guidance.source_condition);
            if (g.contains("target_condition")) {
                cfg.guidance.target_condition = g["target_condition"].get<int>();
            }
        }

        if (doc.contains("data")) {
            const auto& d = doc["data"];
            check_known_keys(d, "data", {"shape", "count", "seed"});
            if (d.contains("shape")) cfg.data.shape = d["shape"].get<Shape>();
            cfg.data.count = d.value("count", cfg.data.count);
            if (d.contains("seed")) cfg.data.seed = d["seed"].get<std::uint64_t>();
        }

        if (doc.contains("outputs")) {
            const auto& o = doc["outputs"];
            check_known_keys(o, "outputs", {"csv", "trace"});
            cfg.outputs.csv = o.value("csv", std::string());
            if (o.contains("trace")) cfg.outputs.trace = o["trace"].get<std::string>();
        }
    } catch (const json::exception& e) {
        fail(std::string("bad config field: ") + e.what());
    }

    return cfg;
}

std::string ExperimentConfig::to_json_text() const {
    json doc;
    doc["schedule"] = {{"total_steps", schedule.total_steps},
                       {"beta_start", schedule.beta_start},
                       {"beta_end", schedule.beta_end}};
    doc["grid"] = {{"t0", grid.t0},
                   {"stride", grid.stride},
                   {"steps", grid.steps},
                   {"tau_fraction", grid.tau_fraction}};
    if (grid.aux_offset) doc["grid"]["aux_offset"] = *grid.aux_offset;
    doc["predictor"] = {{"kind", kind_name(predictor.kind)}};
    if (predictor.seed) doc["predictor"]["seed"] = *predictor.seed;
    if (predictor.kind == PredictorKind::mixture) {
        doc["predictor"]["components"] = predictor.mixture.components;
        doc["predictor"]["sigma0"] = predictor.mixture.sigma0;
        doc["predictor"]["mean_scale"] = predictor.mixture.mean_scale;
        if (!predictor.mixture.weights.empty()) {
            doc["predictor"]["weights"] = predictor.mixture.weights;
        }
        if (predictor.mixture.means) doc["predictor"]["means"] = *predictor.mixture.means;
    }
    if (predictor.kind == PredictorKind::trace) {
        doc["predictor"]["trace_path"] = predictor.trace_path;
    }
    doc["guidance"] = {{"scales", guidance.scales},
                       {"source_condition", guidance.source_condition}};
    if (guidance.target_condition) doc["guidance"]["target_condition"] = *guidance.target_condition;
    doc["data"] = {{"shape", data.shape}, {"count", data.count}};
    if (data.seed) doc["data"]["seed"] = *data.seed;
    doc["outputs"] = {{"csv", outputs.csv}};
    if (outputs.trace) doc["outputs"]["trace"] = *outputs.trace;
    return doc.dump(2);
}

void ExperimentConfig::validate() const {
    if (schedule.total_steps < 2) fail("schedule.total_steps must be >= 2");
    if (!(schedule.beta_start > 0.0 && schedule.beta_start <= schedule.beta_end &&
          schedule.beta_end < 1.0)) {
        fail("schedule betas must satisfy 0 < beta_start <= beta_end < 1");
    }

    if (grid.t0 < 1) fail("grid.t0 must be >= 1");
    if (grid.stride < 2) fail("grid.stride must be >= 2 for a dual grid");
    if (grid.steps < 1) fail("grid.steps must be >= 1");
    if (!(grid.tau_fraction > 0.0 && grid.tau_fraction < 1.0)) {
        fail("grid.tau_fraction must lie strictly in (0, 1)");
    }
    if (grid.aux_offset && (*grid.aux_offset < 1 || *grid.aux_offset > grid.stride - 1)) {
        fail("grid.aux_offset must lie in [1, stride-1]");
    }
    const long top = static_cast<long>(grid.t0) + static_cast<long>(grid.steps) * grid.stride;
    if (top > schedule.total_steps) {
        fail("grid top " + std::to_string(top) + " exceeds schedule.total_steps");
    }

    if (data.shape.empty() || data.shape.size() > 2) fail("data.shape must have rank 1 or 2");
    for (std::size_t e : data.shape) {
        if (e == 0) fail("data.shape extents must be positive");
    }
    if (shape_size(data.shape) > kMaxLatentElements) {
        fail("data.shape exceeds the desk-scale cap of " + std::to_string(kMaxLatentElements) +
             " elements");
    }
    if (data.count < 1) fail("data.count must be >= 1");
    if (!data.seed) fail("data.seed is required (all randomness must be seeded)");

    if (guidance.scales.empty()) fail("guidance.scales must not be empty");
    for (double w : guidance.scales) {
        if (!(w >= 0.0) || !std::isfinite(w)) fail("guidance scales must be finite and >= 0");
    }
    if (guidance.source_condition < ConditionId::kUnconditionalRaw) {
        fail("guidance.source_condition must be -1 (unconditional) or a component index");
    }
    if (guidance.target_condition && *guidance.target_condition < ConditionId::kUnconditionalRaw) {
        fail("guidance.target_condition must be -1 (unconditional) or a component index");
    }

    switch (predictor.kind) {
        case PredictorKind::mixture: {
            const auto& m = predictor.mixture;
            if (m.means) {
                const std::size_t n = shape_size(data.shape);
                if (m.means->empty()) fail("predictor.means must not be empty");
                for (const auto& mean : *m.means) {
                    if (mean.size() != n) {
                        fail("predictor.means entries must match data.shape element count");
                    }
                }
            } else {
                if (m.components < 1) fail("predictor.components must be >= 1");
                if (!predictor.seed) {
                    fail("predictor.seed is required when mixture means are generated");
                }
            }
            const std::size_t k = m.means ? m.means->size()
                                          : static_cast<std::size_t>(m.components);
            if (!m.weights.empty() && m.weights.size() != k) {
                fail("predictor.weights size must match the component count");
            }
            for (double w : m.weights) {
                if (!(w > 0.0)) fail("predictor.weights must be positive");
            }
            if (!(m.sigma0 > 0.0)) fail("predictor.sigma0 must be positive");
            const int max_cond = static_cast<int>(k) - 1;
            if (guidance.source_condition > max_cond) {
                fail("guidance.source_condition " + std::to_string(guidance.source_condition) +
                     " is not a mixture component (have " + std::to_string(k) + ")");
            }
            if (guidance.target_condition && *guidance.target_condition > max_cond) {
                fail("guidance.target_condition " + std::to_string(*guidance.target_condition) +
                     " is not a mixture component (have " + std::to_string(k) + ")");
            }
            break;
        }
        case PredictorKind::trace:
            if (predictor.trace_path.empty()) fail("predictor.trace_path is required");
            if (data.count != 1 || guidance.scales.size() != 1) {
                fail("trace predictor replays a single run: data.count and guidance.scales "
                     "must both be 1");
            }
            break;
        case PredictorKind::zero:
        case PredictorKind::procedural:
            break;
    }
}

}  // namespace dsi
