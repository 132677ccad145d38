#include "dsi/trace.hpp"

#include <fstream>
#include <utility>

#include <json.hpp>

#include "dsi/errors.hpp"

namespace dsi {

using nlohmann::json;

std::string Trace::to_json() const {
    json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["shape"] = shape;
    doc["schedule_params"] = {
        {"total_steps", total_steps},
        {"beta_start", beta_start},
        {"beta_end", beta_end},
    };
    json entry_list = json::array();
    for (const auto& e : entries) {
        entry_list.push_back({
            {"t", e.t},
            {"condition", e.condition.raw()},
            {"values", e.values},
        });
    }
    doc["entries"] = std::move(entry_list);
    return doc.dump();
}

Trace Trace::from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw TraceError(std::string("malformed trace file: ") + e.what());
    }
    try {
        if (doc.at("schema_version").get<int>() != kSchemaVersion) {
            throw TraceError("unsupported trace schema version");
        }
        Trace trace;
        trace.shape = doc.at("shape").get<Shape>();
        const auto& sp = doc.at("schedule_params");
        trace.total_steps = sp.at("total_steps").get<int>();
        trace.beta_start = sp.at("beta_start").get<double>();
        trace.beta_end = sp.at("beta_end").get<double>();
        const std::size_t n = shape_size(trace.shape);
        for (const auto& e : doc.at("entries")) {
            TraceEntry entry;
            entry.t = e.at("t").get<int>();
            entry.condition = ConditionId::from_raw(e.at("condition").get<int>());
            entry.values = e.at("values").get<std::vector<double>>();
            if (entry.values.size() != n) {
                throw TraceError("trace entry value count does not match shape");
            }
            trace.entries.push_back(std::move(entry));
        }
        return trace;
    } catch (const json::exception& e) {
        throw TraceError(std::string("malformed trace file: ") + e.what());
    }
}

void Trace::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) {
        throw TraceError("cannot open trace file for writing: " + path.string());
    }
    out << to_json() << "\n";
}

Trace Trace::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw TraceError("cannot open trace file: " + path.string());
    }
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json(text);
}

std::string trajectory_to_json(const Trajectory& trajectory, const Shape& shape) {
    json doc;
    doc["schema_version"] = Trace::kSchemaVersion;
    doc["kind"] = "trajectory";
    doc["direction"] = trajectory.direction == Direction::inversion ? "inversion" : "sampling";
    doc["shape"] = shape;
    json entry_list = json::array();
    for (std::size_t i = 0; i < trajectory.size(); ++i) {
        entry_list.push_back({{"t", trajectory.times[i]}, {"values", trajectory.latents[i].values}});
    }
    doc["entries"] = std::move(entry_list);
    return doc.dump();
}

Trajectory trajectory_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw TraceError(std::string("malformed trajectory document: ") + e.what());
    }
    try {
        if (doc.at("schema_version").get<int>() != Trace::kSchemaVersion) {
            throw TraceError("unsupported trajectory schema version");
        }
        Trajectory trajectory;
        trajectory.direction = doc.at("direction").get<std::string>() == "inversion"
                                   ? Direction::inversion
                                   : Direction::sampling;
        const Shape shape = doc.at("shape").get<Shape>();
        for (const auto& e : doc.at("entries")) {
            trajectory.push(e.at("t").get<int>(),
                            make_latent(shape, e.at("values").get<std::vector<double>>()));
        }
        return trajectory;
    } catch (const json::exception& e) {
        throw TraceError(std::string("malformed trajectory document: ") + e.what());
    }
}

TraceRecorder::TraceRecorder(const NoisePredictor& inner, const DiffusionSchedule& schedule)
    : inner_(inner) {
    trace_.shape = inner.shape();
    trace_.total_steps = schedule.total_steps();
    trace_.beta_start = schedule.beta_start();
    trace_.beta_end = schedule.beta_end();
}

LatentArray TraceRecorder::predict(const LatentArray& z, int t, ConditionId condition) const {
    LatentArray eps = inner_.predict(z, t, condition);
    trace_.entries.push_back(TraceEntry{t, condition, eps.values});
    return eps;
}

TracePredictor::TracePredictor(Trace trace) : trace_(std::move(trace)) {}

LatentArray TracePredictor::predict(const LatentArray& z, int t, ConditionId condition) const {
    if (z.shape != trace_.shape) {
        throw TraceError("trace mismatch: query shape " + shape_to_string(z.shape) +
                         " vs recorded " + shape_to_string(trace_.shape));
    }
    if (cursor_ >= trace_.entries.size()) {
        throw TraceError("trace exhausted at call " + std::to_string(cursor_));
    }
    const TraceEntry& entry = trace_.entries[cursor_];
    if (entry.t != t || !(entry.condition == condition)) {
        throw TraceError("trace mismatch at call " + std::to_string(cursor_) + ": recorded (t=" +
                         std::to_string(entry.t) + ", c=" + std::to_string(entry.condition.raw()) +
                         "), queried (t=" + std::to_string(t) + ", c=" +
                         std::to_string(condition.raw()) + ")");
    }
    ++cursor_;
    return LatentArray(trace_.shape, entry.values);
}

}  // namespace dsi
