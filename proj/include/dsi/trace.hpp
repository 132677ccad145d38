#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "dsi/ddim.hpp"
#include "dsi/predictor.hpp"

namespace dsi {

struct TraceEntry {
    int t = 0;
    ConditionId condition = ConditionId::unconditional();
    std::vector<double> values;
};

// An ordered record of every raw predictor evaluation in one run, together
// with the shape and schedule parameters it was produced under. Serialized
// as a single JSON document (schema_version 1); numbers survive a save/load
// round trip bit-exactly.
struct Trace {
    static constexpr int kSchemaVersion = 1;

    Shape shape;
    int total_steps = 0;
    double beta_start = 0.0;
    double beta_end = 0.0;
    std::vector<TraceEntry> entries;

    std::string to_json() const;
    static Trace from_json(const std::string& text);  // throws TraceError

    void save(const std::filesystem::path& path) const;
    static Trace load(const std::filesystem::path& path);  // throws TraceError
};

// Trajectories share the trace document layout: schema_version, shape,
// a direction marker, and (t, values) entries in run order.
std::string trajectory_to_json(const Trajectory& trajectory, const Shape& shape);
Trajectory trajectory_from_json(const std::string& text);  // throws TraceError

// Decorator that forwards to an inner predictor and appends every call to a
// trace. Appends are serialized within a single run; one run = one logical
// thread of calls.
class TraceRecorder : public NoisePredictor {
public:
    TraceRecorder(const NoisePredictor& inner, const DiffusionSchedule& schedule);

    LatentArray predict(const LatentArray& z, int t, ConditionId condition) const override;
    const Shape& shape() const override { return inner_.shape(); }

    const Trace& trace() const { return trace_; }

private:
    const NoisePredictor& inner_;
    mutable Trace trace_;
};

// Replays a recorded trace: returns the recorded eps for each
// (t, condition) key in call order, throws TraceError on any mismatch or
// when queried past the end.
class TracePredictor : public NoisePredictor {
public:
    explicit TracePredictor(Trace trace);

    LatentArray predict(const LatentArray& z, int t, ConditionId condition) const override;
    const Shape& shape() const override { return trace_.shape; }

    void rewind() const { cursor_ = 0; }
    std::size_t cursor() const { return cursor_; }

private:
    Trace trace_;
    mutable std::size_t cursor_ = 0;
};

}  // namespace dsi
