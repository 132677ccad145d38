#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "dsi/dualsched.hpp"
#include "dsi/errors.hpp"
#include "dsi/trace.hpp"
#include "test_util.hpp"

using namespace dsi;

namespace {

std::filesystem::path temp_path(const char* name) {
    return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("record then replay reproduces a dual round trip bitwise") {
    const Shape shape{6};
    const auto sched = DiffusionSchedule::make_default();
    const auto grid = DualTimeGrid::with_offset(1, 20, 8, 9, sched.total_steps());
    const ProceduralPredictor base(shape);
    const GuidanceSpec g{4.0, ConditionId::component(0)};
    const auto z0 = dsi::test::random_latent(shape, 99);

    TraceRecorder recorder(base, sched);
    const auto inv = dual_invert(sched, grid, recorder, g, z0);
    const auto samp = dual_sample(sched, grid, recorder, g, inv.top);

    const auto path = temp_path("dsi_trace_roundtrip.json");
    recorder.trace().save(path);
    const TracePredictor replay(Trace::load(path));

    const auto inv2 = dual_invert(sched, grid, replay, g, z0);
    const auto samp2 = dual_sample(sched, grid, replay, g, inv2.top);

    REQUIRE(inv2.trajectories.primary.size() == inv.trajectories.primary.size());
    for (std::size_t i = 0; i < inv.trajectories.primary.size(); ++i) {
        CHECK(inv2.trajectories.primary.latents[i].values ==
              inv.trajectories.primary.latents[i].values);
    }
    CHECK(samp2.z0_hat.values == samp.z0_hat.values);
    std::filesystem::remove(path);
}

TEST_CASE("trace values survive serialization bit-exactly") {
    Trace trace;
    trace.shape = {3};
    trace.total_steps = 1000;
    trace.beta_start = 0.00085;
    trace.beta_end = 0.012;
    trace.entries.push_back(
        {17, ConditionId::component(2), {0.1 + 0.2, 1.0 / 3.0, -1.2345678901234567e-7}});
    trace.entries.push_back({18, ConditionId::unconditional(), {1e300, -0.0, 5e-324}});

    const Trace back = Trace::from_json(trace.to_json());
    REQUIRE(back.entries.size() == 2);
    CHECK(back.shape == trace.shape);
    CHECK(back.total_steps == 1000);
    CHECK(back.beta_start == 0.00085);
    CHECK(back.entries[0].values == trace.entries[0].values);
    CHECK(back.entries[1].values == trace.entries[1].values);
    CHECK(back.entries[0].condition == ConditionId::component(2));
    CHECK(back.entries[1].condition == ConditionId::unconditional());
}

TEST_CASE("trajectories round-trip through the trace document layout") {
    const Shape shape{5};
    const auto sched = DiffusionSchedule::make_default();
    const auto grid = TimeGrid::make(1, 20, 6, sched.total_steps());
    const ProceduralPredictor pred(shape);
    const GuidanceSpec g{1.0, ConditionId::component(0)};
    const auto traj =
        ddim_invert_full(sched, grid, pred, g, dsi::test::random_latent(shape, 11));

    const auto back = trajectory_from_json(trajectory_to_json(traj, shape));
    CHECK(back.direction == Direction::inversion);
    REQUIRE(back.size() == traj.size());
    CHECK(back.times == traj.times);
    for (std::size_t i = 0; i < traj.size(); ++i) {
        CHECK(back.latents[i].values == traj.latents[i].values);
    }
    CHECK_THROWS_AS(trajectory_from_json("{}"), TraceError);
}

TEST_CASE("replay against a different grid reports a mismatch") {
    const Shape shape{4};
    const auto sched = DiffusionSchedule::make_default();
    const ProceduralPredictor base(shape);
    const GuidanceSpec g{1.0, ConditionId::component(0)};
    const auto z0 = dsi::test::random_latent(shape, 7);

    const auto grid = DualTimeGrid::with_offset(1, 20, 5, 9, sched.total_steps());
    TraceRecorder recorder(base, sched);
    (void)dual_invert(sched, grid, recorder, g, z0);

    const TracePredictor replay(recorder.trace());
    const auto other = DualTimeGrid::with_offset(1, 20, 5, 5, sched.total_steps());
    CHECK_THROWS_AS((void)dual_invert(sched, other, replay, g, z0), TraceError);
}

TEST_CASE("replay validates condition and shape") {
    Trace trace;
    trace.shape = {2};
    trace.total_steps = 1000;
    trace.entries.push_back({10, ConditionId::component(0), {0.5, 0.5}});
    const TracePredictor replay(trace);

    CHECK_THROWS_AS(replay.predict(dsi::test::random_latent({3}, 1), 10,
                                   ConditionId::component(0)),
                    TraceError);
    CHECK_THROWS_AS(replay.predict(dsi::test::random_latent({2}, 1), 10,
                                   ConditionId::unconditional()),
                    TraceError);
}

TEST_CASE("an exhausted trace refuses further queries") {
    Trace trace;
    trace.shape = {2};
    trace.total_steps = 1000;
    const TracePredictor replay(trace);
    CHECK_THROWS_WITH_AS(
        replay.predict(dsi::test::random_latent({2}, 1), 10, ConditionId::component(0)),
        doctest::Contains("exhausted"), TraceError);
}

TEST_CASE("malformed trace files are rejected") {
    CHECK_THROWS_AS(Trace::from_json("not json at all"), TraceError);
    CHECK_THROWS_AS(Trace::from_json("{\"schema_version\": 1}"), TraceError);
    CHECK_THROWS_AS(Trace::from_json("{\"schema_version\": 99, \"shape\": [1], "
                                     "\"schedule_params\": {\"total_steps\": 10, "
                                     "\"beta_start\": 0.1, \"beta_end\": 0.1}, \"entries\": []}"),
                    TraceError);

    // Entry length inconsistent with the declared shape.
    CHECK_THROWS_AS(Trace::from_json("{\"schema_version\": 1, \"shape\": [2], "
                                     "\"schedule_params\": {\"total_steps\": 10, "
                                     "\"beta_start\": 0.1, \"beta_end\": 0.1}, "
                                     "\"entries\": [{\"t\": 1, \"condition\": -1, "
                                     "\"values\": [0.0]}]}"),
                    TraceError);

    const auto path = temp_path("dsi_trace_missing.json");
    std::filesystem::remove(path);
    CHECK_THROWS_AS(Trace::load(path), TraceError);
}
