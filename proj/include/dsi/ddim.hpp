#pragma once

#include <vector>

#include "dsi/latent.hpp"
#include "dsi/predictor.hpp"
#include "dsi/schedule.hpp"

namespace dsi {

// Strided time grid [t0, t0+s, ..., t0+steps*s]; `steps` counts the strided
// transitions, so the grid has steps+1 points. The 50-point grid
// [1, 21, ..., 981] is (t0=1, stride=20, steps=49).
struct TimeGrid {
    int t0 = 1;
    int stride = 1;
    int steps = 1;
    std::vector<int> times;

    static TimeGrid make(int t0, int stride, int steps, int total_steps);
};

enum class Direction { inversion, sampling };

// Ordered (time, latent) record of one inversion or sampling run. Times are
// strictly monotone in the stated direction; all latents share one shape.
struct Trajectory {
    Direction direction = Direction::inversion;
    std::vector<int> times;
    std::vector<LatentArray> latents;

    void push(int t, LatentArray z);
    std::size_t size() const { return latents.size(); }

    const LatentArray& front() const { return latents.front(); }
    const LatentArray& back() const { return latents.back(); }

    // Throws std::out_of_range when t is not on the trajectory.
    const LatentArray& at_time(int t) const;
};

// One sampling transition t -> t-s:  a_(t->t-s)*z_t + b_(t->t-s)*eps.
LatentArray ddim_sample_step(const DiffusionSchedule& schedule, const LatentArray& z_t,
                             int t, int s, const LatentArray& eps);

// One approximate inversion transition t-s -> t with eps evaluated at the
// lower latent:  a_(t-s->t)*z_prev + b_(t-s->t)*eps_at_prev.
LatentArray ddim_invert_step(const DiffusionSchedule& schedule, const LatentArray& z_prev,
                             int t, int s, const LatentArray& eps_at_prev);

// Full approximate inversion z_0 -> z_top up the grid. The first transition
// 0 -> t0 uses eps(z0, t0) with abar_0 = 1; every later transition
// times[k-1] -> times[k] uses eps(z_{times[k-1]}, times[k]). Returns the
// grid-time trajectory (steps+1 entries, ascending).
Trajectory ddim_invert_full(const DiffusionSchedule& schedule, const TimeGrid& grid,
                            const NoisePredictor& predictor, const GuidanceSpec& guidance,
                            const LatentArray& z0);

// Full sampling z_top -> z_0 down the grid, with eps(z_t, t) at each
// transition and a final step t0 -> 0 using eps(z_{t0}, t0). Returns the
// grid-time trajectory plus the terminal (t = 0) entry, steps+2 entries,
// descending. Classifier-free guidance is applied at every predictor call
// in both directions whenever guidance.scale != 1.
Trajectory ddim_sample_full(const DiffusionSchedule& schedule, const TimeGrid& grid,
                            const NoisePredictor& predictor, const GuidanceSpec& guidance,
                            const LatentArray& z_top);

// Max absolute elementwise difference between z0 and the result of the full
// invert-then-sample round trip.
double ddim_roundtrip_gap(const DiffusionSchedule& schedule, const TimeGrid& grid,
                          const NoisePredictor& predictor, const GuidanceSpec& guidance,
                          const LatentArray& z0);

}  // namespace dsi
