#include "dsi/ddim.hpp"

#include <stdexcept>
#include <string>
#include <utility>

#include "dsi/kernels.hpp"

namespace dsi {

TimeGrid TimeGrid::make(int t0, int stride, int steps, int total_steps) {
    if (t0 < 1) throw std::invalid_argument("grid needs t0 >= 1");
    if (stride < 1) throw std::invalid_argument("grid needs stride >= 1");
    if (steps < 1) throw std::invalid_argument("grid needs steps >= 1");
    const long top = static_cast<long>(t0) + static_cast<long>(steps) * stride;
    if (top > total_steps) {
        throw std::invalid_argument("grid top " + std::to_string(top) + " exceeds schedule length " +
                                    std::to_string(total_steps));
    }
    TimeGrid grid;
    grid.t0 = t0;
    grid.stride = stride;
    grid.steps = steps;
    grid.times.reserve(static_cast<std::size_t>(steps) + 1);
    for (int k = 0; k <= steps; ++k) {
        grid.times.push_back(t0 + k * stride);
    }
    return grid;
}

void Trajectory::push(int t, LatentArray z) {
    times.push_back(t);
    latents.push_back(std::move(z));
}

const LatentArray& Trajectory::at_time(int t) const {
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] == t) return latents[i];
    }
    throw std::out_of_range("trajectory has no entry at t=" + std::to_string(t));
}

namespace {

LatentArray affine_step(const TransitionCoeffs& c, const LatentArray& z, const LatentArray& eps) {
    require_same_shape(z, eps, "affine step");
    LatentArray out = LatentArray::zeros(z.shape);
    kernel::affine_combine(out.view(), c.a, z.view(), c.b, eps.view());
    return out;
}

}  // namespace

LatentArray ddim_sample_step(const DiffusionSchedule& schedule, const LatentArray& z_t,
                             int t, int s, const LatentArray& eps) {
    if (t - s < 0) {
        throw std::invalid_argument("sample step underflows time: t=" + std::to_string(t) +
                                    ", s=" + std::to_string(s));
    }
    return affine_step(schedule.coeffs(t, t - s), z_t, eps);
}

LatentArray ddim_invert_step(const DiffusionSchedule& schedule, const LatentArray& z_prev,
                             int t, int s, const LatentArray& eps_at_prev) {
    if (t > schedule.total_steps()) {
        throw std::invalid_argument("invert step overflows time: t=" + std::to_string(t));
    }
    if (t - s < 0) {
        throw std::invalid_argument("invert step underflows time: t=" + std::to_string(t) +
                                    ", s=" + std::to_string(s));
    }
    return affine_step(schedule.coeffs(t - s, t), z_prev, eps_at_prev);
}

Trajectory ddim_invert_full(const DiffusionSchedule& schedule, const TimeGrid& grid,
                            const NoisePredictor& predictor, const GuidanceSpec& guidance,
                            const LatentArray& z0) {
    if (!z0.all_finite()) {
        throw std::invalid_argument("ddim_invert_full: z0 has non-finite entries");
    }
    Trajectory traj;
    traj.direction = Direction::inversion;

    // 0 -> t0 with abar_0 = 1, eps evaluated at the clean latent.
    LatentArray z = ddim_invert_step(schedule, z0, grid.t0, grid.t0,
                                     guided_predict(predictor, z0, grid.t0, guidance));
    traj.push(grid.t0, z);

    for (int k = 1; k <= grid.steps; ++k) {
        const int t = grid.times[static_cast<std::size_t>(k)];
        LatentArray eps = guided_predict(predictor, traj.latents.back(), t, guidance);
        z = ddim_invert_step(schedule, traj.latents.back(), t, grid.stride, eps);
        traj.push(t, std::move(z));
    }
    return traj;
}

Trajectory ddim_sample_full(const DiffusionSchedule& schedule, const TimeGrid& grid,
                            const NoisePredictor& predictor, const GuidanceSpec& guidance,
                            const LatentArray& z_top) {
    if (!z_top.all_finite()) {
        throw std::invalid_argument("ddim_sample_full: z_top has non-finite entries");
    }
    Trajectory traj;
    traj.direction = Direction::sampling;
    traj.push(grid.times.back(), z_top);

    for (int k = grid.steps; k >= 1; --k) {
        const int t = grid.times[static_cast<std::size_t>(k)];
        LatentArray eps = guided_predict(predictor, traj.latents.back(), t, guidance);
        LatentArray z = ddim_sample_step(schedule, traj.latents.back(), t, grid.stride, eps);
        traj.push(grid.times[static_cast<std::size_t>(k - 1)], std::move(z));
    }

    // Terminal step t0 -> 0 with eps at the t0 latent.
    LatentArray eps = guided_predict(predictor, traj.latents.back(), grid.t0, guidance);
    LatentArray z0_hat = ddim_sample_step(schedule, traj.latents.back(), grid.t0, grid.t0, eps);
    traj.push(0, std::move(z0_hat));
    return traj;
}

double ddim_roundtrip_gap(const DiffusionSchedule& schedule, const TimeGrid& grid,
                          const NoisePredictor& predictor, const GuidanceSpec& guidance,
                          const LatentArray& z0) {
    Trajectory up = ddim_invert_full(schedule, grid, predictor, guidance, z0);
    Trajectory down = ddim_sample_full(schedule, grid, predictor, guidance, up.back());
    return kernel::max_abs_diff(z0.view(), down.back().view());
}

}  // namespace dsi
