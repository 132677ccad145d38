#include "dsi/dualsched.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "dsi/kernels.hpp"
#include "dsi/metrics.hpp"

namespace dsi {

namespace {

DualTimeGrid build_grid(int t0, int stride, int steps, int aux_offset, int total_steps) {
    if (t0 < 1) throw std::invalid_argument("grid needs t0 >= 1");
    if (stride < 2) {
        throw std::invalid_argument("dual grid needs stride >= 2 to fit an auxiliary offset");
    }
    if (steps < 1) throw std::invalid_argument("grid needs steps >= 1");
    if (aux_offset < 1 || aux_offset > stride - 1) {
        throw std::invalid_argument("auxiliary offset " + std::to_string(aux_offset) +
                                    " outside [1, stride-1]");
    }
    const long top = static_cast<long>(t0) + static_cast<long>(steps) * stride;
    if (top > total_steps) {
        throw std::invalid_argument("grid top " + std::to_string(top) + " exceeds schedule length " +
                                    std::to_string(total_steps));
    }

    DualTimeGrid grid;
    grid.t0 = t0;
    grid.stride = stride;
    grid.steps = steps;
    grid.aux_offset = aux_offset;
    grid.primary_times.reserve(static_cast<std::size_t>(steps) + 1);
    grid.auxiliary_times.reserve(static_cast<std::size_t>(steps));
    for (int k = 0; k <= steps; ++k) {
        grid.primary_times.push_back(t0 + k * stride);
        if (k < steps) grid.auxiliary_times.push_back(t0 + k * stride + aux_offset);
    }
    return grid;
}

LatentArray affine_step(const TransitionCoeffs& c, const LatentArray& z, const LatentArray& eps) {
    require_same_shape(z, eps, "affine step");
    LatentArray out = LatentArray::zeros(z.shape);
    kernel::affine_combine(out.view(), c.a, z.view(), c.b, eps.view());
    return out;
}

GridGap gap_at(int t, const LatentArray& sampled, const LatentArray& inverted) {
    GridGap g;
    g.t = t;
    g.abs_gap = kernel::max_abs_diff(sampled.view(), inverted.view());
    const double magnitude = kernel::max_abs(inverted.view());
    g.rel_gap = magnitude > 0.0 ? g.abs_gap / magnitude : g.abs_gap;
    return g;
}

}  // namespace

DualTimeGrid DualTimeGrid::make(int t0, int stride, int steps, double tau_fraction,
                                int total_steps) {
    if (!(tau_fraction > 0.0) || !(tau_fraction < 1.0)) {
        throw std::invalid_argument("tau_fraction must lie strictly in (0, 1)");
    }
    if (stride < 2) {
        throw std::invalid_argument("dual grid needs stride >= 2 to fit an auxiliary offset");
    }
    const int rounded = static_cast<int>(std::lround(tau_fraction * stride));
    const int delta = std::clamp(rounded, 1, stride - 1);
    return build_grid(t0, stride, steps, delta, total_steps);
}

DualTimeGrid DualTimeGrid::with_offset(int t0, int stride, int steps, int aux_offset,
                                       int total_steps) {
    return build_grid(t0, stride, steps, aux_offset, total_steps);
}

TimeGrid DualTimeGrid::primary_grid() const {
    TimeGrid g;
    g.t0 = t0;
    g.stride = stride;
    g.steps = steps;
    g.times = primary_times;
    return g;
}

DualState init_latents(const DiffusionSchedule& schedule, const DualTimeGrid& grid,
                       const NoisePredictor& predictor, const GuidanceSpec& guidance,
                       const LatentArray& z0) {
    if (!z0.all_finite()) {
        throw std::invalid_argument("init_latents: z0 has non-finite entries");
    }
    const int tp = grid.primary_times.front();
    const int ta = grid.auxiliary_times.front();

    DualState state;
    state.k = 0;
    state.z_primary = affine_step(schedule.coeffs(0, tp), z0,
                                  guided_predict(predictor, z0, tp, guidance));
    state.z_aux = affine_step(schedule.coeffs(0, ta), z0,
                              guided_predict(predictor, z0, ta, guidance));
    return state;
}

InversionResult dual_invert(const DiffusionSchedule& schedule, const DualTimeGrid& grid,
                            const NoisePredictor& predictor, const GuidanceSpec& guidance,
                            const LatentArray& z0) {
    const auto& P = grid.primary_times;
    const auto& A = grid.auxiliary_times;

    InversionResult result;
    result.trajectories.primary.direction = Direction::inversion;
    result.trajectories.auxiliary.direction = Direction::inversion;

    DualState state = init_latents(schedule, grid, predictor, guidance, z0);
    result.trajectories.primary.push(P[0], state.z_primary);
    result.trajectories.auxiliary.push(A[0], state.z_aux);

    for (int k = 1; k <= grid.steps; ++k) {
        const std::size_t ku = static_cast<std::size_t>(k);
        // Primary ascends P[k-1] -> P[k], driven by eps at the auxiliary
        // point one interval below.
        LatentArray eps_aux = guided_predict(predictor, state.z_aux, A[ku - 1], guidance);
        state.z_primary = affine_step(schedule.coeffs(P[ku - 1], P[ku]), state.z_primary, eps_aux);
        result.trajectories.primary.push(P[ku], state.z_primary);

        // Auxiliary ascends A[k-1] -> A[k], driven by eps at the primary
        // point just produced.
        if (k <= grid.steps - 1) {
            LatentArray eps_pri = guided_predict(predictor, state.z_primary, P[ku], guidance);
            state.z_aux = affine_step(schedule.coeffs(A[ku - 1], A[ku]), state.z_aux, eps_pri);
            result.trajectories.auxiliary.push(A[ku], state.z_aux);
        }
        state.k = k;
    }

    result.top = std::move(state);
    return result;
}

SamplingResult dual_sample(const DiffusionSchedule& schedule, const DualTimeGrid& grid,
                           const NoisePredictor& predictor, const GuidanceSpec& guidance,
                           const DualState& top) {
    const auto& P = grid.primary_times;
    const auto& A = grid.auxiliary_times;
    require_same_shape(top.z_primary, top.z_aux, "dual_sample");
    if (!top.z_primary.all_finite() || !top.z_aux.all_finite()) {
        throw std::invalid_argument("dual_sample: top state has non-finite entries");
    }

    SamplingResult result;
    result.trajectories.primary.direction = Direction::sampling;
    result.trajectories.auxiliary.direction = Direction::sampling;

    LatentArray z_primary = top.z_primary;
    LatentArray z_aux = top.z_aux;
    result.trajectories.primary.push(P.back(), z_primary);
    result.trajectories.auxiliary.push(A.back(), z_aux);

    for (int k = grid.steps; k >= 1; --k) {
        const std::size_t ku = static_cast<std::size_t>(k);
        // Primary descends P[k] -> P[k-1]; the auxiliary latent at A[k-1]
        // supplies the shared eps, so this transition inverts the
        // corresponding inversion update exactly.
        LatentArray eps_aux = guided_predict(predictor, z_aux, A[ku - 1], guidance);
        z_primary = affine_step(schedule.coeffs(P[ku], P[ku - 1]), z_primary, eps_aux);
        result.trajectories.primary.push(P[ku - 1], z_primary);

        if (k >= 2) {
            LatentArray eps_pri = guided_predict(predictor, z_primary, P[ku - 1], guidance);
            z_aux = affine_step(schedule.coeffs(A[ku - 1], A[ku - 2]), z_aux, eps_pri);
            result.trajectories.auxiliary.push(A[ku - 2], z_aux);
        }
    }

    // Terminal step P[0] -> 0. eps is evaluated at the sampled latent (z0
    // itself is unknown here), the one transition without a shared eps.
    LatentArray eps = guided_predict(predictor, z_primary, P[0], guidance);
    result.z0_hat = affine_step(schedule.coeffs(P[0], 0), z_primary, eps);
    return result;
}

RoundTripReport dual_roundtrip(const DiffusionSchedule& schedule, const DualTimeGrid& grid,
                               const NoisePredictor& predictor, const GuidanceSpec& guidance,
                               const LatentArray& z0) {
    InversionResult inv = dual_invert(schedule, grid, predictor, guidance, z0);
    SamplingResult samp = dual_sample(schedule, grid, predictor, guidance, inv.top);

    RoundTripReport report;
    report.z0_hat = samp.z0_hat;

    const auto& P = grid.primary_times;
    const auto& A = grid.auxiliary_times;
    for (std::size_t k = 0; k < P.size(); ++k) {
        report.grid_gaps.push_back(gap_at(P[k],
                                          samp.trajectories.primary.at_time(P[k]),
                                          inv.trajectories.primary.at_time(P[k])));
    }
    for (std::size_t k = 0; k < A.size(); ++k) {
        report.grid_gaps.push_back(gap_at(A[k],
                                          samp.trajectories.auxiliary.at_time(A[k]),
                                          inv.trajectories.auxiliary.at_time(A[k])));
    }
    for (const GridGap& g : report.grid_gaps) {
        report.max_grid_gap_abs = std::max(report.max_grid_gap_abs, g.abs_gap);
        report.max_grid_gap_rel = std::max(report.max_grid_gap_rel, g.rel_gap);
    }

    report.z0_max_abs_gap = max_abs_gap(z0, samp.z0_hat);
    report.z0_mse = mse(z0, samp.z0_hat);
    report.z0_psnr_db = psnr(z0, samp.z0_hat);
    return report;
}

LatentArray edit_by_prompt_swap(const DiffusionSchedule& schedule, const DualTimeGrid& grid,
                                const NoisePredictor& predictor, const GuidanceSpec& guidance_src,
                                const GuidanceSpec& guidance_tgt, const LatentArray& z0) {
    InversionResult inv = dual_invert(schedule, grid, predictor, guidance_src, z0);
    return dual_sample(schedule, grid, predictor, guidance_tgt, inv.top).z0_hat;
}

LatentArray endpoint_roundtrip(const DiffusionSchedule& schedule, const DualTimeGrid& grid,
                               const NoisePredictor& predictor, const GuidanceSpec& guidance,
                               const LatentArray& z0) {
    const int t0 = grid.primary_times.front();
    LatentArray z_t0 = affine_step(schedule.coeffs(0, t0), z0,
                                   guided_predict(predictor, z0, t0, guidance));
    LatentArray eps = guided_predict(predictor, z_t0, t0, guidance);
    return affine_step(schedule.coeffs(t0, 0), z_t0, eps);
}

}  // namespace dsi
