#pragma once

#include <utility>
#include <vector>

#include "dsi/ddim.hpp"
#include "dsi/latent.hpp"
#include "dsi/predictor.hpp"
#include "dsi/schedule.hpp"

namespace dsi {

// Grid reversibility bound: max grid-time gap between the inversion and
// sampling trajectories, relative to latent magnitude. The traversal is
// exact in exact arithmetic; the residue is ~100x accumulated f64 rounding
// over <= 101 affine steps.
inline constexpr double kGridGapRelTolerance = 1e-9;

// Paired primary/auxiliary time grids. Primary: [t0, t0+s, ..., t0+steps*s]
// (steps+1 points). Auxiliary: primary + delta with 0 < delta < s, one point
// per primary transition (steps points), interleaving strictly between
// consecutive primary times.
struct DualTimeGrid {
    int t0 = 1;
    int stride = 1;
    int steps = 1;
    int aux_offset = 1;  // delta
    std::vector<int> primary_times;
    std::vector<int> auxiliary_times;

    // delta = round(tau_fraction * stride) clamped to [1, stride-1].
    static DualTimeGrid make(int t0, int stride, int steps, double tau_fraction,
                             int total_steps);

    // Direct delta override, e.g. delta = 9 reproduces the auxiliary grid
    // [10, 30, ..., 970] next to the primary [1, 21, ..., 981].
    static DualTimeGrid with_offset(int t0, int stride, int steps, int aux_offset,
                                    int total_steps);

    TimeGrid primary_grid() const;
};

// The paired latents at grid index k: z_primary at primary_times[k] and
// z_aux at auxiliary_times[min(k, steps-1)].
struct DualState {
    LatentArray z_primary;
    LatentArray z_aux;
    int k = 0;
};

struct DualTrajectories {
    Trajectory primary;
    Trajectory auxiliary;
};

struct InversionResult {
    DualState top;  // z_primary at P[steps], z_aux at A[steps-1]
    DualTrajectories trajectories;
};

struct SamplingResult {
    LatentArray z0_hat;
    DualTrajectories trajectories;  // grid times only; z0_hat carries t = 0
};

struct GridGap {
    int t = 0;
    double abs_gap = 0.0;
    double rel_gap = 0.0;
};

struct RoundTripReport {
    LatentArray z0_hat;
    std::vector<GridGap> grid_gaps;  // every primary and auxiliary time
    double max_grid_gap_abs = 0.0;
    double max_grid_gap_rel = 0.0;
    double z0_max_abs_gap = 0.0;
    double z0_mse = 0.0;
    double z0_psnr_db = 0.0;
};

// Base case of the induction: z_primary at t0 and z_aux at t0+delta, each by
// one forward (inversion-style) step from z0 with abar_0 = 1, using
// eps(z0, t0) and eps(z0, t0+delta) respectively.
DualState init_latents(const DiffusionSchedule& schedule, const DualTimeGrid& grid,
                       const NoisePredictor& predictor, const GuidanceSpec& guidance,
                       const LatentArray& z0);

// Dual-schedule inversion: for k = 1..steps the primary latent advances
// P[k-1] -> P[k] driven by eps at the auxiliary point A[k-1], then (while
// k <= steps-1) the auxiliary latent advances A[k-1] -> A[k] driven by eps
// at the primary point P[k].
InversionResult dual_invert(const DiffusionSchedule& schedule, const DualTimeGrid& grid,
                            const NoisePredictor& predictor, const GuidanceSpec& guidance,
                            const LatentArray& z0);

// Dual-schedule sampling, the exact mirror: for k = steps..1 the primary
// latent descends P[k] -> P[k-1] driven by eps at A[k-1], then (while
// k >= 2) the auxiliary latent descends A[k-1] -> A[k-2] driven by eps at
// P[k-1]. A final step P[0] -> 0 with eps(z_primary, P[0]) produces z0_hat;
// that terminal step is the only approximate one.
SamplingResult dual_sample(const DiffusionSchedule& schedule, const DualTimeGrid& grid,
                           const NoisePredictor& predictor, const GuidanceSpec& guidance,
                           const DualState& top);

// Invert then sample under one guidance spec; reports the gap between the
// two trajectories at every grid time, plus the z0 reconstruction metrics.
RoundTripReport dual_roundtrip(const DiffusionSchedule& schedule, const DualTimeGrid& grid,
                               const NoisePredictor& predictor, const GuidanceSpec& guidance,
                               const LatentArray& z0);

// Invert under the source prompt, sample under the target prompt. With
// equal prompts this is bitwise-identical to dual_roundtrip's
// reconstruction (same code path).
LatentArray edit_by_prompt_swap(const DiffusionSchedule& schedule, const DualTimeGrid& grid,
                                const NoisePredictor& predictor, const GuidanceSpec& guidance_src,
                                const GuidanceSpec& guidance_tgt, const LatentArray& z0);

// The endpoint-only transform z0 -> z_{t0} -> z0_hat (init step followed
// immediately by the terminal step, no grid traversal). This isolates the
// one approximate step shared by every dual round trip and serves as the
// reconstruction upper-bound control.
LatentArray endpoint_roundtrip(const DiffusionSchedule& schedule, const DualTimeGrid& grid,
                               const NoisePredictor& predictor, const GuidanceSpec& guidance,
                               const LatentArray& z0);

}  // namespace dsi
