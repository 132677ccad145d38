#pragma once

#include <vector>

namespace dsi {

// Affine transition coefficients between two time indices: a step from
// t_from to t_to maps z via  z' = a*z + b*eps.
struct TransitionCoeffs {
    double a = 1.0;
    double b = 0.0;
    int t_from = 0;
    int t_to = 0;
};

// Coefficients from the cumulative signal-retention values alone:
//   a = sqrt(abar_to / abar_from)
//   b = sqrt(1 - abar_to) - sqrt(1 - abar_from) * sqrt(abar_to) / sqrt(abar_from)
// Works in both directions; a_(u->v)*a_(v->u) = 1 and b_(u->v) = -a_(u->v)*b_(v->u).
TransitionCoeffs transition_coeffs(double alpha_bar_from, double alpha_bar_to,
                                   int t_from = 0, int t_to = 0);

// The diffusion schedule: cumulative signal retention abar_t for t = 0..T,
// with abar_0 = 1 (clean data), strictly decreasing, all entries in (0, 1].
// Immutable after construction.
class DiffusionSchedule {
public:
    // Scaled-linear construction: sqrt(beta) spaced linearly from
    // sqrt(beta_start) to sqrt(beta_end) over t = 1..T and squared;
    // abar_t is the running product of (1 - beta_t).
    static DiffusionSchedule make(int total_steps, double beta_start, double beta_end);

    static DiffusionSchedule make_default() {
        return make(kDefaultTotalSteps, kDefaultBetaStart, kDefaultBetaEnd);
    }

    int total_steps() const { return total_steps_; }
    double beta_start() const { return beta_start_; }
    double beta_end() const { return beta_end_; }

    // Throws std::out_of_range unless 0 <= t <= total_steps().
    double alpha_bar(int t) const;

    // Throws std::out_of_range on bad indices, std::invalid_argument if
    // t_from == t_to.
    TransitionCoeffs coeffs(int t_from, int t_to) const;

    static constexpr int kDefaultTotalSteps = 1000;
    static constexpr double kDefaultBetaStart = 0.00085;
    static constexpr double kDefaultBetaEnd = 0.012;

private:
    DiffusionSchedule(int total_steps, double beta_start, double beta_end,
                      std::vector<double> alpha_bar);

    int total_steps_ = 0;
    double beta_start_ = 0.0;
    double beta_end_ = 0.0;
    std::vector<double> alpha_bar_;
};

}  // namespace dsi
