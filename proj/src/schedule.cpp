#include "dsi/schedule.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace dsi {

TransitionCoeffs transition_coeffs(double alpha_bar_from, double alpha_bar_to,
                                   int t_from, int t_to) {
    TransitionCoeffs c;
    c.t_from = t_from;
    c.t_to = t_to;
    c.a = std::sqrt(alpha_bar_to / alpha_bar_from);
    c.b = std::sqrt(1.0 - alpha_bar_to) -
          std::sqrt(1.0 - alpha_bar_from) * std::sqrt(alpha_bar_to) / std::sqrt(alpha_bar_from);
    return c;
}

DiffusionSchedule::DiffusionSchedule(int total_steps, double beta_start, double beta_end,
                                     std::vector<double> alpha_bar)
    : total_steps_(total_steps),
      beta_start_(beta_start),
      beta_end_(beta_end),
      alpha_bar_(std::move(alpha_bar)) {}

DiffusionSchedule DiffusionSchedule::make(int total_steps, double beta_start, double beta_end) {
    if (total_steps < 2) {
        throw std::invalid_argument("schedule needs total_steps >= 2");
    }
    if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0)) {
        throw std::invalid_argument("schedule needs 0 < beta_start <= beta_end < 1");
    }

    const double sqrt_start = std::sqrt(beta_start);
    const double sqrt_end = std::sqrt(beta_end);
    std::vector<double> alpha_bar(static_cast<std::size_t>(total_steps) + 1);
    alpha_bar[0] = 1.0;
    for (int t = 1; t <= total_steps; ++t) {
        const double frac = static_cast<double>(t - 1) / static_cast<double>(total_steps - 1);
        const double sqrt_beta = sqrt_start + frac * (sqrt_end - sqrt_start);
        const double beta = sqrt_beta * sqrt_beta;
        alpha_bar[static_cast<std::size_t>(t)] =
            alpha_bar[static_cast<std::size_t>(t - 1)] * (1.0 - beta);
    }
    return DiffusionSchedule(total_steps, beta_start, beta_end, std::move(alpha_bar));
}

double DiffusionSchedule::alpha_bar(int t) const {
    if (t < 0 || t > total_steps_) {
        throw std::out_of_range("time index " + std::to_string(t) + " outside [0, " +
                                std::to_string(total_steps_) + "]");
    }
    return alpha_bar_[static_cast<std::size_t>(t)];
}

TransitionCoeffs DiffusionSchedule::coeffs(int t_from, int t_to) const {
    if (t_from == t_to) {
        throw std::invalid_argument("transition needs t_from != t_to");
    }
    return transition_coeffs(alpha_bar(t_from), alpha_bar(t_to), t_from, t_to);
}

}  // namespace dsi
