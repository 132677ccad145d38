#pragma once

#include <cstddef>
#include <span>

// Data-parallel inner loops shared by the schedulers, predictors and
// metrics. Every kernel here is bitwise deterministic regardless of thread
// count: elementwise maps write independent outputs, max-reductions are
// exact under any association, and sum-reductions use a fixed block
// decomposition whose partials are combined in block order.
//
// kernel::serial holds straightforward single-threaded counterparts, kept
// as the reference implementation for tests and for the benchmark tool.

namespace dsi::kernel {

// out[i] = a*x[i] + b*e[i] (the affine transition step).
void affine_combine(std::span<double> out, double a, std::span<const double> x,
                    double b, std::span<const double> e);

// out[i] = w*c[i] + (1-w)*u[i] (classifier-free guidance combination).
void lerp_combine(std::span<double> out, double w, std::span<const double> c,
                  std::span<const double> u);

double max_abs(std::span<const double> x);

double max_abs_diff(std::span<const double> x, std::span<const double> y);

// sum_i (x[i] - y[i])^2, fixed-block deterministic reduction.
double sum_sq_diff(std::span<const double> x, std::span<const double> y);

// sum_i (x[i] - c*y[i])^2, fixed-block deterministic reduction.
double sum_sq_scaled_diff(std::span<const double> x, double c, std::span<const double> y);

namespace serial {

void affine_combine(std::span<double> out, double a, std::span<const double> x,
                    double b, std::span<const double> e);
void lerp_combine(std::span<double> out, double w, std::span<const double> c,
                  std::span<const double> u);
double max_abs(std::span<const double> x);
double max_abs_diff(std::span<const double> x, std::span<const double> y);
double sum_sq_diff(std::span<const double> x, std::span<const double> y);
double sum_sq_scaled_diff(std::span<const double> x, double c, std::span<const double> y);

}  // namespace serial

}  // namespace dsi::kernel
