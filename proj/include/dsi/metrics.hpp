#pragma once

#include <optional>

#include "dsi/latent.hpp"

namespace dsi {

// PSNR reported for identical inputs (mse == 0).
inline constexpr double kPsnrCapDb = 300.0;

// Default peak for data normalized to [-1, 1].
inline constexpr double kDefaultPeak = 2.0;

struct MetricReport {
    double mse = 0.0;
    double psnr_db = kPsnrCapDb;
    double max_abs_gap = 0.0;
    std::optional<double> ssim;  // rank-2 inputs with both extents >= 11 only
};

// Mean of squared elementwise differences.
double mse(const LatentArray& x, const LatentArray& y);

// 10*log10(peak^2 / mse), capped at kPsnrCapDb when mse == 0.
double psnr(const LatentArray& x, const LatentArray& y, double peak = kDefaultPeak);

double max_abs_gap(const LatentArray& x, const LatentArray& y);

// Standard SSIM over 11x11 Gaussian windows (sigma = 1.5, K1 = 0.01,
// K2 = 0.03), valid-window convolution (no padding), mean over window
// positions. Requires rank-2 inputs with both extents >= 11.
double ssim(const LatentArray& x, const LatentArray& y, double dynamic_range = kDefaultPeak);

// mse/psnr/max-gap always; ssim when the inputs support it.
MetricReport compare(const LatentArray& x, const LatentArray& y, double peak = kDefaultPeak);

}  // namespace dsi
