#include "dsi/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "dsi/kernels.hpp"

namespace dsi {

double mse(const LatentArray& x, const LatentArray& y) {
    require_same_shape(x, y, "mse");
    return kernel::sum_sq_diff(x.view(), y.view()) / static_cast<double>(x.size());
}

double psnr(const LatentArray& x, const LatentArray& y, double peak) {
    if (!(peak > 0.0)) throw std::invalid_argument("psnr needs peak > 0");
    const double m = mse(x, y);
    if (m == 0.0) return kPsnrCapDb;
    return std::min(10.0 * std::log10(peak * peak / m), kPsnrCapDb);
}

double max_abs_gap(const LatentArray& x, const LatentArray& y) {
    require_same_shape(x, y, "max_abs_gap");
    return kernel::max_abs_diff(x.view(), y.view());
}

namespace {

constexpr int kWindow = 11;
constexpr double kWindowSigma = 1.5;
constexpr double kK1 = 0.01;
constexpr double kK2 = 0.03;

// 11x11 Gaussian window, normalized to sum 1.
std::array<double, kWindow * kWindow> gaussian_window() {
    std::array<double, kWindow * kWindow> w{};
    const int half = kWindow / 2;
    double sum = 0.0;
    for (int r = 0; r < kWindow; ++r) {
        for (int c = 0; c < kWindow; ++c) {
            const double dr = r - half;
            const double dc = c - half;
            const double v = std::exp(-(dr * dr + dc * dc) / (2.0 * kWindowSigma * kWindowSigma));
            w[static_cast<std::size_t>(r * kWindow + c)] = v;
            sum += v;
        }
    }
    for (double& v : w) v /= sum;
    return w;
}

}  // namespace

double ssim(const LatentArray& x, const LatentArray& y, double dynamic_range) {
    require_same_shape(x, y, "ssim");
    if (x.rank() != 2) throw std::invalid_argument("ssim needs rank-2 inputs");
    const int rows = static_cast<int>(x.shape[0]);
    const int cols = static_cast<int>(x.shape[1]);
    if (rows < kWindow || cols < kWindow) {
        throw std::invalid_argument("ssim needs both extents >= 11");
    }
    if (!(dynamic_range > 0.0)) throw std::invalid_argument("ssim needs dynamic_range > 0");

    static const std::array<double, kWindow * kWindow> window = gaussian_window();
    const double c1 = (kK1 * dynamic_range) * (kK1 * dynamic_range);
    const double c2 = (kK2 * dynamic_range) * (kK2 * dynamic_range);

    // Valid-window convolution: windows fully inside the image.
    const int out_rows = rows - kWindow + 1;
    const int out_cols = cols - kWindow + 1;
    std::vector<double> ssim_map(static_cast<std::size_t>(out_rows) * out_cols);

    const double* xs = x.data();
    const double* ys = y.data();
#pragma omp parallel for schedule(static) if (out_rows * out_cols >= 256)
    for (int r = 0; r < out_rows; ++r) {
        for (int c = 0; c < out_cols; ++c) {
            double mx = 0.0, my = 0.0, mxx = 0.0, myy = 0.0, mxy = 0.0;
            for (int i = 0; i < kWindow; ++i) {
                for (int j = 0; j < kWindow; ++j) {
                    const double w = window[static_cast<std::size_t>(i * kWindow + j)];
                    const double xv = xs[(r + i) * cols + (c + j)];
                    const double yv = ys[(r + i) * cols + (c + j)];
                    mx += w * xv;
                    my += w * yv;
                    mxx += w * xv * xv;
                    myy += w * yv * yv;
                    mxy += w * xv * yv;
                }
            }
            const double vx = mxx - mx * mx;
            const double vy = myy - my * my;
            const double cov = mxy - mx * my;
            const double value = ((2.0 * mx * my + c1) * (2.0 * cov + c2)) /
                                 ((mx * mx + my * my + c1) * (vx + vy + c2));
            ssim_map[static_cast<std::size_t>(r * out_cols + c)] = value;
        }
    }

    double sum = 0.0;
    for (double v : ssim_map) sum += v;
    return sum / static_cast<double>(ssim_map.size());
}

MetricReport compare(const LatentArray& x, const LatentArray& y, double peak) {
    MetricReport report;
    report.mse = mse(x, y);
    report.psnr_db = psnr(x, y, peak);
    report.max_abs_gap = max_abs_gap(x, y);
    if (x.rank() == 2 && x.shape[0] >= kWindow && x.shape[1] >= kWindow) {
        report.ssim = ssim(x, y, peak);
    }
    return report;
}

}  // namespace dsi
