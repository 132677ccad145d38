#include "dsi/kernels.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <vector>

namespace dsi::kernel {

namespace {

// Below this size the parallel dispatch overhead dominates.
constexpr std::ptrdiff_t kParallelCutoff = 1 << 12;

// Fixed reduction block; partials are combined in block order so the result
// is independent of the thread count.
constexpr std::ptrdiff_t kBlock = 1 << 12;

}  // namespace

void affine_combine(std::span<double> out, double a, std::span<const double> x,
                    double b, std::span<const double> e) {
    assert(out.size() == x.size() && x.size() == e.size());
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static) if (n >= kParallelCutoff)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        out[i] = a * x[i] + b * e[i];
    }
}

void lerp_combine(std::span<double> out, double w, std::span<const double> c,
                  std::span<const double> u) {
    assert(out.size() == c.size() && c.size() == u.size());
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(out.size());
    const double v = 1.0 - w;
#pragma omp parallel for schedule(static) if (n >= kParallelCutoff)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        out[i] = w * c[i] + v * u[i];
    }
}

double max_abs(std::span<const double> x) {
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x.size());
    double m = 0.0;
#pragma omp parallel for schedule(static) reduction(max : m) if (n >= kParallelCutoff)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        m = std::max(m, std::fabs(x[i]));
    }
    return m;
}

double max_abs_diff(std::span<const double> x, std::span<const double> y) {
    assert(x.size() == y.size());
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x.size());
    double m = 0.0;
#pragma omp parallel for schedule(static) reduction(max : m) if (n >= kParallelCutoff)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        m = std::max(m, std::fabs(x[i] - y[i]));
    }
    return m;
}

double sum_sq_diff(std::span<const double> x, std::span<const double> y) {
    return sum_sq_scaled_diff(x, 1.0, y);
}

double sum_sq_scaled_diff(std::span<const double> x, double c, std::span<const double> y) {
    assert(x.size() == y.size());
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x.size());
    const std::ptrdiff_t nblocks = (n + kBlock - 1) / kBlock;
    if (nblocks <= 1) {
        double s = 0.0;
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            const double d = x[i] - c * y[i];
            s += d * d;
        }
        return s;
    }
    std::vector<double> partial(static_cast<std::size_t>(nblocks), 0.0);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t blk = 0; blk < nblocks; ++blk) {
        const std::ptrdiff_t lo = blk * kBlock;
        const std::ptrdiff_t hi = std::min(lo + kBlock, n);
        double s = 0.0;
        for (std::ptrdiff_t i = lo; i < hi; ++i) {
            const double d = x[i] - c * y[i];
            s += d * d;
        }
        partial[static_cast<std::size_t>(blk)] = s;
    }
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

namespace serial {

void affine_combine(std::span<double> out, double a, std::span<const double> x,
                    double b, std::span<const double> e) {
    assert(out.size() == x.size() && x.size() == e.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = a * x[i] + b * e[i];
    }
}

void lerp_combine(std::span<double> out, double w, std::span<const double> c,
                  std::span<const double> u) {
    assert(out.size() == c.size() && c.size() == u.size());
    const double v = 1.0 - w;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = w * c[i] + v * u[i];
    }
}

double max_abs(std::span<const double> x) {
    double m = 0.0;
    for (double v : x) m = std::max(m, std::fabs(v));
    return m;
}

double max_abs_diff(std::span<const double> x, std::span<const double> y) {
    assert(x.size() == y.size());
    double m = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        m = std::max(m, std::fabs(x[i] - y[i]));
    }
    return m;
}

double sum_sq_diff(std::span<const double> x, std::span<const double> y) {
    return sum_sq_scaled_diff(x, 1.0, y);
}

double sum_sq_scaled_diff(std::span<const double> x, double c, std::span<const double> y) {
    assert(x.size() == y.size());
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - c * y[i];
        s += d * d;
    }
    return s;
}

}  // namespace serial

}  // namespace dsi::kernel
