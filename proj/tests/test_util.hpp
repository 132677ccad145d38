#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "dsi/latent.hpp"

namespace dsi::test {

inline LatentArray random_latent(const Shape& shape, std::uint64_t seed, double scale = 0.5) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> values(shape_size(shape));
    for (double& v : values) v = scale * normal(rng);
    return make_latent(shape, values);
}

inline double rel_diff(double a, double b) {
    const double denom = std::max(std::fabs(a), std::fabs(b));
    return denom > 0.0 ? std::fabs(a - b) / denom : 0.0;
}

}  // namespace dsi::test
