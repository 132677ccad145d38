#include <doctest.h>

#include <stdexcept>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "dsi/metrics.hpp"
#include "test_util.hpp"

using namespace dsi;

namespace {

// Naive double-loop SSIM reference: per window, Gaussian-weighted means
// first, then explicit weighted central moments.
double naive_ssim(const LatentArray& x, const LatentArray& y, double range) {
    const int rows = static_cast<int>(x.shape[0]);
    const int cols = static_cast<int>(x.shape[1]);
    const int win = 11;
    const double sigma = 1.5;
    std::vector<double> w(win * win);
    double wsum = 0.0;
    for (int i = 0; i < win; ++i) {
        for (int j = 0; j < win; ++j) {
            const double di = i - 5, dj = j - 5;
            w[static_cast<std::size_t>(i * win + j)] =
                std::exp(-(di * di + dj * dj) / (2.0 * sigma * sigma));
            wsum += w[static_cast<std::size_t>(i * win + j)];
        }
    }
    for (double& v : w) v /= wsum;

    const double c1 = (0.01 * range) * (0.01 * range);
    const double c2 = (0.03 * range) * (0.03 * range);
    double total = 0.0;
    int count = 0;
    for (int r = 0; r + win <= rows; ++r) {
        for (int c = 0; c + win <= cols; ++c) {
            double mx = 0.0, my = 0.0;
            for (int i = 0; i < win; ++i) {
                for (int j = 0; j < win; ++j) {
                    const double wij = w[static_cast<std::size_t>(i * win + j)];
                    mx += wij * x.values[static_cast<std::size_t>((r + i) * cols + c + j)];
                    my += wij * y.values[static_cast<std::size_t>((r + i) * cols + c + j)];
                }
            }
            double vx = 0.0, vy = 0.0, cov = 0.0;
            for (int i = 0; i < win; ++i) {
                for (int j = 0; j < win; ++j) {
                    const double wij = w[static_cast<std::size_t>(i * win + j)];
                    const double dx =
                        x.values[static_cast<std::size_t>((r + i) * cols + c + j)] - mx;
                    const double dy =
                        y.values[static_cast<std::size_t>((r + i) * cols + c + j)] - my;
                    vx += wij * dx * dx;
                    vy += wij * dy * dy;
                    cov += wij * dx * dy;
                }
            }
            total += ((2.0 * mx * my + c1) * (2.0 * cov + c2)) /
                     ((mx * mx + my * my + c1) * (vx + vy + c2));
            ++count;
        }
    }
    return total / count;
}

}  // namespace

TEST_CASE("mse basics") {
    const auto x = make_latent({2}, {0.0, 0.0});
    const auto y = make_latent({2}, {2.0, 2.0});
    CHECK(mse(x, x) == 0.0);
    CHECK(mse(x, y) == 4.0);
    CHECK_THROWS_AS(mse(x, make_latent({3}, {1, 2, 3})), std::invalid_argument);
}

TEST_CASE("mse matches a brute-force loop on random input") {
    const auto x = dsi::test::random_latent({16, 13}, 3);
    const auto y = dsi::test::random_latent({16, 13}, 4);
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x.values[i] - y.values[i];
        acc += d * d;
    }
    CHECK(mse(x, y) == doctest::Approx(acc / x.size()).epsilon(1e-14));
}

TEST_CASE("psnr endpoints") {
    const auto x = make_latent({4}, {0.1, 0.2, 0.3, 0.4});
    CHECK(psnr(x, x) == 300.0);

    // mse == peak^2 gives exactly 0 dB.
    const auto zero = LatentArray::zeros({1});
    const auto two = make_latent({1}, {2.0});
    CHECK(psnr(zero, two, 2.0) == doctest::Approx(0.0).epsilon(1e-15));

    // mse = 0.01 at peak 2: 10*log10(400).
    const auto a = LatentArray::zeros({1});
    const auto b = make_latent({1}, {0.1});
    CHECK(psnr(a, b, 2.0) == doctest::Approx(26.020599913279625).epsilon(1e-14));

    CHECK_THROWS_AS(psnr(x, x, 0.0), std::invalid_argument);
}

TEST_CASE("psnr decreases as mse grows") {
    const auto x = LatentArray::zeros({8});
    double prev = 1e9;
    for (double level : {0.01, 0.05, 0.2, 0.9}) {
        const auto y = make_latent({8}, std::vector<double>(8, level));
        const double p = psnr(x, y);
        CHECK(p < prev);
        prev = p;
    }
}

TEST_CASE("identical inputs give ssim 1") {
    const auto x = dsi::test::random_latent({16, 16}, 5);
    CHECK(ssim(x, x) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("anticorrelated structure gives negative ssim") {
    // Zero mean at window scale, so the luminance term stays positive and
    // the negated covariance drives the sign.
    std::vector<double> values(16 * 16);
    for (int r = 0; r < 16; ++r) {
        for (int c = 0; c < 16; ++c) {
            values[static_cast<std::size_t>(r * 16 + c)] = 0.3 * std::sin(2.2 * r + 1.3 * c);
        }
    }
    const auto x = make_latent({16, 16}, values);
    auto y = x;
    for (double& v : y.values) v = -v;
    CHECK(ssim(x, y) < 0.0);
}

TEST_CASE("ssim matches the naive double-loop reference") {
    const auto x = dsi::test::random_latent({16, 16}, 7, 0.4);
    auto y = x;
    std::mt19937_64 rng(8);
    std::normal_distribution<double> noise(0.0, 0.1);
    for (double& v : y.values) v += noise(rng);
    CHECK(ssim(x, y) == doctest::Approx(naive_ssim(x, y, 2.0)).epsilon(1e-10));
    CHECK(ssim(x, y, 1.0) == doctest::Approx(naive_ssim(x, y, 1.0)).epsilon(1e-10));
}

TEST_CASE("ssim is symmetric") {
    const auto x = dsi::test::random_latent({12, 18}, 9, 0.4);
    const auto y = dsi::test::random_latent({12, 18}, 10, 0.4);
    CHECK(ssim(x, y) == doctest::Approx(ssim(y, x)).epsilon(1e-12));
}

TEST_CASE("ssim input validation") {
    const auto small = dsi::test::random_latent({8, 8}, 11);
    CHECK_THROWS_AS(ssim(small, small), std::invalid_argument);
    const auto rank1 = dsi::test::random_latent({32}, 12);
    CHECK_THROWS_AS(ssim(rank1, rank1), std::invalid_argument);
}

TEST_CASE("elementwise metrics are permutation invariant") {
    const auto x = dsi::test::random_latent({64}, 13);
    const auto y = dsi::test::random_latent({64}, 14);
    std::vector<std::size_t> perm(64);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), std::mt19937_64(15));
    std::vector<double> xp(64), yp(64);
    for (std::size_t i = 0; i < 64; ++i) {
        xp[i] = x.values[perm[i]];
        yp[i] = y.values[perm[i]];
    }
    const auto xs = make_latent({64}, xp);
    const auto ys = make_latent({64}, yp);
    CHECK(mse(xs, ys) == doctest::Approx(mse(x, y)).epsilon(1e-13));
    CHECK(psnr(xs, ys) == doctest::Approx(psnr(x, y)).epsilon(1e-13));
    CHECK(max_abs_gap(xs, ys) == max_abs_gap(x, y));
}

TEST_CASE("ssim is invariant under a rigid shift of both inputs") {
    // Embed the same pattern pair at two offsets of a larger canvas and crop.
    const int canvas = 26, size = 16;
    const auto px = dsi::test::random_latent({size, size}, 16, 0.4);
    const auto py = dsi::test::random_latent({size, size}, 17, 0.4);

    auto embed_crop = [&](const LatentArray& p, int dr, int dc) {
        std::vector<double> full(canvas * canvas, 0.0);
        for (int r = 0; r < size; ++r) {
            for (int c = 0; c < size; ++c) {
                full[static_cast<std::size_t>((r + dr) * canvas + c + dc)] =
                    p.values[static_cast<std::size_t>(r * size + c)];
            }
        }
        std::vector<double> crop(size * size);
        for (int r = 0; r < size; ++r) {
            for (int c = 0; c < size; ++c) {
                crop[static_cast<std::size_t>(r * size + c)] =
                    full[static_cast<std::size_t>((r + dr) * canvas + c + dc)];
            }
        }
        return make_latent({size, size}, crop);
    };

    const double base = ssim(embed_crop(px, 0, 0), embed_crop(py, 0, 0));
    const double moved = ssim(embed_crop(px, 7, 4), embed_crop(py, 7, 4));
    CHECK(base == doctest::Approx(moved).epsilon(1e-13));
}

TEST_CASE("compare fills the full report") {
    const auto x = dsi::test::random_latent({16, 16}, 18, 0.4);
    auto y = x;
    y.values[0] += 0.25;
    const auto report = compare(x, y);
    CHECK(report.mse > 0.0);
    CHECK(report.max_abs_gap == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(report.ssim.has_value());
    CHECK(*report.ssim < 1.0);
    CHECK(report.psnr_db < kPsnrCapDb);

    const auto r1 = compare(x, x);
    CHECK(r1.mse == 0.0);
    CHECK(r1.psnr_db == kPsnrCapDb);
    CHECK(r1.max_abs_gap == 0.0);

    const auto vec = dsi::test::random_latent({16}, 19);
    CHECK_FALSE(compare(vec, vec).ssim.has_value());
}
