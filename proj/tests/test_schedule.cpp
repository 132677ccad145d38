#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <random>

#include "dsi/schedule.hpp"
#include "test_util.hpp"

using namespace dsi;

TEST_CASE("constant-beta schedule gives the plain cumulative product") {
    const auto sched = DiffusionSchedule::make(2, 0.5, 0.5);
    CHECK(sched.alpha_bar(0) == 1.0);
    // sqrt-space interpolation costs one rounding trip even for constant beta.
    CHECK(sched.alpha_bar(1) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(sched.alpha_bar(2) == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("default schedule endpoints") {
    const auto sched = DiffusionSchedule::make_default();
    CHECK(sched.alpha_bar(0) == 1.0);
    CHECK(sched.alpha_bar(1) == 1.0 - 0.00085);

    // Terminal value frozen from an independent cumulative-product oracle
    // run in a scripting scratchpad.
    CHECK(sched.alpha_bar(1000) ==
          doctest::Approx(0.004660098513077238).epsilon(1e-13));
    CHECK(sched.alpha_bar(1000) < 0.01);
}

TEST_CASE("default schedule matches a long-double cumulative-product oracle") {
    const int total = 1000;
    const auto sched = DiffusionSchedule::make(total, 0.00085, 0.012);
    const long double s0 = std::sqrt(0.00085L);
    const long double s1 = std::sqrt(0.012L);
    long double prod = 1.0L;
    for (int t = 1; t <= total; ++t) {
        const long double sq = s0 + (s1 - s0) * (t - 1) / (total - 1);
        prod *= 1.0L - sq * sq;
        CHECK(sched.alpha_bar(t) ==
              doctest::Approx(static_cast<double>(prod)).epsilon(1e-12));
    }
}

TEST_CASE("schedule construction rejects bad parameters") {
    CHECK_THROWS_AS(DiffusionSchedule::make(1, 0.001, 0.01), std::invalid_argument);
    CHECK_THROWS_AS(DiffusionSchedule::make(10, 0.0, 0.01), std::invalid_argument);
    CHECK_THROWS_AS(DiffusionSchedule::make(10, 0.02, 0.01), std::invalid_argument);
    CHECK_THROWS_AS(DiffusionSchedule::make(10, 0.001, 1.0), std::invalid_argument);
    const auto sched = DiffusionSchedule::make_default();
    CHECK_THROWS_AS(sched.alpha_bar(-1), std::out_of_range);
    CHECK_THROWS_AS(sched.alpha_bar(1001), std::out_of_range);
    CHECK_THROWS_AS(sched.coeffs(5, 5), std::invalid_argument);
    CHECK_THROWS_AS(sched.coeffs(0, 1001), std::out_of_range);
}

TEST_CASE("degenerate equal-retention transition is the identity") {
    const auto c = transition_coeffs(0.42, 0.42);
    CHECK(c.a == 1.0);
    CHECK(c.b == 0.0);
}

TEST_CASE("coefficients match the direct formula on a known pair") {
    // a_from = 0.99915 (= abar_1 of the default schedule), a_to = 0.25.
    const auto c = transition_coeffs(0.99915, 0.25);
    const double a_expected = std::sqrt(0.25 / 0.99915);
    const double b_expected =
        std::sqrt(0.75) - std::sqrt(1.0 - 0.99915) * std::sqrt(0.25) / std::sqrt(0.99915);
    CHECK(c.a == a_expected);
    CHECK(c.b == b_expected);
    // Values frozen from a scratchpad evaluation of the same formula.
    CHECK(c.a == doctest::Approx(0.5002126355647785).epsilon(1e-15));
    CHECK(c.b == doctest::Approx(0.8514418247085784).epsilon(1e-15));
}

TEST_CASE("reciprocity identities over random index pairs") {
    const auto sched = DiffusionSchedule::make_default();
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<int> pick(0, sched.total_steps());
    for (int trial = 0; trial < 2000; ++trial) {
        const int u = pick(rng);
        int v = pick(rng);
        if (u == v) v = (v + 1) % (sched.total_steps() + 1);
        const auto fwd = sched.coeffs(u, v);
        const auto bwd = sched.coeffs(v, u);
        CHECK(std::fabs(fwd.a * bwd.a - 1.0) <= 1e-12);
        CHECK(std::fabs(fwd.b + fwd.a * bwd.b) <= 1e-12);
    }
}

TEST_CASE("transition composition is associative with a shared noise value") {
    const auto sched = DiffusionSchedule::make_default();
    std::mt19937_64 rng(121);
    std::uniform_int_distribution<int> pick(0, sched.total_steps());
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int trial = 0; trial < 500; ++trial) {
        int u = pick(rng), v = pick(rng), w = pick(rng);
        if (u == v || v == w || u == w) continue;
        const double z = normal(rng);
        const double eps = normal(rng);
        const auto uv = sched.coeffs(u, v);
        const auto vw = sched.coeffs(v, w);
        const auto uw = sched.coeffs(u, w);
        const double via = vw.a * (uv.a * z + uv.b * eps) + vw.b * eps;
        const double direct = uw.a * z + uw.b * eps;
        CHECK(dsi::test::rel_diff(via, direct) <= 1e-10);
    }
}

TEST_CASE("randomized parameter sweep keeps the schedule monotone and in range") {
    std::mt19937_64 rng(31337);
    std::uniform_real_distribution<double> beta_lo(1e-5, 0.02);
    std::uniform_real_distribution<double> beta_span(0.0, 0.05);
    std::uniform_int_distribution<int> steps(2, 400);
    for (int trial = 0; trial < 50; ++trial) {
        const double start = beta_lo(rng);
        const double end = start + beta_span(rng);
        const int total = steps(rng);
        const auto sched = DiffusionSchedule::make(total, start, end);
        CHECK(sched.alpha_bar(0) == 1.0);
        for (int t = 1; t <= total; ++t) {
            CHECK(sched.alpha_bar(t) < sched.alpha_bar(t - 1));
            CHECK(sched.alpha_bar(t) > 0.0);
            CHECK(sched.alpha_bar(t) <= 1.0);
        }
    }
}
