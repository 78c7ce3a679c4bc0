#include "gdl/gumbel.hpp"
#include "gdl/stats.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace gdl;

namespace {

// O(n^2) sup |F_n - F| evaluated on both sides of every jump.
double brute_force_d(const std::vector<double> &xs, double (*cdf)(double)) {
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (const double x : xs) {
        double at = 0.0;
        double below = 0.0;
        for (const double y : xs) {
            at += y <= x ? 1.0 : 0.0;
            below += y < x ? 1.0 : 0.0;
        }
        d = std::max({d, std::abs(at / n - cdf(x)), std::abs(below / n - cdf(x))});
    }
    return d;
}

double uniform_cdf(double x) { return std::clamp(x, 0.0, 1.0); }

} // namespace

TEST_SUITE("stats") {

TEST_CASE("kolmogorov distribution critical values") {
    CHECK(stats::kolmogorov_survival(1.3581) == doctest::Approx(0.05).epsilon(1e-3));
    CHECK(stats::kolmogorov_survival(1.6276) == doctest::Approx(0.01).epsilon(1e-3));
    CHECK(stats::kolmogorov_survival(1.9495) == doctest::Approx(0.001).epsilon(2e-3));
    CHECK(stats::kolmogorov_survival(0.0) == 1.0);
    CHECK(stats::kolmogorov_survival(0.1) == 1.0);
}

TEST_CASE("one-sample statistic matches the brute-force oracle") {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> xs(200);
        for (auto &x : xs) {
            x = rng.uniform01();
        }
        CHECK(stats::ks_one_sample(xs, uniform_cdf).statistic ==
              doctest::Approx(brute_force_d(xs, uniform_cdf)).epsilon(1e-12));
    }
}

TEST_CASE("one-sample test rejects a shifted sample") {
    Rng rng(4);
    std::vector<double> good(20000);
    std::vector<double> shifted(20000);
    for (std::size_t i = 0; i < good.size(); ++i) {
        good[i] = sample_gumbel(rng);
        shifted[i] = sample_gumbel(rng) + 0.05;
    }
    CHECK(stats::ks_one_sample(good, gumbel_cdf).p_value > 0.001);
    CHECK(stats::ks_one_sample(shifted, gumbel_cdf).p_value < 0.001);
}

TEST_CASE("two-sample statistic on a hand example") {
    const std::vector<double> a{1, 2, 3, 4};
    const std::vector<double> b{3, 4, 5, 6};
    // Empirical CDFs differ by 0.5 on [2, 3).
    CHECK(stats::ks_two_sample(a, b).statistic == doctest::Approx(0.5));
    CHECK(stats::ks_two_sample(a, a).statistic == 0.0);
}

TEST_CASE("moments and total variation") {
    const std::vector<double> xs{1, 2, 3, 4};
    const auto m = stats::moments(xs);
    CHECK(m.mean == doctest::Approx(2.5));
    CHECK(m.variance == doctest::Approx(5.0 / 3.0));
    const std::vector<double> p{0.5, 0.5, 0.0};
    const std::vector<double> q{0.25, 0.25, 0.5};
    CHECK(stats::total_variation(p, q) == doctest::Approx(0.5));
    const std::vector<std::size_t> labels{0, 1, 1, 2};
    const auto f = stats::frequencies(labels, 3);
    CHECK(f[1] == doctest::Approx(0.5));
}

} // TEST_SUITE
