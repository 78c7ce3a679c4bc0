#include "gdl/errors.hpp"
#include "gdl/noise.hpp"
#include "gdl/stats.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace gdl;

TEST_SUITE("noise") {

TEST_CASE("transform values") {
    // Phi^{-1}(exp(-exp(-x))), computed independently.
    CHECK(gumbel_to_gaussian(0.0) == doctest::Approx(-0.3374749637642024).epsilon(1e-12));
    CHECK(gumbel_to_gaussian(-2.0) == doctest::Approx(-3.230449357452143).epsilon(1e-12));
    CHECK(gumbel_to_gaussian(3.0) == doctest::Approx(1.6588996549624664).epsilon(1e-12));
    CHECK(gumbel_to_gaussian(10.0) == doctest::Approx(3.9139517187784862).epsilon(1e-12));
    CHECK(gumbel_to_gaussian(30.0) == doctest::Approx(7.3576668150087562).epsilon(1e-12));
    CHECK(std::isfinite(gumbel_to_gaussian(60.0)));
    CHECK(gumbel_to_uniform(0.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
    CHECK(gumbel_to_uniform(3.0) == doctest::Approx(0.9514319929004534).epsilon(1e-14));
}

TEST_CASE("transforms preserve rank order") {
    Rng rng(1);
    for (int trial = 0; trial < 2000; ++trial) {
        const GumbelVector xi = sample_gumbel(rng, 6);
        const std::size_t want = argmax(xi.span());
        for (const NoiseMode m : {NoiseMode::gumbel, NoiseMode::gaussian, NoiseMode::uniform}) {
            const auto t = transform_noise(m, xi.span());
            REQUIRE(t.size() == 6);
            REQUIRE(argmax(std::span<const double>(t)) == want);
            for (std::size_t i = 0; i < 6; ++i) {
                for (std::size_t j = 0; j < 6; ++j) {
                    if (xi[i] < xi[j]) {
                        REQUIRE(t[i] <= t[j]);
                    }
                }
            }
        }
    }
    CHECK(transform_noise(NoiseMode::none, std::vector<double>{1.0, 2.0}).empty());
}

TEST_CASE("transformed draws have the target marginals") {
    Rng rng(2);
    std::vector<double> g, u;
    for (int i = 0; i < 20000; ++i) {
        g.push_back(make_noise(NoiseMode::gaussian, 1, rng)[0]);
        u.push_back(make_noise(NoiseMode::uniform, 1, rng)[0]);
    }
    CHECK(stats::ks_one_sample(g, [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }).p_value > 0.001);
    CHECK(stats::ks_one_sample(u, [](double x) { return std::clamp(x, 0.0, 1.0); }).p_value > 0.001);
}

TEST_CASE("mode names") {
    for (const NoiseMode m : {NoiseMode::gumbel, NoiseMode::gaussian, NoiseMode::uniform, NoiseMode::none}) {
        CHECK(parse_noise_mode(to_string(m)) == m);
    }
    CHECK_THROWS_AS(parse_noise_mode("laplace"), ConfigError);
    Rng rng(3);
    CHECK_THROWS_AS(make_noise(NoiseMode::gumbel, 0, rng), ContractError);
}

} // TEST_SUITE
