#include "gdl/noise.hpp"

#include "gdl/errors.hpp"

#include <boost/math/distributions/normal.hpp>

#include <cmath>

namespace gdl {

NoiseMode parse_noise_mode(std::string_view s) {
    if (s == "gumbel") {
        return NoiseMode::gumbel;
    }
    if (s == "gaussian") {
        return NoiseMode::gaussian;
    }
    if (s == "uniform") {
        return NoiseMode::uniform;
    }
    if (s == "none") {
        return NoiseMode::none;
    }
    throw ConfigError("unknown noise mode '" + std::string(s) + "' (expected gumbel, gaussian, uniform or none)");
}

const char *to_string(NoiseMode m) {
    switch (m) {
    case NoiseMode::gumbel:
        return "gumbel";
    case NoiseMode::gaussian:
        return "gaussian";
    case NoiseMode::uniform:
        return "uniform";
    case NoiseMode::none:
        return "none";
    }
    return "?";
}

double gumbel_to_gaussian(double xi) {
    static const boost::math::normal_distribution<double> normal;
    if (xi > 0.0) {
        const double upper = -std::expm1(-std::exp(-xi)); // 1 - F(xi)
        return boost::math::quantile(boost::math::complement(normal, upper));
    }
    return boost::math::quantile(normal, gumbel_cdf(xi));
}

double gumbel_to_uniform(double xi) { return gumbel_cdf(xi); }

std::vector<double> transform_noise(NoiseMode mode, std::span<const double> xi) {
    std::vector<double> out(xi.begin(), xi.end());
    switch (mode) {
    case NoiseMode::gumbel:
        break;
    case NoiseMode::gaussian:
        for (auto &v : out) {
            v = gumbel_to_gaussian(v);
        }
        break;
    case NoiseMode::uniform:
        for (auto &v : out) {
            v = gumbel_to_uniform(v);
        }
        break;
    case NoiseMode::none:
        out.clear();
        break;
    }
    return out;
}

std::vector<double> make_noise(NoiseMode mode, std::size_t v, Rng &rng) {
    if (v == 0) {
        throw ContractError("make_noise: v must be positive");
    }
    const GumbelVector xi = sample_gumbel(rng, v);
    return transform_noise(mode, xi.span());
}

} // namespace gdl
