#pragma once

// Conditioning noise sources. Gaussian and uniform noise are monotone
// per-coordinate transforms of a Gumbel draw, so every mode keeps the rank
// order (and hence the argmax) of its source.

#include "gdl/gumbel.hpp"

#include <string>
#include <string_view>

namespace gdl {

enum class NoiseMode { gumbel, gaussian, uniform, none };

NoiseMode parse_noise_mode(std::string_view s); // throws ConfigError
const char *to_string(NoiseMode m);

// Phi^{-1}(F(xi)), evaluated through the upper tail for positive xi so large
// values do not round to F = 1.
double gumbel_to_gaussian(double xi);

// F(xi) = exp(-exp(-xi)), the uniform that generated xi.
double gumbel_to_uniform(double xi);

// Elementwise transform of a Gumbel vector into the given mode. `none`
// returns an empty vector.
std::vector<double> transform_noise(NoiseMode mode, std::span<const double> xi);

// A fresh Gumbel draw of length v, transformed.
std::vector<double> make_noise(NoiseMode mode, std::size_t v, Rng &rng);

} // namespace gdl
