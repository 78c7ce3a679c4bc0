#pragma once

// Gumbel distribution primitives, Gumbel-Max sampling and posterior noise
// extraction. All arithmetic is double precision.

#include "gdl/rng.hpp"

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace gdl {

// A length-V real vector tagged with what its coordinates mean.
template <class Tag>
class RealVector {
public:
    RealVector() = default;
    explicit RealVector(std::vector<double> values) : values_(std::move(values)) {}
    explicit RealVector(std::size_t n, double fill = 0.0) : values_(n, fill) {}
    RealVector(std::initializer_list<double> init) : values_(init) {}

    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    double &operator[](std::size_t i) { return values_[i]; }
    std::span<const double> span() const noexcept { return values_; }
    std::span<double> span() noexcept { return values_; }
    const std::vector<double> &values() const noexcept { return values_; }
    std::vector<double> &values() noexcept { return values_; }

    friend bool operator==(const RealVector &, const RealVector &) = default;

private:
    std::vector<double> values_;
};

struct GumbelTag {};
struct LogitTag {};
struct ProbTag {};
struct ConditionTag {};

using GumbelVector = RealVector<GumbelTag>;
using LogitVector = RealVector<LogitTag>;
using ProbVector = RealVector<ProbTag>;
using ConditionVector = RealVector<ConditionTag>;

// Inference-time noise scale, 0 < tau <= 1.
class Temperature {
public:
    explicit Temperature(double tau);
    double value() const noexcept { return tau_; }

private:
    double tau_;
};

// Finite stand-in for log(0) in logit vectors built from probability tables.
inline constexpr double kLogZero = -1e30;

double logaddexp(double a, double b);

// -log(-log u), the inverse of gumbel_cdf.
double gumbel_from_uniform(double u);

// F(t) = exp(-exp(-t)).
double gumbel_cdf(double t);

double sample_gumbel(Rng &rng);
GumbelVector sample_gumbel(Rng &rng, std::size_t v);

// Smallest index attaining max_k (l_k + xi_k).
std::size_t gumbel_max(std::span<const double> logits, std::span<const double> xi);
std::size_t gumbel_max(const LogitVector &l, const GumbelVector &xi);

// Smallest index attaining max_k v_k.
std::size_t argmax(std::span<const double> v);

// Numerically stable softmax (max subtracted first).
ProbVector softmax(std::span<const double> logits);
inline ProbVector softmax(const LogitVector &l) { return softmax(l.span()); }

// log p with zero probabilities mapped to kLogZero.
LogitVector log_probs(const ProbVector &p);

struct CategoricalDraw {
    std::size_t token;
    GumbelVector noise;
};

CategoricalDraw sample_categorical(const LogitVector &l, Rng &rng);

// Which losing-coordinate construction posterior_gumbel uses. Only `reference`
// is correct; the others exist so the property harness can prove it catches
// broken constructions.
enum class PosteriorVariant {
    reference,   // -log(exp(-zeta_k) + p_k exp(-zeta_0))
    alt_formula, // -log(exp(-zeta_k) / p_k + exp(-zeta_0))
    sign_flip,   // winner written as zeta_0 + log p_x
};

// Posterior noise for one position given the observed token x: draws zeta_0,
// then zeta_1..zeta_V, and applies the construction. The result satisfies
// argmax_k(log p_k + xi_k) = x with strict dominance, and each coordinate is
// marginally standard Gumbel when x ~ p.
GumbelVector posterior_gumbel(const ProbVector &p, std::size_t x, Rng &rng,
                              PosteriorVariant variant = PosteriorVariant::reference);

// Same construction from explicit auxiliary draws.
GumbelVector posterior_gumbel_from(const ProbVector &p, std::size_t x, double zeta0, std::span<const double> zeta,
                                   PosteriorVariant variant = PosteriorVariant::reference);

GumbelVector calibrate(const GumbelVector &xi, Temperature tau);

// softmax(xi): the normalized form fed to the student's condition projection.
ConditionVector normalize_condition(std::span<const double> xi);
inline ConditionVector normalize_condition(const GumbelVector &xi) { return normalize_condition(xi.span()); }

bool all_finite(std::span<const double> v);

} // namespace gdl
