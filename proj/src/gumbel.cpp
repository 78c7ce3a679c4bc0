#include "gdl/gumbel.hpp"

#include "gdl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace gdl {

Temperature::Temperature(double tau) : tau_(tau) {
    if (!(tau > 0.0 && tau <= 1.0)) {
        throw ContractError("temperature must lie in (0, 1], got " + std::to_string(tau));
    }
}

double logaddexp(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) {
        return b;
    }
    if (b == -std::numeric_limits<double>::infinity()) {
        return a;
    }
    const double hi = std::max(a, b);
    return hi + std::log1p(std::exp(-std::abs(a - b)));
}

double gumbel_from_uniform(double u) { return -std::log(-std::log(u)); }

double gumbel_cdf(double t) { return std::exp(-std::exp(-t)); }

double sample_gumbel(Rng &rng) { return gumbel_from_uniform(rng.uniform_open()); }

GumbelVector sample_gumbel(Rng &rng, std::size_t v) {
    std::vector<double> xi(v);
    for (auto &e : xi) {
        e = sample_gumbel(rng);
    }
    return GumbelVector(std::move(xi));
}

std::size_t argmax(std::span<const double> v) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < v.size(); ++k) {
        if (v[k] > v[best]) {
            best = k;
        }
    }
    return best;
}

std::size_t gumbel_max(std::span<const double> logits, std::span<const double> xi) {
    if (logits.size() != xi.size() || logits.empty()) {
        throw ContractError("gumbel_max: logits and noise must have equal nonzero length (" +
                            std::to_string(logits.size()) + " vs " + std::to_string(xi.size()) + ")");
    }
    std::size_t best = 0;
    double best_score = logits[0] + xi[0];
    for (std::size_t k = 1; k < logits.size(); ++k) {
        const double s = logits[k] + xi[k];
        if (s > best_score) {
            best_score = s;
            best = k;
        }
    }
    return best;
}

std::size_t gumbel_max(const LogitVector &l, const GumbelVector &xi) { return gumbel_max(l.span(), xi.span()); }

ProbVector softmax(std::span<const double> logits) {
    std::vector<double> p(logits.size());
    if (logits.empty()) {
        return ProbVector(std::move(p));
    }
    const double hi = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (std::size_t k = 0; k < logits.size(); ++k) {
        p[k] = std::exp(logits[k] - hi);
        z += p[k];
    }
    for (auto &e : p) {
        e /= z;
    }
    return ProbVector(std::move(p));
}

LogitVector log_probs(const ProbVector &p) {
    std::vector<double> l(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) {
        l[k] = p[k] > 0.0 ? std::log(p[k]) : kLogZero;
    }
    return LogitVector(std::move(l));
}

CategoricalDraw sample_categorical(const LogitVector &l, Rng &rng) {
    GumbelVector xi = sample_gumbel(rng, l.size());
    const std::size_t y = gumbel_max(l, xi);
    return {y, std::move(xi)};
}

namespace {

void check_posterior_args(const ProbVector &p, std::size_t x) {
    if (x >= p.size()) {
        throw ContractError("posterior_gumbel: token " + std::to_string(x) + " outside vocabulary of size " +
                            std::to_string(p.size()));
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        if (!(p[k] >= 0.0 && p[k] <= 1.0)) {
            throw ContractError("posterior_gumbel: probability out of [0,1] at index " + std::to_string(k));
        }
        sum += p[k];
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw ContractError("posterior_gumbel: probabilities sum to " + std::to_string(sum));
    }
    if (!(p[x] > 0.0)) {
        throw ConditioningError("posterior_gumbel: cannot condition on token " + std::to_string(x) +
                                " with zero probability");
    }
}

} // namespace

GumbelVector posterior_gumbel_from(const ProbVector &p, std::size_t x, double zeta0, std::span<const double> zeta,
                                   PosteriorVariant variant) {
    check_posterior_args(p, x);
    if (zeta.size() != p.size()) {
        throw ContractError("posterior_gumbel: auxiliary noise length mismatch");
    }
    std::vector<double> xi(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) {
        const double log_pk = p[k] > 0.0 ? std::log(p[k]) : -std::numeric_limits<double>::infinity();
        switch (variant) {
        case PosteriorVariant::reference:
        case PosteriorVariant::sign_flip:
            // -log(exp(-zeta_k) + p_k exp(-zeta_0)) in log-sum-exp form
            xi[k] = -logaddexp(-zeta[k], log_pk - zeta0);
            break;
        case PosteriorVariant::alt_formula:
            xi[k] = -logaddexp(-zeta[k] - log_pk, -zeta0);
            break;
        }
    }
    const double log_px = std::log(p[x]);
    xi[x] = variant == PosteriorVariant::sign_flip ? zeta0 + log_px : zeta0 - log_px;
    return GumbelVector(std::move(xi));
}

GumbelVector posterior_gumbel(const ProbVector &p, std::size_t x, Rng &rng, PosteriorVariant variant) {
    check_posterior_args(p, x);
    const double zeta0 = sample_gumbel(rng);
    const GumbelVector zeta = sample_gumbel(rng, p.size());
    return posterior_gumbel_from(p, x, zeta0, zeta.span(), variant);
}

GumbelVector calibrate(const GumbelVector &xi, Temperature tau) {
    std::vector<double> out(xi.values());
    for (auto &e : out) {
        e *= tau.value();
    }
    return GumbelVector(std::move(out));
}

ConditionVector normalize_condition(std::span<const double> xi) {
    return ConditionVector(softmax(xi).values());
}

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double e) { return std::isfinite(e); });
}

} // namespace gdl
