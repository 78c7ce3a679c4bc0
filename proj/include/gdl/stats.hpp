#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace gdl::stats {

struct Moments {
    double mean;
    double variance; // unbiased
};

Moments moments(std::span<const double> xs);

struct KsResult {
    double statistic; // sup |F_n - F|
    double p_value;   // asymptotic Kolmogorov distribution
    std::size_t n;    // effective sample size
};

// P(K > x) for the Kolmogorov distribution, K = lim sqrt(n) D_n.
double kolmogorov_survival(double x);

// One-sample two-sided test against a continuous CDF. Sorts a copy.
KsResult ks_one_sample(std::span<const double> sample, const std::function<double(double)> &cdf);

// Two-sample two-sided test; effective n = n1 n2 / (n1 + n2).
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

// 0.5 * sum |p - q|
double total_variation(std::span<const double> p, std::span<const double> q);

// Empirical frequency vector of integer labels in [0, k).
std::vector<double> frequencies(std::span<const std::size_t> labels, std::size_t k);

} // namespace gdl::stats
