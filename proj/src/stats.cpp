#include "gdl/stats.hpp"

#include "gdl/errors.hpp"

#include <algorithm>
#include <cmath>

namespace gdl::stats {

Moments moments(std::span<const double> xs) {
    if (xs.size() < 2) {
        throw ContractError("moments: need at least two samples");
    }
    // Welford
    double mean = 0.0;
    double m2 = 0.0;
    std::size_t n = 0;
    for (const double x : xs) {
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }
    return {mean, m2 / static_cast<double>(n - 1)};
}

double kolmogorov_survival(double x) {
    if (x <= 0.0) {
        return 1.0;
    }
    if (x < 0.27) {
        // Alternating series converges poorly here; the true value is 1 to
        // within 1e-12.
        return 1.0;
    }
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * x * x);
        sum += (k % 2 == 1 ? term : -term);
        if (term < 1e-18) {
            break;
        }
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_one_sample(std::span<const double> sample, const std::function<double(double)> &cdf) {
    if (sample.empty()) {
        throw ContractError("ks_one_sample: empty sample");
    }
    std::vector<double> xs(sample.begin(), sample.end());
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = cdf(xs[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    // Stephens' small-sample correction of the asymptotic statistic.
    const double sn = std::sqrt(n);
    const double p = kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d);
    return {d, p, xs.size()};
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) {
        throw ContractError("ks_two_sample: empty sample");
    }
    std::vector<double> xa(a.begin(), a.end());
    std::vector<double> xb(b.begin(), b.end());
    std::sort(xa.begin(), xa.end());
    std::sort(xb.begin(), xb.end());
    const double na = static_cast<double>(xa.size());
    const double nb = static_cast<double>(xb.size());
    std::size_t i = 0;
    std::size_t j = 0;
    double d = 0.0;
    while (i < xa.size() && j < xb.size()) {
        const double v = std::min(xa[i], xb[j]);
        while (i < xa.size() && xa[i] == v) {
            ++i;
        }
        while (j < xb.size() && xb[j] == v) {
            ++j;
        }
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    const double ne = na * nb / (na + nb);
    const double sn = std::sqrt(ne);
    const double p = kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d);
    return {d, p, static_cast<std::size_t>(ne)};
}

double total_variation(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) {
        throw ContractError("total_variation: length mismatch");
    }
    double s = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        s += std::abs(p[k] - q[k]);
    }
    return 0.5 * s;
}

std::vector<double> frequencies(std::span<const std::size_t> labels, std::size_t k) {
    std::vector<double> f(k, 0.0);
    for (const std::size_t l : labels) {
        if (l >= k) {
            throw ContractError("frequencies: label out of range");
        }
        f[l] += 1.0;
    }
    for (auto &e : f) {
        e /= static_cast<double>(labels.size());
    }
    return f;
}

} // namespace gdl::stats
