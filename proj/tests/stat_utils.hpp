#ifndef SPADSIM_TESTS_STAT_UTILS_HPP
#define SPADSIM_TESTS_STAT_UTILS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace testutil {

inline double mean(const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

inline double stddev(const std::vector<double>& xs) {
    const double m = mean(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

/// One-sample Kolmogorov-Smirnov statistic against Exp(mean).
inline double ks_statistic_exponential(std::vector<double> xs, double mean) {
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double cdf = 1.0 - std::exp(-xs[i] / mean);
        const double lo = static_cast<double>(i) / n;
        const double hi = static_cast<double>(i + 1) / n;
        d = std::max(d, std::max(cdf - lo, hi - cdf));
    }
    return d;
}

/// Asymptotic KS critical value at significance 0.01.
inline double ks_critical_01(std::size_t n) {
    return 1.62762 / std::sqrt(static_cast<double>(n));
}

} // namespace testutil

#endif
