#include "lexrag/stats.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <boost/math/distributions/students_t.hpp>

#include "lexrag/error.hpp"
#include "lexrag/parallel.hpp"
#include "lexrag/random.hpp"

namespace lexrag {

double mean(const std::vector<double>& values) {
    if (values.empty()) return 0.0;
    double s = 0.0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) throw ConfigError("quantile of an empty list");
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

BootstrapResult bootstrap_ci(const std::vector<double>& values, std::size_t iterations, double level,
                             std::uint64_t seed, std::size_t workers) {
    if (values.empty()) throw ConfigError("bootstrap needs at least one value");
    if (iterations == 0) throw ConfigError("bootstrap needs at least one iteration");
    if (!(level > 0.0 && level < 1.0)) throw ConfigError("confidence level must be in (0, 1)");

    const std::size_t n = values.size();
    // Every resample of a constant series has that exact mean; summation
    // would only add rounding noise.
    if (std::all_of(values.begin(), values.end(), [&](double v) { return v == values.front(); })) {
        return {values.front(), values.front(), values.front(), values.front()};
    }
    std::vector<double> means(iterations);
    parallel_for(iterations, workers, [&](std::size_t it) {
        std::mt19937_64 rng(derive_seed(seed, it));
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += values[static_cast<std::size_t>(uniform_index(rng, n))];
        means[it] = s / static_cast<double>(n);
    });
    std::sort(means.begin(), means.end());
    const double tail = (1.0 - level) / 2.0;
    BootstrapResult r;
    r.lo = quantile_sorted(means, tail);
    r.hi = quantile_sorted(means, 1.0 - tail);
    r.min = means.front();
    r.max = means.back();
    return r;
}

TTestResult paired_ttest(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw ConfigError("paired t-test needs equal-length samples");
    if (a.size() < 2) throw ConfigError("paired t-test needs at least two pairs");
    const std::size_t n = a.size();
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
    const double md = mean(d);
    double ss = 0.0;
    for (double x : d) ss += (x - md) * (x - md);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));

    TTestResult r;
    r.df = n - 1;
    const bool all_zero = std::all_of(d.begin(), d.end(), [](double x) { return x == 0.0; });
    if (all_zero) return r;
    if (sd == 0.0) {
        r.t = md > 0 ? INFINITY : -INFINITY;
        r.p = 0.0;
        r.degenerate = true;
        return r;
    }
    r.t = md / (sd / std::sqrt(static_cast<double>(n)));
    const boost::math::students_t dist(static_cast<double>(r.df));
    r.p = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t))));
    return r;
}

double bonferroni(double p, std::size_t m) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("p-value must be in [0, 1]");
    if (m == 0) throw ConfigError("Bonferroni needs m >= 1");
    return std::min(1.0, p * static_cast<double>(m));
}

} // namespace lexrag
