#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace lexrag {

double mean(const std::vector<double>& values);

/// Linear interpolation between order statistics of sorted `values`
/// (q in [0, 1]).
double quantile_sorted(const std::vector<double>& sorted, double q);

struct BootstrapResult {
    double lo = 0.0; // percentile CI bounds
    double hi = 0.0;
    double min = 0.0; // range of the resampled means
    double max = 0.0;
};

/// Percentile bootstrap CI of the mean. Resample i draws from an RNG seeded
/// with derive_seed(seed, i), so results do not depend on `workers`.
/// Throws ConfigError for empty input, zero iterations or level outside (0, 1).
BootstrapResult bootstrap_ci(const std::vector<double>& values, std::size_t iterations = 10000, double level = 0.95,
                             std::uint64_t seed = 0, std::size_t workers = 1);

struct TTestResult {
    double t = 0.0;
    double p = 1.0;
    std::size_t df = 0;
    /// Differences have zero variance but nonzero mean; p is reported as 0.
    bool degenerate = false;
};

/// Two-sided paired t-test on d = a - b with n - 1 degrees of freedom.
/// Throws ConfigError unless |a| == |b| >= 2.
TTestResult paired_ttest(const std::vector<double>& a, const std::vector<double>& b);

/// min(1, p * m). Throws ConfigError unless 0 <= p <= 1 and m >= 1.
double bonferroni(double p, std::size_t m);

} // namespace lexrag
