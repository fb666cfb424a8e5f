#ifndef ARWLAB_STATS_HPP
#define ARWLAB_STATS_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace arwlab::stats {

/// One pass/fail summary line. The comparison is fixed at construction, so
/// `pass` always agrees with value and bounds.
struct TestReport {
    enum class Kind { kAtMost, kAtLeast, kWithin };

    std::string name;
    double value = 0.0;
    double threshold = 0.0;  ///< upper bound (kAtMost, kWithin) or lower bound (kAtLeast)
    double lower = 0.0;      ///< kWithin only
    Kind kind = Kind::kAtMost;
    bool pass = false;
    std::int64_t sample_size = 0;
    std::string notes;

    static TestReport at_most(std::string name, double value, double threshold, std::int64_t n,
                              std::string notes = {});
    static TestReport at_least(std::string name, double value, double threshold, std::int64_t n,
                               std::string notes = {});
    static TestReport within(std::string name, double value, double lower, double upper, std::int64_t n,
                             std::string notes = {});

    [[nodiscard]] std::string summary_line() const;
};

/// Kolmogorov-Smirnov distance between the empirical law of `sorted` and a
/// continuous cdf. The caller sorts.
double ks_distance(std::span<const double> sorted, const std::function<double(double)>& cdf);

/// Two-sample Kolmogorov-Smirnov distance. Symmetric in its arguments.
double ks_two_sample(std::span<const double> a, std::span<const double> b);

/// 1.63 / sqrt(R): one-sample DKW bound at the 1% level.
double dkw_threshold(std::int64_t samples);
/// 1.63 sqrt(1/R_a + 1/R_b): two-sample bound at the 1% level.
double dkw_two_sample_threshold(std::int64_t a, std::int64_t b);

/// Total-variation distance between an empirical histogram and a pmf on {0, ..., K}.
double tv_distance(std::span<const std::int64_t> counts, std::span<const double> pmf);

struct GumbelTolerances {
    double ks = 0.10;
    double mean = 0.15;
    double variance = 0.5;
};

/// KS distance to exp(-e^{-x}), mean against Euler-Mascheroni and variance
/// against pi^2 / 6.
std::vector<TestReport> gumbel_report(std::span<const double> normalized,
                                      const GumbelTolerances& tol = {});

struct RatioCi {
    double ratio = 0.0;
    double lower = 0.0;
    double upper = 0.0;
};

inline constexpr double kZ99 = 2.5758293035489004;

/// (hits / trials) / reference with the Wilson score interval (99%) scaled
/// by 1 / reference.
RatioCi ratio_with_ci(std::int64_t hits, std::int64_t trials, double reference, double z = kZ99);

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
    double variance = 0.0;
};

MeanSe mean_se(std::span<const double> xs);
double median(std::vector<double> xs);

/// Pearson chi-square statistic of counts against a pmf, pooling cells with
/// expected count below `min_expected` into neighbours. Returns (statistic,
/// degrees of freedom).
std::pair<double, std::int64_t> chi_square(std::span<const std::int64_t> counts, std::span<const double> pmf,
                                           double min_expected = 5.0);

/// Upper 1e-3 quantile of the chi-square law with `dof` degrees of freedom
/// (Wilson-Hilferty approximation).
double chi_square_critical_1e3(std::int64_t dof);

}  // namespace arwlab::stats

#endif  // ARWLAB_STATS_HPP
