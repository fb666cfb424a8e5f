#include "arwlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "arwlab/model.hpp"

namespace arwlab::stats {

TestReport TestReport::at_most(std::string name, double value, double threshold, std::int64_t n,
                               std::string notes) {
    TestReport r{std::move(name), value, threshold, 0.0, Kind::kAtMost, value <= threshold, n, std::move(notes)};
    return r;
}

TestReport TestReport::at_least(std::string name, double value, double threshold, std::int64_t n,
                                std::string notes) {
    TestReport r{std::move(name), value, threshold, 0.0, Kind::kAtLeast, value >= threshold, n, std::move(notes)};
    return r;
}

TestReport TestReport::within(std::string name, double value, double lower, double upper, std::int64_t n,
                              std::string notes) {
    TestReport r{std::move(name), value, upper, lower, Kind::kWithin, value >= lower && value <= upper, n,
                 std::move(notes)};
    return r;
}

std::string TestReport::summary_line() const {
    char bound[96];
    switch (kind) {
        case Kind::kAtMost: std::snprintf(bound, sizeof bound, "<= %.6g", threshold); break;
        case Kind::kAtLeast: std::snprintf(bound, sizeof bound, ">= %.6g", threshold); break;
        case Kind::kWithin: std::snprintf(bound, sizeof bound, "in [%.6g, %.6g]", lower, threshold); break;
    }
    char line[512];
    std::snprintf(line, sizeof line, "[%s] %s: %.6g %s (n=%lld)", pass ? "PASS" : "FAIL", name.c_str(), value,
                  bound, static_cast<long long>(sample_size));
    std::string out = line;
    if (!notes.empty()) out += " -- " + notes;
    return out;
}

double ks_distance(std::span<const double> sorted, const std::function<double(double)>& cdf) {
    if (sorted.empty()) throw std::domain_error("ks_distance needs at least one sample");
    const double r = static_cast<double>(sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double f = cdf(sorted[i]);
        d = std::max({d, static_cast<double>(i + 1) / r - f, f - static_cast<double>(i) / r});
    }
    return d;
}

double ks_two_sample(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw std::domain_error("ks_two_sample needs nonempty samples");
    std::vector<double> x(a.begin(), a.end());
    std::vector<double> y(b.begin(), b.end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const double nx = static_cast<double>(x.size());
    const double ny = static_cast<double>(y.size());
    std::size_t i = 0;
    std::size_t j = 0;
    double d = 0.0;
    while (i < x.size() && j < y.size()) {
        const double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] == v) ++i;
        while (j < y.size() && y[j] == v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
    }
    return d;
}

double dkw_threshold(std::int64_t samples) { return 1.63 / std::sqrt(static_cast<double>(samples)); }

double dkw_two_sample_threshold(std::int64_t a, std::int64_t b) {
    return 1.63 * std::sqrt(1.0 / static_cast<double>(a) + 1.0 / static_cast<double>(b));
}

double tv_distance(std::span<const std::int64_t> counts, std::span<const double> pmf) {
    if (counts.size() != pmf.size()) throw std::invalid_argument("histogram and pmf differ in support");
    double total = 0.0;
    for (auto c : counts) total += static_cast<double>(c);
    if (!(total > 0.0)) throw std::domain_error("empty histogram");
    double d = 0.0;
    for (std::size_t k = 0; k < pmf.size(); ++k) d += std::abs(static_cast<double>(counts[k]) / total - pmf[k]);
    return 0.5 * d;
}

MeanSe mean_se(std::span<const double> xs) {
    if (xs.empty()) throw std::domain_error("mean of an empty sample");
    const double r = static_cast<double>(xs.size());
    double sum = 0.0;
    for (double x : xs) sum += x;
    MeanSe out;
    out.mean = sum / r;
    if (xs.size() < 2) return out;
    double m2 = 0.0;
    for (double x : xs) m2 += (x - out.mean) * (x - out.mean);
    out.variance = m2 / (r - 1.0);
    out.se = std::sqrt(out.variance / r);
    return out;
}

double median(std::vector<double> xs) {
    if (xs.empty()) throw std::domain_error("median of an empty sample");
    std::sort(xs.begin(), xs.end());
    const std::size_t k = xs.size() / 2;
    return xs.size() % 2 ? xs[k] : 0.5 * (xs[k - 1] + xs[k]);
}

std::vector<TestReport> gumbel_report(std::span<const double> normalized, const GumbelTolerances& tol) {
    std::vector<double> sorted(normalized.begin(), normalized.end());
    std::sort(sorted.begin(), sorted.end());
    const auto r = static_cast<std::int64_t>(sorted.size());
    const MeanSe m = mean_se(sorted);
    const double ks = ks_distance(sorted, [](double x) { return gumbel_cdf(x); });
    const double gumbel_var = kPi * kPi / 6.0;
    char note[64];
    std::snprintf(note, sizeof note, "mean %.4f", m.mean);
    std::vector<TestReport> out;
    out.push_back(TestReport::at_most("gumbel_ks", ks, tol.ks, r));
    out.push_back(TestReport::at_most("gumbel_mean_abs_error", std::abs(m.mean - kEulerGamma), tol.mean, r, note));
    std::snprintf(note, sizeof note, "variance %.4f", m.variance);
    out.push_back(TestReport::at_most("gumbel_variance_abs_error", std::abs(m.variance - gumbel_var), tol.variance,
                                      r, note));
    return out;
}

RatioCi ratio_with_ci(std::int64_t hits, std::int64_t trials, double reference, double z) {
    if (!(reference > 0.0)) throw std::domain_error("reference must be positive");
    if (trials < 1 || hits < 0 || hits > trials) throw std::domain_error("need 0 <= hits <= trials, trials >= 1");
    const double n = static_cast<double>(trials);
    const double phat = static_cast<double>(hits) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (phat + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n)) / denom;
    return {phat / reference, std::max(center - half, 0.0) / reference, std::min(center + half, 1.0) / reference};
}

std::pair<double, std::int64_t> chi_square(std::span<const std::int64_t> counts, std::span<const double> pmf,
                                           double min_expected) {
    if (counts.size() != pmf.size()) throw std::invalid_argument("histogram and pmf differ in support");
    double total = 0.0;
    for (auto c : counts) total += static_cast<double>(c);
    // Pool adjacent cells left to right until each pooled cell is large enough.
    std::vector<std::pair<double, double>> cells;  // (observed, expected)
    double obs = 0.0;
    double expct = 0.0;
    for (std::size_t k = 0; k < pmf.size(); ++k) {
        obs += static_cast<double>(counts[k]);
        expct += total * pmf[k];
        if (expct >= min_expected) {
            cells.emplace_back(obs, expct);
            obs = expct = 0.0;
        }
    }
    if (expct > 0.0 || obs > 0.0) {
        if (cells.empty()) {
            cells.emplace_back(obs, expct);
        } else {
            cells.back().first += obs;
            cells.back().second += expct;
        }
    }
    double stat = 0.0;
    for (auto [o, e] : cells) stat += (o - e) * (o - e) / e;
    return {stat, static_cast<std::int64_t>(cells.size()) - 1};
}

double chi_square_critical_1e3(std::int64_t dof) {
    constexpr double z = 3.090232306167813;  // upper 1e-3 normal quantile
    const double k = static_cast<double>(std::max<std::int64_t>(dof, 1));
    const double h = 2.0 / (9.0 * k);
    return k * std::pow(1.0 - h + z * std::sqrt(h), 3.0);
}

}  // namespace arwlab::stats
