#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "arwlab/model.hpp"
#include "arwlab/rng.hpp"
#include "arwlab/stats.hpp"

using namespace arwlab;
using namespace arwlab::stats;

namespace {

double uniform_cdf(double x) { return std::clamp(x, 0.0, 1.0); }

std::vector<double> gumbel_draws(Rng& rng, int count) {
    std::vector<double> xs(static_cast<std::size_t>(count));
    for (auto& x : xs) {
        double u = rng.uniform();
        while (u == 0.0) u = rng.uniform();
        x = -std::log(-std::log(u));
    }
    return xs;
}

}  // namespace

TEST_CASE("ks_distance") {
    const double median[] = {0.5};
    CHECK(ks_distance(median, uniform_cdf) == doctest::Approx(0.5));
    CHECK_THROWS_AS(ks_distance(std::vector<double>{}, uniform_cdf), std::domain_error);

    const int R = 999;
    std::vector<double> quantiles;
    for (int i = 1; i <= R; ++i) quantiles.push_back(static_cast<double>(i) / (R + 1));
    CHECK(ks_distance(quantiles, uniform_cdf) <= 2.0 / (R + 1));

    SUBCASE("DKW bound holds for draws from the cdf itself") {
        Rng rng(1);
        int within = 0;
        const int trials = 100;
        const int n = 10000;
        for (int t = 0; t < trials; ++t) {
            std::vector<double> xs(n);
            for (auto& x : xs) x = rng.uniform();
            std::sort(xs.begin(), xs.end());
            within += ks_distance(xs, uniform_cdf) < dkw_threshold(n);
        }
        CHECK(within >= 98);
    }

    SUBCASE("invariant under a strictly increasing reparametrization") {
        Rng rng(2);
        std::vector<double> xs(500);
        for (auto& x : xs) x = rng.uniform() * 3.0 - 1.0;
        std::sort(xs.begin(), xs.end());
        std::vector<double> ex;
        for (double x : xs) ex.push_back(std::exp(x));
        const auto cdf = [](double x) { return gumbel_cdf(x); };
        const auto cdf_exp = [](double y) { return gumbel_cdf(std::log(y)); };
        CHECK(std::abs(ks_distance(xs, cdf) - ks_distance(ex, cdf_exp)) <= 1e-12);
    }
}

TEST_CASE("ks_two_sample") {
    const std::vector<double> a = {0.1, 0.4, 0.4, 2.0, 3.5};
    CHECK(ks_two_sample(a, a) == 0.0);
    const std::vector<double> b = {10.0, 11.0};
    CHECK(ks_two_sample(a, b) == 1.0);
    CHECK_THROWS_AS(ks_two_sample(a, std::vector<double>{}), std::domain_error);
    const std::vector<double> c = {0.4, 1.0, 2.5};
    CHECK(ks_two_sample(a, c) == ks_two_sample(c, a));
    // at 0.4: F_a = 3/5, F_c = 1/3
    CHECK(ks_two_sample(a, c) == doctest::Approx(3.0 / 5.0 - 1.0 / 3.0));

    Rng rng(3);
    int within = 0;
    const int n = 10000;
    for (int t = 0; t < 100; ++t) {
        const auto x = gumbel_draws(rng, n);
        const auto y = gumbel_draws(rng, n);
        const double d = ks_two_sample(x, y);
        CHECK(d == ks_two_sample(y, x));
        within += d < dkw_two_sample_threshold(n, n);
    }
    CHECK(within >= 98);
    CHECK(dkw_two_sample_threshold(n, n) == doctest::Approx(1.63 * std::sqrt(2.0 / n)));
}

TEST_CASE("gumbel_report") {
    Rng rng(4);
    const auto xs = gumbel_draws(rng, 10000);
    const auto reports = gumbel_report(xs);
    REQUIRE(reports.size() == 3);
    CHECK(reports[0].value <= 0.02);
    CHECK(reports[1].value <= 0.05);
    for (const auto& r : reports) CHECK(r.pass);

    const std::vector<double> constant(100, 0.3);
    CHECK(gumbel_report(constant)[0].value >= 0.5);
    CHECK_FALSE(gumbel_report(constant)[0].pass);
}

TEST_CASE("ratio_with_ci") {
    const auto zero = ratio_with_ci(0, 100, 0.5);
    CHECK(zero.ratio == 0.0);
    CHECK(zero.lower == 0.0);
    const auto all = ratio_with_ci(100, 100, 1.0);
    CHECK(all.ratio == 1.0);
    CHECK(all.upper >= 1.0);
    CHECK_THROWS_AS(ratio_with_ci(1, 10, 0.0), std::domain_error);
    CHECK_THROWS_AS(ratio_with_ci(11, 10, 1.0), std::domain_error);

    // Wilson endpoints are the roots of (phat - pi)^2 = z^2 pi (1 - pi) / n.
    const double ref = mu(4.0) * 40.0;
    const auto r = ratio_with_ci(428, 20000, ref);
    CHECK(r.ratio == doctest::Approx(0.9995).epsilon(1e-3));
    const double n = 20000.0;
    const double ph = 428.0 / n;
    const double z2 = kZ99 * kZ99;
    const double qa = 1.0 + z2 / n;
    const double qb = -(2.0 * ph + z2 / n);
    const double qc = ph * ph;
    const double disc = std::sqrt(qb * qb - 4.0 * qa * qc);
    CHECK(r.lower * ref == doctest::Approx((-qb - disc) / (2.0 * qa)).epsilon(1e-12));
    CHECK(r.upper * ref == doctest::Approx((-qb + disc) / (2.0 * qa)).epsilon(1e-12));
    CHECK(r.lower < r.ratio);
    CHECK(r.ratio < r.upper);
    MESSAGE("half-width " << 0.5 * (r.upper - r.lower));
}

TEST_CASE("reports, moments and determinism") {
    CHECK(TestReport::at_most("a", 0.1, 0.2, 5).pass);
    CHECK_FALSE(TestReport::at_most("a", 0.3, 0.2, 5).pass);
    CHECK(TestReport::at_least("b", 0.3, 0.2, 5).pass);
    CHECK(TestReport::within("c", 0.5, 0.4, 0.6, 5).pass);
    CHECK_FALSE(TestReport::within("c", 0.7, 0.4, 0.6, 5).pass);
    CHECK(TestReport::at_most("a", 0.1, 0.2, 5).summary_line().rfind("[PASS]", 0) == 0);

    const std::vector<double> xs = {1.0, 2.0, 3.0, 4.0};
    const auto m = mean_se(xs);
    CHECK(m.mean == 2.5);
    CHECK(m.variance == doctest::Approx(5.0 / 3.0));
    CHECK(median(xs) == 2.5);
    CHECK(median({3.0, 1.0, 2.0}) == 2.0);

    Rng rng(5);
    const auto draws = gumbel_draws(rng, 2000);
    auto sorted = draws;
    std::sort(sorted.begin(), sorted.end());
    const double d1 = ks_distance(sorted, [](double x) { return gumbel_cdf(x); });
    const double d2 = ks_distance(sorted, [](double x) { return gumbel_cdf(x); });
    CHECK(std::memcmp(&d1, &d2, sizeof d1) == 0);
    const double t1 = ks_two_sample(draws, sorted);
    CHECK(t1 == 0.0);

    SUBCASE("chi-square") {
        CHECK(chi_square_critical_1e3(10) == doctest::Approx(29.588).epsilon(0.01));
        CHECK(chi_square_critical_1e3(1) == doctest::Approx(10.828).epsilon(0.05));
        const std::vector<std::int64_t> counts = {25, 50, 25};
        const std::vector<double> pmf = {0.25, 0.5, 0.25};
        const auto [stat, dof] = chi_square(counts, pmf);
        CHECK(stat == 0.0);
        CHECK(dof == 2);
        CHECK(tv_distance(counts, pmf) == 0.0);
    }
}
