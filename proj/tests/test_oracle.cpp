#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <vector>

#include "arwlab/oracle.hpp"

using namespace arwlab;

namespace {

double binom(int n, int k) { return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0)); }

// Pushes the joint law of (Y, Z) forward step by step until the transient
// mass is negligible; absorbed mass is collected by final Y.
std::vector<double> forward_final_pmf(int n, double p, double q) {
    std::vector<std::vector<double>> dist(n + 1, std::vector<double>(n + 1, 0.0));  // [z][y]
    std::vector<double> final(n + 1, 0.0);
    for (int y = 0; y <= n; ++y) {
        const double w = binom(n, y) * std::pow(p, y) * std::pow(1.0 - p, n - y);
        if (y == n) {
            final[n] += w;
        } else {
            dist[0][y] += w;
        }
    }
    for (int it = 0; it < 1000000; ++it) {
        std::vector<std::vector<double>> next(n + 1, std::vector<double>(n + 1, 0.0));
        double live = 0.0;
        for (int z = 0; z < n; ++z) {
            for (int y = 0; y < n - z; ++y) {
                const double w = dist[z][y];
                if (w == 0.0) continue;
                const double down = (1.0 - q) * (1.0 - p) * y / n;
                const double up = (1.0 - q) * p * (n - y) / n;
                auto put = [&](int yy, int zz, double mass) {
                    if (yy == n - zz) {
                        final[yy] += mass;
                    } else {
                        next[zz][yy] += mass;
                        live += mass;
                    }
                };
                put(y, z + 1, w * q);
                if (y > 0) put(y - 1, z, w * down);
                put(y + 1, z, w * up);
                put(y, z, w * (1.0 - q - down - up));
            }
        }
        dist.swap(next);
        if (live < 1e-15) break;
    }
    return final;
}

// E[steps to hit m] for the q = 0 chain, from the exact initial law, by
// accumulating survival probabilities.
double forward_fixed_energy_mean(int n, double p, int m, const std::vector<double>& initial) {
    std::vector<double> dist = initial;
    dist.resize(static_cast<std::size_t>(n) + 1, 0.0);
    dist[m] = 0.0;
    double expected = 0.0;
    for (int it = 0; it < 5000000; ++it) {
        double live = 0.0;
        for (double w : dist) live += w;
        if (live < 1e-15) break;
        expected += live;
        std::vector<double> next(n + 1, 0.0);
        for (int y = 0; y <= n; ++y) {
            if (dist[y] == 0.0) continue;
            const double down = (1.0 - p) * y / n;
            const double up = p * (n - y) / n;
            if (y > 0) next[y - 1] += dist[y] * down;
            if (y < n) next[y + 1] += dist[y] * up;
            next[y] += dist[y] * (1.0 - down - up);
        }
        next[m] = 0.0;
        dist.swap(next);
    }
    return expected;
}

}  // namespace

TEST_CASE("exact_final_pmf hand values") {
    const auto one = oracle::exact_final_pmf(1, 0.5, 0.5);
    CHECK(one.mass[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(one.mass[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    // p + (1-p)(1-q)p / (1 - (1-q)(1-p))
    for (double q : {0.1, 0.3, 0.9}) {
        for (double p : {0.2, 0.7}) {
            const double expected = p + (1 - p) * (1 - q) * p / (1 - (1 - q) * (1 - p));
            CHECK(oracle::exact_final_pmf(1, p, q).mass[1] == doctest::Approx(expected).epsilon(1e-12));
        }
    }
    CHECK(oracle::exact_final_pmf(1, 0.5, 1.0).mass[1] == doctest::Approx(0.5));
    for (std::int64_t n = 1; n <= 8; ++n) {
        const auto pmf = oracle::exact_final_pmf(n, 1.0, 0.4);
        CHECK(pmf.mass[static_cast<std::size_t>(n)] == doctest::Approx(1.0));
    }
}

TEST_CASE("exact_final_pmf against forward propagation") {
    for (int n : {2, 3, 5}) {
        for (double p : {0.3, 0.5, 0.7}) {
            for (double q : {0.2, 0.5, 0.9}) {
                const auto pmf = oracle::exact_final_pmf(n, p, q);
                const auto fwd = forward_final_pmf(n, p, q);
                for (int s = 0; s <= n; ++s) CHECK(pmf.mass[s] == doctest::Approx(fwd[s]).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("exact_final_pmf mass and errors") {
    for (std::int64_t n = 1; n <= 8; ++n) {
        for (double p : {0.3, 0.5, 0.7}) {
            for (double q : {0.2, 0.5, 0.9}) {
                const auto pmf = oracle::exact_final_pmf(n, p, q);
                CHECK(std::abs(pmf.total() - 1.0) <= 1e-10);
                for (double w : pmf.mass) CHECK(w >= 0.0);
            }
        }
    }
    CHECK_NOTHROW(oracle::exact_final_pmf(12, 0.5, 0.01));
    CHECK_THROWS_AS(oracle::exact_final_pmf(13, 0.5, 0.5), std::length_error);
    CHECK_THROWS_AS(oracle::exact_final_pmf(3, 0.5, 0.0), std::domain_error);
}

TEST_CASE("fixed energy initial law and mean") {
    CHECK(oracle::exact_fixed_energy_mean(1, 0.5, 1) == doctest::Approx(1.0));
    CHECK(oracle::exact_fixed_energy_mean(2, 0.5, 1) == doctest::Approx(1.0));
    CHECK_THROWS_AS(oracle::exact_fixed_energy_mean(3, 0.5, 4), std::domain_error);
    CHECK_THROWS_AS(oracle::exact_fixed_energy_mean(3, 1.0, 2), std::domain_error);

    for (int n : {3, 5, 10}) {
        for (int m = 1; m <= n; m += 2) {
            const auto init = oracle::exact_initial_fixed_energy_pmf(n, 0.5, m);
            CHECK(init.total() == doctest::Approx(1.0));
            const double fwd = forward_fixed_energy_mean(n, 0.5, m, init.mass);
            CHECK(oracle::exact_fixed_energy_mean(n, 0.5, m) == doctest::Approx(fwd).epsilon(1e-8));
        }
    }

    SUBCASE("occupancy") {
        for (int n : {1, 4, 30}) {
            for (int m : {1, 3, 30}) {
                const auto pmf = oracle::occupancy_pmf(n, m);
                double total = 0.0;
                double mean = 0.0;
                for (std::size_t k = 0; k < pmf.size(); ++k) {
                    total += pmf[k];
                    mean += static_cast<double>(k) * pmf[k];
                }
                CHECK(total == doctest::Approx(1.0));
                CHECK(mean == doctest::Approx(n * (1.0 - std::pow(1.0 - 1.0 / n, m))));
            }
        }
    }
}

TEST_CASE("binomial tail") {
    CHECK(oracle::binomial_tail(10, 0.3, 0) == 1.0);
    CHECK(oracle::binomial_tail(2, 0.5, 2) == doctest::Approx(0.25));
    CHECK(oracle::binomial_tail(5, 0.5, 6) == 0.0);

    SUBCASE("regularized incomplete beta") {
        struct Case {
            std::int64_t n;
            double p;
            std::int64_t k;
        };
        const Case cases[] = {{10000, 0.5, 5200}, {10000, 0.5, 5100}, {10000, 0.5, 4900}, {10000, 0.3, 3100},
                              {1000000, 0.5, 502000}, {1000000, 0.5, 500000}, {1000000, 0.2, 199000},
                              {50, 0.5, 30}, {50, 0.9, 44}, {7, 0.25, 3}};
        for (const auto& c : cases) {
            const double expected = boost::math::ibeta(static_cast<double>(c.k), static_cast<double>(c.n - c.k + 1), c.p);
            const double got = oracle::binomial_tail(c.n, c.p, c.k);
            CHECK(std::abs(got - expected) <= 1e-12 * expected);
        }
    }

    SUBCASE("log pmf against lgamma") {
        for (std::int64_t k : {0, 1, 17, 50, 99, 100}) {
            const double direct = std::lgamma(101.0) - std::lgamma(k + 1.0) - std::lgamma(101.0 - k) +
                                  k * std::log(0.3) + (100 - k) * std::log(0.7);
            CHECK(oracle::log_binomial_pmf(100, 0.3, k) == doctest::Approx(direct).epsilon(1e-11));
        }
    }
}
