#include "arwlab/oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace arwlab::oracle {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

struct KahanSum {
    double sum = 0.0;
    double carry = 0.0;

    void add(double x) {
        const double y = x - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
};

// log(k!) - log(sqrt(2 pi k) (k/e)^k)
double stirling_error(double k) {
    static const std::array<double, 16> table = [] {
        std::array<double, 16> t{};
        t[0] = 0.0;  // unused: callers never pass 0
        for (int i = 1; i < 16; ++i) {
            const double x = i;
            t[i] = std::lgamma(x + 1.0) - (x + 0.5) * std::log(x) + x - 0.5 * kLog2Pi;
        }
        return t;
    }();
    if (k < 16.0) return table[static_cast<std::size_t>(k)];
    constexpr double s0 = 1.0 / 12.0;
    constexpr double s1 = 1.0 / 360.0;
    constexpr double s2 = 1.0 / 1260.0;
    constexpr double s3 = 1.0 / 1680.0;
    constexpr double s4 = 1.0 / 1188.0;
    const double kk = k * k;
    if (k > 500.0) return (s0 - s1 / kk) / k;
    if (k > 80.0) return (s0 - (s1 - s2 / kk) / kk) / k;
    if (k > 35.0) return (s0 - (s1 - (s2 - s3 / kk) / kk) / kk) / k;
    return (s0 - (s1 - (s2 - (s3 - s4 / kk) / kk) / kk) / kk) / k;
}

// Deviance x log(x / m) + m - x, stable when x is close to m.
double deviance(double x, double m) {
    if (std::abs(x - m) < 0.1 * (x + m)) {
        double v = (x - m) / (x + m);
        double s = (x - m) * v;
        double ej = 2.0 * x * v;
        v *= v;
        for (int j = 1; j < 1000; ++j) {
            ej *= v;
            const double s1 = s + ej / (2 * j + 1);
            if (s1 == s) return s1;
            s = s1;
        }
        return s;
    }
    return x * std::log(x / m) + m - x;
}

void check_probability(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("probability must lie in [0, 1]");
}

}  // namespace

double ExactPmf::total() const {
    KahanSum acc;
    for (double m : mass) acc.add(m);
    return acc.sum;
}

double ExactPmf::mean() const {
    KahanSum acc;
    for (std::size_t k = 0; k < mass.size(); ++k) acc.add(static_cast<double>(k) * mass[k]);
    return acc.sum;
}

double log_binomial_pmf(std::int64_t n, double p, std::int64_t k) {
    check_probability(p);
    constexpr double neg_inf = -std::numeric_limits<double>::infinity();
    if (n < 0) throw std::domain_error("binomial size must be nonnegative");
    if (k < 0 || k > n) return neg_inf;
    const double q = 1.0 - p;
    if (p == 0.0) return k == 0 ? 0.0 : neg_inf;
    if (q == 0.0) return k == n ? 0.0 : neg_inf;
    const double nn = static_cast<double>(n);
    const double kk = static_cast<double>(k);
    if (k == 0) return p < 0.1 ? -deviance(nn, nn * q) - nn * p : nn * std::log(q);
    if (k == n) return q < 0.1 ? -deviance(nn, nn * p) - nn * q : nn * std::log(p);
    const double lc = stirling_error(nn) - stirling_error(kk) - stirling_error(nn - kk) -
                      deviance(kk, nn * p) - deviance(nn - kk, nn * q);
    const double lf = kLog2Pi + std::log(kk) + std::log1p(-kk / nn);
    return lc - 0.5 * lf;
}

double binomial_tail(std::int64_t n, double p, std::int64_t k) {
    check_probability(p);
    if (k <= 0) return 1.0;
    if (k > n) return 0.0;
    if (p == 0.0) return 0.0;
    if (p == 1.0) return 1.0;

    const auto mode = static_cast<std::int64_t>(std::floor(static_cast<double>(n + 1) * p));
    // Terms decrease monotonically away from the mode, so each sum starts at
    // its largest term and can stop once terms fall below double resolution.
    auto log_sum = [&](std::int64_t first, std::int64_t last, std::int64_t dir) {
        const double lead = log_binomial_pmf(n, p, first);
        KahanSum acc;
        for (std::int64_t j = first; dir > 0 ? j <= last : j >= last; j += dir) {
            const double term = std::exp(log_binomial_pmf(n, p, j) - lead);
            acc.add(term);
            if (term < 1e-18 * acc.sum) break;
        }
        return lead + std::log(acc.sum);
    };

    if (k >= mode) return std::exp(log_sum(k, n, +1));
    return 1.0 - std::exp(log_sum(k - 1, 0, -1));
}

ExactPmf exact_final_pmf(std::int64_t n, double p, double q) {
    if (n < 1) throw std::domain_error("exact_final_pmf requires n >= 1");
    if (n > kMaxExactN) {
        throw std::length_error("exact_final_pmf supports n <= " + std::to_string(kMaxExactN) +
                                ", got " + std::to_string(n));
    }
    if (!(p > 0.0 && p <= 1.0)) throw std::domain_error("exact_final_pmf requires p in (0, 1]");
    if (!(q > 0.0 && q <= 1.0)) {
        throw std::domain_error("exact_final_pmf requires q in (0, 1]; q = 0 need not absorb");
    }

    const auto width = static_cast<std::size_t>(n + 1);
    const double nd = static_cast<double>(n);
    // next[y][s]: absorption law from transient state (y, z + 1).
    std::vector<std::vector<double>> next;

    for (std::int64_t z = n - 1; z >= 0; --z) {
        const std::int64_t top = n - z;  // absorbing value of y in this layer
        const auto m = static_cast<std::size_t>(top);
        std::vector<double> diag(m), lower(m), upper(m);
        std::vector<std::vector<double>> rhs(m, std::vector<double>(width, 0.0));

        for (std::int64_t y = 0; y < top; ++y) {
            const auto i = static_cast<std::size_t>(y);
            const double yd = static_cast<double>(y);
            const double down = (1.0 - q) * yd * (1.0 - p) / nd;
            const double up = (1.0 - q) * (nd - yd) * p / nd;
            diag[i] = q + down + up;
            lower[i] = -down;
            upper[i] = -up;
            if (y + 1 == top) {
                rhs[i][static_cast<std::size_t>(top)] += up;
                upper[i] = 0.0;
                // lazy step moves the boundary down onto y
                rhs[i][i] += q;
            } else {
                for (std::size_t s = 0; s < width; ++s) rhs[i][s] += q * next[i][s];
            }
        }

        // Thomas algorithm, all right-hand sides at once.
        for (std::size_t i = 1; i < m; ++i) {
            const double w = lower[i] / diag[i - 1];
            diag[i] -= w * upper[i - 1];
            for (std::size_t s = 0; s < width; ++s) rhs[i][s] -= w * rhs[i - 1][s];
        }
        std::vector<std::vector<double>> layer(m, std::vector<double>(width, 0.0));
        for (std::size_t i = m; i-- > 0;) {
            for (std::size_t s = 0; s < width; ++s) {
                double v = rhs[i][s];
                if (i + 1 < m) v -= upper[i] * layer[i + 1][s];
                layer[i][s] = v / diag[i];
            }
        }
        next = std::move(layer);
    }

    ExactPmf pmf;
    pmf.mass.assign(width, 0.0);
    for (std::size_t s = 0; s < width; ++s) {
        KahanSum acc;
        for (std::int64_t y = 0; y < n; ++y) {
            acc.add(std::exp(log_binomial_pmf(n, p, y)) * next[static_cast<std::size_t>(y)][s]);
        }
        if (static_cast<std::int64_t>(s) == n) acc.add(std::exp(log_binomial_pmf(n, p, n)));
        pmf.mass[s] = std::max(acc.sum, 0.0);
    }
    return pmf;
}

std::vector<double> occupancy_pmf(std::int64_t n, std::int64_t m) {
    if (n < 1 || m < 0) throw std::domain_error("occupancy_pmf requires n >= 1, m >= 0");
    const auto width = static_cast<std::size_t>(std::min(n, m) + 1);
    const double nd = static_cast<double>(n);
    std::vector<double> cur(width, 0.0), nxt(width, 0.0);
    cur[0] = 1.0;
    for (std::int64_t ball = 0; ball < m; ++ball) {
        std::fill(nxt.begin(), nxt.end(), 0.0);
        for (std::size_t k = 0; k < width; ++k) {
            if (cur[k] == 0.0) continue;
            const double kd = static_cast<double>(k);
            nxt[k] += cur[k] * kd / nd;
            if (k + 1 < width) nxt[k + 1] += cur[k] * (nd - kd) / nd;
        }
        std::swap(cur, nxt);
    }
    return cur;
}

ExactPmf exact_initial_fixed_energy_pmf(std::int64_t n, double p, std::int64_t m) {
    if (n < 1 || n > kMaxFixedEnergyN) {
        throw std::domain_error("fixed-energy oracle requires 1 <= n <= " +
                                std::to_string(kMaxFixedEnergyN));
    }
    if (m < 1 || m > n) throw std::domain_error("fixed-energy oracle requires 1 <= m <= n");
    if (!(p > 0.0 && p <= 1.0)) throw std::domain_error("fixed-energy oracle requires p in (0, 1]");

    const std::vector<double> occupied = occupancy_pmf(n, m);
    const auto width = static_cast<std::size_t>(m + 1);
    std::vector<double> row(width, 0.0);  // Binomial(k, p) pmf, built up in k
    row[0] = 1.0;
    std::vector<KahanSum> acc(width);
    for (std::size_t k = 0; k < occupied.size(); ++k) {
        if (k > 0) {
            for (std::size_t y = k; y > 0; --y) row[y] = row[y] * (1.0 - p) + row[y - 1] * p;
            row[0] *= (1.0 - p);
        }
        for (std::size_t y = 0; y <= k; ++y) acc[y].add(occupied[k] * row[y]);
    }
    ExactPmf pmf;
    pmf.mass.resize(width);
    for (std::size_t y = 0; y < width; ++y) pmf.mass[y] = std::max(acc[y].sum, 0.0);
    return pmf;
}

double exact_fixed_energy_mean(std::int64_t n, double p, std::int64_t m) {
    if (m > n) throw std::domain_error("fixed-energy target m exceeds n");
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("exact_fixed_energy_mean requires p in (0, 1)");
    const ExactPmf start = exact_initial_fixed_energy_pmf(n, p, m);

    // Birth-death first passage: passage[y] = E[steps from y to y + 1]
    //   = 1/up(y) + down(y)/up(y) * passage[y - 1].
    const double nd = static_cast<double>(n);
    std::vector<double> passage(static_cast<std::size_t>(m), 0.0);
    for (std::int64_t y = 0; y < m; ++y) {
        const double yd = static_cast<double>(y);
        const double up = (nd - yd) * p / nd;
        const double down = yd * (1.0 - p) / nd;
        const double prev = y > 0 ? passage[static_cast<std::size_t>(y - 1)] : 0.0;
        passage[static_cast<std::size_t>(y)] = (1.0 + down * prev) / up;
    }
    // to_target[y] = sum_{j >= y} passage[j]
    KahanSum total;
    double suffix = 0.0;
    for (std::int64_t y = m - 1; y >= 0; --y) {
        suffix += passage[static_cast<std::size_t>(y)];
        total.add(start.mass[static_cast<std::size_t>(y)] * suffix);
    }
    return total.sum;
}

}  // namespace arwlab::oracle
