#ifndef ARWLAB_ORACLE_HPP
#define ARWLAB_ORACLE_HPP

#include <cstdint>
#include <vector>

namespace arwlab::oracle {

/// Probability mass function on {0, ..., n}.
struct ExactPmf {
    std::vector<double> mass;

    [[nodiscard]] std::int64_t n() const noexcept { return static_cast<std::int64_t>(mass.size()) - 1; }
    [[nodiscard]] double total() const;
    [[nodiscard]] double mean() const;
};

/// Largest n accepted by exact_final_pmf; the state space has (n+1)^2 states.
inline constexpr std::int64_t kMaxExactN = 12;

/// Largest n accepted by exact_fixed_energy_mean.
inline constexpr std::int64_t kMaxFixedEnergyN = 2000;

/// Exact law of Y at the first step with Y = n - Z for the binomial update
/// process started from Y ~ Binomial(n, p), Z = 0.
///
/// Layers of constant Z are eliminated from Z = n - 1 down to Z = 0; inside a
/// layer the first-step equations are tridiagonal in Y and are solved for all
/// n + 1 absorption outcomes at once.
ExactPmf exact_final_pmf(std::int64_t n, double p, double q);

/// Law of the sleeping count after the initial toppling of m particles thrown
/// uniformly on n sites: mixture over the occupied-site count O of Binomial(O, p).
ExactPmf exact_initial_fixed_energy_pmf(std::int64_t n, double p, std::int64_t m);

/// E[number of count-chain steps until Y = m] with q = 0, averaged over the
/// initial law above.
double exact_fixed_energy_mean(std::int64_t n, double p, std::int64_t m);

/// Exact law of the occupied-site count after throwing m balls into n bins.
std::vector<double> occupancy_pmf(std::int64_t n, std::int64_t m);

/// log P(Binomial(n, p) = k), accurate to a few ulps in the probability
/// (saddle-point form with Stirling remainders).
double log_binomial_pmf(std::int64_t n, double p, std::int64_t k);

/// P(Binomial(n, p) >= k). Sums whichever tail is away from the mode.
double binomial_tail(std::int64_t n, double p, std::int64_t k);

}  // namespace arwlab::oracle

#endif  // ARWLAB_ORACLE_HPP
