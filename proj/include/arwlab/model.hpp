#ifndef ARWLAB_MODEL_HPP
#define ARWLAB_MODEL_HPP

#include <cstdint>
#include <optional>

namespace arwlab {

/// Model parameters. `p` is stored canonically; use `from_lambda` to build
/// from a sleep rate.
struct Params {
    std::int64_t n = 1;      ///< number of non-sink sites
    double p = 0.5;          ///< sleep probability lambda / (1 + lambda)
    double q = 1.0;          ///< probability that a jump goes to the sink
    std::uint64_t seed = 0;

    static Params from_lambda(std::int64_t n, double lambda, double q, std::uint64_t seed = 0);

    /// Throws std::domain_error unless n >= 1, p in (0, 1], q in [0, 1].
    void validate() const;
};

/// Normalization constants derived from Params.
struct DerivedConstants {
    double p = 0.0;
    double sigma = 0.0;    ///< sqrt(p (1 - p))
    double a_n = 0.0;      ///< sigma sqrt(n)
    double alpha_n = 0.0;  ///< sqrt(p (1 - p) n log n)
    std::optional<double> r_n;      ///< 1 / q; absent when q == 0
    std::optional<double> f_n;      ///< sqrt(2 log(r_n / sqrt n)); absent unless r_n > sqrt n
    std::optional<double> q_prime;  ///< n q / (1 - q); absent when q == 1
};

double derive_p(double lambda);

DerivedConstants constants(const Params& params);

/// x exp(-x^2 / 2) / sqrt(2 pi): asymptotic rate of clustered exceedances of level x.
double mu(double x) noexcept;

/// exp(-e^{-x}).
double gumbel_cdf(double x) noexcept;

/// f_n ((S - pn) / a_n - f_n) - log(sigma / sqrt(2 pi)). Throws when f_n is absent.
double normalize_S(std::int64_t S, std::int64_t n, const DerivedConstants& c);

/// Real-valued inverse of normalize_S: the count whose normalization equals x.
double denormalize_S(double x, std::int64_t n, const DerivedConstants& c);

/// Bernoulli relative entropy D(a || p), a and p in (0, 1).
double kl_bernoulli(double a, double p);

inline constexpr double kEulerGamma = 0.57721566490153286061;
inline constexpr double kPi = 3.14159265358979323846;

}  // namespace arwlab

#endif  // ARWLAB_MODEL_HPP
