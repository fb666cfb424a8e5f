#include "arwlab/model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace arwlab {

Params Params::from_lambda(std::int64_t n, double lambda, double q, std::uint64_t seed) {
    Params params{n, derive_p(lambda), q, seed};
    params.validate();
    return params;
}

void Params::validate() const {
    if (n < 1) throw std::domain_error("n must be >= 1, got " + std::to_string(n));
    if (!(p > 0.0 && p <= 1.0)) throw std::domain_error("p must lie in (0, 1]");
    if (!(q >= 0.0 && q <= 1.0)) throw std::domain_error("q must lie in [0, 1]");
}

double derive_p(double lambda) {
    if (!(lambda > 0.0) || std::isinf(lambda)) {
        throw std::domain_error("lambda must be a positive finite real");
    }
    return lambda / (1.0 + lambda);
}

DerivedConstants constants(const Params& params) {
    params.validate();
    const double n = static_cast<double>(params.n);
    const double p = params.p;

    DerivedConstants c;
    c.p = p;
    c.sigma = std::sqrt(p * (1.0 - p));
    c.a_n = c.sigma * std::sqrt(n);
    c.alpha_n = std::sqrt(p * (1.0 - p) * n * std::log(n));
    if (params.q > 0.0) {
        c.r_n = 1.0 / params.q;
        if (*c.r_n > std::sqrt(n)) c.f_n = std::sqrt(2.0 * std::log(*c.r_n / std::sqrt(n)));
    }
    if (params.q < 1.0) c.q_prime = n * params.q / (1.0 - params.q);
    return c;
}

double mu(double x) noexcept {
    return x * std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi);
}

double gumbel_cdf(double x) noexcept {
    if (x == -std::numeric_limits<double>::infinity()) return 0.0;
    return std::exp(-std::exp(-x));
}

namespace {

double require_fn(const DerivedConstants& c) {
    if (!c.f_n) throw std::domain_error("f_n is undefined (requires r_n > sqrt(n))");
    if (!(c.a_n > 0.0)) throw std::domain_error("a_n must be positive (p < 1)");
    return *c.f_n;
}

}  // namespace

double normalize_S(std::int64_t S, std::int64_t n, const DerivedConstants& c) {
    const double fn = require_fn(c);
    const double s = (static_cast<double>(S) - c.p * static_cast<double>(n)) / c.a_n;
    return fn * (s - fn) - std::log(c.sigma / std::sqrt(2.0 * kPi));
}

double denormalize_S(double x, std::int64_t n, const DerivedConstants& c) {
    const double fn = require_fn(c);
    const double s = fn + (x + std::log(c.sigma / std::sqrt(2.0 * kPi))) / fn;
    return c.p * static_cast<double>(n) + s * c.a_n;
}

double kl_bernoulli(double a, double p) {
    if (!(a > 0.0 && a < 1.0) || !(p > 0.0 && p < 1.0)) {
        throw std::domain_error("kl_bernoulli arguments must lie in (0, 1)");
    }
    return a * std::log(a / p) + (1.0 - a) * std::log((1.0 - a) / (1.0 - p));
}

}  // namespace arwlab
