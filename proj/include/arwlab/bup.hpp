#ifndef ARWLAB_BUP_HPP
#define ARWLAB_BUP_HPP

#include <cassert>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "arwlab/model.hpp"
#include "arwlab/rng.hpp"

// Binomial update process: a uniform coordinate of an n-bit vector is
// resampled Bernoulli(p) each step, except on lazy (sink) steps of
// probability q, which lower the boundary B = n - Z by one.
namespace arwlab::bup {

struct BupState {
    std::int64_t y = 0;  ///< number of ones
    std::int64_t z = 0;  ///< lazy steps so far
    std::uint64_t t = 0;

    [[nodiscard]] bool absorbed(std::int64_t n) const noexcept { return y == n - z; }
};

/// One step of the count chain. Only the count is needed: coordinate c is
/// drawn uniformly and is a one iff c < y (coordinates sorted by value).
class CountStepper {
public:
    CountStepper(std::int64_t n, double p, double q)
        : n_(static_cast<std::uint64_t>(n)), q_(q), one_cut_(q + (1.0 - q) * p) {}

    /// One uniform picks lazy (u < q) or the new value (1 iff u < q + (1-q)p);
    /// a second draw picks the coordinate. Only a compare depends on y.
    void step(Rng& rng, std::int64_t& y, std::int64_t& z) const noexcept {
        const double u = rng.uniform();
        const auto c = static_cast<std::int64_t>(rng.below(n_));
        const std::int64_t lazy = u < q_;
        const std::int64_t resample_one = (u < one_cut_) & (lazy ^ 1);
        const std::int64_t resample_zero = static_cast<std::int64_t>(u >= one_cut_);
        const std::int64_t was_one = c < y;
        z += lazy;
        y += (resample_one & (was_one ^ 1)) - (resample_zero & was_one);
    }

private:
    std::uint64_t n_;
    double q_;
    double one_cut_;
};

/// Throws std::logic_error on an absorbed state.
BupState step_discrete(const BupState& state, const Params& params, Rng& rng);

struct HittingResult {
    std::int64_t y_final = 0;
    std::uint64_t steps = 0;  ///< hitting time: first step with Y = n - Z
    std::int64_t z_final = 0;
};

std::int64_t sample_binomial(std::int64_t n, double p, Rng& rng);

/// Runs from Y(0) ~ Binomial(n, p), Z(0) = 0 to the first step with
/// Y = n - Z, calling observe(t, y, z) for t = 0 and after every step.
template <class Observer>
HittingResult run_to_hitting(const Params& params, Rng& rng, Observer&& observe) {
    params.validate();
    if (!(params.q > 0.0)) throw std::domain_error("run_to_hitting requires q > 0");
    const std::int64_t n = params.n;
    const CountStepper stepper(n, params.p, params.q);
    std::int64_t y = sample_binomial(n, params.p, rng);
    std::int64_t z = 0;
    std::uint64_t t = 0;
    observe(t, y, z);
    // y + z grows by at most one per step, so the first exceedance of the
    // boundary is a hit.
    while (y + z < n) {
        stepper.step(rng, y, z);
        ++t;
        observe(t, y, z);
    }
    assert(y + z == n);
    return {y, t, z};
}

HittingResult run_to_hitting(const Params& params, Rng& rng);

// ---- fixed energy (q = 0) -------------------------------------------------

struct InitialFixedEnergy {
    std::int64_t y0 = 0;             ///< sleeping particles after the initial toppling
    std::int64_t initial_jumps = 0;  ///< particles sent to purgatory, m - y0
    std::int64_t occupied = 0;       ///< sites receiving at least one particle
};

/// Throws m particles uniformly on [n] and topples each occupied site until
/// one particle remains there, which then sleeps with probability p.
InitialFixedEnergy sample_initial_fixed_energy(std::int64_t n, double p, std::int64_t m, Rng& rng);

struct FixedEnergyResult {
    std::uint64_t steps = 0;  ///< hitting time of m, or steps run when the cap was hit
    bool cap_hit = false;
    std::int64_t site1_updates = 0;  ///< Binomial(steps, 1/n) updates at a fixed site
    InitialFixedEnergy initial;

    [[nodiscard]] std::optional<std::uint64_t> hitting_time() const {
        return cap_hit ? std::nullopt : std::optional<std::uint64_t>(steps);
    }
};

FixedEnergyResult run_fixed_energy(std::int64_t n, double p, std::int64_t m, Rng& rng,
                                   std::uint64_t step_cap);

// ---- full state -----------------------------------------------------------

/// Coordinate-level engine: values plus an updated-since-mark bit per
/// coordinate, for identity-dependent quantities (regeneration time, visited
/// sites).
class FullStateChain {
public:
    /// Coordinates i.i.d. Bernoulli(p).
    static FullStateChain stationary(std::int64_t n, double p, Rng& rng);
    /// Exactly `count` ones (the first `count` coordinates).
    static FullStateChain at_count(std::int64_t n, double p, std::int64_t count);
    /// Fixed-energy start: m particles thrown on [n]; occupied sites count as
    /// updated (visited) and carry Bernoulli(p) values, the rest are zero.
    static FullStateChain fixed_energy(std::int64_t n, double p, std::int64_t m, Rng& rng);

    [[nodiscard]] std::int64_t n() const noexcept { return n_; }
    [[nodiscard]] std::int64_t count() const noexcept { return count_; }
    [[nodiscard]] std::int64_t distinct_updated() const noexcept { return distinct_updated_; }
    [[nodiscard]] bool value(std::int64_t i) const;
    [[nodiscard]] bool updated(std::int64_t i) const;
    [[nodiscard]] std::int64_t popcount() const;

    /// Clears the updated bits; regeneration is measured from here.
    void mark();
    /// Resamples coordinate i.
    void update(std::int64_t i, Rng& rng);
    /// Resamples a uniform coordinate.
    void update_uniform(Rng& rng) { update(static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(n_))), rng); }

private:
    FullStateChain(std::int64_t n, double p);

    std::int64_t n_;
    double p_;
    std::vector<std::uint64_t> values_;
    std::vector<std::uint64_t> updated_;
    std::int64_t count_ = 0;
    std::int64_t distinct_updated_ = 0;
};

struct FullFixedEnergyResult {
    std::uint64_t steps = 0;
    bool cap_hit = false;
    std::int64_t visited = 0;  ///< n_t at the end
};

FullFixedEnergyResult run_fixed_energy_full(std::int64_t n, double p, std::int64_t m, Rng& rng,
                                            std::uint64_t step_cap);

// ---- continuous time ------------------------------------------------------

enum class Engine { kCountOnly, kFullState };

struct Start {
    bool stationary = true;
    std::int64_t value = 0;

    static Start stationary_law() { return {true, 0}; }
    static Start at_value(std::int64_t v) { return {false, v}; }
};

struct ContinuousOptions {
    Engine engine = Engine::kCountOnly;
    double horizon = 1.0;
    double level = 0.0;  ///< x, on the normalized scale s = (S - pn) / a_n
    Start start{};
};

/// Statistics of s(t) over [0, horizon].
struct PathStats {
    double running_max = 0.0;  ///< max of s over the window
    double occupation = 0.0;   ///< time with s >= level
    std::int64_t exceed_count = 0;  ///< excursions into {s >= level}, one in progress at t = 0 included
    double t_start = 0.0;
    double t_end = 0.0;
    std::int64_t initial_count = 0;
    std::int64_t final_count = 0;  ///< S(horizon)
    std::int64_t max_count = 0;
    std::int64_t level_count = 0;  ///< integer threshold for s >= level
    std::uint64_t events = 0;      ///< coordinate updates
    std::int64_t sink_ticks = 0;   ///< full-state engine only
    std::optional<double> regeneration_time;  ///< full-state engine only
};

/// Smallest count S with (S - pn) / a_n >= x, robust to roundoff at lattice points.
std::int64_t level_count(std::int64_t n, double p, double x);

/// Smallest x' >= x on the lattice of s(t). Throws above (1 - p) n / a_n.
double x_prime(double x, std::int64_t n, double p);

/// Continuous-time process: coordinates update at rate 1 each, the sink at
/// rate q' = n q / (1 - q).
///
/// The count-only engine draws the number of coordinate updates in the window
/// as Poisson(n T) and runs the embedded chain. Holding times are i.i.d. and
/// independent of the embedded chain, so given N updates the window is cut
/// into N + 1 exchangeable uniform spacings and the occupation time is
/// T * Beta(k, N + 1 - k), with k the number of spacings spent above the
/// level. The full-state engine draws every exponential holding time.
PathStats run_continuous(const Params& params, const ContinuousOptions& options, Rng& rng);

/// Exact E[S(t) | S(0) = pn + x' a_n] = pn + e^{-t} x' a_n.
double exact_conditional_mean(std::int64_t n, double p, double x_prime_level, double t);
/// Exact Var[S(t) | S(0) = pn + x' a_n]
///   = (1 - e^{-t}) [pn(1 - p)(1 + e^{-t}) + x' a_n e^{-t} (1 - 2p)].
double exact_conditional_variance(std::int64_t n, double p, double x_prime_level, double t);

struct MomentEstimate {
    std::int64_t reps = 0;
    std::int64_t start_count = 0;
    double x_prime = 0.0;
    double mean = 0.0;
    double mean_se = 0.0;
    double variance = 0.0;
    double variance_se = 0.0;
    double exact_mean = 0.0;
    double exact_variance = 0.0;
};

/// Sample moments of S(t) started from pn + x' a_n (q = 0), with standard errors.
MomentEstimate conditional_moments(std::int64_t n, double p, double x, double t, std::int64_t reps,
                                   Rng& rng);

/// S(t) for one path of the q = 0 count chain started at `start`.
std::int64_t sample_count_at(std::int64_t n, double p, std::int64_t start, double t, Rng& rng);

struct MeanEstimate {
    double mean = 0.0;
    double se = 0.0;
    std::int64_t reps = 0;
    bool outside_regime = false;  ///< x^2 < log n or x > n^{1/6}
};

/// Mean occupation above x over [0, log n], started from x', q = 0.
MeanEstimate cluster_occupation(std::int64_t n, double p, double x, std::int64_t reps, Rng& rng);

// ---- boundary levels ------------------------------------------------------

struct IntervalMax {
    std::optional<std::int64_t> max;  ///< empty for an empty interval
    std::uint64_t t_begin = 0;        ///< first step in the interval
    std::uint64_t t_end = 0;          ///< one past the last step
    bool extends_past_hitting = false;
    bool truncated = false;           ///< cut short at the hitting time

    [[nodiscard]] double max_or_sentinel() const {
        return max ? static_cast<double>(*max) : -std::numeric_limits<double>::infinity();
    }
};

struct LevelMaxima {
    /// intervals[0] = [0, t(z_0)); intervals[k] = [t(z_{k-1}), t(z_k)).
    std::vector<IntervalMax> intervals;
    std::optional<HittingResult> hitting;  ///< empty if not reached before t(z_last)
};

/// Maxima of Y between the times t(b) = min{t : B(t) <= b} for the
/// decreasing levels. Without stop_at_hitting the free chain runs on past the
/// hitting time until t(z_last).
LevelMaxima maxima_between_levels(const Params& params, std::span<const double> levels, Rng& rng,
                                  bool stop_at_hitting = false);

struct WindowThresholds {
    double k1, k2, k3, k4;
};

/// pn + {2, 1 + eps, 1 - eps/2, 1 - eps} alpha_n.
WindowThresholds window_thresholds(std::int64_t n, double p, double eps);

}  // namespace arwlab::bup

#endif  // ARWLAB_BUP_HPP
