#include "arwlab/bup.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

namespace arwlab::bup {

namespace {

void check_count_params(std::int64_t n, double p) {
    if (n < 1) throw std::domain_error("n must be >= 1");
    if (!(p > 0.0 && p <= 1.0)) throw std::domain_error("p must lie in (0, 1]");
}

// Nearest lattice value when v is within roundoff of an integer, else ceil.
std::int64_t lattice_ceil(double v) {
    const double r = std::round(v);
    if (std::abs(v - r) <= 1e-9 * std::max(1.0, std::abs(v))) return static_cast<std::int64_t>(r);
    return static_cast<std::int64_t>(std::ceil(v));
}

double a_n_of(std::int64_t n, double p) { return std::sqrt(p * (1.0 - p) * static_cast<double>(n)); }

struct Occupancy {
    std::int64_t above_spells = 0;  // holding intervals spent at or above the level
    std::int64_t exceed = 0;
    std::int64_t max = 0;
};

}  // namespace

std::int64_t sample_binomial(std::int64_t n, double p, Rng& rng) {
    if (p >= 1.0) return n;
    return std::binomial_distribution<std::int64_t>(n, p)(rng);
}

BupState step_discrete(const BupState& state, const Params& params, Rng& rng) {
    params.validate();
    if (state.absorbed(params.n)) throw std::logic_error("step_discrete called on an absorbed state");
    BupState next = state;
    CountStepper(params.n, params.p, params.q).step(rng, next.y, next.z);
    ++next.t;
    return next;
}

HittingResult run_to_hitting(const Params& params, Rng& rng) {
    return run_to_hitting(params, rng, [](std::uint64_t, std::int64_t, std::int64_t) {});
}

InitialFixedEnergy sample_initial_fixed_energy(std::int64_t n, double p, std::int64_t m, Rng& rng) {
    check_count_params(n, p);
    if (m < 1 || m > n) throw std::domain_error("fixed energy requires 1 <= m <= n");
    const auto nu = static_cast<std::uint64_t>(n);
    std::int64_t occupied = 0;
    for (std::int64_t ball = 0; ball < m; ++ball) {
        // lands on an empty site with probability (n - occupied) / n
        if (rng.below(nu) >= static_cast<std::uint64_t>(occupied)) ++occupied;
    }
    // Extra particles at a site jump to purgatory; the last one sleeps w.p. p.
    const std::int64_t y0 = sample_binomial(occupied, p, rng);
    return {y0, m - y0, occupied};
}

FixedEnergyResult run_fixed_energy(std::int64_t n, double p, std::int64_t m, Rng& rng,
                                   std::uint64_t step_cap) {
    FixedEnergyResult result;
    result.initial = sample_initial_fixed_energy(n, p, m, rng);
    const CountStepper stepper(n, p, 0.0);
    std::int64_t y = result.initial.y0;
    std::int64_t z = 0;
    std::uint64_t t = 0;
    while (y != m && t < step_cap) {
        stepper.step(rng, y, z);
        ++t;
    }
    result.steps = t;
    result.cap_hit = (y != m);
    result.site1_updates =
        std::binomial_distribution<std::int64_t>(static_cast<std::int64_t>(t), 1.0 / static_cast<double>(n))(rng);
    return result;
}

// ---- full state -------------------------------------------------------------

FullStateChain::FullStateChain(std::int64_t n, double p)
    : n_(n), p_(p), values_(static_cast<std::size_t>((n + 63) / 64), 0),
      updated_(static_cast<std::size_t>((n + 63) / 64), 0) {
    check_count_params(n, p);
}

FullStateChain FullStateChain::stationary(std::int64_t n, double p, Rng& rng) {
    FullStateChain chain(n, p);
    for (std::int64_t i = 0; i < n; ++i) {
        if (rng.uniform() < p) {
            chain.values_[static_cast<std::size_t>(i >> 6)] |= 1ULL << (i & 63);
            ++chain.count_;
        }
    }
    return chain;
}

FullStateChain FullStateChain::at_count(std::int64_t n, double p, std::int64_t count) {
    if (count < 0 || count > n) throw std::domain_error("start count outside [0, n]");
    FullStateChain chain(n, p);
    for (std::int64_t i = 0; i < count; ++i) chain.values_[static_cast<std::size_t>(i >> 6)] |= 1ULL << (i & 63);
    chain.count_ = count;
    return chain;
}

FullStateChain FullStateChain::fixed_energy(std::int64_t n, double p, std::int64_t m, Rng& rng) {
    if (m < 1 || m > n) throw std::domain_error("fixed energy requires 1 <= m <= n");
    FullStateChain chain(n, p);
    const auto nu = static_cast<std::uint64_t>(n);
    for (std::int64_t ball = 0; ball < m; ++ball) {
        const auto i = static_cast<std::int64_t>(rng.below(nu));
        auto& word = chain.updated_[static_cast<std::size_t>(i >> 6)];
        const std::uint64_t bit = 1ULL << (i & 63);
        if (!(word & bit)) {
            word |= bit;
            ++chain.distinct_updated_;
            if (rng.uniform() < p) {
                chain.values_[static_cast<std::size_t>(i >> 6)] |= bit;
                ++chain.count_;
            }
        }
    }
    return chain;
}

bool FullStateChain::value(std::int64_t i) const {
    return (values_.at(static_cast<std::size_t>(i >> 6)) >> (i & 63)) & 1ULL;
}

bool FullStateChain::updated(std::int64_t i) const {
    return (updated_.at(static_cast<std::size_t>(i >> 6)) >> (i & 63)) & 1ULL;
}

std::int64_t FullStateChain::popcount() const {
    std::int64_t c = 0;
    for (std::uint64_t w : values_) c += std::popcount(w);
    return c;
}

void FullStateChain::mark() {
    std::fill(updated_.begin(), updated_.end(), 0);
    distinct_updated_ = 0;
}

void FullStateChain::update(std::int64_t i, Rng& rng) {
    const auto w = static_cast<std::size_t>(i >> 6);
    const std::uint64_t bit = 1ULL << (i & 63);
    if (!(updated_[w] & bit)) {
        updated_[w] |= bit;
        ++distinct_updated_;
    }
    const bool was = values_[w] & bit;
    const bool now = rng.uniform() < p_;
    if (now) values_[w] |= bit; else values_[w] &= ~bit;
    count_ += static_cast<std::int64_t>(now) - static_cast<std::int64_t>(was);
}

FullFixedEnergyResult run_fixed_energy_full(std::int64_t n, double p, std::int64_t m, Rng& rng,
                                            std::uint64_t step_cap) {
    FullStateChain chain = FullStateChain::fixed_energy(n, p, m, rng);
    std::uint64_t t = 0;
    while (chain.count() != m && t < step_cap) {
        chain.update_uniform(rng);
        ++t;
    }
    return {t, chain.count() != m, chain.distinct_updated()};
}

// ---- continuous time --------------------------------------------------------

std::int64_t level_count(std::int64_t n, double p, double x) {
    return lattice_ceil(p * static_cast<double>(n) + x * a_n_of(n, p));
}

double x_prime(double x, std::int64_t n, double p) {
    check_count_params(n, p);
    const double a = a_n_of(n, p);
    if (!(a > 0.0)) throw std::domain_error("x_prime requires p < 1");
    const double pn = p * static_cast<double>(n);
    const std::int64_t k = level_count(n, p, x);
    if (k > n) {
        throw std::domain_error("level x = " + std::to_string(x) + " exceeds the maximum supported value " +
                                std::to_string((static_cast<double>(n) - pn) / a));
    }
    return (static_cast<double>(k) - pn) / a;
}

PathStats run_continuous(const Params& params, const ContinuousOptions& options, Rng& rng) {
    params.validate();
    if (!(options.horizon > 0.0)) throw std::domain_error("horizon must be positive");
    if (!(params.q < 1.0)) throw std::domain_error("continuous time requires q < 1 (q' = nq/(1-q))");
    const std::int64_t n = params.n;
    const double p = params.p;
    const double a = a_n_of(n, p);
    if (!(a > 0.0)) throw std::domain_error("continuous time requires p < 1");
    const double pn = p * static_cast<double>(n);
    const double horizon = options.horizon;
    const double q_prime = static_cast<double>(n) * params.q / (1.0 - params.q);

    PathStats stats;
    stats.t_end = horizon;
    stats.level_count = level_count(n, p, options.level);
    const std::int64_t level = stats.level_count;

    auto observe = [&](std::int64_t s, bool& above, Occupancy& occ) {
        const bool now = s >= level;
        if (now && !above) ++occ.exceed;
        above = now;
        occ.max = std::max(occ.max, s);
    };

    Occupancy occ;
    if (options.engine == Engine::kCountOnly) {
        std::int64_t y = options.start.stationary ? sample_binomial(n, p, rng) : options.start.value;
        if (y < 0 || y > n) throw std::domain_error("start value outside [0, n]");
        stats.initial_count = y;
        const auto events = std::poisson_distribution<std::int64_t>(static_cast<double>(n) * horizon)(rng);
        if (q_prime > 0.0) stats.sink_ticks = std::poisson_distribution<std::int64_t>(q_prime * horizon)(rng);
        const CountStepper stepper(n, p, 0.0);
        std::int64_t z = 0;
        bool above = false;
        occ.max = y;
        observe(y, above, occ);
        occ.above_spells = above;
        for (std::int64_t e = 0; e < events; ++e) {
            stepper.step(rng, y, z);
            observe(y, above, occ);
            occ.above_spells += above;
        }
        stats.events = static_cast<std::uint64_t>(events);
        stats.final_count = y;
        const std::int64_t spells = events + 1;
        if (occ.above_spells == 0) {
            stats.occupation = 0.0;
        } else if (occ.above_spells == spells) {
            stats.occupation = horizon;
        } else {
            const double g1 = std::gamma_distribution<double>(static_cast<double>(occ.above_spells))(rng);
            const double g2 = std::gamma_distribution<double>(static_cast<double>(spells - occ.above_spells))(rng);
            stats.occupation = horizon * g1 / (g1 + g2);
        }
    } else {
        FullStateChain chain = options.start.stationary ? FullStateChain::stationary(n, p, rng)
                                                        : FullStateChain::at_count(n, p, options.start.value);
        chain.mark();
        stats.initial_count = chain.count();
        const double rate = static_cast<double>(n) + q_prime;
        std::exponential_distribution<double> holding(rate);
        double t = 0.0;
        bool above = false;
        occ.max = chain.count();
        observe(chain.count(), above, occ);
        while (true) {
            const double next = t + holding(rng);
            if (above) stats.occupation += std::min(next, horizon) - t;
            if (next >= horizon) break;
            t = next;
            if (rng.uniform() < params.q) {
                ++stats.sink_ticks;
            } else {
                chain.update_uniform(rng);
                ++stats.events;
                if (!stats.regeneration_time && chain.distinct_updated() == n) stats.regeneration_time = t;
            }
            observe(chain.count(), above, occ);
        }
        stats.final_count = chain.count();
    }
    stats.max_count = occ.max;
    stats.exceed_count = occ.exceed;
    stats.running_max = (static_cast<double>(occ.max) - pn) / a;
    assert(stats.occupation <= horizon);
    assert(stats.occupation == 0.0 || stats.max_count >= level);
    return stats;
}

double exact_conditional_mean(std::int64_t n, double p, double x_prime_level, double t) {
    return p * static_cast<double>(n) + std::exp(-t) * x_prime_level * a_n_of(n, p);
}

double exact_conditional_variance(std::int64_t n, double p, double x_prime_level, double t) {
    const double e = std::exp(-t);
    const double pn = p * static_cast<double>(n);
    return (1.0 - e) * (pn * (1.0 - p) * (e + 1.0) + x_prime_level * a_n_of(n, p) * e * (1.0 - 2.0 * p));
}

std::int64_t sample_count_at(std::int64_t n, double p, std::int64_t start, double t, Rng& rng) {
    const auto events = std::poisson_distribution<std::int64_t>(static_cast<double>(n) * t)(rng);
    const CountStepper stepper(n, p, 0.0);
    std::int64_t y = start;
    std::int64_t z = 0;
    for (std::int64_t e = 0; e < events; ++e) stepper.step(rng, y, z);
    return y;
}

MomentEstimate conditional_moments(std::int64_t n, double p, double x, double t, std::int64_t reps,
                                   Rng& rng) {
    if (!(t > 0.0)) throw std::domain_error("t must be positive");
    if (reps < 2) throw std::domain_error("need at least two replicates");
    MomentEstimate est;
    est.reps = reps;
    est.x_prime = x_prime(x, n, p);
    est.start_count = level_count(n, p, x);
    std::vector<double> samples(static_cast<std::size_t>(reps));
    for (auto& s : samples) s = static_cast<double>(sample_count_at(n, p, est.start_count, t, rng));

    const double r = static_cast<double>(reps);
    double sum = 0.0;
    for (double s : samples) sum += s;
    est.mean = sum / r;
    double m2 = 0.0;
    double m4 = 0.0;
    for (double s : samples) {
        const double d2 = (s - est.mean) * (s - est.mean);
        m2 += d2;
        m4 += d2 * d2;
    }
    est.variance = m2 / (r - 1.0);
    est.mean_se = std::sqrt(est.variance / r);
    const double pop_var = m2 / r;
    est.variance_se = std::sqrt(std::max(m4 / r - pop_var * pop_var, 0.0) / r);
    est.exact_mean = exact_conditional_mean(n, p, est.x_prime, t);
    est.exact_variance = exact_conditional_variance(n, p, est.x_prime, t);
    return est;
}

MeanEstimate cluster_occupation(std::int64_t n, double p, double x, std::int64_t reps, Rng& rng) {
    if (reps < 2) throw std::domain_error("need at least two replicates");
    ContinuousOptions options;
    options.horizon = std::log(static_cast<double>(n));
    options.level = x;
    options.start = Start::at_value(level_count(n, p, x));
    x_prime(x, n, p);  // validates the level
    const Params params{n, p, 0.0, 0};
    double sum = 0.0;
    double sum2 = 0.0;
    for (std::int64_t r = 0; r < reps; ++r) {
        const double l = run_continuous(params, options, rng).occupation;
        sum += l;
        sum2 += l * l;
    }
    MeanEstimate est;
    const double rd = static_cast<double>(reps);
    est.reps = reps;
    est.mean = sum / rd;
    est.se = std::sqrt(std::max(sum2 / rd - est.mean * est.mean, 0.0) / (rd - 1.0));
    est.outside_regime = x * x < std::log(static_cast<double>(n)) || x > std::pow(static_cast<double>(n), 1.0 / 6.0);
    return est;
}

// ---- boundary levels ----------------------------------------------------------

LevelMaxima maxima_between_levels(const Params& params, std::span<const double> levels, Rng& rng,
                                  bool stop_at_hitting) {
    params.validate();
    if (!(params.q > 0.0)) throw std::domain_error("maxima_between_levels requires q > 0");
    if (levels.empty()) throw std::domain_error("need at least one level");
    const std::int64_t n = params.n;
    std::vector<std::int64_t> z_at;  // t(b) is the first step with z >= n - floor(b)
    for (std::size_t k = 0; k < levels.size(); ++k) {
        if (!(levels[k] > 0.0 && levels[k] <= static_cast<double>(n))) {
            throw std::domain_error("levels must lie in (0, n]");
        }
        if (k > 0 && !(levels[k] < levels[k - 1])) throw std::domain_error("levels must be decreasing");
        z_at.push_back(n - static_cast<std::int64_t>(std::floor(levels[k])));
    }

    LevelMaxima result;
    const std::size_t count = levels.size();
    result.intervals.resize(count);
    auto& iv = result.intervals;
    std::size_t current = 0;
    std::int64_t y = sample_binomial(n, params.p, rng);
    std::int64_t z = 0;
    std::uint64_t t = 0;

    auto advance = [&] {
        while (current < count && z >= z_at[current]) {
            iv[current].t_end = t;
            ++current;
            if (current < count) iv[current].t_begin = t;
        }
    };
    auto record = [&] {
        auto& m = iv[current].max;
        m = m ? std::max(*m, y) : y;
    };

    const CountStepper stepper(n, params.p, params.q);
    advance();
    while (current < count) {
        record();
        if (!result.hitting && y + z == n) {
            result.hitting = HittingResult{y, t, z};
            if (stop_at_hitting) {
                for (std::size_t k = current; k < count; ++k) {
                    iv[k].truncated = true;
                    if (k > current) iv[k].t_begin = t + 1;
                    iv[k].t_end = t + 1;
                }
                break;
            }
        }
        stepper.step(rng, y, z);
        ++t;
        advance();
    }
    if (result.hitting) {
        for (auto& interval : iv) interval.extends_past_hitting = interval.t_end > result.hitting->steps + 1;
    }
    return result;
}

WindowThresholds window_thresholds(std::int64_t n, double p, double eps) {
    const double alpha = constants(Params{n, p, 1.0, 0}).alpha_n;
    const double pn = p * static_cast<double>(n);
    return {pn + 2.0 * alpha, pn + (1.0 + eps) * alpha, pn + (1.0 - eps / 2.0) * alpha,
            pn + (1.0 - eps) * alpha};
}

}  // namespace arwlab::bup
