#include "arwlab/arw.hpp"

#include <algorithm>
#include <cassert>
#include <deque>
#include <set>

namespace arwlab::arw {

Configuration Configuration::empty(std::int64_t n) {
    if (n < 1) throw std::domain_error("configuration needs n >= 1");
    Configuration c;
    c.sites.assign(static_cast<std::size_t>(n), Site{});
    return c;
}

Configuration Configuration::all_active(std::int64_t n) {
    Configuration c = empty(n);
    for (auto& s : c.sites) s.particles = 1;
    c.total = n;
    return c;
}

std::int64_t Configuration::sleeping_count() const noexcept {
    return std::count_if(sites.begin(), sites.end(), [](const Site& s) { return s.sleeping; });
}

std::int64_t Configuration::particles_on_sites() const noexcept {
    std::int64_t sum = 0;
    for (const auto& s : sites) sum += s.particles;
    return sum;
}

bool Configuration::stable() const noexcept {
    return std::none_of(sites.begin(), sites.end(), [](const Site& s) { return s.active(); });
}

void Configuration::add_active(std::int64_t site) {
    Site& s = sites.at(static_cast<std::size_t>(site));
    s.particles += 1;
    s.sleeping = false;
    total += 1;
}

Instruction generated_instruction(std::uint64_t seed, std::uint32_t site, std::uint64_t index,
                                  const Params& params) {
    const std::uint64_t key = mix64(mix64(seed ^ mix64(site)) + index);
    const double u_sleep = static_cast<double>(key >> 11) * 0x1.0p-53;
    if (u_sleep < params.p) return Instruction::sleep();
    const std::uint64_t k2 = mix64(key);
    const double u_sink = static_cast<double>(k2 >> 11) * 0x1.0p-53;
    if (u_sink < params.q) return Instruction::to_sink();
    const std::uint64_t k3 = mix64(k2);
    const auto n = static_cast<std::uint64_t>(params.n);
    const auto target = static_cast<std::uint32_t>((static_cast<unsigned __int128>(k3) * n) >> 64);
    return Instruction::to_site(target);
}

InstructionTape::InstructionTape(std::int64_t n, std::uint64_t seed)
    : seed_(seed), runs_(static_cast<std::size_t>(n)) {
    if (n < 1) throw std::domain_error("tape needs n >= 1");
}

Instruction InstructionTape::at(std::uint32_t site, std::uint64_t index, const Params& params) {
    auto& run = runs_.at(site);
    while (run.size() <= index) run.push_back(generated_instruction(seed_, site, run.size(), params));
    return run[index];
}

void InstructionTape::set_run(std::uint32_t site, std::vector<Instruction> instructions) {
    runs_.at(site) = std::move(instructions);
}

namespace {

class TapeSource {
public:
    TapeSource(InstructionTape& tape, const Params& params, std::optional<InstructionRef> skip)
        : tape_(tape), params_(params), cursor_(static_cast<std::size_t>(tape.n()), 0), skip_(skip) {}

    Instruction next(std::uint32_t site, bool /*multi*/) {
        std::uint64_t& c = cursor_[site];
        if (skip_ && skip_->site == site && skip_->index == c) ++c;
        return tape_.at(site, c++, params_);
    }

private:
    InstructionTape& tape_;
    const Params& params_;
    std::vector<std::uint64_t> cursor_;
    std::optional<InstructionRef> skip_;
};

class StreamSource {
public:
    StreamSource(Rng& rng, const Params& params, std::uint64_t cap)
        : rng_(rng), p_(params.p), q_(params.q), n_(static_cast<std::uint64_t>(params.n)), cap_(cap) {}

    Instruction next(std::uint32_t /*site*/, bool multi) {
        if (multi) {
            // Sleeps are no-ops here; with p = 1 no Jump ever comes.
            if (p_ >= 1.0) throw StabilizationCapError(cap_);
            return jump();
        }
        if (rng_.uniform() < p_) return Instruction::sleep();
        return jump();
    }

private:
    Instruction jump() {
        if (q_ > 0.0 && rng_.uniform() < q_) return Instruction::to_sink();
        return Instruction::to_site(static_cast<std::uint32_t>(rng_.below(n_)));
    }

    Rng& rng_;
    double p_;
    double q_;
    std::uint64_t n_;
    std::uint64_t cap_;
};

template <class Source>
class Stabilizer {
public:
    Stabilizer(Configuration& config, Source& source, const StabilizeOptions& options)
        : config_(config), source_(source), options_(options) {
        if (options.record_per_site) out_.per_site_jumps.assign(config.sites.size(), 0);
    }

    StabilizationOutcome run(Rng* order_rng) {
        switch (options_.policy.order) {
            case Order::kFifo: run_fifo(); break;
            case Order::kLowestIndex: run_lowest_index(); break;
            case Order::kRandom: run_random(*order_rng); break;
        }
        out_.sleep_count = config_.sleeping_count();
        assert(config_.stable());
        return std::move(out_);
    }

private:
    static constexpr std::int64_t kNone = -1;

    // Executes one instruction at an active site; returns the site that
    // received a particle, or kNone.
    std::int64_t topple_once(std::uint32_t x) {
        Site& s = config_.sites[x];
        const bool multi = s.particles >= 2;
        if (++out_.executions > options_.step_cap) throw StabilizationCapError(options_.step_cap);
        const Instruction ins = source_.next(x, multi);
        if (ins.is_sleep()) {
            if (!multi) s.sleeping = true;
            return kNone;
        }
        ++out_.jump_count;
        if (!out_.per_site_jumps.empty()) ++out_.per_site_jumps[x];
        s.particles -= 1;
        if (ins.is_sink()) {
            ++config_.sink_count;
            ++out_.sink_arrivals;
            return kNone;
        }
        const std::uint32_t t = ins.target();
        Site& d = config_.sites[t];
        d.particles += 1;
        d.sleeping = false;
        assert(config_.particles_on_sites() + config_.sink_count == config_.total);
        return t;
    }

    void run_fifo() {
        std::deque<std::uint32_t> queue;
        std::vector<std::uint8_t> queued(config_.sites.size(), 0);
        for (std::uint32_t i = 0; i < config_.sites.size(); ++i) {
            if (config_.sites[i].active()) {
                queue.push_back(i);
                queued[i] = 1;
            }
        }
        while (!queue.empty()) {
            const std::uint32_t x = queue.front();
            queue.pop_front();
            queued[x] = 0;
            while (config_.sites[x].active()) {
                const std::int64_t t = topple_once(x);
                if (t != kNone && t != x && !queued[static_cast<std::size_t>(t)]) {
                    queue.push_back(static_cast<std::uint32_t>(t));
                    queued[static_cast<std::size_t>(t)] = 1;
                }
            }
        }
    }

    void run_lowest_index() {
        std::set<std::uint32_t> active;
        for (std::uint32_t i = 0; i < config_.sites.size(); ++i) {
            if (config_.sites[i].active()) active.insert(i);
        }
        while (!active.empty()) {
            const std::uint32_t x = *active.begin();
            const std::int64_t t = topple_once(x);
            if (!config_.sites[x].active()) active.erase(active.begin());
            if (t != kNone) active.insert(static_cast<std::uint32_t>(t));
        }
    }

    void run_random(Rng& rng) {
        std::vector<std::uint32_t> active;
        std::vector<std::int64_t> slot(config_.sites.size(), kNone);
        auto add = [&](std::uint32_t i) {
            if (slot[i] != kNone) return;
            slot[i] = static_cast<std::int64_t>(active.size());
            active.push_back(i);
        };
        auto remove = [&](std::uint32_t i) {
            const auto k = static_cast<std::size_t>(slot[i]);
            active[k] = active.back();
            slot[active[k]] = static_cast<std::int64_t>(k);
            active.pop_back();
            slot[i] = kNone;
        };
        for (std::uint32_t i = 0; i < config_.sites.size(); ++i) {
            if (config_.sites[i].active()) add(i);
        }
        while (!active.empty()) {
            const std::uint32_t x = active[rng.below(active.size())];
            const std::int64_t t = topple_once(x);
            if (!config_.sites[x].active()) remove(x);
            if (t != kNone) add(static_cast<std::uint32_t>(t));
        }
    }

    Configuration& config_;
    Source& source_;
    const StabilizeOptions& options_;
    StabilizationOutcome out_;
};

void check_stabilizable(const Configuration& config, const Params& params) {
    params.validate();
    if (config.n() != params.n) throw std::invalid_argument("configuration size differs from params.n");
    if (params.q == 0.0 && config.total - config.sink_count > params.n) {
        throw std::domain_error("with q = 0 more than n particles can never stabilize");
    }
}

}  // namespace

StabilizationOutcome stabilize(Configuration& config, const Params& params, InstructionTape& tape,
                               const StabilizeOptions& options) {
    check_stabilizable(config, params);
    if (tape.n() != params.n) throw std::invalid_argument("tape size differs from params.n");
    TapeSource source(tape, params, options.skip);
    Stabilizer<TapeSource> stabilizer(config, source, options);
    Rng order_rng(options.policy.seed);
    return stabilizer.run(&order_rng);
}

StabilizationOutcome stabilize(Configuration& config, const Params& params, Rng& rng,
                               const StabilizeOptions& options) {
    check_stabilizable(config, params);
    StreamSource source(rng, params, options.step_cap);
    Stabilizer<StreamSource> stabilizer(config, source, options);
    Rng order_rng(options.policy.seed);
    return stabilizer.run(&order_rng);
}

StabilizationOutcome sample_stationary_S(const Params& params, Rng& rng) {
    if (!(params.q > 0.0)) throw std::domain_error("stationary sampling requires q > 0");
    if (!(params.p < 1.0)) throw std::domain_error("stationary sampling requires p < 1");
    Configuration config = Configuration::all_active(params.n);
    return stabilize(config, params, rng);
}

std::vector<StabilizationOutcome> drive_dissipate(Configuration& config, const Params& params,
                                                  std::int64_t steps, Rng& rng) {
    if (!(params.q > 0.0)) throw std::domain_error("driven-dissipative chain requires q > 0");
    if (steps < 0) throw std::domain_error("steps must be nonnegative");
    std::vector<StabilizationOutcome> outcomes;
    outcomes.reserve(static_cast<std::size_t>(steps));
    const auto n = static_cast<std::uint64_t>(params.n);
    for (std::int64_t t = 0; t < steps; ++t) {
        config.add_active(static_cast<std::int64_t>(rng.below(n)));
        outcomes.push_back(stabilize(config, params, rng));
    }
    return outcomes;
}

PurgatoryRun stabilize_via_purgatory(const Params& params, Rng& rng, std::uint64_t step_cap) {
    params.validate();
    if (!(params.q > 0.0)) throw std::domain_error("purgatory stabilization requires q > 0");
    const std::int64_t n = params.n;
    const double p = params.p;
    const double q = params.q;

    PurgatoryRun run;
    StabilizationOutcome& out = run.outcome;
    std::vector<std::uint8_t> sleeping(static_cast<std::size_t>(n), 0);
    std::int64_t y = 0;
    std::int64_t z = 0;
    std::int64_t purgatory = 0;

    auto count_execution = [&] {
        if (++out.executions > step_cap) throw StabilizationCapError(step_cap);
    };

    // Step 0: topple every site once; each particle sleeps or enters purgatory.
    for (std::int64_t i = 0; i < n; ++i) {
        count_execution();
        if (rng.uniform() < p) {
            sleeping[static_cast<std::size_t>(i)] = 1;
            ++y;
        } else {
            ++purgatory;
            ++out.jump_count;
        }
    }
    run.trace.emplace_back(y, z);

    std::uint64_t departures = 0;
    while (purgatory > 0) {
        count_execution();
        ++departures;
        --purgatory;
        if (rng.uniform() < q) {
            ++z;
        } else {
            const auto i = static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(n)));
            if (sleeping[i]) {
                // Two awake particles: Sleeps are no-ops until one jumps out.
                if (p >= 1.0) throw StabilizationCapError(step_cap);
                count_execution();
                ++out.jump_count;
                ++purgatory;
                sleeping[i] = 0;
                --y;
            }
            count_execution();
            if (rng.uniform() < p) {
                sleeping[i] = 1;
                ++y;
            } else {
                ++out.jump_count;
                ++purgatory;
            }
        }
        assert(y + z + purgatory == n);
        run.trace.emplace_back(y, z);
    }

    out.sleep_count = y;
    out.sink_arrivals = z;
    out.steps = departures;
    return run;
}

bool check_abelian(const Configuration& initial, const Params& params, const InstructionTape& tape,
                   std::span<const TopplingPolicy> policies,
                   std::span<const std::optional<InstructionRef>> faults) {
    if (!faults.empty() && faults.size() != policies.size()) {
        throw std::invalid_argument("faults must be empty or parallel to policies");
    }
    std::optional<std::pair<Configuration, std::uint64_t>> reference;
    for (std::size_t k = 0; k < policies.size(); ++k) {
        Configuration config = initial;
        InstructionTape replay = tape;
        StabilizeOptions options;
        options.policy = policies[k];
        if (!faults.empty()) options.skip = faults[k];
        const StabilizationOutcome out = stabilize(config, params, replay, options);
        if (!reference) {
            reference.emplace(std::move(config), out.jump_count);
        } else if (config != reference->first || out.jump_count != reference->second) {
            return false;
        }
    }
    return true;
}

}  // namespace arwlab::arw
