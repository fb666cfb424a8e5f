#ifndef ARWLAB_ARW_HPP
#define ARWLAB_ARW_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "arwlab/model.hpp"
#include "arwlab/rng.hpp"

// Direct activated random walk on the looped complete graph with a sink.
namespace arwlab::arw {

/// A site is Empty (0 particles), Sleeping (1 particle, asleep) or
/// Active (k >= 1 particles, awake).
struct Site {
    std::uint32_t particles = 0;
    bool sleeping = false;

    [[nodiscard]] bool active() const noexcept { return particles > 0 && !sleeping; }
    bool operator==(const Site&) const = default;
};

struct Configuration {
    std::vector<Site> sites;
    std::int64_t sink_count = 0;
    std::int64_t total = 0;  ///< particles on sites + sink_count

    static Configuration empty(std::int64_t n);
    static Configuration all_active(std::int64_t n);  ///< 1_[n]

    [[nodiscard]] std::int64_t n() const noexcept { return static_cast<std::int64_t>(sites.size()); }
    [[nodiscard]] std::int64_t sleeping_count() const noexcept;
    [[nodiscard]] std::int64_t particles_on_sites() const noexcept;
    [[nodiscard]] bool stable() const noexcept;

    /// Drops one awake particle on `site`, waking a sleeper there.
    void add_active(std::int64_t site);

    bool operator==(const Configuration&) const = default;
};

/// Wire code: 0 = Sleep, 1 = Jump to sink, 2 + j = Jump to site j.
struct Instruction {
    std::uint32_t code = 0;

    static constexpr std::uint32_t kSleep = 0;
    static constexpr std::uint32_t kSink = 1;

    static constexpr Instruction sleep() noexcept { return {kSleep}; }
    static constexpr Instruction to_sink() noexcept { return {kSink}; }
    static constexpr Instruction to_site(std::uint32_t j) noexcept { return {j + 2}; }

    [[nodiscard]] bool is_sleep() const noexcept { return code == kSleep; }
    [[nodiscard]] bool is_sink() const noexcept { return code == kSink; }
    [[nodiscard]] std::uint32_t target() const noexcept { return code - 2; }
    bool operator==(const Instruction&) const = default;
};

/// The instruction at (site, index) of the lazily generated field with this
/// seed. Counter-based: the value never depends on the order of requests.
Instruction generated_instruction(std::uint64_t seed, std::uint32_t site, std::uint64_t index,
                                  const Params& params);

/// Per-site instruction stacks. Entries past the recorded end are generated
/// on demand from the seed and appended, so a tape replays identically under
/// any toppling order.
class InstructionTape {
public:
    InstructionTape() = default;
    InstructionTape(std::int64_t n, std::uint64_t seed);

    [[nodiscard]] std::int64_t n() const noexcept { return static_cast<std::int64_t>(runs_.size()); }
    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

    /// Instruction `index` at `site`, extending the recorded run if needed.
    Instruction at(std::uint32_t site, std::uint64_t index, const Params& params);

    [[nodiscard]] const std::vector<Instruction>& run(std::uint32_t site) const { return runs_.at(site); }
    void set_run(std::uint32_t site, std::vector<Instruction> instructions);

    bool operator==(const InstructionTape&) const = default;

private:
    std::uint64_t seed_ = 0;
    std::vector<std::vector<Instruction>> runs_;
};

enum class Order { kFifo, kLowestIndex, kRandom };

struct TopplingPolicy {
    Order order = Order::kFifo;
    std::uint64_t seed = 0;  ///< used by kRandom only
};

inline constexpr std::uint64_t kDefaultStepCap = 1'000'000'000ULL;

/// Address of one tape entry.
struct InstructionRef {
    std::uint32_t site = 0;
    std::uint64_t index = 0;
};

struct StabilizeOptions {
    TopplingPolicy policy{};
    std::uint64_t step_cap = kDefaultStepCap;  ///< max instruction executions
    bool record_per_site = false;
    /// Replay fault injection: the referenced tape entry is skipped.
    std::optional<InstructionRef> skip;
};

struct StabilizationOutcome {
    std::int64_t sleep_count = 0;    ///< S
    std::uint64_t jump_count = 0;    ///< Jump executions, self-loops included
    std::int64_t sink_arrivals = 0;  ///< during this stabilization
    std::uint64_t executions = 0;    ///< instructions consumed
    std::optional<std::uint64_t> steps;          ///< purgatory departures, when instrumented
    std::vector<std::uint64_t> per_site_jumps;   ///< filled when requested
};

/// Raised when a stabilization exceeds its instruction cap.
class StabilizationCapError : public std::runtime_error {
public:
    explicit StabilizationCapError(std::uint64_t cap)
        : std::runtime_error("stabilization exceeded the cap of " + std::to_string(cap) +
                             " instruction executions"),
          cap_(cap) {}
    [[nodiscard]] std::uint64_t cap() const noexcept { return cap_; }

private:
    std::uint64_t cap_;
};

/// Stabilizes `config` in place using instructions from `tape`.
///
/// Toppling a site with one awake particle executes one instruction: Sleep
/// puts it to sleep, Jump moves it to the sink or to the named site (possibly
/// itself). At a site holding two or more particles a Sleep is a consumed
/// no-op and a Jump moves one particle.
StabilizationOutcome stabilize(Configuration& config, const Params& params, InstructionTape& tape,
                               const StabilizeOptions& options = {});

/// Same, with a fresh i.i.d. instruction field drawn from `rng` on demand.
/// At multiply occupied sites the no-op Sleeps are skipped and a Jump is drawn
/// directly, which leaves the law of the outcome unchanged.
StabilizationOutcome stabilize(Configuration& config, const Params& params, Rng& rng,
                               const StabilizeOptions& options = {});

/// Stabilizes 1_[n]; its sleeping count is an exact stationary sample.
StabilizationOutcome sample_stationary_S(const Params& params, Rng& rng);

/// Driven-dissipative chain: `steps` times, add an awake particle at a
/// uniform site and stabilize. `config` is updated in place.
std::vector<StabilizationOutcome> drive_dissipate(Configuration& config, const Params& params,
                                                  std::int64_t steps, Rng& rng);

struct PurgatoryRun {
    std::vector<std::pair<std::int64_t, std::int64_t>> trace;  ///< (Y, Z) after each step
    StabilizationOutcome outcome;
};

/// Stabilizes 1_[n] with every jump routed through an extra purgatory vertex,
/// one purgatory departure per step after the initial sweep. outcome.steps is
/// the number of departures, outcome.jump_count the number of jumps out of [n].
PurgatoryRun stabilize_via_purgatory(const Params& params, Rng& rng,
                                     std::uint64_t step_cap = kDefaultStepCap);

/// True iff stabilizing `initial` with `tape` under every policy yields the
/// same final configuration and the same jump count. `faults` (parallel to
/// `policies`, optional) injects a skipped tape entry into individual runs.
bool check_abelian(const Configuration& initial, const Params& params, const InstructionTape& tape,
                   std::span<const TopplingPolicy> policies,
                   std::span<const std::optional<InstructionRef>> faults = {});

// Tape serialization. Layout (little-endian): "ARWT", u32 version, u64 seed,
// u32 n, then per site a LEB128 run length followed by that many LEB128 codes.
inline constexpr std::uint32_t kTapeVersion = 1;

class TapeFormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::vector<std::uint8_t> encode_tape(const InstructionTape& tape);
InstructionTape decode_tape(std::span<const std::uint8_t> bytes);
void save_tape(const std::string& path, const InstructionTape& tape);
InstructionTape load_tape(const std::string& path);

}  // namespace arwlab::arw

#endif  // ARWLAB_ARW_HPP
