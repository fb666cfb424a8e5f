#ifndef ARWLAB_EXPCLI_HPP
#define ARWLAB_EXPCLI_HPP

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "arwlab/stats.hpp"

namespace arwlab::exp {

enum class Scenario {
    kPropStop,
    kAbelian,
    kThmIff,
    kThm12,
    kThm12Thresholds,
    kThmGumbel,
    kThmDensity,
    kLemMaxtail,
    kCluster,
    kCondMoments,
    kStationarity,
};

std::string_view scenario_name(Scenario s);
std::optional<Scenario> parse_scenario(std::string_view name);
std::vector<Scenario> all_scenarios();

/// How q depends on n.
struct QMode {
    enum class Kind { kConst, kRecipNPlus1, kPower, kExp };
    Kind kind = Kind::kConst;
    double value = 0.0;  ///< v for const, a for power, c for exp

    /// "const:v", "recip-n-plus-1", "power:a" (q = n^-a) or "exp:c" (q = e^{-cn}).
    static QMode parse(std::string_view text);
    [[nodiscard]] std::string str() const;
    [[nodiscard]] double q(std::int64_t n) const;
};

enum class Format { kCsv, kJsonl };

/// Invalid configuration. `field()` names the offending key.
class UsageError : public std::runtime_error {
public:
    UsageError(std::string field, const std::string& message)
        : std::runtime_error(field.empty() ? message : "--" + field + ": " + message), field_(std::move(field)) {}
    [[nodiscard]] const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

struct ScenarioConfig {
    Scenario scenario = Scenario::kPropStop;
    std::int64_t n = 0;
    std::optional<double> lambda;
    std::optional<double> p_direct;
    std::optional<QMode> q_mode;  ///< `--q v` is stored as const:v
    std::optional<double> mu;
    std::int64_t reps = 0;
    std::uint64_t seed = 0;
    std::optional<double> horizon;
    std::optional<double> x_level;
    std::optional<std::uint64_t> step_cap;
    int parallel = 1;
    std::optional<std::string> out;
    Format format = Format::kCsv;

    /// Sleep probability, from `--p` or `--lambda`.
    [[nodiscard]] double p() const;
    /// q at this n; 0 for the fixed-energy and q = 0 continuous-time scenarios.
    [[nodiscard]] double q() const;
    /// Canonical text of every field that affects results (not parallel, out, format).
    [[nodiscard]] std::string canonical() const;
    /// Hex digest of canonical().
    [[nodiscard]] std::string run_id() const;
};

/// Parses `args` (without the program name) and an optional `--config FILE`
/// of `key = value` lines (`#` starts a comment). Command-line values override
/// file values. Applies scenario defaults, then validates.
ScenarioConfig parse_config(std::span<const std::string> args);

/// Builds a config from raw key/value pairs (keys as the long flag names
/// without dashes), then applies defaults and validates.
ScenarioConfig config_from_values(const std::map<std::string, std::string>& values);

/// Parses a config file body into key/value pairs.
std::map<std::string, std::string> parse_config_text(std::string_view text);

/// Scenario defaults and guards; throws UsageError.
void validate(ScenarioConfig& config);

/// One row of the long-format results table.
struct RunRecord {
    std::string run_id;
    std::string scenario;
    std::int64_t n = 0;
    double p = 0.0;
    double q = 0.0;
    std::optional<double> mu;
    std::int64_t replicate = 0;
    std::uint64_t seed = 0;
    std::string metric;
    double value = 0.0;

    bool operator==(const RunRecord&) const = default;
};

inline constexpr std::string_view kCsvHeader = "run_id,scenario,n,p,q,mu,replicate,seed,metric,value";

/// Shortest round-trip decimal form.
std::string format_double(double v);

std::string to_csv(const RunRecord& r);
std::string to_jsonl(const RunRecord& r);
RunRecord parse_csv(std::string_view line);
RunRecord parse_jsonl(std::string_view line);

/// A scalar output of one replicate.
struct Metric {
    std::string_view name;  ///< static storage
    double value = 0.0;
};

struct ReplicateOutput {
    std::uint64_t seed = 0;
    std::vector<Metric> metrics;

    [[nodiscard]] std::optional<double> get(std::string_view name) const;
};

/// Runs `body(index, seed)` for index in [0, reps) on `workers` threads. The
/// seed of replicate i is derive_seed(master, i) and results are stored by
/// index, so the output does not depend on the worker count.
std::vector<ReplicateOutput> run_replicates(
    std::int64_t reps, std::uint64_t master, int workers,
    const std::function<std::vector<Metric>(std::int64_t, std::uint64_t)>& body);

struct ScenarioResult {
    ScenarioConfig config;
    std::vector<ReplicateOutput> replicates;
    std::vector<stats::TestReport> reports;

    [[nodiscard]] bool all_pass() const;
    [[nodiscard]] std::vector<RunRecord> records() const;
};

ScenarioResult run_scenario(const ScenarioConfig& config);

void write_records(std::ostream& out, const ScenarioResult& result, Format format);
void write_records(const std::string& path, const ScenarioResult& result, Format format);

/// Command-line entry point. Returns the process exit code: 0 when every
/// summary check passes, 1 when one fails, 2 on a usage error.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace arwlab::exp

#endif  // ARWLAB_EXPCLI_HPP
