#include "arwlab/expcli.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "arwlab/model.hpp"
#include "arwlab/rng.hpp"

namespace arwlab::exp {

namespace {

struct ScenarioInfo {
    Scenario id;
    std::string_view name;
};

constexpr ScenarioInfo kScenarios[] = {
    {Scenario::kPropStop, "prop-stop"},
    {Scenario::kAbelian, "abelian"},
    {Scenario::kThmIff, "thm-iff"},
    {Scenario::kThm12, "thm-12"},
    {Scenario::kThm12Thresholds, "thm-12-thresholds"},
    {Scenario::kThmGumbel, "thm-gumbel"},
    {Scenario::kThmDensity, "thm-density"},
    {Scenario::kLemMaxtail, "lem-maxtail"},
    {Scenario::kCluster, "cluster"},
    {Scenario::kCondMoments, "cond-moments"},
    {Scenario::kStationarity, "stationarity"},
};

const std::vector<std::string> kKeys = {"scenario", "n",       "lambda",   "p",         "q",
                                        "q-mode",   "mu",      "reps",     "seed",      "horizon",
                                        "x-level",  "step-cap", "parallel", "out",      "format"};

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

double parse_real(const std::string& field, std::string_view text) {
    double v = 0.0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
        throw UsageError(field, "expected a real number, got '" + std::string(text) + "'");
    }
    return v;
}

std::int64_t parse_integer(const std::string& field, std::string_view text) {
    std::int64_t v = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec == std::errc() && ptr == end) return v;
    // Accept integral reals such as 1e6.
    double d = 0.0;
    const auto [dptr, dec] = std::from_chars(text.data(), end, d);
    if (dec == std::errc() && dptr == end && std::isfinite(d) && d == std::floor(d) && std::abs(d) < 9.0e18) {
        return static_cast<std::int64_t>(d);
    }
    throw UsageError(field, "expected an integer, got '" + std::string(text) + "'");
}

std::uint64_t parse_unsigned(const std::string& field, std::string_view text) {
    std::uint64_t v = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec == std::errc() && ptr == end) return v;
    const std::int64_t i = parse_integer(field, text);
    if (i < 0) throw UsageError(field, "must be nonnegative");
    return static_cast<std::uint64_t>(i);
}

bool uses_q(Scenario s) {
    switch (s) {
        case Scenario::kThmDensity:
        case Scenario::kLemMaxtail:
        case Scenario::kCluster:
        case Scenario::kCondMoments:
        case Scenario::kStationarity: return false;
        default: return true;
    }
}

bool needs_horizon(Scenario s) {
    return s == Scenario::kLemMaxtail || s == Scenario::kCondMoments || s == Scenario::kStationarity;
}

bool needs_level(Scenario s) { return needs_horizon(s) || s == Scenario::kCluster; }

void require(bool present, bool wanted, const std::string& field, Scenario s) {
    const std::string name(scenario_name(s));
    if (wanted && !present) throw UsageError(field, "required by scenario " + name);
    if (!wanted && present) throw UsageError(field, "not used by scenario " + name);
}

}  // namespace

std::string_view scenario_name(Scenario s) {
    for (const auto& info : kScenarios) {
        if (info.id == s) return info.name;
    }
    return "unknown";
}

std::optional<Scenario> parse_scenario(std::string_view name) {
    for (const auto& info : kScenarios) {
        if (info.name == name) return info.id;
    }
    return std::nullopt;
}

std::vector<Scenario> all_scenarios() {
    std::vector<Scenario> out;
    for (const auto& info : kScenarios) out.push_back(info.id);
    return out;
}

QMode QMode::parse(std::string_view text) {
    if (text == "recip-n-plus-1") return {Kind::kRecipNPlus1, 0.0};
    const auto colon = text.find(':');
    if (colon == std::string_view::npos) throw UsageError("q-mode", "unknown mode '" + std::string(text) + "'");
    const auto head = text.substr(0, colon);
    const double v = parse_real("q-mode", text.substr(colon + 1));
    if (head == "const") {
        if (!(v >= 0.0 && v <= 1.0)) throw UsageError("q-mode", "const q must lie in [0, 1]");
        return {Kind::kConst, v};
    }
    if (head == "power") {
        if (!(v >= 0.0)) throw UsageError("q-mode", "power exponent must be nonnegative");
        return {Kind::kPower, v};
    }
    if (head == "exp") {
        if (!(v > 0.0)) throw UsageError("q-mode", "exp rate must be positive");
        return {Kind::kExp, v};
    }
    throw UsageError("q-mode", "unknown mode '" + std::string(text) + "'");
}

std::string QMode::str() const {
    switch (kind) {
        case Kind::kConst: return "const:" + format_double(value);
        case Kind::kRecipNPlus1: return "recip-n-plus-1";
        case Kind::kPower: return "power:" + format_double(value);
        case Kind::kExp: return "exp:" + format_double(value);
    }
    return {};
}

double QMode::q(std::int64_t n) const {
    const double nd = static_cast<double>(n);
    switch (kind) {
        case Kind::kConst: return value;
        case Kind::kRecipNPlus1: return 1.0 / (nd + 1.0);
        case Kind::kPower: return std::pow(nd, -value);
        case Kind::kExp: return std::exp(-value * nd);
    }
    return 0.0;
}

double ScenarioConfig::p() const {
    if (p_direct) return *p_direct;
    if (lambda) return derive_p(*lambda);
    throw UsageError("p", "neither --p nor --lambda given");
}

double ScenarioConfig::q() const { return q_mode ? q_mode->q(n) : 0.0; }

std::string ScenarioConfig::canonical() const {
    std::ostringstream s;
    s << "scenario=" << scenario_name(scenario) << ";n=" << n << ";p=" << format_double(p());
    if (q_mode) s << ";q-mode=" << q_mode->str();
    if (mu) s << ";mu=" << format_double(*mu);
    s << ";reps=" << reps << ";seed=" << seed;
    if (horizon) s << ";horizon=" << format_double(*horizon);
    if (x_level) s << ";x-level=" << format_double(*x_level);
    if (step_cap) s << ";step-cap=" << *step_cap;
    return s.str();
}

std::string ScenarioConfig::run_id() const {
    std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a
    for (const unsigned char c : canonical()) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(mix64(h)));
    return buf;
}

std::map<std::string, std::string> parse_config_text(std::string_view text) {
    std::map<std::string, std::string> values;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string body = trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw UsageError("config", "line " + std::to_string(lineno) + ": expected 'key = value'");
        }
        const std::string key = trim(std::string_view(body).substr(0, eq));
        const std::string value = trim(std::string_view(body).substr(eq + 1));
        if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end()) {
            throw UsageError(key, "unknown key in config file (line " + std::to_string(lineno) + ")");
        }
        if (value.empty()) throw UsageError(key, "empty value in config file");
        values[key] = value;
    }
    return values;
}

ScenarioConfig config_from_values(const std::map<std::string, std::string>& values) {
    for (const auto& [key, _] : values) {
        if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end()) throw UsageError(key, "unknown key");
    }
    auto get = [&](const std::string& key) -> std::optional<std::string> {
        const auto it = values.find(key);
        return it == values.end() ? std::nullopt : std::optional<std::string>(it->second);
    };

    ScenarioConfig c;
    const auto scenario = get("scenario");
    if (!scenario) throw UsageError("scenario", "required");
    const auto parsed = parse_scenario(*scenario);
    if (!parsed) throw UsageError("scenario", "unknown scenario '" + *scenario + "'");
    c.scenario = *parsed;

    const auto n = get("n");
    if (!n) throw UsageError("n", "required");
    c.n = parse_integer("n", *n);
    const auto reps = get("reps");
    if (!reps) throw UsageError("reps", "required");
    c.reps = parse_integer("reps", *reps);
    const auto seed = get("seed");
    if (!seed) throw UsageError("seed", "required");
    c.seed = parse_unsigned("seed", *seed);

    if (auto v = get("lambda")) c.lambda = parse_real("lambda", *v);
    if (auto v = get("p")) c.p_direct = parse_real("p", *v);
    const auto q = get("q");
    const auto q_mode = get("q-mode");
    if (q && q_mode) throw UsageError("q", "give either --q or --q-mode, not both");
    if (q) {
        const double v = parse_real("q", *q);
        if (!(v >= 0.0 && v <= 1.0)) throw UsageError("q", "must lie in [0, 1]");
        c.q_mode = QMode{QMode::Kind::kConst, v};
    }
    if (q_mode) c.q_mode = QMode::parse(*q_mode);
    if (auto v = get("mu")) c.mu = parse_real("mu", *v);
    if (auto v = get("horizon")) c.horizon = parse_real("horizon", *v);
    if (auto v = get("x-level")) c.x_level = parse_real("x-level", *v);
    if (auto v = get("step-cap")) c.step_cap = parse_unsigned("step-cap", *v);
    if (auto v = get("parallel")) {
        const std::int64_t w = parse_integer("parallel", *v);
        if (w < 1 || w > 1024) throw UsageError("parallel", "worker count must lie in [1, 1024]");
        c.parallel = static_cast<int>(w);
    }
    if (auto v = get("out")) c.out = *v;
    if (auto v = get("format")) {
        if (*v == "csv") {
            c.format = Format::kCsv;
        } else if (*v == "jsonl") {
            c.format = Format::kJsonl;
        } else {
            throw UsageError("format", "expected csv or jsonl, got '" + *v + "'");
        }
    }
    validate(c);
    return c;
}

void validate(ScenarioConfig& c) {
    const Scenario s = c.scenario;
    const std::string name(scenario_name(s));
    if (c.n < 1) throw UsageError("n", "must be positive");
    if (c.reps < 1) throw UsageError("reps", "must be positive");

    if (c.lambda && c.p_direct) throw UsageError("lambda", "give either --lambda or --p, not both");
    if (!c.lambda && !c.p_direct) throw UsageError("p", "one of --p or --lambda is required");
    if (c.lambda && !(*c.lambda > 0.0)) throw UsageError("lambda", "must be positive");
    if (c.p_direct && !(*c.p_direct > 0.0 && *c.p_direct < 1.0)) throw UsageError("p", "must lie in (0, 1)");

    if ((s == Scenario::kThm12 || s == Scenario::kThm12Thresholds) && !c.q_mode) {
        c.q_mode = QMode{QMode::Kind::kRecipNPlus1, 0.0};
    }
    require(c.q_mode.has_value(), uses_q(s), "q-mode", s);
    require(c.mu.has_value(), s == Scenario::kThmDensity, "mu", s);
    require(c.horizon.has_value(), needs_horizon(s), "horizon", s);
    require(c.x_level.has_value(), needs_level(s), "x-level", s);
    if (c.step_cap && s != Scenario::kThmDensity) throw UsageError("step-cap", "not used by scenario " + name);

    const double p = c.p();
    if (c.q_mode) {
        const double q = c.q();
        if (!(q > 0.0)) throw UsageError("q-mode", "q must be positive at n = " + std::to_string(c.n));
    }
    switch (s) {
        case Scenario::kPropStop:
            if (c.n > 12) throw UsageError("n", "prop-stop compares against the exact solver, which needs n <= 12");
            break;
        case Scenario::kThm12:
        case Scenario::kThm12Thresholds:
            if (c.q_mode->kind != QMode::Kind::kRecipNPlus1) {
                throw UsageError("q-mode", name + " is stated for q = 1/(n+1) only");
            }
            break;
        case Scenario::kThmGumbel: {
            // n^{1/2 + eps} << r_n << exp(o(n^{1/3})): power laws beyond 1/2 only.
            const auto kind = c.q_mode->kind;
            const bool ok = kind == QMode::Kind::kRecipNPlus1 || (kind == QMode::Kind::kPower && c.q_mode->value > 0.5);
            if (!ok) {
                throw UsageError("q-mode", "thm-gumbel needs r_n = n^a with a > 1/2 (power:a or recip-n-plus-1); '" +
                                               c.q_mode->str() + "' lies outside the Gumbel regime");
            }
            if (!(1.0 / c.q() > std::sqrt(static_cast<double>(c.n)))) {
                throw UsageError("q-mode", "r_n must exceed sqrt(n) for f_n to be defined");
            }
            break;
        }
        case Scenario::kThmDensity: {
            if (!(*c.mu > 0.0 && *c.mu <= 1.0)) throw UsageError("mu", "must lie in (0, 1]");
            if (c.step_cap && *c.step_cap == 0) throw UsageError("step-cap", "must be positive");
            break;
        }
        case Scenario::kLemMaxtail:
        case Scenario::kCondMoments:
        case Scenario::kStationarity:
            if (!(*c.horizon > 0.0)) throw UsageError("horizon", "must be positive");
            [[fallthrough]];
        case Scenario::kCluster: {
            const double a = std::sqrt(p * (1.0 - p) * static_cast<double>(c.n));
            const double top = (1.0 - p) * static_cast<double>(c.n) / a;
            if (!(*c.x_level <= top + 1e-9)) {
                throw UsageError("x-level", "exceeds the maximum supported level " + format_double(top));
            }
            if (s == Scenario::kCondMoments && c.reps < 2) throw UsageError("reps", "need at least two replicates");
            break;
        }
        default: break;
    }
}

ScenarioConfig parse_config(std::span<const std::string> args) {
    CLI::App app{"arwlab scenario runner"};
    std::map<std::string, std::optional<std::string>> cli;
    for (const auto& key : kKeys) {
        cli[key] = std::nullopt;
        app.add_option("--" + key, cli[key]);
    }
    std::optional<std::string> config_path;
    app.add_option("--config", config_path, "key = value file; command-line flags take precedence");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        throw UsageError("", e.what());
    }

    std::map<std::string, std::string> values;
    if (config_path) {
        std::ifstream in(*config_path);
        if (!in) throw UsageError("config", "cannot read '" + *config_path + "'");
        std::stringstream body;
        body << in.rdbuf();
        values = parse_config_text(body.str());
    }
    for (const auto& [key, v] : cli) {
        if (v) values[key] = *v;
    }
    return config_from_values(values);
}

// ---- records ----------------------------------------------------------------

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string to_csv(const RunRecord& r) {
    std::string line;
    line.reserve(96);
    line += r.run_id;
    line += ',';
    line += r.scenario;
    line += ',';
    line += std::to_string(r.n);
    line += ',';
    line += format_double(r.p);
    line += ',';
    line += format_double(r.q);
    line += ',';
    if (r.mu) line += format_double(*r.mu);
    line += ',';
    line += std::to_string(r.replicate);
    line += ',';
    line += std::to_string(r.seed);
    line += ',';
    line += r.metric;
    line += ',';
    line += format_double(r.value);
    return line;
}

std::string to_jsonl(const RunRecord& r) {
    // Hand-assembled so that doubles keep the same shortest form as the CSV.
    std::string line = "{\"run_id\":\"" + r.run_id + "\",\"scenario\":\"" + r.scenario +
                       "\",\"n\":" + std::to_string(r.n) + ",\"p\":" + format_double(r.p) +
                       ",\"q\":" + format_double(r.q) + ",\"mu\":" + (r.mu ? format_double(*r.mu) : "null") +
                       ",\"replicate\":" + std::to_string(r.replicate) + ",\"seed\":" + std::to_string(r.seed) +
                       ",\"metric\":\"" + r.metric + "\",\"value\":" + format_double(r.value) + "}";
    return line;
}

RunRecord parse_csv(std::string_view line) {
    std::vector<std::string_view> f;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        f.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    if (f.size() != 10) throw std::invalid_argument("expected 10 CSV fields, got " + std::to_string(f.size()));
    RunRecord r;
    r.run_id = f[0];
    r.scenario = f[1];
    r.n = parse_integer("n", f[2]);
    r.p = parse_real("p", f[3]);
    r.q = parse_real("q", f[4]);
    if (!f[5].empty()) r.mu = parse_real("mu", f[5]);
    r.replicate = parse_integer("replicate", f[6]);
    r.seed = parse_unsigned("seed", f[7]);
    r.metric = f[8];
    r.value = parse_real("value", f[9]);
    return r;
}

RunRecord parse_jsonl(std::string_view line) {
    const auto j = nlohmann::json::parse(line);
    RunRecord r;
    r.run_id = j.at("run_id").get<std::string>();
    r.scenario = j.at("scenario").get<std::string>();
    r.n = j.at("n").get<std::int64_t>();
    r.p = j.at("p").get<double>();
    r.q = j.at("q").get<double>();
    if (!j.at("mu").is_null()) r.mu = j.at("mu").get<double>();
    r.replicate = j.at("replicate").get<std::int64_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.metric = j.at("metric").get<std::string>();
    r.value = j.at("value").get<double>();
    if (j.size() != 10) throw std::invalid_argument("unexpected fields in record");
    return r;
}

std::optional<double> ReplicateOutput::get(std::string_view name) const {
    for (const auto& m : metrics) {
        if (m.name == name) return m.value;
    }
    return std::nullopt;
}

std::vector<ReplicateOutput> run_replicates(
    std::int64_t reps, std::uint64_t master, int workers,
    const std::function<std::vector<Metric>(std::int64_t, std::uint64_t)>& body) {
    std::vector<ReplicateOutput> out(static_cast<std::size_t>(reps));
    std::atomic<std::int64_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        while (true) {
            const std::int64_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= reps) return;
            try {
                const std::uint64_t seed = derive_seed(master, static_cast<std::uint64_t>(i));
                out[static_cast<std::size_t>(i)] = ReplicateOutput{seed, body(i, seed)};
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(reps);
                return;
            }
        }
    };
    const int count = std::max(1, std::min<int>(workers, static_cast<int>(std::min<std::int64_t>(reps, 1024))));
    if (count == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < count; ++w) pool.emplace_back(work);
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

bool ScenarioResult::all_pass() const {
    return std::all_of(reports.begin(), reports.end(), [](const auto& r) { return r.pass; });
}

std::vector<RunRecord> ScenarioResult::records() const {
    std::vector<RunRecord> out;
    const std::string id = config.run_id();
    const std::string name(scenario_name(config.scenario));
    const double p = config.p();
    const double q = config.q();
    for (std::size_t i = 0; i < replicates.size(); ++i) {
        for (const auto& m : replicates[i].metrics) {
            out.push_back(RunRecord{id, name, config.n, p, q, config.mu, static_cast<std::int64_t>(i),
                                    replicates[i].seed, std::string(m.name), m.value});
        }
    }
    return out;
}

void write_records(std::ostream& out, const ScenarioResult& result, Format format) {
    if (format == Format::kCsv) out << kCsvHeader << '\n';
    for (const auto& r : result.records()) out << (format == Format::kCsv ? to_csv(r) : to_jsonl(r)) << '\n';
}

void write_records(const std::string& path, const ScenarioResult& result, Format format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    write_records(out, result, format);
    if (!out) throw std::runtime_error("write to " + path + " failed");
}

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    std::vector<std::string> args(argv + 1, argv + argc);
    if (args.empty() || args[0] == "--help" || args[0] == "-h") {
        out << "usage: arwlab --scenario NAME --n N (--p P | --lambda L) [--q Q | --q-mode MODE] [--mu M]\n"
               "              --reps R --seed S [--horizon T] [--x-level X] [--step-cap C]\n"
               "              [--parallel W] [--out PATH] [--format csv|jsonl] [--config FILE]\n"
               "scenarios:";
        for (const auto s : all_scenarios()) out << ' ' << scenario_name(s);
        out << "\nq modes: const:v, recip-n-plus-1, power:a (q = n^-a), exp:c (q = e^-cn)\n";
        return args.empty() ? 2 : 0;
    }
    ScenarioConfig config;
    try {
        config = parse_config(args);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return 2;
    }
    try {
        const ScenarioResult result = run_scenario(config);
        if (config.out) write_records(*config.out, result, config.format);
        out << "run " << config.run_id() << " " << config.canonical() << '\n';
        for (const auto& r : result.reports) out << r.summary_line() << '\n';
        return result.all_pass() ? 0 : 1;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 3;
    }
}

}  // namespace arwlab::exp
