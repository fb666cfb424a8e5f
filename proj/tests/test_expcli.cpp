#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "arwlab/expcli.hpp"
#include "arwlab/rng.hpp"

using namespace arwlab;
using namespace arwlab::exp;

namespace {

std::string field_of(const std::vector<std::string>& args) {
    try {
        parse_config(args);
    } catch (const UsageError& e) {
        return e.field();
    }
    return "<accepted>";
}

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("arwlab_test_" + name);
}

std::string serialize(const ScenarioResult& r, Format f) {
    std::ostringstream s;
    write_records(s, r, f);
    return s.str();
}

int run_cli(const std::vector<std::string>& args, std::string* out_text = nullptr) {
    std::vector<const char*> argv = {"arwlab"};
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
    if (out_text) *out_text = out.str() + err.str();
    return code;
}

}  // namespace

TEST_CASE("parse example") {
    const std::vector<std::string> args = {"--scenario", "thm-12", "--n", "10000", "--lambda", "1",
                                           "--reps", "200", "--seed", "7"};
    const auto c = parse_config(args);
    CHECK(c.scenario == Scenario::kThm12);
    CHECK(c.n == 10000);
    CHECK(c.p() == doctest::Approx(0.5));
    REQUIRE(c.q_mode);
    CHECK(c.q_mode->kind == QMode::Kind::kRecipNPlus1);
    CHECK(c.q() == doctest::Approx(1.0 / 10001.0));
    CHECK(c.reps == 200);
    CHECK(c.seed == 7);
    CHECK(c.run_id().size() == 16);
    CHECK(c.canonical().find("q-mode=recip-n-plus-1") != std::string::npos);
}

TEST_CASE("q modes") {
    CHECK(QMode::parse("const:0.25").q(10) == 0.25);
    CHECK(QMode::parse("recip-n-plus-1").q(9) == doctest::Approx(0.1));
    CHECK(QMode::parse("power:0.5").q(10000) == doctest::Approx(0.01));
    CHECK(QMode::parse("exp:0.1").q(60) == doctest::Approx(std::exp(-6.0)));
    for (const char* text : {"const:0.25", "recip-n-plus-1", "power:1.25", "exp:0.1"}) {
        CHECK(QMode::parse(QMode::parse(text).str()).q(100) == QMode::parse(text).q(100));
    }
    CHECK_THROWS_AS(QMode::parse("linear:2"), UsageError);
    CHECK_THROWS_AS(QMode::parse("power:x"), UsageError);
}

TEST_CASE("config file and command-line precedence") {
    const auto file = temp_path("precedence.cfg");
    {
        std::ofstream out(file);
        out << "# comment\nscenario = thm-iff\nn = 100\nlambda = 1\nq-mode = power:0.5\nreps = 3\nseed = 11\n";
    }
    const auto from_file = parse_config(std::vector<std::string>{"--config", file.string()});
    CHECK(from_file.n == 100);
    const auto overridden = parse_config(std::vector<std::string>{"--config", file.string(), "--n", "200"});
    CHECK(overridden.n == 200);
    CHECK(overridden.seed == 11);
    const auto before = parse_config(std::vector<std::string>{"--n", "200", "--config", file.string()});
    CHECK(before.n == 200);

    {
        std::ofstream out(file);
        out << "scenario = thm-iff\nn = 100\nlambda = 1\nq-mode = power:0.5\nreps = 3\nseed = 11\nbogus = 4\n";
    }
    CHECK(field_of({"--config", file.string()}) == "bogus");
    {
        std::ofstream out(file);
        out << "scenario = thm-iff\nn = many\n";
    }
    CHECK(field_of({"--config", file.string()}) == "n");
    std::filesystem::remove(file);
    CHECK(field_of({"--config", file.string()}) == "config");
}

TEST_CASE("validation names the offending field") {
    const std::vector<std::string> gumbel = {"--scenario", "thm-gumbel", "--n", "2000", "--lambda", "1",
                                             "--reps", "10", "--seed", "1"};
    auto with = [](std::vector<std::string> base, std::initializer_list<std::string> extra) {
        base.insert(base.end(), extra);
        return base;
    };
    CHECK(field_of(with(gumbel, {"--q-mode", "exp:0.1"})) == "q-mode");
    CHECK(field_of(with(gumbel, {"--q-mode", "power:0.4"})) == "q-mode");
    CHECK(field_of(with(gumbel, {"--q-mode", "power:1.25"})) == "<accepted>");
    CHECK(field_of(with(gumbel, {"--q-mode", "power:1.25", "--mu", "0.5"})) == "mu");
    CHECK(field_of(with(gumbel, {"--q-mode", "power:1.25", "--q", "0.1"})) == "q");
    CHECK(field_of(with(gumbel, {"--q-mode", "power:1.25", "--p", "0.5"})) == "lambda");
    CHECK(field_of(with(gumbel, {"--q-mode", "power:1.25", "--format", "xml"})) == "format");
    CHECK(field_of(with(gumbel, {"--q-mode", "power:1.25", "--parallel", "0"})) == "parallel");
    CHECK(field_of({"--scenario", "thm-gumbel", "--n", "2000", "--lambda", "1", "--q-mode", "power:1.25", "--reps",
                    "ten", "--seed", "1"}) == "reps");
    CHECK(field_of(with(gumbel, {"--q-mode", "power:1.25", "--reps", "20"})) == "");

    CHECK(field_of({"--scenario", "thm-12", "--n", "100", "--p", "0.5", "--reps", "1", "--seed", "1", "--q-mode",
                    "power:1"}) == "q-mode");
    CHECK(field_of({"--scenario", "nope", "--n", "10", "--p", "0.5", "--reps", "1", "--seed", "1"}) == "scenario");
    CHECK(field_of({"--n", "10", "--p", "0.5", "--reps", "1", "--seed", "1"}) == "scenario");
    CHECK(field_of({"--scenario", "thm-density", "--n", "100", "--p", "0.5", "--reps", "1", "--seed", "1"}) == "mu");
    CHECK(field_of({"--scenario", "thm-density", "--n", "100", "--p", "0.5", "--reps", "1", "--seed", "1", "--mu",
                    "0.5", "--q", "0.1"}) == "q-mode");
    CHECK(field_of({"--scenario", "thm-density", "--n", "100", "--p", "1.5", "--reps", "1", "--seed", "1", "--mu",
                    "0.5"}) == "p");
    CHECK(field_of({"--scenario", "prop-stop", "--n", "13", "--p", "0.5", "--q", "0.5", "--reps", "1", "--seed",
                    "1"}) == "n");
    CHECK(field_of({"--scenario", "prop-stop", "--n", "3", "--p", "0.5", "--reps", "1", "--seed", "1"}) == "q-mode");
    CHECK(field_of({"--scenario", "lem-maxtail", "--n", "100", "--p", "0.5", "--reps", "1", "--seed", "1",
                    "--x-level", "2"}) == "horizon");
    CHECK(field_of({"--scenario", "lem-maxtail", "--n", "100", "--p", "0.5", "--reps", "1", "--seed", "1",
                    "--horizon", "2", "--x-level", "20"}) == "x-level");
    CHECK(field_of({"--scenario", "cluster", "--n", "100", "--p", "0.5", "--reps", "1", "--seed", "1"}) == "x-level");
    CHECK(field_of({"--scenario", "cluster", "--n", "100", "--p", "0.5", "--reps", "1", "--seed", "1", "--x-level",
                    "2", "--step-cap", "4"}) == "step-cap");
    CHECK(field_of({"--scenario", "abelian", "--n", "5", "--p", "0.5", "--q", "0.3", "--reps", "1"}) == "seed");
    CHECK(field_of({"--scenario", "abelian", "--n", "1e1", "--p", "0.5", "--q", "0.3", "--reps", "1", "--seed",
                    "1"}) == "<accepted>");
    CHECK(field_of({"--scenario", "abelian", "--n", "2.5", "--p", "0.5", "--q", "0.3", "--reps", "1", "--seed",
                    "1"}) == "n");
    CHECK(field_of({"--scenario", "abelian", "--n", "5", "--p", "0.5", "--q", "0.3", "--reps", "1", "--seed", "1",
                    "--frobnicate", "2"}) == "");
}

TEST_CASE("record serialization") {
    CHECK(kCsvHeader == "run_id,scenario,n,p,q,mu,replicate,seed,metric,value");
    const RunRecord a{"00ff00ff00ff00ff", "thm-density", 1000000, 0.5, 0.0, 0.5, 3, 18446744073709551615ULL,
                      "J_over_nlogn", 0.1 + 0.2};
    const RunRecord b{"0123456789abcdef", "thm-12", 10000, 1.0 / 3.0, 1.0 / 10001.0, std::nullopt, 0, 42,
                      "S", 5087.0};
    const RunRecord c{"0123456789abcdef", "stationarity", 7, 0.25, 5e-324, std::nullopt, 12, 0, "occupation",
                      -1.2345678901234567e-300};
    for (const auto& r : {a, b, c}) {
        CHECK(parse_csv(to_csv(r)) == r);
        CHECK(parse_jsonl(to_jsonl(r)) == r);
    }
    CHECK(to_csv(b) == "0123456789abcdef,thm-12,10000,0.3333333333333333,9.999000099990002e-05,,0,42,S,5087");
    CHECK(to_jsonl(b).find("\"mu\":null") != std::string::npos);
    CHECK_THROWS(parse_csv("a,b,c"));
    CHECK_THROWS(parse_jsonl("{\"run_id\": 3}"));
}

TEST_CASE("replicate seeding does not depend on workers") {
    auto body = [](std::int64_t i, std::uint64_t seed) {
        Rng rng(seed);
        double acc = 0.0;
        for (int k = 0; k < 1000 + 37 * (i % 11); ++k) acc += rng.uniform();
        return std::vector<Metric>{{"acc", acc}, {"index", static_cast<double>(i)}};
    };
    const auto one = run_replicates(300, 99, 1, body);
    const auto many = run_replicates(300, 99, 8, body);
    REQUIRE(one.size() == 300);
    REQUIRE(many.size() == 300);
    for (std::size_t i = 0; i < one.size(); ++i) {
        CHECK(one[i].seed == derive_seed(99, i));
        CHECK(many[i].seed == one[i].seed);
        CHECK(*many[i].get("acc") == *one[i].get("acc"));
        CHECK(*many[i].get("index") == static_cast<double>(i));
    }
    CHECK_FALSE(one[0].get("missing"));
    CHECK_THROWS_AS(run_replicates(20, 1, 4,
                                   [](std::int64_t i, std::uint64_t) -> std::vector<Metric> {
                                       if (i == 13) throw std::runtime_error("boom");
                                       return {};
                                   }),
                    std::runtime_error);
}

TEST_CASE("scenario output is byte-identical across worker counts") {
    const std::vector<std::vector<std::string>> configs = {
        {"--scenario", "prop-stop", "--n", "3", "--p", "0.5", "--q", "0.3", "--reps", "300"},
        {"--scenario", "abelian", "--n", "6", "--p", "0.5", "--q", "0.3", "--reps", "10"},
        {"--scenario", "thm-iff", "--n", "200", "--lambda", "1", "--q-mode", "power:0.5", "--reps", "20"},
        {"--scenario", "thm-density", "--n", "300", "--lambda", "1", "--mu", "0.5", "--reps", "10"},
        {"--scenario", "cond-moments", "--n", "300", "--p", "0.5", "--x-level", "1", "--horizon", "1", "--reps",
         "50"},
    };
    for (auto args : configs) {
        args.insert(args.end(), {"--seed", "5"});
        auto c = parse_config(args);
        c.parallel = 1;
        const auto r1 = run_scenario(c);
        c.parallel = 8;
        const auto r8 = run_scenario(c);
        CHECK(serialize(r1, Format::kCsv) == serialize(r8, Format::kCsv));
        CHECK(serialize(r1, Format::kJsonl) == serialize(r8, Format::kJsonl));
        CHECK(serialize(r1, Format::kCsv).rfind(std::string(kCsvHeader) + "\n", 0) == 0);
        CHECK_FALSE(r1.reports.empty());
    }
}

TEST_CASE("command-line entry point") {
    std::string text;
    CHECK(run_cli({}, &text) == 2);
    CHECK(run_cli({"--help"}, &text) == 0);
    CHECK(text.find("thm-gumbel") != std::string::npos);
    CHECK(run_cli({"--scenario", "thm-gumbel", "--n", "2000", "--lambda", "1", "--q-mode", "exp:0.1", "--reps",
                   "5", "--seed", "1"},
                  &text) == 2);
    CHECK(text.find("--q-mode") != std::string::npos);

    const auto out = temp_path("out.csv");
    CHECK(run_cli({"--scenario", "prop-stop", "--n", "2", "--p", "0.5", "--q", "0.5", "--reps", "20000", "--seed",
                   "3", "--out", out.string()},
                  &text) == 0);
    CHECK(text.find("[PASS]") != std::string::npos);
    std::ifstream in(out);
    std::string header;
    std::getline(in, header);
    CHECK(header == kCsvHeader);
    std::string line;
    int rows = 0;
    while (std::getline(in, line)) {
        CHECK(parse_csv(line).scenario == "prop-stop");
        ++rows;
    }
    CHECK(rows == 3 * 20000);
    std::filesystem::remove(out);

    // Too few replicates for the tolerance: the check fails, exit code 1.
    CHECK(run_cli({"--scenario", "prop-stop", "--n", "3", "--p", "0.5", "--q", "0.5", "--reps", "10", "--seed",
                   "3"},
                  &text) == 1);
    CHECK(text.find("[FAIL]") != std::string::npos);

    SUBCASE("installed binary") {
        const char* cli = std::getenv("ARWLAB_CLI");
        if (cli == nullptr) return;
        const std::string base = std::string("\"") + cli + "\"";
        auto status = [](const std::string& cmd) { return WEXITSTATUS(std::system((cmd + " >/dev/null 2>&1").c_str())); };
        CHECK(status(base) == 2);
        CHECK(status(base + " --help") == 0);
        CHECK(status(base + " --scenario thm-gumbel --n 2000 --lambda 1 --q-mode exp:0.1 --reps 5 --seed 1") == 2);
        CHECK(status(base + " --scenario abelian --n 5 --p 0.5 --q 0.3 --reps 5 --seed 1") == 0);
    }
}
