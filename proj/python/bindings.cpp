#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>
#include <string>
#include <vector>

#include "arwlab/arw.hpp"
#include "arwlab/bup.hpp"
#include "arwlab/expcli.hpp"
#include "arwlab/model.hpp"
#include "arwlab/oracle.hpp"
#include "arwlab/rng.hpp"

namespace py = pybind11;
using namespace arwlab;

namespace {

py::dict constants_dict(std::int64_t n, double p, double q) {
    const auto c = constants(Params{n, p, q, 0});
    py::dict d;
    d["p"] = c.p;
    d["sigma"] = c.sigma;
    d["a_n"] = c.a_n;
    d["alpha_n"] = c.alpha_n;
    d["r_n"] = c.r_n;
    d["f_n"] = c.f_n;
    d["q_prime"] = c.q_prime;
    return d;
}

py::dict run_scenario(const std::vector<std::string>& args, const std::string& format) {
    exp::ScenarioResult result;
    {
        py::gil_scoped_release release;
        result = exp::run_scenario(exp::parse_config(args));
    }
    py::list reports;
    for (const auto& r : result.reports) {
        py::dict d;
        d["name"] = r.name;
        d["value"] = r.value;
        d["pass"] = r.pass;
        d["sample_size"] = r.sample_size;
        d["summary"] = r.summary_line();
        reports.append(d);
    }
    std::ostringstream out;
    exp::write_records(out, result, format == "jsonl" ? exp::Format::kJsonl : exp::Format::kCsv);
    py::dict d;
    d["run_id"] = result.config.run_id();
    d["reports"] = reports;
    d["all_pass"] = result.all_pass();
    d["records"] = out.str();
    return d;
}

}  // namespace

PYBIND11_MODULE(_arwlab, m) {
    m.doc() = "Activated random walk and binomial update process simulations";

    py::register_exception<exp::UsageError>(m, "UsageError", PyExc_ValueError);

    m.def("derive_p", &derive_p, py::arg("lam"));
    m.def("constants", &constants_dict, py::arg("n"), py::arg("p"), py::arg("q"));
    m.def("mu", &mu, py::arg("x"));
    m.def("gumbel_cdf", &gumbel_cdf, py::arg("x"));
    m.def(
        "normalize_S",
        [](std::int64_t s, std::int64_t n, double p, double q) { return normalize_S(s, n, constants(Params{n, p, q, 0})); },
        py::arg("s"), py::arg("n"), py::arg("p"), py::arg("q"));

    m.def(
        "exact_final_pmf", [](std::int64_t n, double p, double q) { return oracle::exact_final_pmf(n, p, q).mass; },
        py::arg("n"), py::arg("p"), py::arg("q"));
    m.def("binomial_tail", &oracle::binomial_tail, py::arg("n"), py::arg("p"), py::arg("k"));

    m.def(
        "sample_stationary_S",
        [](std::int64_t n, double p, double q, std::uint64_t seed) {
            Rng rng(seed);
            return arw::sample_stationary_S(Params{n, p, q, seed}, rng).sleep_count;
        },
        py::arg("n"), py::arg("p"), py::arg("q"), py::arg("seed"));
    m.def(
        "run_to_hitting",
        [](std::int64_t n, double p, double q, std::uint64_t seed) {
            Rng rng(seed);
            const auto r = bup::run_to_hitting(Params{n, p, q, seed}, rng);
            return py::make_tuple(r.y_final, r.steps, r.z_final);
        },
        py::arg("n"), py::arg("p"), py::arg("q"), py::arg("seed"),
        "Returns (S, hitting time, sink count) of one run of the count chain.");
    m.def(
        "run_fixed_energy",
        [](std::int64_t n, double p, std::int64_t mass, std::uint64_t seed, std::uint64_t step_cap) {
            Rng rng(seed);
            const auto r = bup::run_fixed_energy(n, p, mass, rng, step_cap);
            py::dict d;
            d["steps"] = r.steps;
            d["cap_hit"] = r.cap_hit;
            d["site1_updates"] = r.site1_updates;
            d["y0"] = r.initial.y0;
            return d;
        },
        py::arg("n"), py::arg("p"), py::arg("m"), py::arg("seed"), py::arg("step_cap"));

    m.def("run_scenario", &run_scenario, py::arg("args"), py::arg("format") = "csv",
          "Runs a scenario from command-line style arguments; returns reports and serialized records.");
    m.attr("CSV_HEADER") = std::string(exp::kCsvHeader);
}
