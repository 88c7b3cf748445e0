#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "wavelab/errors.hpp"
#include "wavelab/lab.hpp"
#include "wavelab/spectral_analysis.hpp"

namespace py = pybind11;
using namespace wavelab;

// JSON crosses the boundary as text; the Python side decodes it.
PYBIND11_MODULE(_core, m) {
    m.doc() = "wavelab core bindings";
    m.attr("FORMAT_VERSION") = kFormatVersion;

    py::register_exception<Error>(m, "WavelabError", PyExc_RuntimeError);

    m.def("profile_zeros", [] { return default_profile()->zeros; }, "Zeros r_0 > r_1 > ... of the singular profile (m = 3).");

    m.def(
        "stationary",
        [](int k, double r_max, std::size_t n) {
            auto prof = default_profile();
            const RadialGrid g = r_max > 0.0 ? RadialGrid::make(r_max, n) : scaled_grid(*prof, k);
            const auto q = build_stationary(k, prof, g);
            py::dict d;
            d["r"] = g.radii();
            d["q"] = q.q;
            d["dq"] = q.q_prime;
            d["lambda_q"] = q.lambda_q;
            d["r_k"] = q.r_k;
            d["ell_k"] = q.ell_k;
            d["nodal_radii"] = q.nodal_radii();
            d["residual"] = stationary_residual(q);
            return d;
        },
        py::arg("k"), py::arg("r_max") = 0.0, py::arg("n") = 8193,
        "Q_k sampled on a grid (the scaled grid for k when r_max is 0).");

    m.def(
        "eigenvalues",
        [](int k) {
            auto prof = default_profile();
            const RadialGrid g = scaled_grid(*prof, k);
            const auto q = build_stationary(k, prof, g);
            std::vector<double> e;
            {
                py::gil_scoped_release release;
                for (const auto& b : find_negative_eigenvalues(q).states) e.push_back(b.e);
            }
            return e;
        },
        py::arg("k"), "Decay rates e_j with eigenvalues -e_j^2 of the linearized operator around Q_k.");

    m.def("scenario_names", [] {
        std::vector<std::string> out;
        for (const auto& s : scenarios()) out.push_back(s.name);
        return out;
    });

    m.def("scenario_defaults", [](const std::string& name) { return find_scenario(name).defaults.dump(); });

    m.def(
        "run_scenario",
        [](const std::string& name, const std::string& overrides, const std::string& out_root) {
            const json o = overrides.empty() ? json::object() : json::parse(overrides);
            py::gil_scoped_release release;
            return to_json(run_scenario(name, o, RunOptions{out_root})).dump();
        },
        py::arg("name"), py::arg("overrides") = "", py::arg("out_root") = "");

    m.def(
        "evolve_toml",
        [](const std::string& text) {
            const auto run = parse_evolve_config(text);
            py::gil_scoped_release release;
            const auto rep = run_evolve(run);
            json j = rep.summary;
            j["label"] = rep.outcome.label();
            j["series_header"] = rep.series.header;
            j["series"] = rep.series.rows;
            return j.dump();
        },
        py::arg("text"));

    m.def(
        "verify",
        [](const std::vector<int>& ids, bool quick) {
            std::vector<CriterionResult> rs;
            {
                py::gil_scoped_release release;
                if (ids.empty()) rs = run_acceptance(quick);
                for (int id : ids) rs.push_back(run_criterion(id, quick));
            }
            py::list out;
            for (const auto& r : rs) {
                py::dict d;
                d["id"] = r.id;
                d["title"] = r.title;
                d["passed"] = r.pass;
                d["detail"] = r.detail;
                d["seconds"] = r.seconds;
                out.append(d);
            }
            return out;
        },
        py::arg("ids") = std::vector<int>{}, py::arg("quick") = false);
}
