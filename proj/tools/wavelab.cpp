#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "wavelab/errors.hpp"
#include "wavelab/lab.hpp"
#include "wavelab/spectral_analysis.hpp"

namespace fs = std::filesystem;
using namespace wavelab;

namespace {

void print_record(const RunRecord& r) {
    std::cout << r.scenario << ": " << (r.failed ? "error" : (r.matched ? "matched" : "MISMATCH")) << "\n";
    if (r.failed) {
        std::cout << "  " << r.error << "\n";
        return;
    }
    std::cout << "  expected: " << r.expected << "\n  outcome:  " << r.outcome.dump() << "\n";
    for (const auto& a : r.artifacts) std::cout << "  wrote " << a << "\n";
}

/// Cartesian product of key=v1,v2,... lists layered over fixed overrides.
std::vector<json> expand_grid(const json& fixed, const std::vector<std::string>& vary) {
    std::vector<json> points{fixed.is_null() ? json::object() : fixed};
    for (const auto& v : vary) {
        const json parsed = parse_overrides({v});
        const auto& [key, values] = *parsed.items().begin();
        const json list = values.is_array() ? values : json::array({values});
        std::vector<json> next;
        for (const auto& p : points)
            for (const auto& x : list) {
                json q = p;
                q[key] = x;
                next.push_back(std::move(q));
            }
        points = std::move(next);
    }
    return points;
}

int cmd_stationary(int m, int k, double r_max, std::size_t n, const fs::path& out) {
    if (m != 3) fail(ErrorKind::InvalidArgument, "only m = 3 profiles are available");
    auto prof = default_profile();
    RadialGrid g = scaled_grid(*prof, k);
    if (r_max > 0.0) g = RadialGrid::make(r_max, n > 0 ? n : g.n);
    const auto q = build_stationary(k, prof, g);
    Table t{"Q" + std::to_string(k), {"r", "Q", "dQ", "LambdaQ"}, {}};
    for (std::size_t i = 0; i < g.n; ++i) t.rows.push_back({g.r(i), q.q[i], q.q_prime[i], q.lambda_q[i]});
    const json summary = {{"m", m},
                          {"k", k},
                          {"r_k", q.r_k},
                          {"ell_k", q.ell_k},
                          {"nodal_radii", q.nodal_radii()},
                          {"residual", stationary_residual(q)},
                          {"grid", {{"r_max", g.r_max}, {"n", g.n}}}};
    write_atomic(out / (t.name + ".csv"), to_csv(t));
    write_atomic(out / (t.name + ".json"), summary.dump(2) + "\n");
    std::cout << summary.dump(2) << "\nwrote " << (out / (t.name + ".csv")).string() << "\n";
    return 0;
}

int cmd_evolve(const fs::path& config, const fs::path& out_dir) {
    const EvolveRun run = load_evolve_config(config);
    const auto rep = run_evolve(run);
    const fs::path dir = out_dir.empty() ? default_out_root() / "evolve" / config.stem() : out_dir;
    write_atomic(dir / "series.csv", to_csv(rep.series));
    write_atomic(dir / "summary.json", rep.summary.dump(2) + "\n");
    write_atomic(dir / "series.gp", to_gnuplot(Plot{"series", "series", "t", "sup u, min u", {2, 3}, false}));
    std::cout << "outcome: " << rep.outcome.label() << "\n" << rep.summary.at("outcome").dump(2) << "\n";
    std::cout << "wrote " << dir.string() << "\n";
    if (run.expected.empty()) return 0;
    return rep.outcome.label() == run.expected ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"wavelab: stationary states, spectra and dynamics of the radial focusing wave equation outside a ball"};
    app.require_subcommand(1);
    std::string out;

    int m = 3, k = 0, k_max = 3;
    double r_max = 0.0;
    std::size_t n = 0;
    auto* st = app.add_subcommand("stationary", "sample Q_k and write it to CSV");
    st->add_option("--m", m, "nonlinearity exponent (3)");
    st->add_option("--k", k, "number of interior zeros")->check(CLI::Range(0, 5));
    st->add_option("--r-max", r_max, "outer radius (defaults to the scaled grid)");
    st->add_option("--n", n, "grid points when --r-max is given");
    st->add_option("--out", out, "output directory");

    auto* sp = app.add_subcommand("spectrum", "negative eigenvalues of the linearized operators");
    sp->add_option("--k-max", k_max, "largest k")->check(CLI::Range(0, 3));
    sp->add_option("--out", out, "output root");

    std::string config;
    auto* ev = app.add_subcommand("evolve", "nonlinear evolution from a TOML config");
    ev->add_option("--config", config, "run description")->required()->check(CLI::ExistingFile);
    ev->add_option("--out", out, "output directory");

    std::vector<double> deltas;
    int mk = 0;
    auto* mf = app.add_subcommand("manifold", "Picard points on the center-stable manifold of Q_k");
    mf->add_option("--delta", deltas, "perturbation sizes (decreasing)")->required()->delimiter(',');
    mf->add_option("--k", mk, "stationary state index")->check(CLI::Range(0, 1));
    mf->add_option("--out", out, "output root");

    std::string name;
    std::vector<std::string> sets;
    bool list = false;
    auto* sc = app.add_subcommand("scenario", "run a registered scenario");
    sc->add_option("name", name, "scenario name");
    sc->add_option("--set", sets, "parameter override key=value");
    sc->add_flag("--list", list, "list scenarios and their defaults");
    sc->add_option("--out", out, "output root");

    std::vector<std::string> vary, sweep_sets;
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
    auto* sw = app.add_subcommand("sweep", "run a scenario over a grid of overrides");
    sw->add_option("name", name, "scenario name")->required();
    sw->add_option("--vary", vary, "key=v1,v2,... (cartesian product)");
    sw->add_option("--set", sweep_sets, "fixed override key=value");
    sw->add_option("--jobs", jobs, "parallel runs");
    sw->add_option("--out", out, "output root");

    std::string record;
    auto* rp = app.add_subcommand("replay", "re-run a stored record");
    rp->add_option("record", record, "record.json")->required()->check(CLI::ExistingFile);
    rp->add_option("--out", out, "output root");

    bool quick = false;
    std::vector<int> only;
    auto* vf = app.add_subcommand("verify", "run the acceptance suite");
    vf->add_flag("--quick", quick, "trim the most expensive sweeps");
    vf->add_option("--only", only, "criterion ids")->delimiter(',')->check(CLI::Range(1, 13));

    CLI11_PARSE(app, argc, argv);

    const RunOptions opt{out.empty() ? default_out_root() : fs::path(out)};
    try {
        if (*st) return cmd_stationary(m, k, r_max, n, out.empty() ? default_out_root() / "stationary" : fs::path(out));
        if (*sp) {
            const auto r = run_scenario("spectrum-table", {{"k_max", k_max}}, opt);
            print_record(r);
            return exit_code(r);
        }
        if (*ev) return cmd_evolve(config, out);
        if (*mf) {
            const auto r = run_scenario("manifold-scaling", {{"k", mk}, {"deltas", deltas}}, opt);
            print_record(r);
            if (!r.failed) std::cout << r.diagnostics.at("points").dump(2) << "\n";
            return exit_code(r);
        }
        if (*sc) {
            if (list || name.empty()) {
                for (const auto& s : scenarios()) std::cout << s.name << "  " << s.summary << "\n    " << s.defaults.dump() << "\n";
                return 0;
            }
            const auto r = run_scenario(name, parse_overrides(sets), opt);
            print_record(r);
            return exit_code(r);
        }
        if (*sw) {
            const auto points = expand_grid(parse_overrides(sweep_sets), vary);
            const auto rs = sweep(name, points, jobs, opt);
            for (std::size_t i = 0; i < rs.size(); ++i) {
                std::cout << "[" << i << "] " << points[i].dump() << "\n";
                print_record(rs[i]);
            }
            return exit_code(rs);
        }
        if (*rp) {
            const auto before = load_record(record);
            const auto r = replay(before, opt);
            print_record(r);
            const bool same = r.outcome.value("kind", json()) == before.outcome.value("kind", json());
            std::cout << "replayed outcome " << (same ? "agrees with" : "differs from") << " the record\n";
            return r.failed ? 1 : (same ? exit_code(r) : 2);
        }
        if (*vf) {
            int failures = 0;
            auto show = [&](const CriterionResult& c) {
                std::printf("[%s] %2d %-32s %7.1fs  %s\n", c.pass ? "PASS" : "FAIL", c.id, c.title.c_str(), c.seconds,
                            c.detail.c_str());
                std::fflush(stdout);
                failures += c.pass ? 0 : 1;
            };
            if (only.empty()) {
                run_acceptance(quick, show);
            } else {
                for (int id : only) show(run_criterion(id, quick));
            }
            std::printf("%d criteria failed\n", failures);
            return failures ? 2 : 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
