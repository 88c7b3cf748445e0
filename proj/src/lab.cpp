#include "wavelab/lab.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <toml.hpp>

#include "wavelab/errors.hpp"
#include "wavelab/manifold_toolkit.hpp"
#include "wavelab/spectral_analysis.hpp"

namespace wavelab {

namespace fs = std::filesystem;

std::shared_ptr<const SingularProfile> default_profile() {
    static const std::shared_ptr<const SingularProfile> p =
        std::make_shared<const SingularProfile>(integrate_singular_profile(3, 200.0, 5e-5, 1e-12, 6));
    return p;
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

json outcome_json(const RunOutcome& o) {
    return json{{"kind", to_string(o.kind)},
                {"label", o.label()},
                {"sign", o.sign},
                {"k", o.k},
                {"t_est", o.t_est},
                {"energy_drift", o.energy_drift},
                {"min_u_at_detection", o.min_u_at_detection},
                {"max_u_at_detection", o.max_u_at_detection},
                {"final_local_distances", o.final_local_distances},
                {"note", o.note}};
}

json grid_json(const RadialGrid& g) { return json{{"r_min", g.r_min}, {"r_max", g.r_max}, {"n", g.n}, {"spacing", g.spacing()}}; }

/// Mode basis truncated to a shorter grid with the same spacing.
ModeBasis restrict_modes(const ModeBasis& mb, const RadialGrid& g) {
    if (mb.grid == g) return mb;
    ModeBasis out = mb;
    out.grid = g;
    for (auto& s : out.states) {
        s.grid = g;
        s.psi.resize(g.n);
        s.y.resize(g.n);
    }
    return out;
}

/// Spectral grid and basis for index k; the grid may be cut to r_max.
struct KSetup {
    RadialGrid grid;
    StationaryState q;
    ModeBasis modes;
};

KSetup setup_for(int k, double r_max, std::size_t n) {
    auto prof = default_profile();
    if (k == 0) {
        const RadialGrid g = RadialGrid::make(r_max, n);
        auto q = build_stationary(0, prof, g);
        auto mb = find_negative_eigenvalues(q);
        return {g, std::move(q), std::move(mb)};
    }
    const RadialGrid gs = scaled_grid(*prof, k);
    auto qs = build_stationary(k, prof, gs);
    auto mb = find_negative_eigenvalues(qs);
    const RadialGrid g = gs.r_max > r_max ? gs.truncated(r_max) : gs;
    auto q = build_stationary(k, prof, g);
    return {g, std::move(q), restrict_modes(mb, g)};
}

Plot plot(std::string name, std::string table, std::string x, std::string y, std::vector<int> cols, bool logy = false) {
    return Plot{std::move(name), std::move(table), std::move(x), std::move(y), std::move(cols), logy};
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

// --- scenario bodies ----------------------------------------------------------------------------

ScenarioResult spectrum_table(const json& p) {
    ScenarioResult res;
    const int k_max = p.at("k_max").get<int>();
    Table t{"spectrum", {"k", "j", "e", "mu_shoot", "mu_matrix", "rel_diff", "nodes"}, {}};
    json counts = json::array();
    if (p.at("zero_potential").get<bool>()) {
        const RadialGrid g = RadialGrid::make(60.0, 8193);
        const auto zq = zero_state(g);
        const int shoot = shooting_count(-1e-10, zq);
        const int mat = static_cast<int>(matrix_oracle(zq, g.n).size());
        res.outcome = {{"counts", json::array({shoot})}, {"matrix_counts", json::array({mat})}};
        res.matched = shoot == 0 && mat == 0;
        res.expected = "no negative eigenvalues for Q = 0";
        return res;
    }
    json mcounts = json::array();
    double worst = 0.0;
    bool nodes_ok = true;
    auto prof = default_profile();
    for (int k = 0; k <= k_max; ++k) {
        const RadialGrid g = scaled_grid(*prof, k);
        const auto q = build_stationary(k, prof, g);
        const auto mb = find_negative_eigenvalues(q);
        const auto mo = matrix_oracle_richardson(q, g.n);
        counts.push_back(mb.states.size());
        mcounts.push_back(mo.size());
        for (std::size_t j = 0; j < mb.states.size(); ++j) {
            const auto& s = mb.states[j];
            const double mu_m = j < mo.size() ? mo[j] : std::nan("");
            const double rel = std::abs(mu_m - s.eigenvalue()) / std::abs(mu_m);
            worst = std::max(worst, rel);
            const int nodes = count_sign_changes(s.y, g, g.r_min, g.r_max);
            nodes_ok = nodes_ok && nodes == static_cast<int>(j);
            t.rows.push_back({double(k), double(j), s.e, s.eigenvalue(), mu_m, rel, double(nodes)});
        }
        res.diagnostics["c_bound"].push_back(mb.c_bound);
        res.diagnostics["grids"].push_back(grid_json(g));
    }
    bool ok = true;
    for (int k = 0; k <= k_max; ++k)
        ok = ok && counts[k].get<int>() == k + 1 && mcounts[k].get<int>() == k + 1;
    res.outcome = {{"counts", counts}, {"matrix_counts", mcounts}, {"max_rel_diff", worst}, {"nodes_ok", nodes_ok}};
    res.matched = ok && worst <= 1e-6 && nodes_ok;
    res.expected = "k+1 negative eigenvalues per k, methods agree to 1e-6, node counts j";
    res.tables.push_back(std::move(t));
    return res;
}

ScenarioResult lambdaq_zeros(const json& p) {
    ScenarioResult res;
    const int k_max = p.at("k_max").get<int>();
    const double h_max = p.at("h_max").get<double>();
    auto prof = default_profile();
    Table t{"lambdaq_zeros", {"k", "i", "zero", "interval_lo", "interval_hi"}, {}};
    bool ok = true;
    json counts = json::array(), tails = json::array();
    for (int k = 0; k <= k_max; ++k) {
        const RadialGrid g = scaled_grid(*prof, k, 60.0, h_max);
        const auto q = build_stationary(k, prof, g);
        const int c = count_sign_changes(q.lambda_q, g, g.r_min, g.r_max);
        const auto z = sign_change_locations(q.lambda_q, g, g.r_min, g.r_max);
        counts.push_back(c);
        ok = ok && c == k + 1;
        for (std::size_t i = 0; i < z.size(); ++i) {
            const double lo = prof->zero(k - static_cast<int>(i)) / q.r_k;
            const double hi = static_cast<int>(i) < k ? prof->zero(k - static_cast<int>(i) - 1) / q.r_k
                                                      : std::numeric_limits<double>::infinity();
            ok = ok && z[i] >= lo && z[i] <= hi;
            t.rows.push_back({double(k), double(i), z[i], lo, hi});
        }
        // tail asymptote of r LambdaQ on the last 10% of the grid
        const std::size_t i0 = g.index_of(g.r_max - 0.1 * (g.r_max - g.r_min));
        double acc = 0.0;
        for (std::size_t i = i0; i < g.n; ++i) acc += g.r(i) * q.lambda_q[i];
        const double mean = acc / static_cast<double>(g.n - i0);
        const double target = -(q.m - 1.0) / q.m * q.ell_k;
        const double rel = std::abs(mean / target - 1.0);
        tails.push_back(rel);
        ok = ok && rel <= 0.01;
    }
    res.outcome = {{"counts", counts}, {"tail_rel_error", tails}};
    res.matched = ok;
    res.expected = "k+1 zeros of LambdaQ_k in their nodal intervals, tail within 1%";
    res.tables.push_back(std::move(t));
    return res;
}

ScenarioResult nodal_domains(const json& p) {
    ScenarioResult res;
    const int k_max = p.at("k_max").get<int>();
    const std::size_t n = p.at("n").get<std::size_t>();
    auto prof = default_profile();
    Table t{"nodal_domains", {"k", "i", "gamma_lo", "gamma_hi", "eigencount", "quadratic_form"}, {}};
    bool ok = true;
    for (int k = 0; k <= k_max; ++k) {
        const RadialGrid g = scaled_grid(*prof, k);
        const auto q = build_stationary(k, prof, g);
        const auto gam = q.nodal_radii();
        for (int i = 0; i <= k; ++i) {
            const int c = subdomain_eigencount(q, i, n);
            const double qf = quadratic_form(nodal_test_function(q, i, false), q);
            ok = ok && c == 1;
            const double hi = i < k ? gam[static_cast<std::size_t>(i) + 1] : g.r_max;
            t.rows.push_back({double(k), double(i), gam[static_cast<std::size_t>(i)], hi, double(c), qf});
        }
    }
    res.outcome = {{"all_one", ok}};
    res.matched = ok;
    res.expected = "exactly one negative eigenvalue on every nodal domain";
    res.tables.push_back(std::move(t));
    return res;
}

ScenarioResult zero_energy(const json& p) {
    ScenarioResult res;
    const int k_max = p.at("k_max").get<int>();
    const double tol = p.at("resonance_tol").get<double>();
    auto prof = default_profile();
    Table t{"zero_energy", {"k", "limit", "max_abs_h", "ratio", "wronskian_dev", "nodes"}, {}};
    bool ok = true;
    for (int k = 0; k <= k_max; ++k) {
        const RadialGrid g = scaled_grid(*prof, k);
        const auto q = build_stationary(k, prof, g);
        const auto z = zero_energy_diagnostic(q, tol);
        const double ratio = std::abs(z.limit_estimate) / z.max_abs_h;
        ok = ok && !z.is_resonant && ratio > tol && z.wronskian_max_rel_dev <= 1e-8;
        t.rows.push_back({double(k), z.limit_estimate, z.max_abs_h, ratio, z.wronskian_max_rel_dev, double(z.node_count)});
    }
    res.outcome = {{"non_resonant", ok}};
    res.matched = ok;
    res.expected = "no zero energy state; Wronskian constant to 1e-8";
    res.tables.push_back(std::move(t));
    return res;
}

EvolveRun evolve_run_from(const json& p) {
    EvolveRun r;
    r.k = p.value("k", 0);
    r.r_max = p.value("r_max", r.r_max);
    r.n = p.value("n", r.n);
    r.t_end = p.value("t_end", r.t_end);
    r.alpha = p.value("alpha", 0.0);
    r.r_loc = p.value("r_loc", r.r_loc);
    r.record_every = p.value("record_every", r.record_every);
    return r;
}

void attach_series(ScenarioResult& res, EvolveReport& rep, const std::string& stem) {
    rep.series.name = stem;
    res.tables.push_back(rep.series);
    res.plots.push_back(plot(stem + "_amplitude", stem, "t", "sup u, min u", {2, 3}));
    res.plots.push_back(plot(stem + "_energy", stem, "t", "energy", {4}));
}

ScenarioResult ground_dichotomy(const json& p) {
    ScenarioResult res;
    EvolveRun r = evolve_run_from(p);
    r.k = 0;
    auto rep = run_evolve(r);
    const auto& o = rep.outcome;
    if (r.alpha > 0) {
        res.expected = "PositiveBlowUp with min u >= -eps_pos";
        res.matched = o.kind == OutcomeKind::PositiveBlowUp && rep.summary.at("positivity").at("ok").get<bool>();
    } else {
        res.expected = "ScattersToZero";
        res.matched = o.kind == OutcomeKind::ScattersToZero;
    }
    res.outcome = outcome_json(o);
    res.diagnostics = rep.summary;
    attach_series(res, rep, "series");
    return res;
}

ScenarioResult excited_blowup(const json& p) {
    ScenarioResult res;
    EvolveRun r = evolve_run_from(p);
    if (r.k < 1) fail(ErrorKind::InvalidArgument, "excited-blowup needs k >= 1");
    auto rep = run_evolve(r);
    const auto& o = rep.outcome;
    const auto want = r.alpha > 0 ? OutcomeKind::PositiveBlowUp : OutcomeKind::NegativeBlowUp;
    res.expected = to_string(want);
    res.matched = o.kind == want;
    res.outcome = outcome_json(o);
    res.diagnostics = rep.summary;
    attach_series(res, rep, "series");
    return res;
}

ScenarioResult negative_time(const json& p) {
    ScenarioResult res;
    EvolveRun r = evolve_run_from(p);
    const double delta = p.at("delta").get<double>();
    r.reverse_time = true;
    r.alpha = delta;
    auto rep = run_evolve(r);
    res.expected = "PositiveBlowUp";
    res.matched = rep.outcome.kind == OutcomeKind::PositiveBlowUp;
    res.outcome = outcome_json(rep.outcome);
    res.diagnostics = rep.summary;
    attach_series(res, rep, "series");
    return res;
}

ScenarioResult stationary_inequalities(const json& p) {
    ScenarioResult res;
    const int k_max = p.at("k_max").get<int>();
    auto prof = default_profile();
    Table t{"witnesses", {"j", "k", "a1", "a2", "a3", "a4"}, {}};
    bool ok = true;
    for (int k = 0; k <= k_max; ++k) {
        for (int j = 0; j <= k; ++j) {
            const RadialGrid g = pair_grid(*prof, j, k);
            const auto qj = build_stationary(j, prof, g);
            const auto qk = build_stationary(k, prof, g);
            try {
                const auto w = stationary_inequality_witnesses(qj, qk);
                const double nan = std::nan("");
                t.rows.push_back({double(j), double(k), w.a1.value_or(nan), w.a2.value_or(nan), w.a3.value_or(nan),
                                  w.a4.value_or(nan)});
            } catch (const Error& e) {
                ok = false;
                res.diagnostics["failures"].push_back(std::to_string(j) + "," + std::to_string(k) + ": " + e.what());
            }
        }
    }
    res.outcome = {{"all_found", ok}};
    res.matched = ok;
    res.expected = "witnesses for every applicable (j,k)";
    res.tables.push_back(std::move(t));
    return res;
}

struct ManifoldSetup {
    RadialGrid grid;
    StationaryState q;
    ModeBasis modes;
};

ManifoldSetup manifold_setup(int k, double r_max, std::size_t n) {
    auto prof = default_profile();
    const RadialGrid g = k == 0 ? RadialGrid::make(r_max, n) : scaled_grid(*prof, k);
    auto q = build_stationary(k, prof, g);
    auto mb = find_negative_eigenvalues(q);
    return {g, std::move(q), std::move(mb)};
}

FieldState manifold_direction(const ManifoldSetup& s, const std::string& kind, double centre, double width) {
    if (kind == "stable") return mode_state(s.modes.states.front(), -1);
    FieldState b = bump(s.grid, centre, width, 1.0);
    auto d = decompose(b, s.modes);
    std::fill(d.alpha_plus.begin(), d.alpha_plus.end(), 0.0);
    if (kind == "center") std::fill(d.alpha_minus.begin(), d.alpha_minus.end(), 0.0);
    else if (kind != "bump") fail(ErrorKind::InvalidArgument, "direction must be bump, center or stable");
    return reconstruct(d, s.modes);
}

ScenarioResult manifold_scaling(const json& p) {
    ScenarioResult res;
    const auto s = manifold_setup(p.at("k").get<int>(), p.at("r_max").get<double>(), p.at("n").get<std::size_t>());
    const FieldState dir = manifold_direction(s, p.at("direction").get<std::string>(), p.at("bump_center").get<double>(),
                                              p.at("bump_width").get<double>());
    PicardConfig cfg;
    cfg.horizon = p.at("horizon").get<double>();
    cfg.tol = p.at("tol").get<double>();
    const auto deltas = p.at("deltas").get<std::vector<double>>();
    const auto sr = graph_scaling_experiment(dir, deltas, s.modes, s.q, cfg);
    Table t{"graph_points", {"delta", "triple_norm", "theta_norm", "contraction_ratio", "tail_bound", "linear_deviation",
                             "iterations"}, {}};
    Table it{"picard_residuals", {"delta", "iteration", "distance"}, {}};
    double worst = 0.0;
    json points = json::array();
    for (std::size_t i = 0; i < sr.points.size(); ++i) {
        const auto& gp = sr.points[i];
        worst = std::max(worst, gp.contraction_ratio);
        t.rows.push_back({deltas[i], gp.triple_norm, gp.theta_norm, gp.contraction_ratio, gp.tail_bound,
                          gp.linear_deviation, double(gp.iterations)});
        for (std::size_t k = 0; k < gp.iterate_distances.size(); ++k)
            it.rows.push_back({deltas[i], double(k + 1), gp.iterate_distances[k]});
        points.push_back({{"delta", deltas[i]},
                          {"triple_norm", gp.triple_norm},
                          {"theta", gp.theta},
                          {"contraction_ratio", gp.contraction_ratio},
                          {"tail_bound", gp.tail_bound}});
    }
    res.outcome = {{"slope", sr.slope}, {"max_contraction_ratio", worst}};
    res.diagnostics = {{"points", points}, {"grid", grid_json(s.grid)}, {"horizon", cfg.horizon}};
    const bool slope_ok = deltas.size() < 2 || (sr.slope >= 1.8 && sr.slope <= 2.2);
    res.matched = slope_ok && worst < 0.8;
    res.expected = "slope in [1.8, 2.2] and contraction ratio < 0.8 for every delta";
    res.tables.push_back(std::move(t));
    res.tables.push_back(std::move(it));
    res.plots.push_back(plot("graph_scaling", "graph_points", "delta", "|theta|", {3}, true));
    return res;
}

/// Channel samples for h0 in {Y_0^+, Y_k^+, mixed}.
struct ChannelRun {
    std::vector<std::string> labels;
    std::vector<std::vector<ChannelSample>> samples;
};

ChannelRun channel_run(int k, double r0, double span, const std::vector<double>& times) {
    auto prof = default_profile();
    const RadialGrid g = scaled_grid(*prof, k);
    const auto q = build_stationary(k, prof, g);
    const auto mb = find_negative_eigenvalues(q);
    ChannelRun out;
    std::vector<FieldState> hs{mode_state(mb.states.front(), 1)};
    out.labels.push_back("Y0+");
    if (k > 0) {
        hs.push_back(mode_state(mb.states.back(), 1));
        out.labels.push_back("Yk+");
        FieldState mix = FieldState::zeros(g);
        for (const auto& b : mb.states) mix.axpy(1.0, mode_state(b, 1));
        hs.push_back(std::move(mix));
        out.labels.push_back("mixed");
    }
    for (const auto& h0 : hs) out.samples.push_back(channel_samples(h0, mb, q, r0, span, times));
    return out;
}

ScenarioResult channel_bounds(const json& p) {
    ScenarioResult res;
    const int k = p.at("k").get<int>();
    const double r0 = p.at("r0").get<double>();
    const double frozen = p.at("c_frozen").get<double>();
    const auto run = channel_run(k, r0, p.at("span").get<double>(), p.at("times").get<std::vector<double>>());
    Table t{"channel", {"datum", "R", "t", "exterior", "lower", "upper"}, {}};
    double c = 1.0;
    for (std::size_t d = 0; d < run.samples.size(); ++d) {
        c = std::max(c, channel_constant(run.samples[d]));
        for (const auto& s : run.samples[d]) t.rows.push_back({double(d), s.R, s.t, s.exterior, s.lower, s.upper});
    }
    res.outcome = {{"fitted_c", c}, {"data", run.labels}};
    if (frozen > 0.0) {
        res.matched = c <= frozen;
        res.expected = "every sample inside the envelope with C = " + fmt(frozen);
    } else {
        res.matched = std::isfinite(c);
        res.expected = "finite envelope constant";
    }
    res.tables.push_back(std::move(t));
    res.plots.push_back(plot("channel", "channel", "R", "exterior energy", {4, 5, 6}, true));
    return res;
}

struct ConvergenceData {
    double free_error = 0.0;
    std::vector<std::size_t> drift_n;
    std::vector<double> drift;
    std::vector<std::size_t> stat_n;
    std::vector<double> stat;
    double residual_ratio = 0.0;
    double eps_ratio = 0.0;
    std::vector<double> seconds;
};

double free_transport_error(std::size_t n, double t_end) {
    const RadialGrid g = RadialGrid::make(60.0, n);
    auto f = [](double x) {
        const double s = (x - 20.0) / 3.0;
        return std::abs(s) < 1.0 ? std::pow(1.0 - s * s, 4) : 0.0;
    };
    FieldState s = FieldState::zeros(g);
    for (std::size_t i = 0; i < g.n; ++i) s.psi[i] = f(g.r(i));
    EvolveConfig c;
    c.t_end = t_end;
    c.record_every = 1;
    double err = 0.0;
    auto sample = [&](long j) { return j >= 0 ? f(g.r(static_cast<std::size_t>(j))) : -f(g.r(static_cast<std::size_t>(-j))); };
    c.store_frames = false;
    evolve(s, c, EvolveMode::Free, nullptr, 3, {}, [&](const FieldState& fr) {
        const long steps = std::lround(fr.t / g.spacing());
        for (std::size_t i = 0; i + 1 < g.n; ++i) {
            const double ex = 0.5 * (sample(static_cast<long>(i) - steps) + sample(static_cast<long>(i) + steps));
            err = std::max(err, std::abs(fr.psi[i] - ex));
        }
    });
    return err;
}

FieldState drift_pulse(const RadialGrid& g, double amplitude) {
    FieldState s = FieldState::zeros(g);
    for (std::size_t i = 1; i < g.n; ++i) {
        const double r = g.r(i);
        const double x = (r - 6.0) / 3.0;
        if (std::abs(x) < 1.0) s.psi[i] = amplitude * r * std::pow(1.0 - x * x, 4);
    }
    return s;
}

double energy_drift_run(std::size_t n, double t_end) {
    const RadialGrid g = RadialGrid::make(60.0, n);
    EvolveConfig c;
    c.t_end = t_end;
    c.record_every = 8;
    c.store_frames = false;
    auto tr = evolve(drift_pulse(g, 0.5), c);
    return tr.outcome.energy_drift;
}

double stationarity_error(std::size_t n, double t_end) {
    const RadialGrid g = RadialGrid::make(60.0, n);
    const auto q = build_stationary(0, default_profile(), g);
    EvolveConfig c;
    c.t_end = t_end;
    c.record_every = 16;
    c.store_frames = false;
    double d = 0.0;
    evolve(FieldState::stationary(q), c, EvolveMode::Nonlinear, nullptr, q.m, {},
           [&](const FieldState& f) { d = std::max(d, energy_norm_distance(f, &q, 1.0)); });
    return d;
}

ConvergenceData convergence(bool quick) {
    ConvergenceData cd;
    auto t0 = std::chrono::steady_clock::now();
    cd.free_error = free_transport_error(8193, 36.0);
    cd.seconds.push_back(seconds_since(t0));
    for (std::size_t n : {4097u, 8193u, 16385u}) {
        t0 = std::chrono::steady_clock::now();
        cd.drift_n.push_back(n);
        cd.drift.push_back(energy_drift_run(n, 50.0));
        cd.seconds.push_back(seconds_since(t0));
    }
    const std::vector<std::size_t> sn = quick ? std::vector<std::size_t>{8193, 16385}
                                              : std::vector<std::size_t>{8193, 16385, 32769};
    for (std::size_t n : sn) {
        t0 = std::chrono::steady_clock::now();
        cd.stat_n.push_back(n);
        cd.stat.push_back(stationarity_error(n, 20.0));
        cd.seconds.push_back(seconds_since(t0));
    }
    auto prof = default_profile();
    const RadialGrid g1 = scaled_grid(*prof, 1);
    const double full = stationary_residual(build_stationary(1, prof, g1));
    const double half = stationary_residual(build_stationary(1, prof, g1.coarsened()));
    cd.residual_ratio = half / full;
    const RadialGrid ge = RadialGrid::make(60.0, 8193);
    cd.eps_ratio = eps_pos(ge, 1.0) / eps_pos(ge.refined(), 1.0);
    return cd;
}

ScenarioResult convergence_suite(const json& p) {
    ScenarioResult res;
    const auto cd = convergence(p.at("quick").get<bool>());
    Table t{"convergence", {"n", "energy_drift"}, {}};
    for (std::size_t i = 0; i < cd.drift.size(); ++i) t.rows.push_back({double(cd.drift_n[i]), cd.drift[i]});
    Table s{"stationarity", {"n", "distance"}, {}};
    for (std::size_t i = 0; i < cd.stat.size(); ++i) s.rows.push_back({double(cd.stat_n[i]), cd.stat[i]});
    const double dr = cd.drift[1] / cd.drift[2];
    const double sr = cd.stat[0] / cd.stat[1];
    res.outcome = {{"free_transport_error", cd.free_error},
                   {"drift_reference", cd.drift[1]},
                   {"drift_ratio", dr},
                   {"stationarity_ratio", sr},
                   {"residual_ratio", cd.residual_ratio},
                   {"eps_pos_ratio", cd.eps_ratio}};
    res.diagnostics = {{"seconds", cd.seconds}};
    res.matched = cd.free_error <= 1e-13 && cd.drift[1] <= 1e-4 && dr > 3.0 && dr < 5.0 && sr > 3.0 && sr < 5.0;
    res.expected = "exact transport, drift <= 1e-4, second-order ratios";
    res.tables.push_back(std::move(t));
    res.tables.push_back(std::move(s));
    res.plots.push_back(plot("drift", "convergence", "n", "relative energy drift", {2}, true));
    return res;
}

}  // namespace

// --- registry -----------------------------------------------------------------------------------

const std::vector<Scenario>& scenarios() {
    static const std::vector<Scenario> all = {
        {"spectrum-table", "negative eigenvalues of L_k by shooting and a matrix oracle",
         {{"k_max", 3}, {"zero_potential", false}}, spectrum_table},
        {"lambdaQ-zeros", "zeros of the scaling generator and its tail asymptote",
         {{"k_max", 5}, {"h_max", 59.0 / 2048.0}}, lambdaq_zeros},
        {"nodal-domains", "negative eigenvalue counts on the nodal domains of Q_k",
         {{"k_max", 3}, {"n", 4097}}, nodal_domains},
        {"zero-energy", "absence of a zero energy state", {{"k_max", 3}, {"resonance_tol", 1e-3}}, zero_energy},
        {"ground-dichotomy", "(Q_0, 0) + alpha (Y_0, e_0 Y_0): blow-up or scattering",
         {{"alpha", 1e-2}, {"r_max", 80.0}, {"n", 16385}, {"t_end", 60.0}, {"r_loc", 10.0}, {"record_every", 32}},
         ground_dichotomy},
        {"excited-blowup", "(Q_k, 0) + alpha (Y_0, e_0 Y_0) for k >= 1",
         {{"k", 1}, {"alpha", 1e-2}, {"r_max", 60.0}, {"t_end", 50.0}, {"r_loc", 10.0}, {"record_every", 32}},
         excited_blowup},
        {"negative-time", "time-reversed (Q_k, 0) + delta Y_0^- evolved forward",
         {{"k", 0}, {"delta", 1e-2}, {"r_max", 80.0}, {"n", 16385}, {"t_end", 60.0}, {"r_loc", 10.0},
          {"record_every", 32}},
         negative_time},
        {"stationary-inequalities", "ordering witnesses between Q_j and Q_k", {{"k_max", 3}}, stationary_inequalities},
        {"manifold-scaling", "graph map of the local center-stable manifold",
         {{"k", 0},
          {"r_max", 60.0},
          {"n", 4097},
          {"horizon", 40.0},
          {"tol", 1e-10},
          {"deltas", default_deltas()},
          {"direction", "bump"},
          {"bump_center", 5.0},
          {"bump_width", 3.0}},
         manifold_scaling},
        {"channel-bounds", "exterior energy of unstable linear data",
         {{"k", 0}, {"r0", 10.0}, {"span", 10.0}, {"times", std::vector<double>{0.0, 1.0, 2.0}}, {"c_frozen", 0.0}},
         channel_bounds},
        {"convergence-suite", "scheme certificates and convergence orders", {{"quick", false}}, convergence_suite},
    };
    return all;
}

const Scenario& find_scenario(const std::string& name) {
    for (const auto& s : scenarios())
        if (s.name == name) return s;
    fail(ErrorKind::UnknownScenario, "unknown scenario '" + name + "'");
}

json merge_params(const Scenario& s, const json& overrides) {
    json out = s.defaults;
    if (overrides.is_null()) return out;
    if (!overrides.is_object()) fail(ErrorKind::InvalidArgument, "overrides must be an object");
    for (auto it = overrides.begin(); it != overrides.end(); ++it) {
        if (!out.contains(it.key())) fail(ErrorKind::InvalidArgument, "unknown parameter '" + it.key() + "' for " + s.name);
        const json& def = out[it.key()];
        const json& v = it.value();
        const bool ok = (def.is_number() && v.is_number()) || (def.is_boolean() && v.is_boolean()) ||
                        (def.is_string() && v.is_string()) || (def.is_array() && v.is_array());
        if (!ok) fail(ErrorKind::InvalidArgument, "parameter '" + it.key() + "' has the wrong type");
        if (def.is_number_integer() && !v.is_number_integer())
            fail(ErrorKind::InvalidArgument, "parameter '" + it.key() + "' must be an integer");
        out[it.key()] = v;
    }
    return out;
}

json parse_overrides(const std::vector<std::string>& assignments) {
    auto scalar = [](const std::string& s) -> json {
        if (s == "true") return true;
        if (s == "false") return false;
        try {
            std::size_t pos = 0;
            const long long i = std::stoll(s, &pos);
            if (pos == s.size()) return i;
        } catch (...) {
        }
        try {
            std::size_t pos = 0;
            const double d = std::stod(s, &pos);
            if (pos == s.size()) return d;
        } catch (...) {
        }
        return s;
    };
    json out = json::object();
    for (const auto& a : assignments) {
        const auto eq = a.find('=');
        if (eq == std::string::npos || eq == 0) fail(ErrorKind::InvalidArgument, "expected key=value, got '" + a + "'");
        const std::string key = a.substr(0, eq), val = a.substr(eq + 1);
        if (val.find(',') != std::string::npos) {
            json arr = json::array();
            std::stringstream ss(val);
            std::string item;
            while (std::getline(ss, item, ',')) arr.push_back(scalar(item));
            out[key] = arr;
        } else {
            out[key] = scalar(val);
        }
    }
    return out;
}

// --- records ------------------------------------------------------------------------------------

json to_json(const RunRecord& r) {
    return json{{"format_version", r.format_version},
                {"scenario", r.scenario},
                {"params", r.params},
                {"outcome", r.outcome},
                {"diagnostics", r.diagnostics},
                {"expected", r.expected},
                {"matched", r.matched},
                {"failed", r.failed},
                {"error", r.error},
                {"wall_seconds", r.wall_seconds},
                {"artifacts", r.artifacts}};
}

RunRecord record_from_json(const json& j) {
    const int v = j.value("format_version", -1);
    if (v != kFormatVersion)
        fail(ErrorKind::VersionMismatch,
             "record format " + std::to_string(v) + " differs from " + std::to_string(kFormatVersion));
    RunRecord r;
    r.format_version = v;
    r.scenario = j.at("scenario").get<std::string>();
    r.params = j.at("params");
    r.outcome = j.value("outcome", json());
    r.diagnostics = j.value("diagnostics", json());
    r.expected = j.value("expected", "");
    r.matched = j.value("matched", false);
    r.failed = j.value("failed", false);
    r.error = j.value("error", "");
    r.wall_seconds = j.value("wall_seconds", 0.0);
    r.artifacts = j.value("artifacts", std::vector<std::string>{});
    return r;
}

RunRecord load_record(const fs::path& p) {
    std::ifstream in(p);
    if (!in) fail(ErrorKind::Io, "cannot read " + p.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        fail(ErrorKind::Io, std::string("malformed record: ") + e.what());
    }
    return record_from_json(j);
}

fs::path default_out_root() {
    if (const char* env = std::getenv("WAVELAB_OUT"); env && *env) return env;
    return "wavelab_out";
}

void write_atomic(const fs::path& path, const std::string& text) {
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    if (ec) fail(ErrorKind::Io, "cannot create " + path.parent_path().string());
    static std::atomic<unsigned long> counter{0};
    const fs::path tmp = path.string() + ".tmp" + std::to_string(counter++);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorKind::Io, "cannot write " + tmp.string());
        out << text;
        if (!out) fail(ErrorKind::Io, "write failed for " + tmp.string());
    }
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        fail(ErrorKind::Io, "cannot rename into " + path.string());
    }
}

std::string to_csv(const Table& t) {
    std::string out;
    for (std::size_t i = 0; i < t.header.size(); ++i) out += (i ? "," : "") + t.header[i];
    out += '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + fmt(row[i]);
        out += '\n';
    }
    return out;
}

std::string to_gnuplot(const Plot& p) {
    std::string s = "set datafile separator ','\nset key autotitle columnhead\n";
    s += "set xlabel '" + p.xlabel + "'\nset ylabel '" + p.ylabel + "'\n";
    if (p.log_y) s += "set logscale y\n";
    s += "set terminal pngcairo size 900,600\nset output '" + p.name + ".png'\nplot ";
    for (std::size_t i = 0; i < p.columns.size(); ++i) {
        if (i) s += ", ";
        s += "'" + p.table + ".csv' using 1:" + std::to_string(p.columns[i]) + " with lines";
    }
    return s + "\n";
}

namespace {

std::vector<std::string> write_artifacts(const fs::path& dir, const RunRecord& rec, const ScenarioResult* res) {
    std::vector<std::string> paths;
    if (res) {
        for (const auto& t : res->tables) {
            const fs::path f = dir / (t.name + ".csv");
            write_atomic(f, to_csv(t));
            paths.push_back(f.string());
        }
        for (const auto& p : res->plots) {
            const fs::path f = dir / (p.name + ".gp");
            write_atomic(f, to_gnuplot(p));
            paths.push_back(f.string());
        }
    }
    paths.push_back((dir / "record.json").string());
    RunRecord copy = rec;
    copy.artifacts = paths;
    write_atomic(dir / "record.json", to_json(copy).dump(2) + "\n");
    return paths;
}

}  // namespace

RunRecord run_scenario(const std::string& name, const json& overrides, const RunOptions& opt) {
    const Scenario& sc = find_scenario(name);
    RunRecord rec;
    rec.scenario = name;
    rec.params = merge_params(sc, overrides);
    const auto t0 = std::chrono::steady_clock::now();
    ScenarioResult res;
    bool have = false;
    try {
        res = sc.run(rec.params);
        have = true;
        rec.outcome = res.outcome;
        rec.diagnostics = res.diagnostics;
        rec.expected = res.expected;
        rec.matched = res.matched;
    } catch (const std::exception& e) {
        rec.failed = true;
        rec.error = e.what();
    }
    rec.wall_seconds = seconds_since(t0);
    if (!opt.out_root.empty()) {
        char tag[17];
        std::snprintf(tag, sizeof tag, "%016llx", static_cast<unsigned long long>(fnv1a(rec.params.dump())));
        const fs::path dir = opt.out_root / name / tag;
        rec.artifacts = write_artifacts(dir, rec, have ? &res : nullptr);
    }
    return rec;
}

RunRecord replay(const RunRecord& record, const RunOptions& opt) {
    if (record.format_version != kFormatVersion) fail(ErrorKind::VersionMismatch, "record format differs");
    return run_scenario(record.scenario, record.params, opt);
}

std::vector<RunRecord> sweep(const std::string& name, const std::vector<json>& points, unsigned parallelism,
                             const RunOptions& opt) {
    find_scenario(name);
    std::vector<RunRecord> out(points.size());
    if (points.empty()) return out;
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < points.size(); i = next++) {
            try {
                out[i] = run_scenario(name, points[i], opt);
            } catch (const std::exception& e) {
                out[i].scenario = name;
                out[i].params = points[i];
                out[i].failed = true;
                out[i].error = e.what();
            }
        }
    };
    const unsigned workers = std::max(1u, std::min<unsigned>(parallelism, static_cast<unsigned>(points.size())));
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return out;
}

int exit_code(const RunRecord& r) { return r.failed ? 1 : (r.matched ? 0 : 2); }

int exit_code(const std::vector<RunRecord>& rs) {
    int code = 0;
    for (const auto& r : rs) {
        const int c = exit_code(r);
        if (c == 1) return 1;
        code = std::max(code, c);
    }
    return code;
}

// --- evolve runs ------------------------------------------------------------------------------------

EvolveRun parse_evolve_config(const std::string& text) {
    toml::table tbl;
    try {
        tbl = toml::parse(text);
    } catch (const toml::parse_error& e) {
        fail(ErrorKind::InvalidArgument, std::string("config: ") + std::string(e.description()));
    }
    EvolveRun r;
    r.m = tbl["m"].value_or(r.m);
    if (r.m != 3) fail(ErrorKind::InvalidArgument, "only m = 3 profiles are available");
    r.k = tbl["k"].value_or(r.k);
    r.expected = tbl["expected"].value_or(std::string());
    r.r_max = tbl["grid"]["r_max"].value_or(r.r_max);
    r.n = static_cast<std::size_t>(tbl["grid"]["n"].value_or(static_cast<std::int64_t>(r.n)));
    r.dt_factor = tbl["evolve"]["dt_factor"].value_or(r.dt_factor);
    r.t_end = tbl["evolve"]["t_end"].value_or(r.t_end);
    r.threshold = tbl["evolve"]["threshold"].value_or(r.threshold);
    r.record_every = tbl["evolve"]["record_every"].value_or(r.record_every);
    r.r_loc = tbl["evolve"]["r_loc"].value_or(r.r_loc);
    r.reverse_time = tbl["evolve"]["reverse_time"].value_or(r.reverse_time);
    const std::string b = tbl["evolve"]["boundary"].value_or(std::string("causal"));
    if (b == "causal") r.boundary = OuterBoundary::Causal;
    else if (b == "sommerfeld") r.boundary = OuterBoundary::Sommerfeld;
    else fail(ErrorKind::InvalidArgument, "boundary must be causal or sommerfeld");
    r.alpha = tbl["perturbation"]["alpha"].value_or(r.alpha);
    if (!(r.dt_factor > 0.0 && r.dt_factor <= 1.0)) fail(ErrorKind::CflViolation, "dt_factor must lie in (0, 1]");
    return r;
}

EvolveRun load_evolve_config(const fs::path& p) {
    std::ifstream in(p);
    if (!in) fail(ErrorKind::Io, "cannot read " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_evolve_config(ss.str());
}

EvolveReport run_evolve(const EvolveRun& cfg) {
    KSetup ks = setup_for(cfg.k, cfg.r_max, cfg.n);
    const RadialGrid& g = ks.grid;
    auto prof = default_profile();
    std::vector<StationaryState> fam;
    for (int j = 0; j <= cfg.k; ++j) fam.push_back(build_stationary(j, prof, g));
    std::vector<const StationaryState*> fptr;
    for (const auto& f : fam) fptr.push_back(&f);

    // alpha along (Y_0, e_0 Y_0); with reverse_time the datum (Q, 0) + alpha Y_0^- is reversed instead
    FieldState init = FieldState::stationary(ks.q);
    if (cfg.reverse_time) {
        init.axpy(cfg.alpha, mode_state(ks.modes.states.front(), -1));
        init = time_reverse(init);
    } else {
        init.axpy(cfg.alpha, unstable_direction(ks.modes.states.front()));
    }

    EvolveConfig ec;
    ec.dt = cfg.dt_factor * g.spacing();
    ec.t_end = cfg.t_end;
    ec.blowup_threshold = cfg.threshold;
    ec.outer_boundary = cfg.boundary;
    ec.record_every = cfg.record_every;
    ec.observation_radius = cfg.boundary == OuterBoundary::Causal ? cfg.r_loc : 0.0;
    const auto tr = evolve(init, ec, EvolveMode::Nonlinear, nullptr, 3);
    ClassifyOptions co;
    co.r_loc = cfg.r_loc;
    EvolveReport rep;
    rep.outcome = classify(tr, fptr, co);
    const auto pm = positivity_monitor(tr);

    Table& t = rep.series;
    t.name = "series";
    t.header = {"t", "sup_u", "min_u", "energy", "local_energy_to_0"};
    for (int j = 0; j <= cfg.k; ++j) {
        t.header.push_back("local_energy_to_+Q" + std::to_string(j));
        t.header.push_back("local_energy_to_-Q" + std::to_string(j));
    }
    for (std::size_t j = 0; j < ks.modes.states.size(); ++j) t.header.push_back("alpha_plus_" + std::to_string(j));
    for (std::size_t j = 0; j < ks.modes.states.size(); ++j) t.header.push_back("alpha_minus_" + std::to_string(j));
    for (std::size_t f = 0; f < tr.frames.size(); ++f) {
        const auto& fr = tr.frames[f];
        std::vector<double> row{tr.times[f], tr.sup_u[f], tr.min_u[f], tr.energies[f],
                                local_distance(fr, nullptr, 0.0, cfg.r_loc)};
        for (const auto* q : fptr) {
            row.push_back(local_distance(fr, q, 1.0, cfg.r_loc));
            row.push_back(local_distance(fr, q, -1.0, cfg.r_loc));
        }
        FieldState h = fr;
        h.axpy(-1.0, FieldState::stationary(ks.q));
        const auto d = decompose(h, ks.modes);
        row.insert(row.end(), d.alpha_plus.begin(), d.alpha_plus.end());
        row.insert(row.end(), d.alpha_minus.begin(), d.alpha_minus.end());
        t.rows.push_back(std::move(row));
    }
    rep.summary = {{"outcome", outcome_json(rep.outcome)},
                   {"grid", grid_json(g)},
                   {"config",
                    {{"k", cfg.k},
                     {"alpha", cfg.alpha},
                     {"t_end", cfg.t_end},
                     {"dt", ec.dt},
                     {"threshold", cfg.threshold},
                     {"boundary", cfg.boundary == OuterBoundary::Causal ? "causal" : "sommerfeld"},
                     {"r_loc", cfg.r_loc},
                     {"reverse_time", cfg.reverse_time}}},
                   {"steps", tr.steps},
                   {"positivity", {{"min_u", pm.min_u}, {"min_char", pm.min_char}, {"eps_pos", pm.eps_pos}, {"ok", pm.ok}}},
                   {"e", [&] {
                        std::vector<double> e;
                        for (const auto& s : ks.modes.states) e.push_back(s.e);
                        return e;
                    }()}};
    return rep;
}

// --- acceptance ---------------------------------------------------------------------------------

namespace {

std::string fmtg(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

/// Lazily built spectral data on the scaled grid of each k.
class SpectralCache {
public:
    struct Entry {
        RadialGrid grid;
        StationaryState q;
        ModeBasis modes;
    };
    const Entry& get(int k) {
        if (static_cast<std::size_t>(k) >= entries_.size()) entries_.resize(static_cast<std::size_t>(k) + 1);
        auto& e = entries_[static_cast<std::size_t>(k)];
        if (!e) {
            auto prof = default_profile();
            const RadialGrid g = scaled_grid(*prof, k);
            auto q = build_stationary(k, prof, g);
            auto mb = find_negative_eigenvalues(q);
            e = std::make_unique<Entry>(Entry{g, std::move(q), std::move(mb)});
        }
        return *e;
    }

private:
    std::vector<std::unique_ptr<Entry>> entries_;
};

struct Check {
    bool pass = true;
    std::string detail;
    void require(bool ok, const std::string& what) {
        pass = pass && ok;
        if (!detail.empty()) detail += "; ";
        detail += (ok ? "" : "FAIL ") + what;
    }
};

Check crit_spectrum(SpectralCache& cache) {
    Check c;
    for (int k = 0; k <= 3; ++k) {
        const auto& e = cache.get(k);
        const auto mo = matrix_oracle_richardson(e.q, e.grid.n);
        const int shoot = shooting_count(-1e-12, e.q);
        double worst = 0.0;
        const std::size_t nk = std::min(mo.size(), e.modes.states.size());
        for (std::size_t j = 0; j < nk; ++j)
            worst = std::max(worst, std::abs(mo[j] - e.modes.states[j].eigenvalue()) / std::abs(mo[j]));
        const bool counts = static_cast<int>(e.modes.states.size()) == k + 1 && shoot == k + 1 &&
                            static_cast<int>(mo.size()) == k + 1;
        c.require(counts && worst <= 1e-6, "k=" + std::to_string(k) + " counts " + std::to_string(shoot) + "/" +
                                               std::to_string(mo.size()) + " rel " + fmtg(worst));
    }
    return c;
}

Check crit_nodes(SpectralCache& cache) {
    Check c;
    for (int k = 0; k <= 3; ++k) {
        const auto& e = cache.get(k);
        std::string counts;
        bool ok = true;
        for (std::size_t j = 0; j < e.modes.states.size(); ++j) {
            const int nodes = count_sign_changes(e.modes.states[j].y, e.grid, e.grid.r_min, e.grid.r_max);
            ok = ok && nodes == static_cast<int>(j);
            counts += (j ? "," : "") + std::to_string(nodes);
        }
        c.require(ok, "k=" + std::to_string(k) + " nodes " + counts);
    }
    return c;
}

Check crit_from_scenario(const std::string& name, const json& overrides) {
    Check c;
    const auto rec = run_scenario(name, overrides);
    c.require(!rec.failed && rec.matched, rec.failed ? rec.error : rec.outcome.dump());
    return c;
}

Check crit_convergence(bool quick) {
    Check c;
    const auto cd = convergence(quick);
    c.require(cd.free_error <= 1e-13, "transport " + fmtg(cd.free_error));
    c.require(cd.drift[1] <= 1e-4, "drift(8193) " + fmtg(cd.drift[1]));
    const double dr = cd.drift[1] / cd.drift[2];
    c.require(dr >= 3.0 && dr <= 5.0, "drift ratio " + fmtg(dr));
    for (std::size_t i = 0; i + 1 < cd.stat.size(); ++i) {
        const double sr = cd.stat[i] / cd.stat[i + 1];
        c.require(sr >= 3.0 && sr <= 5.0, "stationarity ratio " + fmtg(sr));
    }
    c.require(cd.stat[1] <= 1e-3, "stationarity(16385) " + fmtg(cd.stat[1]));
    const double slowest = *std::max_element(cd.seconds.begin(), cd.seconds.end());
    c.require(slowest < 120.0, "slowest run " + fmtg(slowest) + " s");
    return c;
}

Check crit_dichotomy() {
    Check c;
    for (double a : {1e-2, -1e-2}) {
        const auto t0 = std::chrono::steady_clock::now();
        EvolveRun r;
        r.alpha = a;
        r.record_every = 64;
        const auto rep = run_evolve(r);
        const double secs = seconds_since(t0);
        if (a > 0) {
            const auto& pos = rep.summary.at("positivity");
            c.require(rep.outcome.kind == OutcomeKind::PositiveBlowUp && pos.at("ok").get<bool>(),
                      "alpha=+1e-2 " + rep.outcome.label() + " t=" + fmtg(rep.outcome.t_est) + " min u " +
                          fmtg(pos.at("min_u").get<double>()));
        } else {
            c.require(rep.outcome.kind == OutcomeKind::ScattersToZero,
                      "alpha=-1e-2 " + rep.outcome.label() + " d0 " +
                          fmtg(rep.outcome.final_local_distances.empty() ? -1 : rep.outcome.final_local_distances[0]));
        }
        c.require(secs < 60.0, fmtg(secs) + " s");
    }
    return c;
}

Check crit_excited() {
    Check c;
    for (double a : {1e-2, -1e-2}) {
        EvolveRun r;
        r.k = 1;
        r.alpha = a;
        r.r_max = 60.0;
        r.t_end = 50.0;
        r.record_every = 64;
        const auto rep = run_evolve(r);
        const auto want = a > 0 ? OutcomeKind::PositiveBlowUp : OutcomeKind::NegativeBlowUp;
        c.require(rep.outcome.kind == want, "alpha=" + fmtg(a) + " " + rep.outcome.label() + " t=" +
                                                fmtg(rep.outcome.t_est));
    }
    return c;
}

/// Hypothesis-satisfying data sets for the positivity and comparison statements.
Check crit_positivity(SpectralCache& cache) {
    Check c;
    auto prof = default_profile();
    EvolveConfig ec;
    ec.t_end = 20.0;
    ec.record_every = 32;

    auto run_pos = [&](const std::string& label, const FieldState& init, double t_end) {
        check_positivity_hypotheses(init, 1e-12);
        EvolveConfig cfg = ec;
        cfg.t_end = t_end;
        cfg.store_frames = false;
        const auto tr = evolve(init, cfg);
        const auto rep = positivity_monitor(tr);
        c.require(rep.ok, label + " min u " + fmtg(rep.min_u) + " min char " + fmtg(rep.min_char) + " eps " +
                              fmtg(rep.eps_pos));
    };

    const RadialGrid g = RadialGrid::make(60.0, 8193);
    run_pos("zero", FieldState::zeros(g), 20.0);

    // outgoing positive bump: psi_t = psi - psi_r keeps the characteristic combination positive
    for (double amp : {0.05, 0.5}) {
        FieldState b = bump(g, 10.0, 3.0, amp);
        const auto d = derivative(b.psi, g.spacing());
        for (std::size_t i = 0; i < g.n; ++i) b.psi_t[i] = b.psi[i] - d[i];
        b.psi_t[0] = 0.0;
        run_pos("outgoing bump " + fmtg(amp), b, 40.0);
    }

    // cone perturbations of Q_k and the comparison with (Q_k, 0)
    for (int k = 0; k <= 1; ++k) {
        const auto& e = cache.get(k);
        const auto cc = cone_constant(e.modes, e.q);
        std::vector<double> om(static_cast<std::size_t>(k) + 1, 0.0);
        om[0] = 1e-2;
        if (k >= 1) om[1] = 0.5e-2 / cc.c;
        const FieldState inc_full = positive_cone_perturbation(e.modes, e.q, om, cc.c);
        const RadialGrid gk = e.grid.r_max > 60.5 ? e.grid.truncated(60.0) : e.grid;
        const auto q = build_stationary(k, prof, gk);
        const FieldState inc = gk == e.grid ? inc_full : inc_full.restricted(gk);
        FieldState u0 = FieldState::stationary(q);
        u0.axpy(1.0, inc);
        EvolveConfig cfg = ec;
        cfg.t_end = k == 0 ? 30.0 : 8.0;
        const auto tu = evolve(u0, cfg);
        const auto tv = evolve(FieldState::stationary(q), cfg);
        const auto rep = comparison_monitor(tu, tv);
        c.require(rep.ok, "Q" + std::to_string(k) + "+cone >= Q" + std::to_string(k) + " min " + fmtg(rep.min_u) +
                              " char " + fmtg(rep.min_char) + " eps " + fmtg(rep.eps_pos));
        if (k == 0) run_pos("Q0+cone", u0, 30.0);
    }

    const double ratio = eps_pos(g, 1.0) / eps_pos(g.refined(), 1.0);
    c.require(std::abs(ratio - 4.0) < 0.05, "eps ratio " + fmtg(ratio));
    return c;
}

Check crit_channel(bool quick) {
    Check c;
    const std::vector<std::pair<int, double>> cases = {{0, 201.0}, {1, 13.3}};
    for (const auto& [k, frozen] : cases) {
        if (quick && k == 1) break;
        const auto run = channel_run(k, k == 0 ? 10.0 : 20.0, 10.0, {0.0, 1.0, 2.0});
        for (std::size_t d = 0; d < run.samples.size(); ++d) {
            const double cfit = channel_constant(run.samples[d]);
            c.require(cfit <= frozen, "k=" + std::to_string(k) + " " + run.labels[d] + " C " + fmtg(cfit));
        }
    }
    return c;
}

Check crit_manifold() {
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    const auto rec = run_scenario("manifold-scaling", json::object());
    const double secs = seconds_since(t0);
    if (rec.failed) {
        c.require(false, rec.error);
        return c;
    }
    const double slope = rec.outcome.at("slope").get<double>();
    const double ratio = rec.outcome.at("max_contraction_ratio").get<double>();
    c.require(slope >= 1.8 && slope <= 2.2, "slope " + fmtg(slope));
    c.require(ratio < 0.8, "max ratio " + fmtg(ratio));
    c.require(secs < 600.0, fmtg(secs) + " s");
    return c;
}

Check crit_negative_time() {
    Check c;
    for (int k = 0; k <= 1; ++k) {
        EvolveRun r;
        r.k = k;
        r.alpha = 1e-2;
        r.reverse_time = true;
        r.record_every = 64;
        if (k == 1) {
            r.r_max = 60.0;
            r.t_end = 50.0;
        }
        const auto rep = run_evolve(r);
        c.require(rep.outcome.kind == OutcomeKind::PositiveBlowUp,
                  "k=" + std::to_string(k) + " " + rep.outcome.label() + " t=" + fmtg(rep.outcome.t_est));
    }
    return c;
}

const char* kTitles[] = {"spectrum counts",
                         "eigenfunction node counts",
                         "LambdaQ zeros",
                         "nodal-domain spectra",
                         "zero-energy absence",
                         "scheme certificates",
                         "ground-state dichotomy",
                         "excited-state two-sided blow-up",
                         "positivity and comparison",
                         "channel bounds",
                         "manifold graph scaling",
                         "stationary inequalities",
                         "negative-time scenario"};

CriterionResult evaluate(int id, bool quick, SpectralCache& cache) {
    CriterionResult r;
    r.id = id;
    if (id < 1 || id > 13) fail(ErrorKind::InvalidArgument, "criterion id must be 1..13");
    r.title = kTitles[id - 1];
    const auto t0 = std::chrono::steady_clock::now();
    Check c;
    try {
        switch (id) {
            case 1: c = crit_spectrum(cache); break;
            case 2: c = crit_nodes(cache); break;
            case 3: c = crit_from_scenario("lambdaQ-zeros", json::object()); break;
            case 4: c = crit_from_scenario("nodal-domains", json::object()); break;
            case 5: c = crit_from_scenario("zero-energy", json::object()); break;
            case 6: c = crit_convergence(quick); break;
            case 7: c = crit_dichotomy(); break;
            case 8: c = crit_excited(); break;
            case 9: c = crit_positivity(cache); break;
            case 10: c = crit_channel(quick); break;
            case 11: c = crit_manifold(); break;
            case 12: c = crit_from_scenario("stationary-inequalities", json::object()); break;
            case 13: c = crit_negative_time(); break;
        }
    } catch (const std::exception& e) {
        c.require(false, e.what());
    }
    r.pass = c.pass;
    r.detail = c.detail;
    r.seconds = seconds_since(t0);
    return r;
}

}  // namespace

std::vector<CriterionResult> run_acceptance(bool quick, const std::function<void(const CriterionResult&)>& on_result) {
    SpectralCache cache;
    std::vector<CriterionResult> out;
    for (int id = 1; id <= 13; ++id) {
        out.push_back(evaluate(id, quick, cache));
        if (on_result) on_result(out.back());
    }
    return out;
}

CriterionResult run_criterion(int id, bool quick) {
    SpectralCache cache;
    return evaluate(id, quick, cache);
}

}  // namespace wavelab
