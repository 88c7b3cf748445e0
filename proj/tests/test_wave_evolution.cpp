#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "wavelab/errors.hpp"
#include "wavelab/lab.hpp"
#include "wavelab/manifold_toolkit.hpp"
#include "wavelab/wave_evolution.hpp"

using namespace wavelab;

namespace {

double pulse(double r, double c, double w) {
    const double s = (r - c) / w;
    return std::abs(s) < 1.0 ? std::pow(1.0 - s * s, 4) : 0.0;
}

/// Nonnegative data with an outgoing velocity: psi_t = psi - psi_r.
FieldState outgoing(const RadialGrid& g, double c, double w, double amp) {
    FieldState s = FieldState::zeros(g);
    for (std::size_t i = 1; i < g.n; ++i) s.psi[i] = amp * g.r(i) * pulse(g.r(i), c, w);
    const auto d = derivative(s.psi, g.spacing());
    for (std::size_t i = 1; i < g.n; ++i) s.psi_t[i] = s.psi[i] - d[i];
    return s;
}

double fitted_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double n = static_cast<double>(x.size());
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_SUITE("wave_evolution") {
    TEST_CASE("free transport is exact at unit Courant number") {
        const auto g = RadialGrid::make(60.0, 8193);
        FieldState s = FieldState::zeros(g);
        for (std::size_t i = 0; i < g.n; ++i) s.psi[i] = pulse(g.r(i), 20.0, 3.0);
        auto exact = [&](double r, double t) {
            // d'Alembert with odd reflection at r = 1
            auto f = [&](double x) { return x >= 1.0 ? pulse(x, 20.0, 3.0) : -pulse(2.0 - x, 20.0, 3.0); };
            return 0.5 * (f(r - t) + f(r + t));
        };
        EvolveConfig c;
        c.t_end = 36.0;
        c.record_every = 7;
        c.store_frames = false;
        double err = 0.0;
        evolve(s, c, EvolveMode::Free, nullptr, 3, {}, [&](const FieldState& f) {
            for (std::size_t i = 0; i + 1 < g.n; ++i) err = std::max(err, std::abs(f.psi[i] - exact(g.r(i), f.t)));
        });
        CHECK(err <= 1e-13);
    }

    TEST_CASE("energy drift is small and second order") {
        auto drift = [](std::size_t n) {
            const auto g = RadialGrid::make(60.0, n);
            FieldState s = FieldState::zeros(g);
            for (std::size_t i = 1; i < g.n; ++i) s.psi[i] = 0.5 * g.r(i) * pulse(g.r(i), 6.0, 3.0);
            EvolveConfig c;
            c.t_end = 50.0;
            c.record_every = 8;
            c.store_frames = false;
            return evolve(s, c).outcome.energy_drift;
        };
        const double d1 = drift(4097), d2 = drift(8193);
        CHECK(d2 <= 1e-4);
        CHECK(d1 / d2 == doctest::Approx(4.0).epsilon(0.2));
    }

    TEST_CASE("Q_0 stays stationary over [0, 20]") {
        auto prof = default_profile();
        const auto g = RadialGrid::make(60.0, 16385);
        const auto q = build_stationary(0, prof, g);
        EvolveConfig c;
        c.t_end = 20.0;
        c.record_every = 32;
        c.store_frames = false;
        double d = 0.0;
        evolve(FieldState::stationary(q), c, EvolveMode::Nonlinear, nullptr, 3, {},
               [&](const FieldState& f) { d = std::max(d, energy_norm_distance(f, &q, 1.0)); });
        CHECK(d <= 1e-3);
    }

    TEST_CASE("perturbations of Q_1 grow at the rate e_0") {
        // (Q_1, 0) is linearly unstable; discretization error is amplified like e^{e_0 t}
        auto prof = default_profile();
        const auto gs = scaled_grid(*prof, 1);
        const auto mb = find_negative_eigenvalues(build_stationary(1, prof, gs));
        const auto g = gs.truncated(60.0);
        const auto q = build_stationary(1, prof, g);
        FieldState init = FieldState::stationary(q);
        init.axpy(1e-7, unstable_direction(mb.states[0]).restricted(g));
        EvolveConfig c;
        c.t_end = 8.0;
        c.record_every = 16;
        c.store_frames = false;
        std::vector<double> t, logd;
        evolve(init, c, EvolveMode::Nonlinear, nullptr, 3, {}, [&](const FieldState& f) {
            if (f.t < 2.0) return;
            t.push_back(f.t);
            logd.push_back(std::log(energy_norm_distance(f, &q, 1.0)));
        });
        CHECK(fitted_slope(t, logd) == doctest::Approx(mb.states[0].e).epsilon(0.02));
    }

    TEST_CASE("ground-state dichotomy") {
        EvolveRun r;
        r.alpha = 1e-2;
        const auto up = run_evolve(r);
        CHECK(up.outcome.kind == OutcomeKind::PositiveBlowUp);
        CHECK(up.outcome.t_est == doctest::Approx(12.445).epsilon(1e-3));
        CHECK(up.summary.at("positivity").at("ok").get<bool>());
        r.alpha = -1e-2;
        const auto down = run_evolve(r);
        CHECK(down.outcome.kind == OutcomeKind::ScattersToZero);
        CHECK(down.outcome.final_local_distances.at(0) < 1e-3);
    }

    TEST_CASE("finite speed: enlarging r_max leaves the observed region unchanged") {
        auto run = [](double r_max, std::size_t n) {
            const auto g = RadialGrid::make(r_max, n);
            FieldState s = FieldState::zeros(g);
            for (std::size_t i = 1; i < g.n; ++i) s.psi[i] = 0.3 * g.r(i) * pulse(g.r(i), 6.0, 3.0);
            EvolveConfig c;
            c.t_end = 20.0;
            c.record_every = 64;
            c.observation_radius = 10.0;
            return evolve(s, c);
        };
        const auto a = run(31.0, 3001), b = run(41.0, 4001);
        REQUIRE(a.frames.size() == b.frames.size());
        const auto obs = a.grid.index_of(10.0);
        for (std::size_t f = 0; f < a.frames.size(); ++f)
            for (std::size_t i = 0; i <= obs; ++i) {
                CHECK(a.frames[f].psi[i] == b.frames[f].psi[i]);
                if (a.frames[f].psi[i] != b.frames[f].psi[i]) return;
            }
    }

    TEST_CASE("positive blow-up stays bounded below") {
        // the datum lies above Q_0 minus a small multiple of Y_0, so u stays above a fixed negative bound
        for (double a : {2e-2, 5e-2}) {
            EvolveRun r;
            r.alpha = a;
            r.n = 8193;
            r.t_end = 40.0;
            const auto rep = run_evolve(r);
            REQUIRE(rep.outcome.kind == OutcomeKind::PositiveBlowUp);
            CHECK(rep.outcome.min_u_at_detection >= -1e-2);
        }
    }

    TEST_CASE("(-Q_0, 0) is stationary as well") {
        auto prof = default_profile();
        const auto g = RadialGrid::make(60.0, 8193);
        const auto q = build_stationary(0, prof, g);
        EvolveConfig c;
        c.t_end = 20.0;
        c.record_every = 32;
        c.store_frames = false;
        double d = 0.0;
        evolve(FieldState::stationary(q, -1.0), c, EvolveMode::Nonlinear, nullptr, 3, {},
               [&](const FieldState& f) { d = std::max(d, energy_norm_distance(f, &q, -1.0)); });
        CHECK(d <= 2e-3);
    }

    TEST_CASE("property: positivity for random nonnegative outgoing data") {
        std::mt19937 rng(20261015);
        std::uniform_real_distribution<double> centre(4.0, 15.0), width(1.0, 4.0), amp(0.0, 0.2);
        const auto g = RadialGrid::make(40.0, 4097);
        for (int trial = 0; trial < 6; ++trial) {
            FieldState s = FieldState::zeros(g);
            for (int b = 0; b < 3; ++b) s.axpy(1.0, outgoing(g, centre(rng), width(rng), amp(rng)));
            check_positivity_hypotheses(s, 1e-12);
            EvolveConfig c;
            c.t_end = 25.0;
            c.record_every = 50;
            c.store_frames = false;
            const auto rep = positivity_monitor(evolve(s, c));
            CHECK(rep.ok);
        }
    }

    TEST_CASE("property: comparison for ordered random data") {
        std::mt19937 rng(7);
        std::uniform_real_distribution<double> centre(4.0, 12.0), amp(0.0, 0.1);
        const auto g = RadialGrid::make(40.0, 4097);
        for (int trial = 0; trial < 4; ++trial) {
            const FieldState v = outgoing(g, centre(rng), 2.0, amp(rng));
            FieldState u = v;
            u.axpy(1.0, outgoing(g, centre(rng), 3.0, amp(rng)));
            EvolveConfig c;
            c.t_end = 25.0;
            c.record_every = 40;
            const auto rep = comparison_monitor(evolve(u, c), evolve(v, c));
            CHECK(rep.ok);
        }
    }

    TEST_CASE("hypothesis checks reject data outside the cone") {
        const auto g = RadialGrid::make(40.0, 2049);
        FieldState s = outgoing(g, 10.0, 2.0, 0.1);
        s.psi[500] = -1e-3;
        CHECK_THROWS_AS(check_positivity_hypotheses(s, 1e-12), Error);
        FieldState t = outgoing(g, 10.0, 2.0, 0.1);
        for (auto& v : t.psi_t) v -= 1.0;
        CHECK_THROWS_AS(check_positivity_hypotheses(t, 1e-12), Error);
        CHECK(eps_pos(g, 1.0) / eps_pos(g.refined(), 1.0) == doctest::Approx(4.0).epsilon(1e-3));
    }

    TEST_CASE("cone constants and cone perturbations") {
        auto prof = default_profile();
        for (int k = 0; k <= 1; ++k) {
            const auto g = scaled_grid(*prof, k);
            const auto q = build_stationary(k, prof, g);
            const auto mb = find_negative_eigenvalues(q);
            const auto cc = cone_constant(mb, q);
            std::vector<double> om(static_cast<std::size_t>(k) + 1, 0.0);
            om[0] = 1e-2;
            if (k == 0) {
                CHECK(cc.c == 0.0);
            } else {
                CHECK(cc.c == doctest::Approx(0.01316).epsilon(2e-3));
                om[1] = 0.5e-2 / cc.c;
            }
            const auto inc = positive_cone_perturbation(mb, q, om, cc.c);
            check_positivity_hypotheses(inc, 1e-12);
            if (k == 1) {
                om[1] = 2e-2 / cc.c;
                CHECK_THROWS_AS(positive_cone_perturbation(mb, q, om, cc.c), Error);
            }
        }
    }

    TEST_CASE("stationary inequality witnesses exist for j <= k <= 2") {
        auto prof = default_profile();
        for (int k = 0; k <= 2; ++k)
            for (int j = 0; j <= k; ++j) {
                const auto g = pair_grid(*prof, j, k);
                const auto w = stationary_inequality_witnesses(build_stationary(j, prof, g), build_stationary(k, prof, g));
                CHECK(w.a1.has_value());
                CHECK(w.a2.has_value() == (k > 0));
                CHECK(w.a3.has_value() == (j < k));
                if (j < k) CHECK(*w.a4 == doctest::Approx(prof->zero(0) / prof->zero(k)).epsilon(0.05));
            }
        const auto g = pair_grid(*prof, 0, 1);
        CHECK_THROWS_AS(stationary_inequality_witnesses(build_stationary(1, prof, g), build_stationary(0, prof, g)), Error);
    }

    TEST_CASE("time reversal is an involution and the scheme is reversible") {
        const auto g = RadialGrid::make(30.0, 2049);
        const FieldState s = outgoing(g, 8.0, 2.0, 0.1);
        const auto rr = time_reverse(time_reverse(s));
        CHECK(rr.psi == s.psi);
        CHECK(rr.psi_t == s.psi_t);
        EvolveConfig c;
        c.t_end = 5.0;
        c.record_every = 1;
        auto fwd = evolve(s, c, EvolveMode::Free);
        auto back = evolve(time_reverse(fwd.frames.back()), c, EvolveMode::Free);
        double err = 0.0;
        for (std::size_t i = 0; i < g.n; ++i) err = std::max(err, std::abs(back.frames.back().psi[i] - s.psi[i]));
        CHECK(err <= 1e-3);
    }

    TEST_CASE("Sommerfeld boundary lets an outgoing pulse leave") {
        const auto g = RadialGrid::make(30.0, 2049);
        FieldState s = FieldState::zeros(g);
        for (std::size_t i = 1; i < g.n; ++i) s.psi[i] = pulse(g.r(i), 10.0, 2.0);
        const auto d = derivative(s.psi, g.spacing());
        for (std::size_t i = 1; i < g.n; ++i) s.psi_t[i] = -d[i];
        EvolveConfig c;
        c.t_end = 25.0;
        c.outer_boundary = OuterBoundary::Sommerfeld;
        c.record_every = 100;
        const auto tr = evolve(s, c, EvolveMode::Free);
        CHECK(energy_norm_sq(tr.frames.back()) <= 1e-6 * energy_norm_sq(s));
    }

    TEST_CASE("configuration errors") {
        const auto g = RadialGrid::make(30.0, 1025);
        EvolveConfig c;
        c.dt = 2.0 * g.spacing();
        CHECK_THROWS_AS(evolve(FieldState::zeros(g), c), Error);
        EvolveConfig l;
        CHECK_THROWS_AS(evolve(FieldState::zeros(g), l, EvolveMode::LinearPotential), Error);
        EvolveConfig o;
        o.observation_radius = 10.0;
        o.t_end = 25.0;
        CHECK_THROWS_AS(evolve(FieldState::zeros(g), o), Error);
    }

    TEST_CASE("a quiet run of Q = 0 scatters to zero") {
        const auto g = RadialGrid::make(40.0, 2049);
        EvolveConfig c;
        c.t_end = 20.0;
        const auto tr = evolve(FieldState::zeros(g), c);
        const auto out = classify(tr, {});
        CHECK(out.kind == OutcomeKind::ScattersToZero);
        CHECK(out.label() == "ScattersToZero");
    }
}
