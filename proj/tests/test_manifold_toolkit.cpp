#include <doctest.h>

#include <cmath>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "wavelab/errors.hpp"
#include "wavelab/lab.hpp"
#include "wavelab/manifold_toolkit.hpp"

using namespace wavelab;

namespace {

struct K0 {
    RadialGrid g;
    StationaryState q;
    ModeBasis mb;
};

const K0& k0() {
    static const K0 s = [] {
        auto prof = default_profile();
        const auto g = RadialGrid::make(60.0, 4097);
        auto q = build_stationary(0, prof, g);
        auto mb = find_negative_eigenvalues(q);
        return K0{g, std::move(q), std::move(mb)};
    }();
    return s;
}

/// Bump with its unstable part removed.
FieldState stable_bump(const K0& s) {
    auto d = decompose(bump(s.g, 5.0, 3.0), s.mb);
    d.alpha_plus.assign(d.alpha_plus.size(), 0.0);
    return reconstruct(d, s.mb);
}

}  // namespace

TEST_SUITE("manifold_toolkit") {
    TEST_CASE("symplectic pairing of the eigenmodes") {
        const auto& s = k0();
        const auto yp = mode_state(s.mb.states[0], 1), ym = mode_state(s.mb.states[0], -1);
        CHECK(omega(yp, ym) == doctest::Approx(-1.0).epsilon(1e-10));
        CHECK(omega(ym, yp) == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(std::abs(omega(yp, yp)) <= 1e-14);
    }

    TEST_CASE("dual-basis table for k = 1") {
        auto prof = default_profile();
        const auto g = scaled_grid(*prof, 1);
        const auto mb = find_negative_eigenvalues(build_stationary(1, prof, g));
        for (std::size_t j = 0; j < 2; ++j)
            for (std::size_t l = 0; l < 2; ++l) {
                const double w = omega(mode_state(mb.states[j], 1), mode_state(mb.states[l], -1));
                CHECK(std::abs(w + (j == l ? 1.0 : 0.0)) <= 1e-6);
                CHECK(std::abs(omega(mode_state(mb.states[j], 1), mode_state(mb.states[l], 1))) <= 1e-10);
            }
        const auto q = build_stationary(1, prof, g);
        const auto opt = single_mode_options(mb, 0, 1);
        const double e = mb.states[0].e;
        const auto res = linear_flow_SQ(mode_state(mb.states[0], 1), 5.0 / e, mb, q, opt);
        for (std::size_t f = 0; f < res.times.size(); ++f)
            CHECK(res.alpha_plus[f][0] == doctest::Approx(std::exp(e * res.times[f])).epsilon(1e-2));
    }

    TEST_CASE("center projection is idempotent") {
        const auto& s = k0();
        const auto once = project_center(bump(s.g, 4.0, 2.0), s.mb);
        const auto twice = project_center(once, s.mb);
        for (std::size_t i = 0; i < s.g.n; ++i) CHECK(twice.psi[i] == doctest::Approx(once.psi[i]).scale(1.0).epsilon(1e-12));
    }

    TEST_CASE("decompose and reconstruct are inverse") {
        const auto& s = k0();
        FieldState h = bump(s.g, 6.0, 2.0, 0.3);
        h.axpy(0.7, mode_state(s.mb.states[0], 1));
        const auto d = decompose(h, s.mb);
        CHECK(d.alpha_plus[0] == doctest::Approx(decompose(bump(s.g, 6.0, 2.0, 0.3), s.mb).alpha_plus[0] + 0.7));
        const auto back = reconstruct(d, s.mb);
        for (std::size_t i = 0; i < s.g.n; ++i) {
            CHECK(back.psi[i] == doctest::Approx(h.psi[i]).epsilon(1e-12).scale(1.0));
            CHECK(back.psi_t[i] == doctest::Approx(h.psi_t[i]).epsilon(1e-12).scale(1.0));
        }
        const auto dc = decompose(d.center, s.mb);
        CHECK(std::abs(dc.alpha_plus[0]) <= 1e-12);
        CHECK(std::abs(dc.alpha_minus[0]) <= 1e-12);
    }

    TEST_CASE("center projection removes the eigenfunction") {
        const auto& s = k0();
        const auto pc = project_center(bump(s.g, 4.0, 2.0), s.mb);
        CHECK(std::abs(inner(pc.psi, s.mb.states[0].psi, s.g.spacing())) <= 1e-12);
        CHECK(std::abs(inner(pc.psi_t, s.mb.states[0].psi, s.g.spacing())) <= 1e-12);
    }

    TEST_CASE("single modes grow and decay at rate e_0") {
        const auto& s = k0();
        const double e = s.mb.states[0].e;
        for (int sign : {1, -1}) {
            const auto opt = single_mode_options(s.mb, 0, sign);
            const auto res = linear_flow_SQ(mode_state(s.mb.states[0], sign), 40.0, s.mb, s.q, opt);
            std::vector<double> a;
            for (const auto& v : sign > 0 ? res.alpha_plus : res.alpha_minus) a.push_back(v[0]);
            CHECK(fitted_rate(res.times, a) == doctest::Approx(sign * e).epsilon(1e-5));
        }
    }

    TEST_CASE("the center-restricted flow does not leak into the modes") {
        const auto& s = k0();
        const auto c0 = project_center(bump(s.g, 5.0, 3.0), s.mb);
        const auto res = linear_flow_SQ(c0, 40.0, s.mb, s.q, center_flow_options(s.mb));
        double leak = 0.0;
        for (std::size_t f = 0; f < res.times.size(); ++f)
            leak = std::max({leak, std::abs(res.alpha_plus[f][0]), std::abs(res.alpha_minus[f][0])});
        CHECK(leak <= 1e-4 * std::sqrt(energy_norm_sq(c0)));
    }

    TEST_CASE("triple norm converges in the horizon") {
        const auto& s = k0();
        const auto v = stable_bump(s);
        const double t20 = triple_norm(v, s.mb, s.q, 20.0).value();
        const double t40 = triple_norm(v, s.mb, s.q, 40.0).value();
        // frozen from the oracle run (horizons 20, 40, 80 give 5.115311, 5.115544, 5.115577)
        CHECK(t40 == doctest::Approx(5.115544).epsilon(1e-5));
        CHECK(t40 > t20);
        CHECK(t40 - t20 <= 1e-3);
    }

    TEST_CASE("Picard point is quadratic in delta") {
        const auto& s = k0();
        const auto res = graph_scaling_experiment(stable_bump(s), {1e-2, 1e-3}, s.mb, s.q);
        REQUIRE(res.points.size() == 2);
        CHECK(res.slope == doctest::Approx(2.0).epsilon(0.01));
        // frozen: |theta| at delta = 1e-2 and 1e-3 for the unit-norm direction
        CHECK(res.points[0].theta_norm == doctest::Approx(1.2149e-5).epsilon(1e-3));
        CHECK(res.points[1].theta_norm == doctest::Approx(1.2147e-7).epsilon(1e-3));
        for (const auto& p : res.points) {
            CHECK(p.contraction_ratio < 0.8);
            CHECK(p.tail_bound <= 1e-6 * p.theta_norm);
            CHECK(p.iterations <= 10);
        }
    }

    TEST_CASE("Picard refuses data with an unstable component") {
        const auto& s = k0();
        FieldState v = mode_state(s.mb.states[0], 1);
        v.axpy(1e-3 - 1.0, v);
        PicardConfig cfg;
        CHECK_THROWS_AS(picard_solve(v, cfg, s.mb, s.q), Error);
        CHECK_THROWS_AS(graph_scaling_experiment(stable_bump(s), {1e-3, 1e-2}, s.mb, s.q), Error);
    }

    TEST_CASE("channel energies match the closed-form tail of Y_0^+") {
        const auto& s = k0();
        const auto& b = s.mb.states[0];
        const double e = b.e;
        const double c = agmon_tail_check(b).c;
        const double a2 = c * c / (2.0 * e);
        auto ext0 = [&](double x) {
            auto f = [&](double r) {
                const double E = std::exp(-e * r);
                return a2 * (std::pow((e + 1.0 / r) * E, 2) + std::pow(e * E, 2));
            };
            return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, x, x + 80.0);
        };
        const auto cs = channel_samples(mode_state(b, 1), s.mb, s.q, 20.0, 10.0, {0.0, 1.0, 2.0});
        REQUIRE(cs.size() == 33);
        for (const auto& x : cs) {
            const double ref = std::exp(2.0 * e * x.t) * ext0(x.R + x.t);
            CHECK(x.exterior == doctest::Approx(ref).epsilon(2e-3));
        }
        CHECK(channel_constant(cs) >= 1.0);
    }

    TEST_CASE("default sweep and bump helpers") {
        const auto d = default_deltas();
        REQUIRE(d.size() == 4);
        CHECK(d[0] == doctest::Approx(std::pow(10.0, -1.5)));
        CHECK(d[3] == doctest::Approx(1e-3));
        const auto g = RadialGrid::make(20.0, 1025);
        const auto b = bump(g, 5.0, 1.0, 2.0);
        CHECK(b.psi[g.index_of(5.0)] == doctest::Approx(10.0).epsilon(1e-2));
        CHECK(b.psi[g.index_of(7.0)] == 0.0);
    }
}
