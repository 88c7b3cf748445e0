#include <doctest.h>

#include <algorithm>
#include <array>
#include <iterator>
#include <cmath>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "wavelab/errors.hpp"
#include "wavelab/lab.hpp"
#include "wavelab/stationary_profiles.hpp"

using namespace wavelab;

namespace {

namespace odeint = boost::numeric::odeint;
using State = std::array<double, 2>;

/// Independent oracle: Z'' + (2/r) Z' + Z^7 = 0 in s = log r with w = r Z', seeded at r = 400
/// with the two-term expansion 1/r - r^-5/20, integrated by Fehlberg 7(8).
std::vector<double> oracle_zeros(double r_stop) {
    auto rhs = [](const State& y, State& dy, double s) {
        const double r = std::exp(s);
        dy[0] = y[1];
        dy[1] = -y[1] - r * r * std::pow(y[0], 7);
    };
    const double r0 = 400.0;
    State y{1.0 / r0 - std::pow(r0, -5) / 20.0, -1.0 / r0 + std::pow(r0, -5) / 4.0};
    odeint::runge_kutta_fehlberg78<State> single;
    auto stepper = odeint::make_controlled(1e-15, 1e-15, odeint::runge_kutta_fehlberg78<State>());
    std::vector<double> zeros;
    double s = std::log(r0), ds = -1e-3;
    const double s_stop = std::log(r_stop);
    while (s > s_stop) {
        const State prev = y;
        const double s_prev = s;
        if (s + ds < s_stop) ds = s_stop - s;
        if (stepper.try_step(rhs, y, s, ds) != odeint::success) continue;
        if ((prev[0] > 0.0) != (y[0] > 0.0)) {
            double hi = s_prev, lo = s;
            for (int it = 0; it < 80; ++it) {
                const double mid = 0.5 * (hi + lo);
                State ym = prev;
                single.do_step(rhs, ym, s_prev, mid - s_prev);
                if ((ym[0] > 0.0) == (prev[0] > 0.0)) hi = mid; else lo = mid;
            }
            zeros.push_back(std::exp(0.5 * (hi + lo)));
        }
    }
    return zeros;
}

}  // namespace

TEST_SUITE("stationary_profiles") {
    TEST_CASE("profile zeros agree with an independent Fehlberg 7(8) integration") {
        const auto prof = default_profile();
        const auto ref = oracle_zeros(5e-5);
        REQUIRE(prof->zeros.size() >= 6);
        REQUIRE(ref.size() >= prof->zeros.size());
        for (std::size_t i = 0; i < 6; ++i) CHECK(std::abs(prof->zeros[i] / ref[i] - 1.0) <= 1e-8);
    }

    TEST_CASE("frozen zeros of Z for m = 3") {
        // oracle run above, frozen
        const double frozen[] = {0.105867325256042,    0.00984779206097101,  0.00202346493223988,
                                 0.000612672343746374, 0.000234227015345442, 0.000104703330486981};
        const auto prof = default_profile();
        for (int i = 0; i < 6; ++i) CHECK(prof->zero(i) == doctest::Approx(frozen[i]).epsilon(1e-9));
        CHECK_THROWS_AS(prof->zero(40), Error);
    }

    TEST_CASE("zeros decrease and are bracketed by sign changes of the samples") {
        const auto prof = default_profile();
        for (std::size_t i = 1; i < prof->zeros.size(); ++i) CHECK(prof->zeros[i] < prof->zeros[i - 1]);
        for (double z : prof->zeros) {
            const auto it = std::lower_bound(prof->samples.begin(), prof->samples.end(), z,
                                             [](const ProfileSample& s, double r) { return s.r < r; });
            REQUIRE(it != prof->samples.begin());
            REQUIRE(it != prof->samples.end());
            CHECK((std::prev(it)->z > 0.0) != (it->z > 0.0));
        }
    }

    TEST_CASE("self-similarity: Q_k is a rescaling of Q_j") {
        auto prof = default_profile();
        for (int k = 1; k <= 3; ++k)
            for (int j = 0; j < k; ++j) {
                const auto g = pair_grid(*prof, j, k);
                const auto qj = build_stationary(j, prof, g);
                const auto qk = build_stationary(k, prof, g);
                const double s = qk.r_k / qj.r_k;
                double worst = 0.0, scale = 0.0;
                for (std::size_t i = 0; i < g.n; i += 97) {
                    const double r = g.r(i);
                    if (s * r <= 1.0) continue;  // Q_j lives on r > 1
                    worst = std::max(worst, std::abs(qk.q[i] - std::pow(s, 1.0 / 3.0) * qj.value(s * r)));
                    scale = std::max(scale, std::abs(qk.q[i]));
                }
                CHECK(worst <= 1e-9 * scale);
            }
    }

    TEST_CASE("interpolated profile satisfies the ODE") {
        const auto prof = default_profile();
        for (double r : {0.01, 0.1, 0.5, 3.0, 42.0, 150.0}) {
            const double z = prof->z(r), dz = prof->dz(r);
            CHECK(std::abs(prof->ddz(r) + 2.0 * dz / r + std::pow(z, 7)) <= 1e-12 * (1.0 + std::abs(prof->ddz(r))));
        }
        CHECK(150.0 * prof->z(150.0) == doctest::Approx(1.0).epsilon(1e-10));
    }

    TEST_CASE("tail of r Z approaches 1 like C / r^2") {
        const auto prof = default_profile();
        const auto ref = integrate_singular_profile(3, 200.0, 0.5, 1e-14);
        // least-squares C for r Z - 1 = C / r^2 on [100, 200]
        double num = 0.0, den = 0.0;
        for (const auto& s : ref.samples) {
            if (s.r < 100.0) continue;
            const double x = 1.0 / (s.r * s.r);
            num += x * (s.r * s.z - 1.0);
            den += x * x;
        }
        const double c = num / den;
        CHECK(std::abs(150.0 * prof->z(150.0) - 1.0) <= std::abs(c) / (150.0 * 150.0));
    }

    TEST_CASE("Q_k vanishes at the obstacle and has k interior zeros") {
        auto prof = default_profile();
        for (int k = 0; k <= 3; ++k) {
            const auto g = scaled_grid(*prof, k);
            const auto q = build_stationary(k, prof, g);
            CHECK(std::abs(q.q[0]) <= 1e-10);
            CHECK(count_sign_changes(q.q, g, g.r_min, g.r_max) == k);
            const auto gam = q.nodal_radii();
            REQUIRE(gam.size() == static_cast<std::size_t>(k) + 1);
            CHECK(gam[0] == 1.0);
            // tail r Q_k -> ell_k
            const double rt = g.r_max * q.r_k > 100.0 ? 100.0 / q.r_k : g.r_max;
            CHECK(rt * q.value(rt) == doctest::Approx(q.ell_k).epsilon(2e-3));
        }
    }

    TEST_CASE("stationary residual is second order") {
        auto prof = default_profile();
        for (int k = 0; k <= 1; ++k) {
            const auto g = scaled_grid(*prof, k);
            const double fine = stationary_residual(build_stationary(k, prof, g));
            const double coarse = stationary_residual(build_stationary(k, prof, g.coarsened()));
            CHECK(coarse / fine == doctest::Approx(4.0).epsilon(0.1));
        }
    }

    TEST_CASE("LambdaQ has k+1 zeros, one per nodal interval") {
        auto prof = default_profile();
        for (int k = 0; k <= 2; ++k) {
            const auto g = scaled_grid(*prof, k);
            const auto q = build_stationary(k, prof, g);
            const auto z = sign_change_locations(q.lambda_q, g, g.r_min, g.r_max);
            REQUIRE(z.size() == static_cast<std::size_t>(k) + 1);
            const auto gam = q.nodal_radii();
            for (int i = 0; i < k; ++i) {
                CHECK(z[static_cast<std::size_t>(i)] > gam[static_cast<std::size_t>(i)]);
                CHECK(z[static_cast<std::size_t>(i)] < gam[static_cast<std::size_t>(i) + 1]);
            }
        }
    }

    TEST_CASE("zero state and error paths") {
        const auto g = RadialGrid::make(10.0, 101);
        const auto z = zero_state(g);
        CHECK(stationary_residual(z) == 0.0);
        CHECK(count_sign_changes(z.q, g, 1.0, 10.0) == 0);
        CHECK_THROWS_AS(integrate_singular_profile(2), Error);
        CHECK_THROWS_AS(integrate_singular_profile(3, 200.0, 0.5, 1e-10, 5), Error);
        CHECK_THROWS_AS(build_stationary(50, default_profile(), g), Error);
    }

    TEST_CASE("pair grids keep both profiles inside the sampled range") {
        const auto prof = default_profile();
        for (int k = 1; k <= 3; ++k) {
            const auto g = pair_grid(*prof, 0, k);
            CHECK(g.r_max * prof->zero(0) <= prof->r_hi() + 1e-9);
            CHECK(g.spacing() == doctest::Approx(scaled_grid(*prof, k).spacing()).epsilon(1e-12));
        }
    }
}
