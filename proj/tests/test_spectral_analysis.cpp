#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "wavelab/errors.hpp"
#include "wavelab/lab.hpp"
#include "wavelab/spectral_analysis.hpp"

using namespace wavelab;

namespace {

struct Setup {
    RadialGrid g;
    StationaryState q;
    ModeBasis mb;
};

const Setup& setup(int k) {
    static std::vector<std::unique_ptr<Setup>> cache(3);
    auto& s = cache[static_cast<std::size_t>(k)];
    if (!s) {
        auto prof = default_profile();
        const auto g = scaled_grid(*prof, k);
        auto q = build_stationary(k, prof, g);
        auto mb = find_negative_eigenvalues(q);
        s = std::make_unique<Setup>(Setup{g, std::move(q), std::move(mb)});
    }
    return *s;
}

}  // namespace

TEST_SUITE("spectral_analysis") {
    TEST_CASE("k+1 negative eigenvalues, confirmed by the matrix oracle") {
        for (int k = 0; k <= 2; ++k) {
            const auto& s = setup(k);
            REQUIRE(s.mb.states.size() == static_cast<std::size_t>(k) + 1);
            const auto mo = matrix_oracle_richardson(s.q, s.g.n);
            REQUIRE(mo.size() == s.mb.states.size());
            for (std::size_t j = 0; j < mo.size(); ++j)
                CHECK(std::abs(mo[j] / s.mb.states[j].eigenvalue() - 1.0) <= 1e-6);
            CHECK(shooting_count(-1e-12, s.q) == k + 1);
        }
    }

    TEST_CASE("frozen eigenvalues") {
        // shooting on the scaled grids, cross-checked by the matrix oracle to 1.5e-9
        CHECK(setup(0).mb.states[0].e == doctest::Approx(0.437613262193).epsilon(1e-9));
        CHECK(setup(1).mb.states[0].e == doctest::Approx(1.51952916).epsilon(1e-7));
        CHECK(setup(1).mb.states[1].e == doctest::Approx(0.04180053).epsilon(1e-6));
    }

    TEST_CASE("eigenvalues are ordered and eigenfunctions are normalized with j nodes") {
        for (int k = 0; k <= 2; ++k) {
            const auto& s = setup(k);
            for (std::size_t j = 0; j < s.mb.states.size(); ++j) {
                const auto& b = s.mb.states[j];
                if (j > 0) CHECK(b.e < s.mb.states[j - 1].e);
                CHECK(count_sign_changes(b.y, s.g, s.g.r_min, s.g.r_max) == static_cast<int>(j));
                std::vector<double> y2(s.g.n);
                for (std::size_t i = 0; i < s.g.n; ++i) y2[i] = b.psi[i] * b.psi[i];
                CHECK(trapz(y2, s.g.spacing()) == doctest::Approx(1.0).epsilon(1e-6));
            }
        }
    }

    TEST_CASE("property: shooting counts interlace with the eigenvalues") {
        for (int k = 0; k <= 2; ++k) {
            const auto& s = setup(k);
            std::vector<double> mus;
            for (const auto& b : s.mb.states) mus.push_back(b.eigenvalue());
            for (int t = 0; t < 25; ++t) {
                const double mu = -s.mb.c_bound * (t + 0.5) / 25.0;
                const auto below = std::count_if(mus.begin(), mus.end(), [&](double m) { return m < mu; });
                CHECK(shooting_count(mu, s.q) == below);
            }
        }
    }

    TEST_CASE("eigenfunctions are orthonormal and eigenvalues lie in (-C_k, 0)") {
        const auto& s = setup(2);
        const double h = s.g.spacing();
        for (std::size_t i = 0; i < s.mb.states.size(); ++i) {
            const auto& bi = s.mb.states[i];
            CHECK(bi.eigenvalue() < 0.0);
            CHECK(bi.eigenvalue() > -s.mb.c_bound);
            for (std::size_t j = 0; j <= i; ++j) {
                std::vector<double> p(s.g.n);
                for (std::size_t l = 0; l < s.g.n; ++l) p[l] = bi.psi[l] * s.mb.states[j].psi[l];
                CHECK(std::abs(trapz(p, h) - (i == j ? 1.0 : 0.0)) <= 1e-6);
            }
        }
    }

    TEST_CASE("eigenfunction nodes are bounded by the LambdaQ nodes") {
        for (int k = 0; k <= 2; ++k) {
            const auto& s = setup(k);
            const int nl = count_sign_changes(s.q.lambda_q, s.g, s.g.r_min, s.g.r_max);
            for (const auto& b : s.mb.states) CHECK(count_sign_changes(b.y, s.g, s.g.r_min, s.g.r_max) <= nl - 1);
        }
    }

    TEST_CASE("eigenfunctions decay like e^{-e r}") {
        for (int k = 0; k <= 1; ++k)
            for (const auto& b : setup(k).mb.states) {
                const auto fit = agmon_tail_check(b);
                CHECK(fit.slope_rel_error <= 1e-2);
                CHECK(fit.derivative_ratio == doctest::Approx(1.0).epsilon(2e-2));
            }
    }

    TEST_CASE("nodal domains: one negative eigenvalue each, negative quadratic form") {
        const double gamma_kk[] = {1.0, 10.75, 52.32};
        for (int k = 0; k <= 2; ++k) {
            const auto& s = setup(k);
            const auto gam = s.q.nodal_radii();
            CHECK(gam.back() == doctest::Approx(gamma_kk[k]).epsilon(1e-3));
            for (int i = 0; i <= k; ++i) {
                CHECK(subdomain_eigencount(s.q, i) == 1);
                CHECK(quadratic_form(nodal_test_function(s.q, i), s.q) < 0.0);
            }
        }
    }

    TEST_CASE("no zero energy state and a constant Wronskian") {
        for (int k = 0; k <= 2; ++k) {
            const auto z = zero_energy_diagnostic(setup(k).q);
            CHECK_FALSE(z.is_resonant);
            CHECK(std::abs(z.limit_estimate) > 1e-3 * z.max_abs_h);
            CHECK(z.wronskian_max_rel_dev <= 1e-8);
        }
    }

    TEST_CASE("Q = 0 has no negative spectrum") {
        const auto g = RadialGrid::make(60.0, 4097);
        const auto z = zero_state(g);
        CHECK(shooting_count(-1e-10, z) == 0);
        CHECK(matrix_oracle(z, g.n).empty());
        CHECK(find_negative_eigenvalues(z).states.empty());
    }

    TEST_CASE("Dirichlet counts for a constant well match the closed form") {
        // -f'' - V f on [0, L]: eigenvalues (j pi / L)^2 - V
        const double V = 10.0, L = 3.0;
        const int expect = static_cast<int>(std::floor(L * std::sqrt(V) / M_PI));
        CHECK(dirichlet_count_below([&](double) { return V; }, 0.0, L, 4001, 0.0) == expect);
        CHECK(dirichlet_count_below([&](double) { return V; }, 0.0, L, 4001, -V) == 0);
    }
}
