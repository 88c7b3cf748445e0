#include <doctest.h>

#include <cmath>
#include <vector>

#include "wavelab/errors.hpp"
#include "wavelab/grid.hpp"

using namespace wavelab;

TEST_SUITE("grid") {
    TEST_CASE("spacing and indexing") {
        const auto g = RadialGrid::make(9.0, 9);
        CHECK(g.spacing() == 1.0);
        CHECK(g.r(0) == 1.0);
        CHECK(g.r(8) == 9.0);
        CHECK(g.index_of(4.4) == 3);
        CHECK(g.index_at_or_above(4.4) == 4);
        CHECK(g.index_of(-3.0) == 0);
        CHECK(g.index_of(100.0) == 8);
    }

    TEST_CASE("refine, coarsen and truncate keep the spacing relations") {
        const auto g = RadialGrid::make(60.0, 8193);
        CHECK(g.refined().n == 16385);
        CHECK(g.refined().coarsened() == g);
        const auto t = g.truncated(30.0);
        CHECK(t.spacing() == doctest::Approx(g.spacing()).epsilon(1e-14));
        CHECK(t.r_max == doctest::Approx(30.0).epsilon(1e-3));
        CHECK_THROWS_AS(RadialGrid::make(60.0, 8).coarsened(), Error);
        CHECK_THROWS_AS(RadialGrid::make(0.5, 10), Error);
    }

    TEST_CASE("trapezoid and derivative are exact on low-degree polynomials") {
        const auto g = RadialGrid::make(3.0, 201);
        std::vector<double> lin(g.n), quad(g.n);
        for (std::size_t i = 0; i < g.n; ++i) {
            lin[i] = 2.0 * g.r(i) + 1.0;
            quad[i] = g.r(i) * g.r(i);
        }
        CHECK(trapz(lin, g.spacing()) == doctest::Approx(10.0).epsilon(1e-14));
        const auto d = derivative(quad, g.spacing());
        for (std::size_t i = 0; i < g.n; ++i) CHECK(d[i] == doctest::Approx(2.0 * g.r(i)).epsilon(1e-10));
    }
}
