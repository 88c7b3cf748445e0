#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace wavelab {

/// Uniform radial grid on [1, r_max]. Index 0 sits on the obstacle.
struct RadialGrid {
    double r_min = 1.0;
    double r_max = 60.0;
    std::size_t n = 8193;

    static RadialGrid make(double r_max, std::size_t n);

    double spacing() const { return (r_max - r_min) / static_cast<double>(n - 1); }
    double r(std::size_t i) const { return r_min + spacing() * static_cast<double>(i); }
    std::vector<double> radii() const;

    /// Index of the grid point nearest to r (clamped).
    std::size_t index_of(double r) const;
    /// First index with r_i >= r (clamped to n-1).
    std::size_t index_at_or_above(double r) const;

    /// Same spacing, cut at the grid point nearest to new_r_max.
    RadialGrid truncated(double new_r_max) const;
    /// Halved spacing on the same interval (2n-1 points).
    RadialGrid refined() const { return make(r_max, 2 * n - 1); }
    /// Doubled spacing on the same interval; requires odd n.
    RadialGrid coarsened() const;

    bool operator==(const RadialGrid& o) const { return r_max == o.r_max && n == o.n && r_min == o.r_min; }
};

/// Trapezoid rule on uniform spacing h.
double trapz(std::span<const double> f, double h);
/// Trapezoid rule over the index range [lo, hi].
double trapz(std::span<const double> f, double h, std::size_t lo, std::size_t hi);
/// Second-order derivative on a uniform grid (centered inside, one-sided at the ends).
std::vector<double> derivative(std::span<const double> f, double h);

}  // namespace wavelab
