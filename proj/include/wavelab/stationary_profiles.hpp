#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "wavelab/grid.hpp"

namespace wavelab {

struct ProfileSample {
    double r;
    double z;
    double dz;
};

/// The singular solution Z of Z'' + (2/r) Z' + Z^{2m+1} = 0 with r Z(r) -> 1 at infinity,
/// sampled on (r_stop, r_start] together with its zeros r_0 > r_1 > ...
class SingularProfile {
public:
    int m = 3;
    double r_start = 200.0;
    double r_stop = 1e-3;
    double tol = 1e-12;
    std::vector<ProfileSample> samples;  ///< ascending in r
    std::vector<double> zeros;           ///< descending

    double r_lo() const { return samples.front().r; }
    double r_hi() const { return samples.back().r; }

    /// Z, Z' and Z'' (from the ODE) at r, by quintic Hermite interpolation of the accepted steps.
    double z(double r) const;
    double dz(double r) const;
    double ddz(double r) const;
    void eval(double r, double& z, double& dz) const;

    /// Scaling exponents used to build Q_k.
    double zero(int k) const;
};

/// Integrate Z inward from r_start with the seed Z = 1/r, Z' = -1/r^2. Zeros are refined
/// by bisection. Throws InsufficientZeros when fewer than min_zeros lie above r_stop.
SingularProfile integrate_singular_profile(int m = 3, double r_start = 200.0, double r_stop = 1e-3,
                                           double tol = 1e-12, std::size_t min_zeros = 0);

/// Q_k(r) = r_k^{1/m} Z(r_k r) on a grid, with Q', Lambda Q = r Q' + Q/m and ell_k = r_k^{1/m-1}.
struct StationaryState {
    int k = 0;
    int m = 3;
    RadialGrid grid;
    std::vector<double> q;
    std::vector<double> q_prime;
    std::vector<double> lambda_q;
    double ell_k = 0.0;
    double r_k = 0.0;
    /// Null for synthetic states (for example Q = 0).
    std::shared_ptr<const SingularProfile> profile;

    /// Pointwise evaluation off the grid; falls back to 0 for synthetic states.
    double value(double r) const;
    double derivative(double r) const;
    /// (2m+1) Q^{2m} on the grid.
    std::vector<double> potential() const;
    /// (2m+1) Q^{2m} evaluated on another grid over the same profile.
    std::vector<double> potential_on(const RadialGrid& g) const;
    /// gamma_{k,i} = r_{k-i}/r_k for i = 0..k (zeros of Q_k).
    std::vector<double> nodal_radii() const;
};

StationaryState build_stationary(int k, std::shared_ptr<const SingularProfile> profile, const RadialGrid& grid);
/// The trivial stationary solution Q = 0.
StationaryState zero_state(const RadialGrid& grid, int m = 3);

/// max over interior points of |Q'' + (2/r)Q' + Q^{2m+1}| with centered differences.
double stationary_residual(const StationaryState& state);

/// Sign alternations of consecutive samples with r in (a, b); |v| < atol counts as zero.
/// atol defaults to 1e-12 * max|samples|.
int count_sign_changes(std::span<const double> samples, const RadialGrid& grid, double a, double b,
                       double atol = -1.0);
/// Locations of those sign changes (linear interpolation between samples).
std::vector<double> sign_change_locations(std::span<const double> samples, const RadialGrid& grid, double a,
                                          double b, double atol = -1.0);

/// Grid used for index k: r_max scales with r_0/r_k so every Q_k sees the same tail, and the
/// point count is a power of two plus one with spacing at most h_max.
RadialGrid scaled_grid(const SingularProfile& profile, int k, double base_r_max = 60.0, double h_max = 59.0 / 8192.0);
/// scaled_grid(k) cut where Q_j (j <= k) would leave the sampled profile.
RadialGrid pair_grid(const SingularProfile& profile, int j, int k, double base_r_max = 60.0,
                     double h_max = 59.0 / 8192.0);

}  // namespace wavelab
