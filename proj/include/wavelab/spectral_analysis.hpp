#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "wavelab/grid.hpp"
#include "wavelab/stationary_profiles.hpp"

namespace wavelab {

/// One outward Numerov integration of -psi'' - V psi = mu psi from psi(1) = 0, psi'(1) = 1.
struct SturmShot {
    double mu = 0.0;
    int node_count = 0;
    double log_derivative_at_match = 0.0;
    std::size_t match_index = 0;
    std::vector<double> psi_samples;  ///< up to match_index + 1; may underflow to 0 early on
};

struct BoundState {
    int j = 0;
    double e = 0.0;             ///< eigenvalue is -e^2
    RadialGrid grid;
    std::vector<double> psi;    ///< r * Y_j
    std::vector<double> y;      ///< Y_j
    double norm = 1.0;          ///< int Y_j^2 r^2 dr after normalization
    int tail_sign = 1;
    double eigenvalue() const { return -e * e; }
};

struct ModeBasis {
    int k = 0;
    int m = 3;
    RadialGrid grid;
    std::vector<BoundState> states;
    double c_bound = 0.0;       ///< C_k = max (2m+1) Q^{2m}
};

struct SpectralOptions {
    double r_match_fraction = 0.75;
    double eigen_tol = 1e-12;   ///< absolute tolerance in mu
    bool renormalize = true;
    bool store_samples = true;
};

SturmShot shoot(double mu, const StationaryState& q, double r_match, const SpectralOptions& opt = {});

/// Number of eigenvalues below mu seen by the shooting problem (nodes on (1, r_match] plus one
/// when psi'/psi + sqrt(-mu) < 0 at the match point).
int shooting_count(double mu, const StationaryState& q, const SpectralOptions& opt = {});

ModeBasis find_negative_eigenvalues(const StationaryState& q, const SpectralOptions& opt = {});

/// Negative eigenvalues (ascending) of the 3-point discretization of -d^2/dr^2 - V on n points
/// with Dirichlet ends, by Sturm-sequence bisection.
std::vector<double> matrix_oracle(const StationaryState& q, std::size_t n);
/// Richardson combination (4 lambda(h/2) - lambda(h)) / 3.
std::vector<double> matrix_oracle_richardson(const StationaryState& q, std::size_t n);
/// Sturm count of eigenvalues below mu for the Dirichlet problem on [a, b] with potential V.
int dirichlet_count_below(const std::function<double(double)>& V, double a, double b, std::size_t n, double mu);

/// int (f'^2 - (2m+1) Q^{2m} f^2) r^2 dr for samples f on q.grid.
double quadratic_form(std::span<const double> f, const StationaryState& q);
/// R_{k,i} = c Q_k 1_{I_{k,i}} on q.grid; c = 1 when normalized is false.
std::vector<double> nodal_test_function(const StationaryState& q, int i, bool normalized = true);
/// Negative eigenvalue count of L_k on the nodal domain [gamma_{k,i}, gamma_{k,i+1}].
int subdomain_eigencount(const StationaryState& q, int i, std::size_t n = 4097);

struct ZeroEnergyReport {
    double limit_estimate = 0.0;   ///< c' in h(r) ~ c' + d/r
    double tail_slope = 0.0;       ///< d
    double max_abs_h = 0.0;
    bool is_resonant = false;
    double wronskian_expected = 0.0;      ///< Q'(1) h'(1)
    double wronskian_max_rel_dev = 0.0;
    int node_count = 0;
    std::vector<double> h;
};

ZeroEnergyReport zero_energy_diagnostic(const StationaryState& q, double resonance_tol = 1e-3);

struct AgmonFit {
    double slope = 0.0;            ///< fitted d log|rY| / dr
    double slope_rel_error = 0.0;  ///< |slope + e| / e
    double c = 0.0;                ///< rY ~ c e^{-e r}
    double derivative_ratio = 0.0; ///< (r Y)' / (-c e e^{-e r}) at the fit midpoint
    std::size_t samples = 0;
};

AgmonFit agmon_tail_check(const BoundState& state);

}  // namespace wavelab
