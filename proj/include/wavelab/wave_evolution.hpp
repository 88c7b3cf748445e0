#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wavelab/grid.hpp"
#include "wavelab/spectral_analysis.hpp"
#include "wavelab/stationary_profiles.hpp"

namespace wavelab {

/// (psi, psi_t) with psi = r u on a uniform radial grid.
struct FieldState {
    double t = 0.0;
    RadialGrid grid;
    std::vector<double> psi;
    std::vector<double> psi_t;

    static FieldState zeros(const RadialGrid& g);
    /// From samples of (u, u_t); u(1) is forced to zero.
    static FieldState from_u(const RadialGrid& g, std::span<const double> u, std::span<const double> u_t);
    /// (Q, 0) for a stationary state.
    static FieldState stationary(const StationaryState& q, double sign = 1.0);
    std::vector<double> u() const;
    std::vector<double> u_t() const;
    /// Restriction to a truncated grid with the same spacing.
    FieldState restricted(const RadialGrid& g) const;
    FieldState& axpy(double a, const FieldState& x);
};

enum class OuterBoundary { Causal, Sommerfeld };
enum class EvolveMode { Nonlinear, LinearPotential, Free };

struct EvolveConfig {
    double dt = 0.0;                  ///< 0 selects dt = spacing
    double t_end = 20.0;
    double blowup_threshold = 1e3;    ///< U_max
    OuterBoundary outer_boundary = OuterBoundary::Causal;
    int record_every = 10;
    bool store_frames = true;
    int monotone_frames = 20;
    double observation_radius = 0.0;  ///< > 0 enables the causal horizon check
};

enum class OutcomeKind { ScattersToZero, ScattersTo, PositiveBlowUp, NegativeBlowUp, Undetermined };

std::string to_string(OutcomeKind kind);

struct RunOutcome {
    OutcomeKind kind = OutcomeKind::Undetermined;
    int sign = 0;                      ///< for ScattersTo
    int k = -1;                        ///< for ScattersTo
    double t_est = 0.0;                ///< blow-up threshold crossing time
    double energy_drift = 0.0;
    double min_u_at_detection = 0.0;
    double max_u_at_detection = 0.0;
    std::vector<double> final_local_distances;  ///< order: 0, +Q0, -Q0, +Q1, ...
    std::string note;
    std::string label() const;
};

struct Trajectory {
    EvolveMode mode = EvolveMode::Nonlinear;
    EvolveConfig config;
    RadialGrid grid;
    int m = 3;
    double dt = 0.0;
    std::vector<FieldState> frames;
    std::vector<double> times;        ///< frame times
    std::vector<double> energies;     ///< energy at frame times (nonlinear energy functional)
    std::vector<double> sup_u, min_u; ///< per recorded frame
    double running_min_u = 0.0;       ///< min of u over all steps (causal runs: only r <= r_max - t)
    double running_min_char = 0.0;    ///< same for the discrete (d_t + d_r)(r u)
    double max_amplitude = 0.0;       ///< max |u| over all steps
    bool completed = false;           ///< reached t_end without blow-up or NaN
    std::size_t steps = 0;
    RunOutcome outcome;
};

/// Source hook: called before each step with the step index and time; adds into src.
using SourceHook = std::function<void(std::size_t step, double t, std::span<double> src)>;
/// Frame hook: called for every recorded frame.
using FrameHook = std::function<void(const FieldState&)>;

/// Three-level leapfrog for psi_tt = psi_rr + S with psi(1) = 0.
class LeapfrogStepper {
public:
    LeapfrogStepper(const RadialGrid& g, double dt, EvolveMode mode, int m, std::vector<double> potential,
                    OuterBoundary boundary);
    /// Initializes levels 0 and 1 from (psi, psi_t).
    void start(const FieldState& init, std::span<const double> extra_source = {});
    /// Advances one step; extra_source is added to the mode source at the current level.
    void step(std::span<const double> extra_source = {});
    const std::vector<double>& current() const { return cur_; }
    const std::vector<double>& previous() const { return prev_; }
    /// Mutable access invalidates the cached characteristic differences.
    std::vector<double>& current_mut() {
        dirty_ = true;
        return cur_;
    }
    std::vector<double>& previous_mut() {
        dirty_ = true;
        return prev_;
    }
    double time() const { return t_; }
    double dt() const { return dt_; }
    /// Velocity at the current level from the next one: (psi^{n+1} - psi^{n-1}) / 2 dt.
    std::vector<double> centered_velocity(const std::vector<double>& next) const;
    void source(const std::vector<double>& psi, std::vector<double>& out) const;

private:
    RadialGrid g_;
    double dt_, lambda_;
    EvolveMode mode_;
    int m_;
    std::vector<double> V_;
    OuterBoundary boundary_;
    std::vector<double> prev_, cur_, next_, src_;
    std::vector<double> a_, a_next_;  ///< psi^n_i - psi^{n-1}_{i-1}, shifted exactly at unit Courant number
    bool dirty_ = true;
    double t_ = 0.0;
    void resync();
};

/// Evolves initial data; potential is required for LinearPotential mode.
Trajectory evolve(const FieldState& initial, const EvolveConfig& config, EvolveMode mode = EvolveMode::Nonlinear,
                  const StationaryState* potential = nullptr, int m = 3, const SourceHook& hook = {},
                  const FrameHook& on_frame = {});

/// (1/2) int (u_r^2 + u_t^2) r^2 dr - 1/(2m+2) int |u|^{2m+2} r^2 dr.
double energy(const FieldState& s, int m = 3);
/// int_{1}^{R} (u_t^2 + (d_r(u - S))^2) r^2 dr for a stationary S given pointwise (sign * Q).
double local_distance(const FieldState& s, const StationaryState* q, double sign, double R);
/// Energy-norm distance sqrt(int (d_r(u - S))^2 + u_t^2) r^2 dr) over the whole grid.
double energy_norm_distance(const FieldState& s, const StationaryState* q, double sign);
/// int_R^{r_max} (u_t^2 + u_r^2) r^2 dr (linear interpolation of the first cell).
double exterior_energy(const FieldState& s, double R);
/// int (u_t^2 + u_r^2) r^2 dr.
double energy_norm_sq(const FieldState& s);

struct ClassifyOptions {
    double scatter_tol = 1e-3;
    double r_loc = 10.0;
    double window_fraction = 0.1;
};

/// Outcome for a trajectory; families lists Q_0..Q_K (candidates are 0 and +-Q_j).
RunOutcome classify(const Trajectory& traj, const std::vector<const StationaryState*>& families,
                    const ClassifyOptions& opt = {});

struct PositivityReport {
    double min_u = 0.0;
    double min_char = 0.0;
    double eps_pos = 0.0;
    bool ok = false;
};

/// eps_pos = 10 h^2 max amplitude (monitors cap the amplitude at U_max).
double eps_pos(const RadialGrid& g, double amplitude);
/// Checks u_0 >= 0 and r u_1 + d_r(r u_0) >= 0 up to tol; throws HypothesisViolated otherwise.
void check_positivity_hypotheses(const FieldState& s, double tol);
PositivityReport positivity_monitor(const Trajectory& traj);
/// Ordering of two trajectories recorded on the same frames (causal runs: only r <= r_max - t).
PositivityReport comparison_monitor(const Trajectory& u, const Trajectory& v);

/// (d_r + e_j)(r Y_j) from the exact integral w(r) = int_r^inf e^{-e(s-r)} V psi ds.
std::vector<double> characteristic_derivative(const BoundState& b, const StationaryState& q);
struct ConeConstant {
    double c = 0.0;
    double r_positive = 1.0;  ///< radius beyond which every Y_j and (d_r + e_j)(r Y_j) is positive
};
ConeConstant cone_constant(const ModeBasis& modes, const StationaryState& q);
/// sum omega_j (Y_j, e_j Y_j); throws HypothesisViolated when omega breaks the cone condition and
/// ConeViolation when the pointwise check fails.
FieldState positive_cone_perturbation(const ModeBasis& modes, const StationaryState& q, std::span<const double> omega,
                                      double cone_c);

struct Witnesses {
    std::optional<double> a1, a2, a3, a4;
};
/// Ordering witnesses for Q_j and Q_k sampled on one grid; throws WitnessNotFound.
Witnesses stationary_inequality_witnesses(const StationaryState& qj, const StationaryState& qk);

/// (psi, -psi_t) with t reset to 0.
FieldState time_reverse(const FieldState& s);

/// (Y_j, e_j Y_j) in psi form without normalization constants.
FieldState unstable_direction(const BoundState& b);

}  // namespace wavelab
