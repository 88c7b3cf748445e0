#pragma once

#include <cstddef>
#include <vector>

#include "wavelab/spectral_analysis.hpp"
#include "wavelab/stationary_profiles.hpp"
#include "wavelab/wave_evolution.hpp"

namespace wavelab {

/// int (f0 g1 - f1 g0) r^2 dr, evaluated in psi variables.
double omega(const FieldState& f, const FieldState& g);
/// <f, g> = int f g r^2 dr for psi samples.
double inner(const std::vector<double>& psi_f, const std::vector<double>& psi_g, double h);

/// Y_j^{+-} = (2 e_j)^{-1/2} (1, +-e_j) Y_j.
FieldState mode_state(const BoundState& b, int sign);

struct SymplecticDecomposition {
    std::vector<double> alpha_plus;
    std::vector<double> alpha_minus;
    FieldState center;
};

/// alpha_j^{+-} = -+omega(h, Y_j^{-+}); center = h - sum alpha^{+-} Y^{+-}.
SymplecticDecomposition decompose(const FieldState& h, const ModeBasis& modes);
FieldState reconstruct(const SymplecticDecomposition& d, const ModeBasis& modes);
/// Componentwise Id - sum <., Y_j> Y_j.
FieldState project_center(const FieldState& h, const ModeBasis& modes);
/// In-place P_c on a psi-like vector.
void project_center_inplace(std::vector<double>& psi, const ModeBasis& modes);

struct LinearFlowOptions {
    /// Components removed at every re-projection; empty means keep everything.
    std::vector<bool> drop_plus, drop_minus;
    int reproject_every = 50;
    OuterBoundary boundary = OuterBoundary::Sommerfeld;
    int record_every = 10;
    bool store_frames = false;
};

/// Builds options for the center-restricted flow S_Q o P_c.
LinearFlowOptions center_flow_options(const ModeBasis& modes);
/// Keeps only one signed eigenmode (plus the center part).
LinearFlowOptions single_mode_options(const ModeBasis& modes, int j, int sign);

struct LinearFlowResult {
    std::vector<double> times;
    std::vector<std::vector<double>> alpha_plus;   ///< [frame][j]
    std::vector<std::vector<double>> alpha_minus;  ///< [frame][j]
    std::vector<FieldState> frames;
    FieldState final_state;
};

/// Solves (d_t^2 + L_Q) v = 0 from v0 up to time t.
LinearFlowResult linear_flow_SQ(const FieldState& v0, double t, const ModeBasis& modes, const StationaryState& q,
                                const LinearFlowOptions& opt = {});

/// Least-squares slope of log|a(t)| over the recorded frames.
double fitted_rate(const std::vector<double>& times, const std::vector<double>& values);

struct SNorm {
    double l7_l14 = 0.0;      ///< L^{2m+1}_t L^{2(2m+1)}_x
    double l4_l12 = 0.0;
    double weighted_l2 = 0.0; ///< || <x>^{-3} u ||_{L^2_t L^2_x}
    double total() const { return l7_l14 + l4_l12 + weighted_l2; }
};

/// Accumulates the truncated S-norm from per-step samples of psi.
class SNormAccumulator {
public:
    SNormAccumulator(const RadialGrid& g, int m);
    void add(const std::vector<double>& psi, double weight);
    SNorm result() const;

private:
    RadialGrid g_;
    int m_;
    double a7_ = 0.0, a4_ = 0.0, aw_ = 0.0;
    std::vector<double> buf_;
};

struct TripleNorm {
    double stable_part = 0.0;  ///< max_j |omega(v0, Y_j^+)|
    SNorm s_norm;
    double value() const { return stable_part + s_norm.total(); }
};

TripleNorm triple_norm(const FieldState& v0, const ModeBasis& modes, const StationaryState& q, double horizon,
                       int reproject_every = 50);

struct PicardConfig {
    double delta = 1e-2;
    double horizon = 40.0;       ///< T_infinity
    double tol = 1e-10;          ///< relative to sup_t ||h(t)||
    int max_iter = 40;
    int reproject_every = 50;
    double tail_tol = 1e-6;      ///< dropped tail relative to |theta|
    double max_ratio = 1.0;      ///< contraction ratios above this raise NoContraction
};

struct GraphPoint {
    FieldState v0;
    std::vector<double> theta;          ///< alpha_j^+(0)
    double theta_norm = 0.0;
    double triple_norm = 0.0;
    double contraction_ratio = 0.0;     ///< worst ratio of successive iterate distances
    double tail_bound = 0.0;
    double linear_deviation = 0.0;      ///< sup_t ||h(t) - S_Q(t) v0||
    std::vector<double> iterate_distances;
    std::vector<double> times;          ///< sample times of the stored trajectory summary
    std::vector<std::vector<double>> alpha_plus, alpha_minus;  ///< [sample][j]
    std::vector<double> h_norm;         ///< ||h(t)|| at the sample times
    int iterations = 0;
};

/// Lyapunov-Perron fixed point for data v0 in the center-stable space on a truncated horizon.
GraphPoint picard_solve(const FieldState& v0, const PicardConfig& config, const ModeBasis& modes,
                        const StationaryState& q);

struct ScalingResult {
    std::vector<double> deltas;
    std::vector<GraphPoint> points;
    double slope = 0.0;
    double intercept = 0.0;
};

/// Picard points for delta * direction (direction rescaled to unit triple norm) and the fitted
/// slope of log|theta| against log delta.
ScalingResult graph_scaling_experiment(const FieldState& direction, const std::vector<double>& deltas,
                                       const ModeBasis& modes, const StationaryState& q, PicardConfig config = {});

/// Default delta sweep {10^-1.5, 10^-2, 10^-2.5, 10^-3}.
std::vector<double> default_deltas();

/// Smooth compactly supported bump in u (zero velocity) centred at r = c with half-width w.
FieldState bump(const RadialGrid& g, double c, double w, double amplitude = 1.0);

struct ChannelSample {
    double R = 0.0;
    double t = 0.0;
    double exterior = 0.0;   ///< int_{R+t} (u_t^2 + u_r^2) r^2 dr
    double lower = 0.0;      ///< e^{-2 e_0 R} ||h0||^2
    double upper = 0.0;      ///< e^{-2 e_k R} ||h0||^2
};

/// Exterior energies of S_Q(t) h0 for R in [r0, r0 + span] (unit steps) and the given times.
std::vector<ChannelSample> channel_samples(const FieldState& h0, const ModeBasis& modes, const StationaryState& q,
                                           double r0, double span, const std::vector<double>& times);
/// Smallest C with lower / C <= exterior <= C upper for every sample.
double channel_constant(const std::vector<ChannelSample>& samples);

/// Evolves (Q_k, 0) + epsilon Y_0^+ (unnormalized, psi form) and classifies the run.
RunOutcome unstable_escape_probe(const StationaryState& base, const ModeBasis& modes, double epsilon,
                                 EvolveConfig config = {});

}  // namespace wavelab
