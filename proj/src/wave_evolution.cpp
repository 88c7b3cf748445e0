#include "wavelab/wave_evolution.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "wavelab/errors.hpp"

namespace wavelab {

// --- FieldState ------------------------------------------------------------------------------

FieldState FieldState::zeros(const RadialGrid& g) {
    FieldState s;
    s.grid = g;
    s.psi.assign(g.n, 0.0);
    s.psi_t.assign(g.n, 0.0);
    return s;
}

FieldState FieldState::from_u(const RadialGrid& g, std::span<const double> u, std::span<const double> u_t) {
    if (u.size() != g.n || u_t.size() != g.n) fail(ErrorKind::InvalidArgument, "field size mismatch");
    FieldState s = zeros(g);
    for (std::size_t i = 0; i < g.n; ++i) {
        s.psi[i] = g.r(i) * u[i];
        s.psi_t[i] = g.r(i) * u_t[i];
    }
    s.psi[0] = 0.0;
    s.psi_t[0] = 0.0;
    return s;
}

FieldState FieldState::stationary(const StationaryState& q, double sign) {
    FieldState s = zeros(q.grid);
    for (std::size_t i = 0; i < q.grid.n; ++i) s.psi[i] = sign * q.grid.r(i) * q.q[i];
    return s;
}

std::vector<double> FieldState::u() const {
    std::vector<double> out(psi.size());
    for (std::size_t i = 0; i < psi.size(); ++i) out[i] = psi[i] / grid.r(i);
    return out;
}

std::vector<double> FieldState::u_t() const {
    std::vector<double> out(psi_t.size());
    for (std::size_t i = 0; i < psi_t.size(); ++i) out[i] = psi_t[i] / grid.r(i);
    return out;
}

FieldState FieldState::restricted(const RadialGrid& g) const {
    if (std::abs(g.spacing() - grid.spacing()) > 1e-12 * grid.spacing() || g.n > grid.n)
        fail(ErrorKind::InvalidArgument, "restriction needs the same spacing and a shorter grid");
    FieldState s;
    s.t = t;
    s.grid = g;
    s.psi.assign(psi.begin(), psi.begin() + static_cast<std::ptrdiff_t>(g.n));
    s.psi_t.assign(psi_t.begin(), psi_t.begin() + static_cast<std::ptrdiff_t>(g.n));
    return s;
}

FieldState& FieldState::axpy(double a, const FieldState& x) {
    if (x.psi.size() != psi.size()) fail(ErrorKind::InvalidArgument, "field size mismatch");
    for (std::size_t i = 0; i < psi.size(); ++i) {
        psi[i] += a * x.psi[i];
        psi_t[i] += a * x.psi_t[i];
    }
    return *this;
}

std::string to_string(OutcomeKind kind) {
    switch (kind) {
        case OutcomeKind::ScattersToZero: return "ScattersToZero";
        case OutcomeKind::ScattersTo: return "ScattersTo";
        case OutcomeKind::PositiveBlowUp: return "PositiveBlowUp";
        case OutcomeKind::NegativeBlowUp: return "NegativeBlowUp";
        case OutcomeKind::Undetermined: return "Undetermined";
    }
    return "Undetermined";
}

std::string RunOutcome::label() const {
    if (kind == OutcomeKind::ScattersTo)
        return "ScattersTo(" + std::string(sign > 0 ? "+" : "-") + "," + std::to_string(k) + ")";
    return to_string(kind);
}

// --- stepper ---------------------------------------------------------------------------------

LeapfrogStepper::LeapfrogStepper(const RadialGrid& g, double dt, EvolveMode mode, int m, std::vector<double> potential,
                                 OuterBoundary boundary)
    : g_(g), dt_(dt), lambda_(dt / g.spacing()), mode_(mode), m_(m), V_(std::move(potential)), boundary_(boundary) {
    if (!(dt > 0.0)) fail(ErrorKind::InvalidArgument, "dt must be positive");
    if (lambda_ > 1.0 + 1e-12) fail(ErrorKind::CflViolation, "dt exceeds the grid spacing");
    if (std::abs(lambda_ - 1.0) <= 1e-12) lambda_ = 1.0;
    if (mode_ == EvolveMode::LinearPotential && V_.size() != g.n)
        fail(ErrorKind::InvalidArgument, "linear mode needs a potential on the grid");
    prev_.assign(g.n, 0.0);
    cur_.assign(g.n, 0.0);
    next_.assign(g.n, 0.0);
    src_.assign(g.n, 0.0);
    a_.assign(g.n, 0.0);
    a_next_.assign(g.n, 0.0);
}

void LeapfrogStepper::resync() {
    for (std::size_t i = 1; i < g_.n; ++i) a_[i] = cur_[i] - prev_[i - 1];
    dirty_ = false;
}

void LeapfrogStepper::source(const std::vector<double>& psi, std::vector<double>& out) const {
    const std::size_t n = psi.size();
    switch (mode_) {
        case EvolveMode::Free:
            std::fill(out.begin(), out.end(), 0.0);
            break;
        case EvolveMode::LinearPotential:
            for (std::size_t i = 0; i < n; ++i) out[i] = V_[i] * psi[i];
            break;
        case EvolveMode::Nonlinear: {
            const int p = 2 * m_;
            for (std::size_t i = 0; i < n; ++i) {
                const double u = psi[i] / g_.r(i);
                double up = 1.0;
                for (int k = 0; k < p; ++k) up *= u;  // u^{2m}
                out[i] = up * psi[i];
            }
            break;
        }
    }
}

void LeapfrogStepper::start(const FieldState& init, std::span<const double> extra) {
    const std::size_t n = g_.n;
    if (init.psi.size() != n) fail(ErrorKind::InvalidArgument, "initial data size mismatch");
    if (init.psi[0] != 0.0) fail(ErrorKind::InvalidArgument, "initial data violate psi(1) = 0");
    prev_ = init.psi;
    source(prev_, src_);
    if (!extra.empty())
        for (std::size_t i = 0; i < n; ++i) src_[i] += extra[i];
    const double h = g_.spacing();
    const auto& v = init.psi_t;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (lambda_ == 1.0) {
            cur_[i] = 0.5 * (prev_[i + 1] + prev_[i - 1]) + h / 6.0 * (v[i - 1] + 4.0 * v[i] + v[i + 1]) +
                      0.5 * h * h * src_[i];
        } else {
            const double lap = (prev_[i + 1] - 2.0 * prev_[i] + prev_[i - 1]) / (h * h);
            cur_[i] = prev_[i] + dt_ * v[i] + 0.5 * dt_ * dt_ * (lap + src_[i]);
        }
    }
    cur_[0] = 0.0;
    if (boundary_ == OuterBoundary::Causal) cur_[n - 1] = prev_[n - 1];
    else cur_[n - 1] = prev_[n - 1] - lambda_ * (prev_[n - 1] - prev_[n - 2]);
    t_ = init.t + dt_;
    dirty_ = true;
}

void LeapfrogStepper::step(std::span<const double> extra) {
    const std::size_t n = g_.n;
    source(cur_, src_);
    if (!extra.empty())
        for (std::size_t i = 0; i < n; ++i) src_[i] += extra[i];
    const double dt2 = dt_ * dt_;
    if (lambda_ == 1.0) {
        // psi^{n+1}_i = psi^n_{i-1} + a^{n+1}_i with a^{n+1}_i = a^n_{i+1} + dt^2 S_i; the shift of a is
        // exact, so round-off only accumulates along one characteristic
        if (dirty_) resync();
        for (std::size_t i = 1; i + 1 < n; ++i) {
            a_next_[i] = a_[i + 1] + dt2 * src_[i];
            next_[i] = cur_[i - 1] + a_next_[i];
        }
    } else {
        const double l2 = lambda_ * lambda_;
        for (std::size_t i = 1; i + 1 < n; ++i)
            next_[i] = 2.0 * cur_[i] - prev_[i] + l2 * (cur_[i + 1] - 2.0 * cur_[i] + cur_[i - 1]) + dt2 * src_[i];
    }
    next_[0] = 0.0;
    if (boundary_ == OuterBoundary::Causal) next_[n - 1] = cur_[n - 1];
    else next_[n - 1] = cur_[n - 1] - lambda_ * (cur_[n - 1] - cur_[n - 2]);
    if (lambda_ == 1.0) {
        a_next_[n - 1] = next_[n - 1] - cur_[n - 2];
        std::swap(a_, a_next_);
    }
    std::swap(prev_, cur_);
    std::swap(cur_, next_);
    t_ += dt_;
}

std::vector<double> LeapfrogStepper::centered_velocity(const std::vector<double>& next) const {
    std::vector<double> v(g_.n);
    for (std::size_t i = 0; i < g_.n; ++i) v[i] = (next[i] - prev_[i]) / (2.0 * dt_);
    return v;
}

// --- evolve ----------------------------------------------------------------------------------

Trajectory evolve(const FieldState& initial, const EvolveConfig& cfg, EvolveMode mode, const StationaryState* potential,
                  int m, const SourceHook& hook, const FrameHook& on_frame) {
    const RadialGrid& g = initial.grid;
    const std::size_t n = g.n;
    const double h = g.spacing();
    const double dt = cfg.dt > 0.0 ? cfg.dt : h;
    if (cfg.outer_boundary == OuterBoundary::Causal && cfg.observation_radius > 0.0 &&
        cfg.t_end > g.r_max - cfg.observation_radius + 1e-12)
        fail(ErrorKind::InvalidArgument, "causal boundary needs t_end <= r_max - observation_radius");
    std::vector<double> V;
    if (mode == EvolveMode::LinearPotential) {
        if (!potential) fail(ErrorKind::InvalidArgument, "linear mode needs a potential");
        V = potential->grid == g ? potential->potential() : potential->potential_on(g);
    }
    LeapfrogStepper st(g, dt, mode, m, V, cfg.outer_boundary);

    Trajectory tr;
    tr.mode = mode;
    tr.config = cfg;
    tr.grid = g;
    tr.m = m;
    tr.dt = dt;
    const std::size_t total = static_cast<std::size_t>(std::ceil(cfg.t_end / dt - 1e-9));
    const int every = std::max(1, cfg.record_every);

    std::vector<double> inv_r(n);
    for (std::size_t i = 0; i < n; ++i) inv_r[i] = 1.0 / g.r(i);
    std::vector<double> extra(n, 0.0);
    auto fill_extra = [&](std::size_t step, double t) -> std::span<const double> {
        if (!hook) return {};
        std::fill(extra.begin(), extra.end(), 0.0);
        hook(step, t, extra);
        return extra;
    };

    auto emit = [&](FieldState&& f) {
        double su = -std::numeric_limits<double>::infinity(), mu = std::numeric_limits<double>::infinity();
        for (std::size_t i = 1; i < n; ++i) {
            const double u = f.psi[i] * inv_r[i];
            su = std::max(su, u);
            mu = std::min(mu, u);
        }
        tr.times.push_back(f.t);
        tr.sup_u.push_back(su);
        tr.min_u.push_back(mu);
        tr.energies.push_back(energy(f, m));
        if (on_frame) on_frame(f);
        if (cfg.store_frames) tr.frames.push_back(std::move(f));
    };

    // level 0
    {
        FieldState f0 = initial;
        f0.t = 0.0;
        st.start(f0, fill_extra(0, 0.0));
        emit(std::move(f0));
    }
    tr.running_min_u = std::numeric_limits<double>::infinity();
    tr.running_min_char = std::numeric_limits<double>::infinity();
    // with a causal boundary the running minima only cover points the pinned edge cannot reach yet
    const bool causal = cfg.outer_boundary == OuterBoundary::Causal;
    auto track = [&](const std::vector<double>& now, const std::vector<double>& before, std::size_t level,
                     double& sup_u, double& min_u) {
        sup_u = -std::numeric_limits<double>::infinity();
        min_u = std::numeric_limits<double>::infinity();
        for (std::size_t i = 1; i < n; ++i) {
            const double u = now[i] * inv_r[i];
            sup_u = std::max(sup_u, u);
            min_u = std::min(min_u, u);
        }
        std::size_t hi = n - 1;
        if (causal) {
            const auto reach = static_cast<std::size_t>(std::ceil(static_cast<double>(level) * dt / h - 1e-9));
            hi = reach + 2 < n ? n - 1 - reach : 1;
        }
        for (std::size_t i = 1; i < hi; ++i) tr.running_min_u = std::min(tr.running_min_u, now[i] * inv_r[i]);
        // discrete (d_t + d_r) psi along the lattice characteristic
        if (dt == h) {
            for (std::size_t i = 1; i < hi; ++i)
                tr.running_min_char = std::min(tr.running_min_char, (now[i] - before[i - 1]) / h);
        } else {
            for (std::size_t i = 1; i < hi; ++i) {
                const double d = (now[i] - before[i]) / dt + (now[i] - now[i - 1]) / h;
                tr.running_min_char = std::min(tr.running_min_char, d);
            }
        }
        tr.max_amplitude = std::max({tr.max_amplitude, std::abs(sup_u), std::abs(min_u)});
    };
    {
        double su, mu;
        track(st.previous(), st.previous(), 0, su, mu);
        tr.running_min_char = std::numeric_limits<double>::infinity();
        track(st.current(), st.previous(), 1, su, mu);
    }

    std::deque<double> hist_pos, hist_neg;
    double first_cross = -1.0;
    bool nan_seen = false;
    std::size_t nstep = 1;  // current level index
    for (; nstep <= total; ++nstep) {
        const std::vector<double> before = st.current();
        const std::vector<double> older = st.previous();
        st.step(fill_extra(nstep, st.time()));
        const auto& now = st.current();
        bool finite = true;
        for (std::size_t i = 0; i < n && finite; ++i) finite = std::isfinite(now[i]);
        if (!finite) {
            nan_seen = true;
            break;
        }
        // frame for level nstep (the one just behind 'now')
        if (nstep % static_cast<std::size_t>(every) == 0) {
            FieldState f;
            f.t = static_cast<double>(nstep) * dt;
            f.grid = g;
            f.psi = before;
            f.psi_t.resize(n);
            for (std::size_t i = 0; i < n; ++i) f.psi_t[i] = (now[i] - older[i]) / (2.0 * dt);
            emit(std::move(f));
        }
        double su, mu;
        track(now, before, nstep + 1, su, mu);
        hist_pos.push_back(su);
        hist_neg.push_back(-mu);
        while (hist_pos.size() > static_cast<std::size_t>(cfg.monotone_frames)) {
            hist_pos.pop_front();
            hist_neg.pop_front();
        }
        const double amp = std::max(su, -mu);
        if (amp > cfg.blowup_threshold) {
            if (first_cross < 0.0) first_cross = st.time();
            const bool positive = su >= -mu;
            const auto& hist = positive ? hist_pos : hist_neg;
            const bool monotone = hist.size() >= static_cast<std::size_t>(cfg.monotone_frames) &&
                                  std::is_sorted(hist.begin(), hist.end());
            if (monotone) {
                tr.outcome.kind = positive ? OutcomeKind::PositiveBlowUp : OutcomeKind::NegativeBlowUp;
                tr.outcome.t_est = first_cross;
                tr.outcome.min_u_at_detection = mu;
                tr.outcome.max_u_at_detection = su;
                break;
            }
        }
    }
    tr.steps = nstep;
    if (nan_seen) {
        tr.outcome.kind = OutcomeKind::Undetermined;
        tr.outcome.note = "non-finite values before a monotone threshold crossing";
    } else if (tr.outcome.kind == OutcomeKind::Undetermined) {
        tr.completed = true;
    }
    double drift = 0.0;
    const double e0 = tr.energies.front();
    for (std::size_t f = 0; f < tr.energies.size(); ++f) {
        if (first_cross >= 0.0 && tr.times[f] >= first_cross) break;
        drift = std::max(drift, std::abs(tr.energies[f] - e0));
    }
    tr.outcome.energy_drift = e0 != 0.0 ? drift / std::abs(e0) : drift;
    return tr;
}

// --- energies --------------------------------------------------------------------------------

double energy(const FieldState& s, int m) {
    const RadialGrid& g = s.grid;
    const std::size_t n = g.n;
    const double h = g.spacing();
    const auto dpsi = derivative(s.psi, h);
    std::vector<double> dens(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double r = g.r(i);
        const double ur = dpsi[i] - s.psi[i] / r;  // r u_r
        const double u = s.psi[i] / r;
        double up = u * u;
        for (int k = 1; k < m; ++k) up *= u * u;  // u^{2m}
        dens[i] = 0.5 * (ur * ur + s.psi_t[i] * s.psi_t[i]) - up * s.psi[i] * s.psi[i] / (2.0 * m + 2.0);
    }
    return trapz(dens, h);
}

double local_distance(const FieldState& s, const StationaryState* q, double sign, double R) {
    const RadialGrid& g = s.grid;
    const double h = g.spacing();
    const std::size_t hi = std::min(g.n - 1, g.index_of(R));
    std::vector<double> w(hi + 1);
    for (std::size_t i = 0; i <= hi; ++i) {
        const double r = g.r(i);
        w[i] = s.psi[i] - (q ? sign * r * q->q[i] : 0.0);
    }
    std::vector<double> dens(hi + 1);
    for (std::size_t i = 0; i <= hi; ++i) {
        double dw;
        if (i == 0) dw = (-3.0 * w[0] + 4.0 * w[1] - w[2]) / (2.0 * h);
        else if (i == hi) dw = (3.0 * w[i] - 4.0 * w[i - 1] + w[i - 2]) / (2.0 * h);
        else dw = (w[i + 1] - w[i - 1]) / (2.0 * h);
        const double ur = dw - w[i] / g.r(i);
        dens[i] = ur * ur + s.psi_t[i] * s.psi_t[i];
    }
    return trapz(dens, h);
}

double energy_norm_distance(const FieldState& s, const StationaryState* q, double sign) {
    return std::sqrt(local_distance(s, q, sign, s.grid.r_max));
}

double exterior_energy(const FieldState& s, double R) {
    const RadialGrid& g = s.grid;
    if (R > g.r_max) fail(ErrorKind::InvalidArgument, "R + t beyond r_max");
    const double h = g.spacing();
    const auto dpsi = derivative(s.psi, h);
    std::vector<double> dens(g.n);
    for (std::size_t i = 0; i < g.n; ++i) {
        const double ur = dpsi[i] - s.psi[i] / g.r(i);
        dens[i] = ur * ur + s.psi_t[i] * s.psi_t[i];
    }
    const double x = (R - g.r_min) / h;
    std::size_t i0 = static_cast<std::size_t>(std::floor(x));
    if (i0 >= g.n - 1) return 0.0;
    const double frac = x - static_cast<double>(i0);
    const double fR = dens[i0] + frac * (dens[i0 + 1] - dens[i0]);
    double total = 0.5 * (fR + dens[i0 + 1]) * (1.0 - frac) * h;
    total += trapz(dens, h, i0 + 1, g.n - 1);
    return total;
}

double energy_norm_sq(const FieldState& s) { return exterior_energy(s, s.grid.r_min); }

// --- classification --------------------------------------------------------------------------

RunOutcome classify(const Trajectory& tr, const std::vector<const StationaryState*>& families,
                    const ClassifyOptions& opt) {
    RunOutcome out = tr.outcome;
    if (out.kind == OutcomeKind::PositiveBlowUp || out.kind == OutcomeKind::NegativeBlowUp) return out;
    if (!tr.completed || tr.frames.empty()) {
        out.kind = OutcomeKind::Undetermined;
        return out;
    }
    struct Cand {
        const StationaryState* q;
        double sign;
        int k;
    };
    std::vector<Cand> cands{{nullptr, 0.0, -1}};
    for (const auto* q : families) {
        cands.push_back({q, 1.0, q->k});
        cands.push_back({q, -1.0, q->k});
    }
    const double t_end = tr.times.back();
    const double t_win = t_end - opt.window_fraction * t_end;
    std::size_t w0 = 0;
    while (w0 + 1 < tr.times.size() && tr.times[w0] < t_win) ++w0;
    const FieldState& last = tr.frames.back();
    const FieldState& first = tr.frames[std::min(w0, tr.frames.size() - 1)];
    out.final_local_distances.clear();
    int passing = -1, n_pass = 0;
    for (std::size_t c = 0; c < cands.size(); ++c) {
        const double d_end = local_distance(last, cands[c].q, cands[c].sign, opt.r_loc);
        const double d_start = local_distance(first, cands[c].q, cands[c].sign, opt.r_loc);
        out.final_local_distances.push_back(d_end);
        if (d_end < opt.scatter_tol && d_end <= d_start) {
            passing = static_cast<int>(c);
            ++n_pass;
        }
    }
    if (n_pass > 1) fail(ErrorKind::AmbiguousClassification, "more than one stationary candidate fits");
    if (n_pass == 0) {
        out.kind = OutcomeKind::Undetermined;
        return out;
    }
    const Cand& c = cands[static_cast<std::size_t>(passing)];
    if (!c.q) {
        out.kind = OutcomeKind::ScattersToZero;
    } else {
        out.kind = OutcomeKind::ScattersTo;
        out.sign = c.sign > 0 ? 1 : -1;
        out.k = c.k;
    }
    return out;
}

// --- positivity ------------------------------------------------------------------------------

double eps_pos(const RadialGrid& g, double amplitude) {
    const double h = g.spacing();
    return 10.0 * h * h * amplitude;
}

void check_positivity_hypotheses(const FieldState& s, double tol) {
    const double h = s.grid.spacing();
    const auto dpsi = derivative(s.psi, h);
    for (std::size_t i = 1; i < s.grid.n; ++i) {
        if (s.psi[i] < -tol) fail(ErrorKind::HypothesisViolated, "u_0 < 0 at r = " + std::to_string(s.grid.r(i)));
        if (s.psi_t[i] + dpsi[i] < -tol)
            fail(ErrorKind::HypothesisViolated, "r u_1 + d_r(r u_0) < 0 at r = " + std::to_string(s.grid.r(i)));
    }
}

PositivityReport positivity_monitor(const Trajectory& tr) {
    PositivityReport rep;
    rep.min_u = tr.running_min_u;
    rep.min_char = tr.running_min_char;
    // amplitudes past the blow-up threshold are unresolved; the slack uses at most U_max
    rep.eps_pos = eps_pos(tr.grid, std::min(tr.max_amplitude, tr.config.blowup_threshold));
    rep.ok = rep.min_u >= -rep.eps_pos && rep.min_char >= -rep.eps_pos;
    return rep;
}

PositivityReport comparison_monitor(const Trajectory& a, const Trajectory& b) {
    if (a.frames.size() < 1 || b.frames.size() < 1) fail(ErrorKind::InvalidArgument, "comparison needs stored frames");
    const std::size_t nf = std::min(a.frames.size(), b.frames.size());
    const RadialGrid& g = a.grid;
    if (!(g == b.grid)) fail(ErrorKind::InvalidArgument, "comparison needs a common grid");
    const double h = g.spacing();
    PositivityReport rep;
    rep.min_u = std::numeric_limits<double>::infinity();
    rep.min_char = std::numeric_limits<double>::infinity();
    double amp = 0.0;
    std::vector<double> w(g.n), wt(g.n);
    for (std::size_t f = 0; f < nf; ++f) {
        const auto& fa = a.frames[f];
        const auto& fb = b.frames[f];
        if (std::abs(fa.t - fb.t) > 1e-9) fail(ErrorKind::InvalidArgument, "frame times differ");
        for (std::size_t i = 0; i < g.n; ++i) {
            w[i] = fa.psi[i] - fb.psi[i];
            wt[i] = fa.psi_t[i] - fb.psi_t[i];
            amp = std::max({amp, std::abs(fa.psi[i] / g.r(i)), std::abs(fb.psi[i] / g.r(i))});
        }
        const auto dw = derivative(w, h);
        std::size_t hi = g.n - 1;
        if (a.config.outer_boundary == OuterBoundary::Causal || b.config.outer_boundary == OuterBoundary::Causal) {
            const auto reach = static_cast<std::size_t>(std::ceil(fa.t / h - 1e-9)) + 1;
            hi = reach + 2 < g.n ? g.n - 1 - reach : 1;
        }
        for (std::size_t i = 1; i < hi; ++i) {
            rep.min_u = std::min(rep.min_u, w[i] / g.r(i));
            rep.min_char = std::min(rep.min_char, wt[i] + dw[i]);
        }
    }
    rep.eps_pos = eps_pos(g, std::min({amp, a.config.blowup_threshold, b.config.blowup_threshold}));
    rep.ok = rep.min_u >= -rep.eps_pos && rep.min_char >= -rep.eps_pos;
    return rep;
}

// --- cone ------------------------------------------------------------------------------------

std::vector<double> characteristic_derivative(const BoundState& b, const StationaryState& q) {
    const RadialGrid& g = b.grid;
    const std::vector<double> V = q.grid == g ? q.potential() : q.potential_on(g);
    const double h = g.spacing();
    const double decay = std::exp(-b.e * h);
    std::vector<double> w(g.n, 0.0);
    for (std::size_t i = g.n - 1; i-- > 0;) {
        const double fi = V[i] * b.psi[i];
        const double fj = V[i + 1] * b.psi[i + 1] * decay;
        w[i] = decay * w[i + 1] + 0.5 * h * (fi + fj);
    }
    return w;
}

ConeConstant cone_constant(const ModeBasis& modes, const StationaryState& q) {
    const RadialGrid& g = modes.grid;
    const std::size_t K = modes.states.size();
    std::vector<std::vector<double>> w(K);
    for (std::size_t j = 0; j < K; ++j) w[j] = characteristic_derivative(modes.states[j], q);
    // radius beyond which every Y_j and w_j stays positive (up to underflow)
    std::size_t ipos = 1;
    for (std::size_t i = g.n; i-- > 1;) {
        bool ok = true;
        for (std::size_t j = 0; j < K && ok; ++j)
            ok = modes.states[j].psi[i] >= 0.0 && w[j][i] >= 0.0;
        if (!ok) {
            ipos = i + 1;
            break;
        }
    }
    ConeConstant cc;
    cc.r_positive = g.r(std::min(ipos, g.n - 1));
    double c = 0.0;
    for (std::size_t i = 1; i <= std::min(ipos, g.n - 1); ++i) {
        double sy = 0.0, sw = 0.0;
        for (std::size_t j = 1; j < K; ++j) {
            sy += std::abs(modes.states[j].psi[i]);
            sw += std::abs(w[j][i]);
        }
        const double y0 = modes.states[0].psi[i], w0 = w[0][i];
        if (y0 > 0.0) c = std::max(c, sy / y0);
        if (w0 > 0.0) c = std::max(c, sw / w0);
    }
    cc.c = c;
    return cc;
}

FieldState positive_cone_perturbation(const ModeBasis& modes, const StationaryState& q, std::span<const double> omega,
                                      double cone_c) {
    const std::size_t K = modes.states.size();
    if (omega.size() != K) fail(ErrorKind::InvalidArgument, "omega needs one entry per mode");
    double tail = 0.0;
    for (std::size_t j = 1; j < K; ++j) {
        if (omega[j] < 0.0) fail(ErrorKind::HypothesisViolated, "omega_j < 0 for j >= 1");
        tail += omega[j];
    }
    FieldState inc = FieldState::zeros(modes.grid);
    bool all_zero = omega[0] == 0.0 && tail == 0.0;
    if (all_zero) return inc;
    if (!(cone_c * tail < omega[0])) fail(ErrorKind::HypothesisViolated, "C_k sum omega_j >= omega_0");
    std::vector<double> chi(modes.grid.n, 0.0);
    for (std::size_t j = 0; j < K; ++j) {
        const auto& b = modes.states[j];
        const auto w = characteristic_derivative(b, q);
        for (std::size_t i = 0; i < modes.grid.n; ++i) {
            inc.psi[i] += omega[j] * b.psi[i];
            inc.psi_t[i] += omega[j] * b.e * b.psi[i];
            chi[i] += omega[j] * w[i];
        }
    }
    for (std::size_t i = 1; i < modes.grid.n; ++i) {
        if (inc.psi[i] < 0.0 || chi[i] < 0.0)
            fail(ErrorKind::ConeViolation, "cone perturbation fails the pointwise check at r = " +
                                               std::to_string(modes.grid.r(i)));
    }
    return inc;
}

// --- stationary inequalities ---------------------------------------------------------------------

Witnesses stationary_inequality_witnesses(const StationaryState& qj, const StationaryState& qk) {
    if (!(qj.grid == qk.grid)) fail(ErrorKind::InvalidArgument, "witness search needs a common grid");
    if (qj.k > qk.k) fail(ErrorKind::InvalidArgument, "need j <= k");
    const RadialGrid& g = qj.grid;
    const auto& a = qj.q;
    const auto& b = qk.q;
    Witnesses w;
    auto scan_down = [&](auto pred) -> std::optional<double> {
        for (std::size_t i = g.n - 1; i >= 1; --i)
            if (pred(i)) return g.r(i);
        return std::nullopt;
    };
    auto scan_up = [&](auto pred) -> std::optional<double> {
        for (std::size_t i = 1; i < g.n; ++i)
            if (pred(i)) return g.r(i);
        return std::nullopt;
    };
    w.a1 = scan_down([&](std::size_t i) { return b[i] > -a[i]; });
    if (!w.a1) fail(ErrorKind::WitnessNotFound, "no a1 with Q_k > -Q_j on the grid");
    if (!(qj.k == 0 && qk.k == 0)) {
        w.a2 = scan_up([&](std::size_t i) { return -b[i] > a[i]; });
        if (!w.a2) fail(ErrorKind::WitnessNotFound, "no a2 with -Q_k > Q_j on the grid");
    }
    if (qj.k < qk.k) {
        w.a3 = scan_down([&](std::size_t i) { return b[i] > a[i]; });
        if (!w.a3) fail(ErrorKind::WitnessNotFound, "no a3 with Q_k > Q_j on the grid");
        const double target = qk.profile->zero(0) / qk.r_k;
        if (target > g.r_max) fail(ErrorKind::WitnessNotFound, "r_0/r_k lies beyond the grid");
        const std::size_t c = g.index_of(target);
        for (std::size_t d = 0; d < g.n && !w.a4; ++d) {
            for (std::size_t i : {c + d, c >= d ? c - d : 0}) {
                if (i >= 1 && i < g.n && -b[i] > -a[i]) {
                    w.a4 = g.r(i);
                    break;
                }
            }
        }
        if (!w.a4) fail(ErrorKind::WitnessNotFound, "no a4 with -Q_k > -Q_j on the grid");
    }
    return w;
}

FieldState time_reverse(const FieldState& s) {
    FieldState r = s;
    r.t = 0.0;
    for (double& v : r.psi_t) v = -v;
    return r;
}

FieldState unstable_direction(const BoundState& b) {
    FieldState s = FieldState::zeros(b.grid);
    for (std::size_t i = 0; i < b.grid.n; ++i) {
        s.psi[i] = b.psi[i];
        s.psi_t[i] = b.e * b.psi[i];
    }
    return s;
}

}  // namespace wavelab
