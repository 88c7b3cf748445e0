#include "wavelab/manifold_toolkit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wavelab/errors.hpp"

namespace wavelab {

namespace {

void require_same_grid(const RadialGrid& a, const RadialGrid& b) {
    if (!(a == b)) fail(ErrorKind::InvalidArgument, "states live on different grids");
}

/// sqrt(int (psi_r - psi/r)^2 + psi_t^2 dr)
double energy_norm_psi(std::span<const double> psi, std::span<const double> psi_t, const RadialGrid& g) {
    const double h = g.spacing();
    const std::size_t n = g.n;
    std::vector<double> dens(n);
    for (std::size_t i = 0; i < n; ++i) {
        double d;
        if (i == 0) d = (-3.0 * psi[0] + 4.0 * psi[1] - psi[2]) / (2.0 * h);
        else if (i == n - 1) d = (3.0 * psi[i] - 4.0 * psi[i - 1] + psi[i - 2]) / (2.0 * h);
        else d = (psi[i + 1] - psi[i - 1]) / (2.0 * h);
        const double ur = d - psi[i] / g.r(i);
        dens[i] = ur * ur + psi_t[i] * psi_t[i];
    }
    return std::sqrt(trapz(dens, h));
}

/// Sup over stored levels of the energy norm, velocities by centered differences in time.
double sup_level_norm(const std::vector<double>& a, const std::vector<double>* b, std::size_t levels,
                      const RadialGrid& g, double dt) {
    const std::size_t n = g.n;
    std::vector<double> x(n), v(n);
    auto level = [&](std::size_t l, std::size_t i) { return a[l * n + i] - (b ? (*b)[l * n + i] : 0.0); };
    double sup = 0.0;
    for (std::size_t l = 0; l < levels; ++l) {
        const std::size_t lo = l == 0 ? 0 : l - 1;
        const std::size_t hi = l + 1 < levels ? l + 1 : l;
        const double span = static_cast<double>(hi - lo) * dt;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = level(l, i);
            v[i] = (level(hi, i) - level(lo, i)) / span;
        }
        sup = std::max(sup, energy_norm_psi(x, v, g));
    }
    return sup;
}

std::vector<double> potential_for(const StationaryState& q, const RadialGrid& g) {
    return q.grid == g ? q.potential() : q.potential_on(g);
}

std::vector<double> q_on(const StationaryState& q, const RadialGrid& g) {
    if (q.grid == g) return q.q;
    std::vector<double> out(g.n);
    for (std::size_t i = 0; i < g.n; ++i) out[i] = q.value(g.r(i));
    return out;
}

/// Removes the selected mode components from two consecutive levels of a leapfrog solution.
void drop_modes(std::vector<double>& prev, std::vector<double>& cur, const ModeBasis& modes, double dt,
                const LinearFlowOptions& opt) {
    const double h = modes.grid.spacing();
    for (std::size_t j = 0; j < modes.states.size(); ++j) {
        const bool dp = j < opt.drop_plus.size() && opt.drop_plus[j];
        const bool dm = j < opt.drop_minus.size() && opt.drop_minus[j];
        if (!dp && !dm) continue;
        const auto& b = modes.states[j];
        const double pn = inner(cur, b.psi, h);
        const double pp = inner(prev, b.psi, h);
        const double ep = std::exp(b.e * dt), em = std::exp(-b.e * dt);
        const double x = (pn * ep - pp) / (ep - em);  // growing part at the current level
        const double y = pn - x;
        const double rc = (dp ? x : 0.0) + (dm ? y : 0.0);
        const double rp = (dp ? x * em : 0.0) + (dm ? y * ep : 0.0);
        for (std::size_t i = 0; i < cur.size(); ++i) {
            cur[i] -= rc * b.psi[i];
            prev[i] -= rp * b.psi[i];
        }
    }
}

double ipow(double x, int p) {
    double r = 1.0;
    for (int k = 0; k < p; ++k) r *= x;
    return r;
}

}  // namespace

double inner(const std::vector<double>& psi_f, const std::vector<double>& psi_g, double h) {
    const std::size_t n = psi_f.size();
    double s = 0.5 * (psi_f[0] * psi_g[0] + psi_f[n - 1] * psi_g[n - 1]);
    for (std::size_t i = 1; i + 1 < n; ++i) s += psi_f[i] * psi_g[i];
    return s * h;
}

double omega(const FieldState& f, const FieldState& g) {
    require_same_grid(f.grid, g.grid);
    const double h = f.grid.spacing();
    return inner(f.psi, g.psi_t, h) - inner(f.psi_t, g.psi, h);
}

FieldState mode_state(const BoundState& b, int sign) {
    const double c = 1.0 / std::sqrt(2.0 * b.e);
    FieldState s = FieldState::zeros(b.grid);
    for (std::size_t i = 0; i < b.grid.n; ++i) {
        s.psi[i] = c * b.psi[i];
        s.psi_t[i] = sign * c * b.e * b.psi[i];
    }
    return s;
}

SymplecticDecomposition decompose(const FieldState& h, const ModeBasis& modes) {
    require_same_grid(h.grid, modes.grid);
    SymplecticDecomposition d;
    d.center = h;
    for (const auto& b : modes.states) {
        const FieldState yp = mode_state(b, 1), ym = mode_state(b, -1);
        const double ap = -omega(h, ym);
        const double am = omega(h, yp);
        d.alpha_plus.push_back(ap);
        d.alpha_minus.push_back(am);
        d.center.axpy(-ap, yp).axpy(-am, ym);
    }
    return d;
}

FieldState reconstruct(const SymplecticDecomposition& d, const ModeBasis& modes) {
    FieldState h = d.center;
    for (std::size_t j = 0; j < modes.states.size(); ++j) {
        h.axpy(d.alpha_plus[j], mode_state(modes.states[j], 1));
        h.axpy(d.alpha_minus[j], mode_state(modes.states[j], -1));
    }
    return h;
}

void project_center_inplace(std::vector<double>& psi, const ModeBasis& modes) {
    const double h = modes.grid.spacing();
    for (const auto& b : modes.states) {
        const double p = inner(psi, b.psi, h);
        for (std::size_t i = 0; i < psi.size(); ++i) psi[i] -= p * b.psi[i];
    }
}

FieldState project_center(const FieldState& h, const ModeBasis& modes) {
    require_same_grid(h.grid, modes.grid);
    FieldState c = h;
    project_center_inplace(c.psi, modes);
    project_center_inplace(c.psi_t, modes);
    return c;
}

LinearFlowOptions center_flow_options(const ModeBasis& modes) {
    LinearFlowOptions o;
    o.drop_plus.assign(modes.states.size(), true);
    o.drop_minus.assign(modes.states.size(), true);
    return o;
}

LinearFlowOptions single_mode_options(const ModeBasis& modes, int j, int sign) {
    LinearFlowOptions o;
    o.drop_plus.assign(modes.states.size(), true);
    o.drop_minus.assign(modes.states.size(), true);
    if (sign > 0) o.drop_plus[static_cast<std::size_t>(j)] = false;
    else o.drop_minus[static_cast<std::size_t>(j)] = false;
    return o;
}

LinearFlowResult linear_flow_SQ(const FieldState& v0, double t, const ModeBasis& modes, const StationaryState& q,
                                const LinearFlowOptions& opt) {
    const RadialGrid& g = v0.grid;
    require_same_grid(g, modes.grid);
    const double dt = g.spacing();
    LeapfrogStepper st(g, dt, EvolveMode::LinearPotential, q.m, potential_for(q, g), opt.boundary);
    const bool any_drop = std::any_of(opt.drop_plus.begin(), opt.drop_plus.end(), [](bool b) { return b; }) ||
                          std::any_of(opt.drop_minus.begin(), opt.drop_minus.end(), [](bool b) { return b; });
    LinearFlowResult res;
    const std::size_t total = static_cast<std::size_t>(std::llround(t / dt));
    const std::size_t every = static_cast<std::size_t>(std::max(1, opt.record_every));
    auto record = [&](FieldState&& f) {
        const auto d = decompose(f, modes);
        res.times.push_back(f.t);
        res.alpha_plus.push_back(d.alpha_plus);
        res.alpha_minus.push_back(d.alpha_minus);
        if (opt.store_frames) res.frames.push_back(std::move(f));
    };
    FieldState init = v0;
    init.t = 0.0;
    if (any_drop) {
        // remove dropped components from the datum itself
        auto d = decompose(init, modes);
        for (std::size_t j = 0; j < modes.states.size(); ++j) {
            if (j < opt.drop_plus.size() && opt.drop_plus[j]) d.alpha_plus[j] = 0.0;
            if (j < opt.drop_minus.size() && opt.drop_minus[j]) d.alpha_minus[j] = 0.0;
        }
        init = reconstruct(d, modes);
    }
    st.start(init);
    record(FieldState(init));
    if (total == 0) {
        res.final_state = init;
        return res;
    }
    for (std::size_t n = 1; n < total; ++n) {
        if (any_drop && n % static_cast<std::size_t>(std::max(1, opt.reproject_every)) == 0)
            drop_modes(st.previous_mut(), st.current_mut(), modes, dt, opt);
        const std::vector<double> older = st.previous();
        const std::vector<double> level = st.current();
        st.step();
        if (n % every == 0) {
            FieldState f;
            f.t = static_cast<double>(n) * dt;
            f.grid = g;
            f.psi = level;
            f.psi_t.resize(g.n);
            for (std::size_t i = 0; i < g.n; ++i) f.psi_t[i] = (st.current()[i] - older[i]) / (2.0 * dt);
            record(std::move(f));
        }
    }
    FieldState fin;
    fin.t = static_cast<double>(total) * dt;
    fin.grid = g;
    fin.psi = st.current();
    fin.psi_t.resize(g.n);
    for (std::size_t i = 0; i < g.n; ++i) fin.psi_t[i] = (st.current()[i] - st.previous()[i]) / dt;
    res.final_state = std::move(fin);
    return res;
}

double fitted_rate(const std::vector<double>& times, const std::vector<double>& values) {
    double st = 0, sy = 0, stt = 0, sty = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (values[i] == 0.0) continue;
        const double y = std::log(std::abs(values[i]));
        st += times[i];
        sy += y;
        stt += times[i] * times[i];
        sty += times[i] * y;
        ++n;
    }
    if (n < 2) fail(ErrorKind::InvalidArgument, "rate fit needs two nonzero samples");
    const double dn = static_cast<double>(n);
    return (dn * sty - st * sy) / (dn * stt - st * st);
}

// --- S-norm --------------------------------------------------------------------------------------

SNormAccumulator::SNormAccumulator(const RadialGrid& g, int m) : g_(g), m_(m), buf_(g.n) {}

void SNormAccumulator::add(const std::vector<double>& psi, double weight) {
    const double h = g_.spacing();
    const int p = 2 * m_ + 1;
    const int q = 2 * p;
    // ||u||_{L^q}^p, ||u||_{L^12}^4, ||<x>^{-3} u||_{L^2}^2 with measure r^2 dr
    for (std::size_t i = 0; i < g_.n; ++i) {
        const double r = g_.r(i);
        buf_[i] = ipow(std::abs(psi[i] / r), q) * r * r;
    }
    const double lq = std::pow(trapz(buf_, h), 1.0 / q);
    for (std::size_t i = 0; i < g_.n; ++i) {
        const double r = g_.r(i);
        buf_[i] = ipow(std::abs(psi[i] / r), 12) * r * r;
    }
    const double l12 = std::pow(trapz(buf_, h), 1.0 / 12.0);
    for (std::size_t i = 0; i < g_.n; ++i) {
        const double r = g_.r(i);
        const double w = 1.0 + r * r;
        buf_[i] = psi[i] * psi[i] / (w * w * w);
    }
    const double l2 = trapz(buf_, h);
    a7_ += weight * ipow(lq, p);
    a4_ += weight * ipow(l12, 4);
    aw_ += weight * l2;
}

SNorm SNormAccumulator::result() const {
    SNorm s;
    s.l7_l14 = std::pow(a7_, 1.0 / (2 * m_ + 1));
    s.l4_l12 = std::pow(a4_, 0.25);
    s.weighted_l2 = std::sqrt(aw_);
    return s;
}

TripleNorm triple_norm(const FieldState& v0, const ModeBasis& modes, const StationaryState& q, double horizon,
                       int reproject_every) {
    const RadialGrid& g = v0.grid;
    require_same_grid(g, modes.grid);
    TripleNorm tn;
    const auto d = decompose(v0, modes);
    for (std::size_t j = 0; j < modes.states.size(); ++j) tn.stable_part = std::max(tn.stable_part, std::abs(d.alpha_minus[j]));
    const double dt = g.spacing();
    const std::size_t total = static_cast<std::size_t>(std::llround(horizon / dt));
    LinearFlowOptions opt = center_flow_options(modes);
    LeapfrogStepper st(g, dt, EvolveMode::LinearPotential, q.m, potential_for(q, g), OuterBoundary::Sommerfeld);
    const FieldState c = project_center(v0, modes);
    SNormAccumulator acc(g, q.m);
    st.start(c);
    acc.add(c.psi, 0.5 * dt);
    for (std::size_t n = 1; n <= total; ++n) {
        acc.add(st.current(), n == total ? 0.5 * dt : dt);
        if (n == total) break;
        if (n % static_cast<std::size_t>(std::max(1, reproject_every)) == 0)
            drop_modes(st.previous_mut(), st.current_mut(), modes, dt, opt);
        st.step();
    }
    tn.s_norm = acc.result();
    return tn;
}

// --- Picard ---------------------------------------------------------------------------------------

GraphPoint picard_solve(const FieldState& v0, const PicardConfig& cfg, const ModeBasis& modes,
                        const StationaryState& q) {
    const RadialGrid& g = v0.grid;
    require_same_grid(g, modes.grid);
    const std::size_t n = g.n;
    const double dt = g.spacing();
    const std::size_t N = static_cast<std::size_t>(std::llround(cfg.horizon / dt));
    const std::size_t K = modes.states.size();
    const int m = q.m;
    const int p = 2 * m + 1;

    GraphPoint gp;
    gp.v0 = v0;
    gp.theta.assign(K, 0.0);
    const auto d0 = decompose(v0, modes);
    double v0n = energy_norm_psi(v0.psi, v0.psi_t, g);
    for (double a : d0.alpha_plus)
        if (std::abs(a) > 1e-8 * std::max(v0n, 1e-300)) fail(ErrorKind::InvalidArgument, "v0 has an unstable component");
    gp.triple_norm = triple_norm(v0, modes, q, cfg.horizon, cfg.reproject_every).value();
    if (gp.triple_norm > cfg.delta * (1.0 + 1e-9))
        fail(ErrorKind::InvalidArgument, "triple norm of v0 exceeds delta");
    if (v0n == 0.0) return gp;

    const std::vector<double> V = potential_for(q, g);
    const std::vector<double> Q = q_on(q, g);
    std::vector<double> c(K), e(K);
    for (std::size_t j = 0; j < K; ++j) {
        e[j] = modes.states[j].e;
        c[j] = 1.0 / std::sqrt(2.0 * e[j]);
    }
    FieldState center0 = d0.center;
    center0.t = 0.0;

    std::vector<double> old((N + 1) * n, 0.0), cur((N + 1) * n, 0.0), first;
    std::vector<double> F((N + 1) * K, 0.0);
    std::vector<double> s(n);
    std::vector<std::vector<double>> ap(K, std::vector<double>(N + 1)), am(K, std::vector<double>(N + 1));
    LinearFlowOptions dropall = center_flow_options(modes);

    // r R_Q(h) for h = psi / r, and the mode projections F_j
    auto nonlinear_source = [&](std::size_t level, std::span<double> out) {
        const double* hp = old.data() + level * n;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = g.r(i);
            const double u = hp[i] / r;
            const double qq = Q[i];
            // (q+u)^p - q^p - p q^{p-1} u, summed by binomial terms to avoid cancellation
            double term = 0.0, binom = 1.0;
            for (int k = 1; k <= p; ++k) {
                binom = binom * static_cast<double>(p - k + 1) / static_cast<double>(k);
                if (k >= 2) term += binom * ipow(qq, p - k) * ipow(u, k);
            }
            s[i] = r * term;
        }
        for (std::size_t j = 0; j < K; ++j) {
            const double fj = inner(s, modes.states[j].psi, dt);
            F[level * K + j] = fj;
            for (std::size_t i = 0; i < n; ++i) s[i] -= fj * modes.states[j].psi[i];
        }
        for (std::size_t i = 0; i < n; ++i) out[i] += s[i];
    };

    double prev_dist = 0.0;
    double sup_h = 0.0;
    bool converged = false;
    for (int iter = 1; iter <= cfg.max_iter; ++iter) {
        LeapfrogStepper st(g, dt, EvolveMode::LinearPotential, m, V, OuterBoundary::Sommerfeld);
        std::vector<double> extra(n, 0.0);
        auto src_at = [&](std::size_t level) -> std::span<const double> {
            std::fill(extra.begin(), extra.end(), 0.0);
            nonlinear_source(level, extra);
            return extra;
        };
        st.start(center0, src_at(0));
        std::copy(center0.psi.begin(), center0.psi.end(), cur.begin());
        std::copy(st.current().begin(), st.current().end(), cur.begin() + static_cast<std::ptrdiff_t>(n));
        for (std::size_t l = 1; l < N; ++l) {
            if (l % static_cast<std::size_t>(std::max(1, cfg.reproject_every)) == 0)
                drop_modes(st.previous_mut(), st.current_mut(), modes, dt, dropall);
            st.step(src_at(l));
            std::copy(st.current().begin(), st.current().end(), cur.begin() + static_cast<std::ptrdiff_t>((l + 1) * n));
        }
        {
            std::vector<double> tmp(n, 0.0);
            nonlinear_source(N, tmp);
        }
        // scalar Duhamel formulas, trapezoid in time
        for (std::size_t j = 0; j < K; ++j) {
            const double E = std::exp(-e[j] * dt);
            auto f = [&](std::size_t l) { return F[l * K + j]; };
            ap[j][N] = 0.0;
            for (std::size_t l = N; l-- > 0;) ap[j][l] = E * ap[j][l + 1] - c[j] * 0.5 * dt * (f(l) + E * f(l + 1));
            am[j][0] = d0.alpha_minus[j];
            for (std::size_t l = 0; l < N; ++l) am[j][l + 1] = E * am[j][l] - c[j] * 0.5 * dt * (E * f(l) + f(l + 1));
        }
        for (std::size_t l = 0; l <= N; ++l) {
            double* row = cur.data() + l * n;
            for (std::size_t j = 0; j < K; ++j) {
                const double w = c[j] * (ap[j][l] + am[j][l]);
                const auto& y = modes.states[j].psi;
                for (std::size_t i = 0; i < n; ++i) row[i] += w * y[i];
            }
        }
        const double dist = sup_level_norm(cur, &old, N + 1, g, dt);
        sup_h = sup_level_norm(cur, nullptr, N + 1, g, dt);
        gp.iterate_distances.push_back(dist);
        gp.iterations = iter;
        if (iter == 1) first = cur;
        if (iter >= 2 && prev_dist > 0.0) gp.contraction_ratio = std::max(gp.contraction_ratio, dist / prev_dist);
        std::swap(old, cur);
        if (dist <= cfg.tol * sup_h || sup_h == 0.0) {
            converged = true;
            break;
        }
        if (iter >= 2 && dist > cfg.max_ratio * prev_dist)
            fail(ErrorKind::NoContraction, "iterate distance ratio " + std::to_string(dist / prev_dist));
        prev_dist = dist;
    }
    if (!converged) fail(ErrorKind::NoContraction, "no convergence within max_iter");
    // the map has a fixed point: old holds h, F and alpha were computed from the previous iterate
    for (std::size_t j = 0; j < K; ++j) gp.theta[j] = ap[j][0];
    double t2 = 0.0;
    for (double a : gp.theta) t2 += a * a;
    gp.theta_norm = std::sqrt(t2);
    gp.linear_deviation = sup_level_norm(old, &first, N + 1, g, dt);

    // dropped tail: sup of |c F| over the last quarter of the window as the proxy for s > T
    double tail = 0.0;
    for (std::size_t j = 0; j < K; ++j) {
        double supf = 0.0;
        for (std::size_t l = 3 * N / 4; l <= N; ++l) supf = std::max(supf, std::abs(c[j] * F[l * K + j]));
        tail = std::max(tail, std::exp(-e[j] * cfg.horizon) * supf / e[j]);
    }
    gp.tail_bound = tail;
    if (gp.theta_norm > 0.0 && tail > cfg.tail_tol * gp.theta_norm)
        fail(ErrorKind::TailBoundExceeded, "dropped tail " + std::to_string(tail) + " exceeds tolerance");

    const std::size_t stride = std::max<std::size_t>(1, N / 200);
    for (std::size_t l = 0; l <= N; l += stride) {
        gp.times.push_back(static_cast<double>(l) * dt);
        std::vector<double> a(K), b(K);
        for (std::size_t j = 0; j < K; ++j) {
            a[j] = ap[j][l];
            b[j] = am[j][l];
        }
        gp.alpha_plus.push_back(std::move(a));
        gp.alpha_minus.push_back(std::move(b));
        const std::size_t lo = l == 0 ? 0 : l - 1, hi = std::min(N, l + 1);
        std::vector<double> x(old.begin() + static_cast<std::ptrdiff_t>(l * n),
                              old.begin() + static_cast<std::ptrdiff_t>((l + 1) * n));
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i)
            v[i] = (old[hi * n + i] - old[lo * n + i]) / (static_cast<double>(hi - lo) * dt);
        gp.h_norm.push_back(energy_norm_psi(x, v, g));
    }
    return gp;
}

std::vector<double> default_deltas() {
    return {std::pow(10.0, -1.5), 1e-2, std::pow(10.0, -2.5), 1e-3};
}

ScalingResult graph_scaling_experiment(const FieldState& direction, const std::vector<double>& deltas,
                                       const ModeBasis& modes, const StationaryState& q, PicardConfig config) {
    for (std::size_t i = 1; i < deltas.size(); ++i)
        if (!(deltas[i] < deltas[i - 1])) fail(ErrorKind::InvalidArgument, "deltas must decrease");
    ScalingResult res;
    res.deltas = deltas;
    if (deltas.empty()) return res;
    const double tn = triple_norm(direction, modes, q, config.horizon, config.reproject_every).value();
    if (!(tn > 0.0)) fail(ErrorKind::InvalidArgument, "direction has zero triple norm");
    FieldState unit = FieldState::zeros(direction.grid);
    unit.axpy(1.0 / tn, direction);
    std::vector<double> lx, ly;
    for (double d : deltas) {
        FieldState v0 = FieldState::zeros(direction.grid);
        v0.axpy(d, unit);
        config.delta = d;
        auto gp = picard_solve(v0, config, modes, q);
        lx.push_back(std::log(d));
        ly.push_back(std::log(gp.theta_norm));
        res.points.push_back(std::move(gp));
    }
    if (lx.size() >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            sx += lx[i];
            sy += ly[i];
            sxx += lx[i] * lx[i];
            sxy += lx[i] * ly[i];
        }
        const double dn = static_cast<double>(lx.size());
        res.slope = (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
        res.intercept = (sy - res.slope * sx) / dn;
    }
    return res;
}

FieldState bump(const RadialGrid& g, double centre, double w, double amplitude) {
    FieldState s = FieldState::zeros(g);
    for (std::size_t i = 1; i < g.n; ++i) {
        const double r = g.r(i);
        const double x = (r - centre) / w;
        if (std::abs(x) < 1.0) s.psi[i] = r * amplitude * ipow(1.0 - x * x, 4);
    }
    return s;
}

// --- channels of energy -----------------------------------------------------------------------

std::vector<ChannelSample> channel_samples(const FieldState& h0, const ModeBasis& modes, const StationaryState& q,
                                           double r0, double span, const std::vector<double>& times) {
    const RadialGrid& g = h0.grid;
    require_same_grid(g, modes.grid);
    const double tmax = times.empty() ? 0.0 : *std::max_element(times.begin(), times.end());
    if (r0 + span + tmax > g.r_max) fail(ErrorKind::InvalidArgument, "R + t beyond r_max");
    const double dt = g.spacing();
    const double norm2 = energy_norm_sq(h0);
    const double e0 = modes.states.front().e, ek = modes.states.back().e;
    std::vector<ChannelSample> out;
    LeapfrogStepper st(g, dt, EvolveMode::LinearPotential, q.m, potential_for(q, g), OuterBoundary::Causal);
    FieldState init = h0;
    init.t = 0.0;
    st.start(init);
    std::vector<std::size_t> want;
    for (double t : times) want.push_back(static_cast<std::size_t>(std::llround(t / dt)));
    const std::size_t last = want.empty() ? 0 : *std::max_element(want.begin(), want.end());
    auto emit = [&](const FieldState& f) {
        for (double R = r0; R <= r0 + span + 1e-9; R += 1.0) {
            ChannelSample cs;
            cs.R = R;
            cs.t = f.t;
            cs.exterior = exterior_energy(f, R + f.t);
            cs.lower = std::exp(-2.0 * e0 * R) * norm2;
            cs.upper = std::exp(-2.0 * ek * R) * norm2;
            out.push_back(cs);
        }
    };
    if (std::find(want.begin(), want.end(), 0) != want.end()) emit(init);
    for (std::size_t l = 1; l <= last; ++l) {
        const std::vector<double> older = st.previous();
        const std::vector<double> level = st.current();
        st.step();
        if (std::find(want.begin(), want.end(), l) != want.end()) {
            FieldState f;
            f.t = static_cast<double>(l) * dt;
            f.grid = g;
            f.psi = level;
            f.psi_t.resize(g.n);
            for (std::size_t i = 0; i < g.n; ++i) f.psi_t[i] = (st.current()[i] - older[i]) / (2.0 * dt);
            emit(f);
        }
    }
    return out;
}

double channel_constant(const std::vector<ChannelSample>& samples) {
    double c = 1.0;
    for (const auto& s : samples) {
        if (s.exterior <= 0.0) return std::numeric_limits<double>::infinity();
        c = std::max({c, s.lower / s.exterior, s.exterior / s.upper});
    }
    return c;
}

RunOutcome unstable_escape_probe(const StationaryState& base, const ModeBasis& modes, double epsilon,
                                 EvolveConfig config) {
    FieldState s = FieldState::stationary(base);
    FieldState dir = unstable_direction(modes.states.front());
    if (!(dir.grid == base.grid)) dir = dir.restricted(base.grid);
    s.axpy(epsilon, dir);
    const auto tr = evolve(s, config, EvolveMode::Nonlinear, nullptr, base.m);
    return classify(tr, {&base});
}

}  // namespace wavelab
