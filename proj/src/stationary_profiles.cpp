#include "wavelab/stationary_profiles.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include <boost/numeric/odeint.hpp>

#include "wavelab/errors.hpp"

namespace wavelab {

namespace odeint = boost::numeric::odeint;

namespace {

using State = std::array<double, 2>;

struct EmdenFowler {
    int m;
    void operator()(const State& y, State& dy, double r) const {
        dy[0] = y[1];
        dy[1] = -2.0 * y[1] / r - std::pow(y[0], 2 * m + 1);
    }
};

double second_derivative(int m, double r, double z, double dz) { return -2.0 * dz / r - std::pow(z, 2 * m + 1); }

/// Re-integrate from (r0, y0) to r1 with the controlled stepper.
State advance(const EmdenFowler& sys, State y, double r0, double r1, double tol) {
    auto stepper = odeint::make_controlled(tol * 1e-2, tol, odeint::runge_kutta_dopri5<State>());
    odeint::integrate_adaptive(stepper, sys, y, r0, r1, (r1 - r0) / 16.0);
    return y;
}

}  // namespace

SingularProfile integrate_singular_profile(int m, double r_start, double r_stop, double tol, std::size_t min_zeros) {
    if (m < 3) fail(ErrorKind::InvalidArgument, "m must be an integer >= 3");
    if (r_start < 100.0) fail(ErrorKind::InvalidArgument, "r_start must be >= 100");
    if (!(r_stop > 0.0 && r_stop < 1.0)) fail(ErrorKind::InvalidArgument, "r_stop must lie in (0, 1)");
    if (!(tol > 0.0)) fail(ErrorKind::InvalidArgument, "tol must be positive");

    SingularProfile p;
    p.m = m;
    p.r_start = r_start;
    p.r_stop = r_stop;
    p.tol = tol;

    const EmdenFowler sys{m};
    State y{1.0 / r_start, -1.0 / (r_start * r_start)};
    auto stepper = odeint::make_dense_output(tol * 1e-2, tol, odeint::runge_kutta_dopri5<State>());
    stepper.initialize(y, r_start, -1e-2);

    std::vector<ProfileSample> rev;
    rev.push_back({r_start, y[0], y[1]});
    std::vector<double> zeros;
    const double zero_tol = 1e-10;

    while (stepper.current_time() > r_stop) {
        const double r_prev = stepper.current_time();
        const State y_prev = stepper.current_state();
        if (r_prev + stepper.current_time_step() < r_stop) stepper.initialize(y_prev, r_prev, r_stop - r_prev);
        try {
            stepper.do_step(sys);
        } catch (const std::exception& ex) {
            fail(ErrorKind::NonConvergence, std::string("profile stepper failed: ") + ex.what());
        }
        const double r_now = stepper.current_time();
        if (std::abs(r_now - r_prev) < 1e-15 * r_prev)
            fail(ErrorKind::NonConvergence, "profile step size collapsed near r = " + std::to_string(r_now));
        const State y_now = stepper.current_state();

        if ((y_prev[0] > 0.0) != (y_now[0] > 0.0)) {
            // Bisection: re-integrate from the last accepted point.
            double hi = r_prev, lo = r_now;
            const double want = std::min(zero_tol, 1e-12 * r_now);
            while (hi - lo > want) {
                const double mid = 0.5 * (hi + lo);
                const State ym = advance(sys, y_prev, r_prev, mid, tol);
                if ((ym[0] > 0.0) == (y_prev[0] > 0.0)) hi = mid; else lo = mid;
            }
            zeros.push_back(0.5 * (hi + lo));
        }
        rev.push_back({r_now, y_now[0], y_now[1]});
    }

    if (zeros.size() < min_zeros)
        fail(ErrorKind::InsufficientZeros, std::to_string(zeros.size()) + " zeros above r_stop, " +
                                               std::to_string(min_zeros) + " requested");
    p.samples.assign(rev.rbegin(), rev.rend());
    p.zeros = std::move(zeros);
    return p;
}

double SingularProfile::zero(int k) const {
    if (k < 0 || static_cast<std::size_t>(k) >= zeros.size())
        fail(ErrorKind::InsufficientZeros, "profile has no zero r_" + std::to_string(k));
    return zeros[static_cast<std::size_t>(k)];
}

void SingularProfile::eval(double r, double& zv, double& dzv) const {
    if (r < r_lo() || r > r_hi())
        fail(ErrorKind::OutOfRange, "profile evaluated at r = " + std::to_string(r) + " outside sampled range");
    auto it = std::upper_bound(samples.begin(), samples.end(), r,
                               [](double x, const ProfileSample& s) { return x < s.r; });
    if (it == samples.end()) --it;
    if (it == samples.begin()) ++it;
    const ProfileSample& a = *(it - 1);
    const ProfileSample& b = *it;
    const double H = b.r - a.r;
    const double t = (r - a.r) / H;
    const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
    const double a0 = second_derivative(m, a.r, a.z, a.dz) * H * H;
    const double a1 = second_derivative(m, b.r, b.z, b.dz) * H * H;
    const double m0 = a.dz * H, m1 = b.dz * H;

    const double h00 = 1 - 10 * t3 + 15 * t4 - 6 * t5;
    const double h10 = t - 6 * t3 + 8 * t4 - 3 * t5;
    const double h20 = 0.5 * (t2 - 3 * t3 + 3 * t4 - t5);
    const double h21 = 0.5 * (t3 - 2 * t4 + t5);
    const double h11 = -4 * t3 + 7 * t4 - 3 * t5;
    const double h01 = 10 * t3 - 15 * t4 + 6 * t5;
    zv = h00 * a.z + h10 * m0 + h20 * a0 + h21 * a1 + h11 * m1 + h01 * b.z;

    const double d00 = -30 * t2 + 60 * t3 - 30 * t4;
    const double d10 = 1 - 18 * t2 + 32 * t3 - 15 * t4;
    const double d20 = 0.5 * (2 * t - 9 * t2 + 12 * t3 - 5 * t4);
    const double d21 = 0.5 * (3 * t2 - 8 * t3 + 5 * t4);
    const double d11 = -12 * t2 + 28 * t3 - 15 * t4;
    dzv = (d00 * a.z + d10 * m0 + d20 * a0 + d21 * a1 + d11 * m1 - d00 * b.z) / H;
}

double SingularProfile::z(double r) const {
    double a, b;
    eval(r, a, b);
    return a;
}

double SingularProfile::dz(double r) const {
    double a, b;
    eval(r, a, b);
    return b;
}

double SingularProfile::ddz(double r) const {
    double a, b;
    eval(r, a, b);
    return second_derivative(m, r, a, b);
}

// ---------------------------------------------------------------------------------------------

StationaryState build_stationary(int k, std::shared_ptr<const SingularProfile> profile, const RadialGrid& grid) {
    if (!profile) fail(ErrorKind::InvalidArgument, "null profile");
    if (k < 0) fail(ErrorKind::InvalidArgument, "k must be >= 0");
    if (static_cast<std::size_t>(k) >= profile->zeros.size())
        fail(ErrorKind::InsufficientZeros, "profile has only " + std::to_string(profile->zeros.size()) + " zeros");
    const double rk = profile->zeros[static_cast<std::size_t>(k)];
    if (grid.r_max * rk > profile->r_hi())
        fail(ErrorKind::OutOfRange, "grid r_max * r_k exceeds the sampled profile range");

    StationaryState s;
    s.k = k;
    s.m = profile->m;
    s.grid = grid;
    s.r_k = rk;
    s.profile = profile;
    const double m = profile->m;
    s.ell_k = std::pow(rk, 1.0 / m - 1.0);
    const double amp = std::pow(rk, 1.0 / m);
    s.q.resize(grid.n);
    s.q_prime.resize(grid.n);
    s.lambda_q.resize(grid.n);
    for (std::size_t i = 0; i < grid.n; ++i) {
        const double r = grid.r(i);
        double z, dz;
        profile->eval(std::min(rk * r, profile->r_hi()), z, dz);
        s.q[i] = amp * z;
        s.q_prime[i] = amp * rk * dz;
    }
    s.q[0] = 0.0;  // r_k is a zero of Z
    for (std::size_t i = 0; i < grid.n; ++i) s.lambda_q[i] = grid.r(i) * s.q_prime[i] + s.q[i] / m;
    return s;
}

StationaryState zero_state(const RadialGrid& grid, int m) {
    StationaryState s;
    s.k = -1;
    s.m = m;
    s.grid = grid;
    s.q.assign(grid.n, 0.0);
    s.q_prime.assign(grid.n, 0.0);
    s.lambda_q.assign(grid.n, 0.0);
    return s;
}

double StationaryState::value(double r) const {
    if (!profile) return 0.0;
    if (r <= 1.0) return 0.0;
    return std::pow(r_k, 1.0 / m) * profile->z(r_k * r);
}

double StationaryState::derivative(double r) const {
    if (!profile) return 0.0;
    return std::pow(r_k, 1.0 / m) * r_k * profile->dz(r_k * r);
}

std::vector<double> StationaryState::potential() const {
    std::vector<double> v(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) v[i] = (2 * m + 1) * std::pow(q[i], 2 * m);
    return v;
}

std::vector<double> StationaryState::potential_on(const RadialGrid& g) const {
    std::vector<double> v(g.n, 0.0);
    if (!profile) return v;
    for (std::size_t i = 0; i < g.n; ++i) v[i] = (2 * m + 1) * std::pow(value(g.r(i)), 2 * m);
    return v;
}

std::vector<double> StationaryState::nodal_radii() const {
    std::vector<double> g;
    if (!profile) return g;
    for (int i = 0; i <= k; ++i) g.push_back(profile->zero(k - i) / r_k);
    return g;
}

double stationary_residual(const StationaryState& s) {
    const double h = s.grid.spacing();
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < s.q.size(); ++i) {
        const double r = s.grid.r(i);
        const double d2 = (s.q[i + 1] - 2.0 * s.q[i] + s.q[i - 1]) / (h * h);
        const double d1 = (s.q[i + 1] - s.q[i - 1]) / (2.0 * h);
        worst = std::max(worst, std::abs(d2 + 2.0 / r * d1 + std::pow(s.q[i], 2 * s.m + 1)));
    }
    return worst;
}

namespace {

template <class F>
void walk_sign_changes(std::span<const double> v, const RadialGrid& g, double a, double b, double atol, F&& on_change) {
    if (atol < 0.0) {
        double mx = 0.0;
        for (double x : v) mx = std::max(mx, std::abs(x));
        atol = 1e-12 * mx;
    }
    int last_sign = 0;
    std::size_t last_i = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double r = g.r(i);
        if (r <= a || r >= b) continue;
        if (std::abs(v[i]) < atol || v[i] == 0.0) continue;
        const int s = v[i] > 0.0 ? 1 : -1;
        if (last_sign != 0 && s != last_sign) on_change(last_i, i);
        last_sign = s;
        last_i = i;
    }
}

}  // namespace

int count_sign_changes(std::span<const double> v, const RadialGrid& g, double a, double b, double atol) {
    int n = 0;
    walk_sign_changes(v, g, a, b, atol, [&](std::size_t, std::size_t) { ++n; });
    return n;
}

std::vector<double> sign_change_locations(std::span<const double> v, const RadialGrid& g, double a, double b,
                                          double atol) {
    std::vector<double> out;
    walk_sign_changes(v, g, a, b, atol, [&](std::size_t i, std::size_t j) {
        const double ri = g.r(i), rj = g.r(j);
        out.push_back(ri + (rj - ri) * v[i] / (v[i] - v[j]));
    });
    return out;
}

RadialGrid scaled_grid(const SingularProfile& profile, int k, double base_r_max, double h_max) {
    const double r_max = base_r_max * profile.zero(0) / profile.zero(k);
    std::size_t cells = 2;
    while ((r_max - 1.0) / static_cast<double>(cells) > h_max * (1.0 + 1e-12)) cells *= 2;
    return RadialGrid::make(r_max, cells + 1);
}

RadialGrid pair_grid(const SingularProfile& profile, int j, int k, double base_r_max, double h_max) {
    const RadialGrid g = scaled_grid(profile, k, base_r_max, h_max);
    const double limit = profile.r_hi() / profile.zero(j);
    return g.r_max * profile.zero(j) <= profile.r_hi() ? g : g.truncated(limit - 2.0 * g.spacing());
}

}  // namespace wavelab
