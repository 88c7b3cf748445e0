#include "wavelab/spectral_analysis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include <boost/numeric/odeint.hpp>

#include "wavelab/errors.hpp"

namespace wavelab {

namespace {

constexpr double kRenormAbove = 1e100;
constexpr double kRenormFactor = 1e-100;

/// Apply deferred renormalization factors after an outward sweep. A cut at index i rescaled
/// samples i and i+1; every sample below i belongs to the older segment and is scaled once more.
void settle_outward(std::vector<double>& v, std::vector<std::size_t>& cuts) {
    double factor = 1.0;
    for (std::size_t idx = v.size(); idx-- > 0;) {
        while (!cuts.empty() && idx < cuts.back()) {
            factor *= kRenormFactor;
            cuts.pop_back();
        }
        v[idx] *= factor;
    }
}

struct Numerov {
    const std::vector<double>& V;
    double mu;
    double h2;
    double w(std::size_t i) const { return 1.0 - h2 * (-mu - V[i]) / 12.0; }
    double c(std::size_t i) const { return 2.0 * (1.0 + 5.0 * h2 * (-mu - V[i]) / 12.0); }
};

struct OutwardResult {
    int nodes = 0;
    double last = 0.0;         ///< psi at the end index
    double before_last = 0.0;  ///< psi one cell earlier
};

/// Outward sweep from psi_0 = 0, psi_1 = h through index end (inclusive).
OutwardResult outward(const std::vector<double>& V, double mu, double h, std::size_t end, bool renorm,
                      std::vector<double>* store) {
    const Numerov nv{V, mu, h * h};
    OutwardResult res;
    std::vector<std::size_t> cuts;
    if (store) store->assign(end + 1, 0.0);
    double prev = 0.0, cur = h;
    if (store) (*store)[1] = cur;
    int last_sign = 1;
    for (std::size_t i = 1; i < end; ++i) {
        double next = (nv.c(i) * cur - nv.w(i - 1) * prev) / nv.w(i + 1);
        if (!std::isfinite(next)) fail(ErrorKind::Overflow, "shooting overflow");
        if (next != 0.0) {
            const int s = next > 0.0 ? 1 : -1;
            if (s != last_sign) ++res.nodes;
            last_sign = s;
        }
        prev = cur;
        cur = next;
        if (store) (*store)[i + 1] = cur;
        if (renorm && std::abs(cur) > kRenormAbove) {
            prev *= kRenormFactor;
            cur *= kRenormFactor;
            if (store) {
                (*store)[i] = prev;
                (*store)[i + 1] = cur;
                cuts.push_back(i);
            }
        }
    }
    res.last = cur;
    res.before_last = prev;
    if (store) settle_outward(*store, cuts);
    return res;
}

/// Inward sweep from a decaying seed at the last grid point down to index stop; fills store[stop..n-1].
void inward(const std::vector<double>& V, double mu, double h, std::size_t stop, std::vector<double>& store) {
    const std::size_t n = V.size();
    const Numerov nv{V, mu, h * h};
    const double e = std::sqrt(-mu);
    std::vector<std::size_t> cuts;  // descending
    store[n - 1] = 1.0;
    store[n - 2] = std::exp(e * h);
    for (std::size_t i = n - 2; i > stop; --i) {
        store[i - 1] = (nv.c(i) * store[i] - nv.w(i + 1) * store[i + 1]) / nv.w(i - 1);
        if (std::abs(store[i - 1]) > kRenormAbove) {
            store[i - 1] *= kRenormFactor;
            store[i] *= kRenormFactor;
            cuts.push_back(i);
        }
    }
    // samples above a cut belong to the older segment
    double factor = 1.0;
    for (std::size_t idx = stop; idx < n; ++idx) {
        while (!cuts.empty() && cuts.back() < idx) {
            factor *= kRenormFactor;
            cuts.pop_back();
        }
        store[idx] *= factor;
    }
}

double numerov_derivative(double pm1, double pp1, double fm1, double fp1, double h) {
    return ((1.0 - h * h * fp1 / 6.0) * pp1 - (1.0 - h * h * fm1 / 6.0) * pm1) / (2.0 * h);
}

std::size_t match_index_for(const RadialGrid& g, double r_match) {
    if (!(r_match > 1.0 && r_match <= g.r_max)) fail(ErrorKind::InvalidArgument, "r_match outside (1, r_max]");
    std::size_t m = g.index_of(r_match);
    return std::clamp<std::size_t>(m, 2, g.n - 2);
}

SturmShot shoot_with(const std::vector<double>& V, const RadialGrid& g, double mu, std::size_t m,
                     const SpectralOptions& opt) {
    const double h = g.spacing();
    SturmShot shot;
    shot.mu = mu;
    shot.match_index = m;
    OutwardResult res = outward(V, mu, h, m + 1, opt.renormalize, opt.store_samples ? &shot.psi_samples : nullptr);
    const Numerov nv{V, mu, h * h};
    const double psi_m = res.before_last;
    const double psi_mp1 = res.last;
    const double psi_mm1 = (nv.c(m) * psi_m - nv.w(m + 1) * psi_mp1) / nv.w(m - 1);
    // node count on (1, r_match]: drop a sign change between m and m+1
    int nodes = res.nodes;
    if (psi_m != 0.0 && psi_mp1 != 0.0 && ((psi_m > 0.0) != (psi_mp1 > 0.0))) --nodes;
    shot.node_count = nodes;
    const double scale = std::max(std::abs(psi_mm1), std::abs(psi_mp1));
    if (std::abs(psi_m) < 1e-10 * scale) fail(ErrorKind::MatchAtNode, "psi(r_match) vanishes");
    const double dpsi = numerov_derivative(psi_mm1, psi_mp1, -mu - V[m - 1], -mu - V[m + 1], h);
    shot.log_derivative_at_match = dpsi / psi_m;
    return shot;
}

int count_with(const std::vector<double>& V, const RadialGrid& g, double mu, std::size_t m, const SpectralOptions& opt) {
    SpectralOptions o = opt;
    o.store_samples = false;
    for (int attempt = 0; attempt < 4; ++attempt) {
        try {
            const SturmShot s = shoot_with(V, g, mu, m, o);
            const double F = s.log_derivative_at_match + std::sqrt(-mu);
            return s.node_count + (F < 0.0 ? 1 : 0);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::MatchAtNode) throw;
            m = m > 2 ? m - 1 : m + 1;  // shift r_match by one cell
        }
    }
    fail(ErrorKind::MatchAtNode, "could not place r_match away from a node");
}

/// Build the normalized eigenfunction for mu by gluing outward and inward Numerov sweeps at the
/// outermost classical turning point.
BoundState assemble_mode(const std::vector<double>& V, const RadialGrid& g, double mu, int j) {
    const std::size_t n = g.n;
    const double h = g.spacing();
    const double e = std::sqrt(-mu);
    std::size_t turn = 0;
    for (std::size_t i = n - 1; i-- > 1;) {
        if (V[i] >= e * e) {
            turn = i;
            break;
        }
    }
    if (turn == 0) turn = static_cast<std::size_t>(std::max_element(V.begin(), V.end()) - V.begin());
    const std::size_t glue = std::clamp<std::size_t>(turn, 2, n - 3);

    std::vector<double> out;
    outward(V, mu, h, glue, true, &out);
    std::vector<double> psi(n, 0.0);
    inward(V, mu, h, glue, psi);
    const double s = out[glue] / psi[glue];
    for (std::size_t i = glue; i < n; ++i) psi[i] *= s;
    for (std::size_t i = 0; i < glue; ++i) psi[i] = out[i];
    psi[0] = 0.0;

    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) sq[i] = psi[i] * psi[i];
    const double nrm = std::sqrt(trapz(sq, h));
    const double sign = psi[glue] >= 0.0 ? 1.0 : -1.0;
    BoundState b;
    b.j = j;
    b.e = e;
    b.grid = g;
    b.psi.resize(n);
    b.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        b.psi[i] = sign * psi[i] / nrm;
        b.y[i] = b.psi[i] / g.r(i);
    }
    for (std::size_t i = 0; i < n; ++i) sq[i] = b.psi[i] * b.psi[i];
    b.norm = trapz(sq, h);
    b.tail_sign = 1;
    return b;
}

}  // namespace

SturmShot shoot(double mu, const StationaryState& q, double r_match, const SpectralOptions& opt) {
    const std::vector<double> V = q.potential();
    return shoot_with(V, q.grid, mu, match_index_for(q.grid, r_match), opt);
}

int shooting_count(double mu, const StationaryState& q, const SpectralOptions& opt) {
    const std::vector<double> V = q.potential();
    const std::size_t m = match_index_for(q.grid, 1.0 + opt.r_match_fraction * (q.grid.r_max - 1.0));
    return count_with(V, q.grid, mu, m, opt);
}

ModeBasis find_negative_eigenvalues(const StationaryState& q, const SpectralOptions& opt) {
    const std::vector<double> V = q.potential();
    const RadialGrid& g = q.grid;
    ModeBasis basis;
    basis.k = q.k;
    basis.m = q.m;
    basis.grid = g;
    basis.c_bound = *std::max_element(V.begin(), V.end());
    const double r_match = opt.r_match_fraction * g.r_max;
    const std::size_t m = match_index_for(g, std::max(r_match, g.r(2)));

    // Decay lengths beyond the match point are not resolvable; they bound the scan from above.
    const double e_min = 2.0 / (g.r(m) - 1.0);
    const double mu_top = -e_min * e_min;
    const double mu_bot = -basis.c_bound;
    const int expected = q.k + 1;
    const int total = mu_top > mu_bot ? count_with(V, g, mu_top, m, opt) : 0;
    if (total > 0 && count_with(V, g, mu_bot, m, opt) != 0)
        fail(ErrorKind::CountMismatch, "eigenvalue below -C_k reported by shooting");
    if (total != expected)
        fail(ErrorKind::CountMismatch, "found " + std::to_string(total) + " negative eigenvalues, expected " +
                                           std::to_string(expected));

    for (int j = 0; j < total; ++j) {
        double lo = mu_bot, hi = mu_top;  // count(lo) <= j < count(hi)
        for (int it = 0; it < 400; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (count_with(V, g, mid, m, opt) > j) hi = mid; else lo = mid;
            if (hi - lo <= std::min(opt.eigen_tol, 1e-10 * std::abs(hi))) break;
        }
        basis.states.push_back(assemble_mode(V, g, 0.5 * (lo + hi), j));
    }
    return basis;
}

// ---------------------------------------------------------------------------------------------

namespace {

// Extended precision: the smallest eigenvalues sit ~1e-11 below a diagonal of size 2/h^2, so
// double rounding of the diagonal alone would shift them at the 1e-6 relative level.
using Real = long double;

int sturm_count(const std::vector<Real>& diag, Real off2, Real mu) {
    int neg = 0;
    Real d = 1.0L;
    for (std::size_t i = 0; i < diag.size(); ++i) {
        d = (diag[i] - mu) - (i == 0 ? 0.0L : off2 / d);
        if (d == 0.0L) d = -std::numeric_limits<Real>::min() * 1e10L;
        if (d < 0.0L) ++neg;
    }
    return neg;
}

std::vector<double> negative_eigenvalues(const std::vector<Real>& diag, Real off2, Real lower) {
    const int total = sturm_count(diag, off2, 0.0L);
    std::vector<double> out;
    for (int j = 0; j < total; ++j) {
        Real lo = lower, hi = 0.0L;
        for (int it = 0; it < 200; ++it) {
            const Real mid = 0.5L * (lo + hi);
            if (sturm_count(diag, off2, mid) > j) hi = mid; else lo = mid;
            if (hi - lo <= 1e-17L * (hi < 0 ? -hi : hi)) break;
        }
        out.push_back(static_cast<double>(0.5L * (lo + hi)));
    }
    return out;
}

}  // namespace

std::vector<double> matrix_oracle(const StationaryState& q, std::size_t n) {
    if (n < 100) fail(ErrorKind::InvalidArgument, "matrix oracle needs n >= 100");
    const RadialGrid g = RadialGrid::make(q.grid.r_max, n);
    const std::vector<double> V = (n == q.grid.n) ? q.potential() : q.potential_on(g);
    const Real h = (static_cast<Real>(g.r_max) - 1.0L) / static_cast<Real>(n - 1);
    std::vector<Real> diag(n - 2);
    double vmax = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        diag[i - 1] = 2.0L / (h * h) - static_cast<Real>(V[i]);
        vmax = std::max(vmax, V[i]);
    }
    return negative_eigenvalues(diag, 1.0L / (h * h * h * h), static_cast<Real>(-vmax - 1.0));
}

std::vector<double> matrix_oracle_richardson(const StationaryState& q, std::size_t n) {
    const auto coarse = matrix_oracle(q, n);
    const auto fine = matrix_oracle(q, 2 * n - 1);
    if (coarse.size() != fine.size())
        fail(ErrorKind::CountMismatch, "matrix oracle count changed under refinement");
    std::vector<double> out(coarse.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (4.0 * fine[i] - coarse[i]) / 3.0;
    return out;
}

int dirichlet_count_below(const std::function<double(double)>& V, double a, double b, std::size_t n, double mu) {
    if (n < 3 || !(b > a)) fail(ErrorKind::InvalidArgument, "bad Dirichlet interval");
    const double h = (b - a) / static_cast<double>(n - 1);
    const Real hl = static_cast<Real>(h);
    std::vector<Real> diag(n - 2);
    for (std::size_t i = 1; i + 1 < n; ++i) diag[i - 1] = 2.0L / (hl * hl) - static_cast<Real>(V(a + h * static_cast<double>(i)));
    return sturm_count(diag, 1.0L / (hl * hl * hl * hl), static_cast<Real>(mu));
}

double quadratic_form(std::span<const double> f, const StationaryState& q) {
    const RadialGrid& g = q.grid;
    const double h = g.spacing();
    double grad = 0.0;
    for (std::size_t i = 0; i + 1 < f.size(); ++i) {
        const double d = (f[i + 1] - f[i]) / h;
        const double rm = g.r(i) + 0.5 * h;
        grad += d * d * rm * rm * h;
    }
    std::vector<double> pot(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double r = g.r(i);
        pot[i] = (2 * q.m + 1) * std::pow(q.q[i], 2 * q.m) * f[i] * f[i] * r * r;
    }
    return grad - trapz(pot, h);
}

std::vector<double> nodal_test_function(const StationaryState& q, int i, bool normalized) {
    const auto gam = q.nodal_radii();
    if (i < 0 || i > q.k) fail(ErrorKind::InvalidArgument, "nodal index out of range");
    const double a = gam[static_cast<std::size_t>(i)];
    const double b = (i == q.k) ? q.grid.r_max : gam[static_cast<std::size_t>(i) + 1];
    std::vector<double> f(q.grid.n, 0.0);
    for (std::size_t idx = 0; idx < q.grid.n; ++idx) {
        const double r = q.grid.r(idx);
        if (r >= a && r <= b) f[idx] = q.q[idx];
    }
    if (normalized) {
        std::vector<double> sq(f.size());
        for (std::size_t idx = 0; idx < f.size(); ++idx) {
            const double r = q.grid.r(idx);
            sq[idx] = f[idx] * f[idx] * r * r;
        }
        const double c = 1.0 / std::sqrt(trapz(sq, q.grid.spacing()));
        for (double& v : f) v *= c;
    }
    return f;
}

int subdomain_eigencount(const StationaryState& q, int i, std::size_t n) {
    const auto gam = q.nodal_radii();
    if (i < 0 || i > q.k) fail(ErrorKind::InvalidArgument, "nodal index out of range");
    const double a = gam[static_cast<std::size_t>(i)];
    const double b = (i == q.k) ? q.grid.r_max : gam[static_cast<std::size_t>(i) + 1];
    const int p = 2 * q.m;
    auto V = [&](double r) { return (p + 1) * std::pow(q.value(r), p); };
    return dirichlet_count_below(V, a, b, n, 0.0);
}

// ---------------------------------------------------------------------------------------------

ZeroEnergyReport zero_energy_diagnostic(const StationaryState& q, double resonance_tol) {
    namespace odeint = boost::numeric::odeint;
    using S = std::array<double, 4>;  // Q, Q', h, h'
    const int m = q.m;
    const RadialGrid& g = q.grid;
    const double dq1 = q.profile ? q.derivative(1.0) : 0.0;

    auto rhs = [m](const S& y, S& dy, double r) {
        const double q2m = std::pow(y[0], 2 * m);
        dy[0] = y[1];
        dy[1] = -2.0 * y[1] / r - q2m * y[0];
        dy[2] = y[3];
        dy[3] = -2.0 * y[3] / r - (2 * m + 1) * q2m * y[2];
    };
    S y{0.0, dq1, 0.0, 1.0};
    std::vector<double> radii = g.radii();
    ZeroEnergyReport rep;
    rep.h.assign(g.n, 0.0);
    std::vector<double> W(g.n, 0.0);
    std::size_t idx = 0;
    auto obs = [&](const S& s, double r) {
        const double lq = r * s[1] + s[0] / m;
        const double ddq = -2.0 * s[1] / r - std::pow(s[0], 2 * m + 1);
        const double dlq = r * ddq + s[1] * (1.0 + 1.0 / m);
        rep.h[idx] = s[2];
        W[idx] = r * r * (s[3] * lq - dlq * s[2]);
        ++idx;
    };
    auto stepper = odeint::make_dense_output(1e-14, 1e-13, odeint::runge_kutta_dopri5<S>());
    odeint::integrate_times(stepper, rhs, y, radii.begin(), radii.end(), 1e-3, obs);

    rep.wronskian_expected = dq1 * 1.0;
    double dev = 0.0;
    for (double w : W) dev = std::max(dev, std::abs(w - rep.wronskian_expected));
    rep.wronskian_max_rel_dev = rep.wronskian_expected != 0.0 ? dev / std::abs(rep.wronskian_expected) : dev;

    // least squares h = c + d / r on the last 10% of the grid
    const std::size_t lo = g.n - std::max<std::size_t>(g.n / 10, 2);
    double s1 = 0, sx = 0, sxx = 0, sy = 0, sxy = 0;
    for (std::size_t i = lo; i < g.n; ++i) {
        const double x = 1.0 / g.r(i);
        s1 += 1;
        sx += x;
        sxx += x * x;
        sy += rep.h[i];
        sxy += x * rep.h[i];
    }
    const double det = s1 * sxx - sx * sx;
    rep.limit_estimate = (sxx * sy - sx * sxy) / det;
    rep.tail_slope = (s1 * sxy - sx * sy) / det;
    for (double v : rep.h) rep.max_abs_h = std::max(rep.max_abs_h, std::abs(v));
    rep.is_resonant = std::abs(rep.limit_estimate) < resonance_tol * rep.max_abs_h;
    rep.node_count = count_sign_changes(rep.h, g, 1.0, g.r_max);
    return rep;
}

AgmonFit agmon_tail_check(const BoundState& b) {
    const RadialGrid& g = b.grid;
    const double floor = 1e-250;
    std::vector<std::size_t> use;
    for (std::size_t i = g.n / 2; i + 1 < g.n; ++i)
        if (std::abs(b.psi[i]) > floor) use.push_back(i);
    if (use.size() < 50) fail(ErrorKind::TailTooShort, "only " + std::to_string(use.size()) + " usable tail samples");
    double s1 = 0, sx = 0, sxx = 0, sy = 0, sxy = 0;
    for (std::size_t i : use) {
        const double x = g.r(i), yv = std::log(std::abs(b.psi[i]));
        s1 += 1;
        sx += x;
        sxx += x * x;
        sy += yv;
        sxy += x * yv;
    }
    const double det = s1 * sxx - sx * sx;
    AgmonFit fit;
    fit.samples = use.size();
    fit.slope = (s1 * sxy - sx * sy) / det;
    const double icpt = (sxx * sy - sx * sxy) / det;
    fit.slope_rel_error = std::abs(fit.slope + b.e) / b.e;
    const std::size_t mid = use[use.size() / 2];
    const double sign = b.psi[mid] >= 0.0 ? 1.0 : -1.0;
    fit.c = sign * std::exp(icpt);
    const double h = g.spacing();
    const double r = g.r(mid);
    const double dpsi = (b.psi[mid + 1] - b.psi[mid - 1]) / (2.0 * h);
    const double log_ref = std::log(std::abs(fit.c) * b.e) - b.e * r;
    const double ref_sign = -sign;
    fit.derivative_ratio = (dpsi >= 0.0 ? 1.0 : -1.0) * ref_sign * std::exp(std::log(std::abs(dpsi)) - log_ref);
    return fit;
}

}  // namespace wavelab
