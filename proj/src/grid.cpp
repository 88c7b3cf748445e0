#include "wavelab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wavelab/errors.hpp"

namespace wavelab {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::NonConvergence: return "NonConvergence";
        case ErrorKind::InsufficientZeros: return "InsufficientZeros";
        case ErrorKind::OutOfRange: return "OutOfRange";
        case ErrorKind::Overflow: return "Overflow";
        case ErrorKind::MatchAtNode: return "MatchAtNode";
        case ErrorKind::CountMismatch: return "CountMismatch";
        case ErrorKind::TailTooShort: return "TailTooShort";
        case ErrorKind::CflViolation: return "CflViolation";
        case ErrorKind::HypothesisViolated: return "HypothesisViolated";
        case ErrorKind::ConeViolation: return "ConeViolation";
        case ErrorKind::WitnessNotFound: return "WitnessNotFound";
        case ErrorKind::NoContraction: return "NoContraction";
        case ErrorKind::TailBoundExceeded: return "TailBoundExceeded";
        case ErrorKind::AmbiguousClassification: return "AmbiguousClassification";
        case ErrorKind::UnknownScenario: return "UnknownScenario";
        case ErrorKind::VersionMismatch: return "VersionMismatch";
        case ErrorKind::Io: return "Io";
    }
    return "Unknown";
}

RadialGrid RadialGrid::make(double r_max, std::size_t n) {
    if (n < 3) fail(ErrorKind::InvalidArgument, "grid needs at least 3 points");
    if (!(r_max > 1.0)) fail(ErrorKind::InvalidArgument, "grid needs r_max > 1");
    RadialGrid g;
    g.r_max = r_max;
    g.n = n;
    return g;
}

std::vector<double> RadialGrid::radii() const {
    std::vector<double> out(n);
    const double h = spacing();
    for (std::size_t i = 0; i < n; ++i) out[i] = r_min + h * static_cast<double>(i);
    out[n - 1] = r_max;
    return out;
}

std::size_t RadialGrid::index_of(double r) const {
    const double x = std::round((r - r_min) / spacing());
    if (x <= 0.0) return 0;
    return std::min(n - 1, static_cast<std::size_t>(x));
}

std::size_t RadialGrid::index_at_or_above(double r) const {
    const double x = std::ceil((r - r_min) / spacing() - 1e-9);
    if (x <= 0.0) return 0;
    return std::min(n - 1, static_cast<std::size_t>(x));
}

RadialGrid RadialGrid::truncated(double new_r_max) const {
    const std::size_t i = index_of(new_r_max);
    if (i < 2) fail(ErrorKind::InvalidArgument, "truncation leaves fewer than 3 points");
    return make(r(i), i + 1);
}

RadialGrid RadialGrid::coarsened() const {
    if (n % 2 == 0) fail(ErrorKind::InvalidArgument, "coarsening needs an odd point count");
    return make(r_max, (n - 1) / 2 + 1);
}

double trapz(std::span<const double> f, double h) {
    if (f.size() < 2) return 0.0;
    return trapz(f, h, 0, f.size() - 1);
}

double trapz(std::span<const double> f, double h, std::size_t lo, std::size_t hi) {
    if (hi <= lo) return 0.0;
    double s = 0.5 * (f[lo] + f[hi]);
    for (std::size_t i = lo + 1; i < hi; ++i) s += f[i];
    return s * h;
}

std::vector<double> derivative(std::span<const double> f, double h) {
    const std::size_t n = f.size();
    std::vector<double> d(n, 0.0);
    if (n < 3) return d;
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
    d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
    d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
    return d;
}

}  // namespace wavelab
