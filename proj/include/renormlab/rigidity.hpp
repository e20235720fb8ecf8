#pragma once

#include "renormlab/partition.hpp"

#include <algorithm>
#include <numeric>
#include <utility>
#include <vector>

namespace renormlab {

/// The conjugacy h between two critical orbits with the same combinatorics,
/// known on the first q_{n+1} + q_n orbit points: h(f^i(c)) = g^i(c).
struct OrbitConjugacy {
    int level = 0;
    /// (x_i, y_i) in [0,1), sorted by x; the first pair is (c_f, c_g) = (0, 0).
    std::vector<std::pair<double, double>> pairs;
    /// Orbit index i of each pair.
    std::vector<long long> index;
};

inline OrbitConjugacy orbit_conjugacy(const MapSpec& f, const MapSpec& g, const ContinuedFraction& cf, int n) {
    const ReturnStructure rf = return_structure(f, cf, n);
    const ReturnStructure rg = return_structure(g, cf, n);
    const long long count = rf.q(n + 1) + rf.q(n);
    std::vector<long long> order(static_cast<std::size_t>(count));
    std::iota(order.begin(), order.end(), 0LL);
    std::sort(order.begin(), order.end(), [&](long long i, long long j) { return rf.orbit(i).pos < rf.orbit(j).pos; });

    OrbitConjugacy oc;
    oc.level = n;
    for (const long long i : order) {
        oc.pairs.emplace_back(rf.orbit(i).pos, rg.orbit(i).pos);
        oc.index.push_back(i);
    }
    for (std::size_t k = 1; k < oc.pairs.size(); ++k) {
        if (!(oc.pairs[k].second > oc.pairs[k - 1].second)) {
            throw CertificationError("orbit_conjugacy: circular orders differ at orbit points " +
                                     std::to_string(oc.index[k - 1]) + " and " + std::to_string(oc.index[k]) +
                                     " (maps are not combinatorially equivalent)");
        }
    }
    return oc;
}

inline constexpr double kTripleSnapTol = 0.1;
inline constexpr int kMinTriplesPerScale = 10;

struct QsScale {
    double t = 0.0;
    int triples = 0;
    double distortion = 1.0;
};

namespace detail {

inline double circle_gap(double from, double to) {
    const double d = to - from;
    return d - std::floor(d);
}

/// Index of the orbit point nearest to u on the circle.
inline std::size_t nearest_on_circle(const std::vector<double>& xs, double u) {
    u -= std::floor(u);
    const auto it = std::lower_bound(xs.begin(), xs.end(), u);
    const std::size_t hi = it == xs.end() ? 0 : static_cast<std::size_t>(it - xs.begin());
    const std::size_t lo = hi == 0 ? xs.size() - 1 : hi - 1;
    auto dist = [&](std::size_t k) {
        const double d = std::abs(xs[k] - u);
        return std::min(d, 1.0 - d);
    };
    return dist(lo) <= dist(hi) ? lo : hi;
}

} // namespace detail

/// Quasisymmetric distortion per dyadic scale t = 2^-2, ..., 2^-(scales+1):
/// for triples (x_-, x, x_+) of orbit points with both gaps within 10% of t,
/// the ratio of the gaps of h divided by the ratio of the gaps themselves,
/// folded to be >= 1. Scales with fewer than 10 triples are left out.
inline std::vector<QsScale> qs_distortion_by_scale(const OrbitConjugacy& oc, int scales) {
    if (oc.pairs.size() < 100) throw DomainError("qs_distortion: need at least 100 pairs");
    if (scales < 1) throw DomainError("qs_distortion: scales must be >= 1");
    std::vector<double> xs;
    for (const auto& p : oc.pairs) xs.push_back(p.first);
    std::vector<QsScale> out;
    for (int k = 2; k <= scales + 1; ++k) {
        QsScale sc;
        sc.t = std::ldexp(1.0, -k);
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const std::size_t up = detail::nearest_on_circle(xs, xs[i] + sc.t);
            const std::size_t dn = detail::nearest_on_circle(xs, xs[i] - sc.t);
            const double a = detail::circle_gap(xs[i], xs[up]);
            const double b = detail::circle_gap(xs[dn], xs[i]);
            if (std::abs(a - sc.t) > kTripleSnapTol * sc.t || std::abs(b - sc.t) > kTripleSnapTol * sc.t) continue;
            const double ha = detail::circle_gap(oc.pairs[i].second, oc.pairs[up].second);
            const double hb = detail::circle_gap(oc.pairs[dn].second, oc.pairs[i].second);
            const double r = (ha / hb) / (a / b);
            sc.distortion = std::max({sc.distortion, r, 1.0 / r});
            ++sc.triples;
        }
        if (sc.triples >= kMinTriplesPerScale) out.push_back(sc);
    }
    return out;
}

inline double qs_distortion(const OrbitConjugacy& oc, int scales) {
    const auto per = qs_distortion_by_scale(oc, scales);
    if (per.empty()) throw InsufficientDataError("qs_distortion: no scale has enough triples");
    double worst = 1.0;
    for (const auto& s : per) worst = std::max(worst, s.distortion);
    return worst;
}

/// s_n = |I_{n+1}| / |I_n| for n = 0..n_hi.
inline std::vector<double> scaling_ratios(const MapSpec& f, const ContinuedFraction& cf, int n_hi) {
    const ReturnStructure rs = return_structure(f, cf, n_hi);
    std::vector<double> s;
    for (int n = 0; n <= n_hi; ++n) s.push_back(std::abs(rs.d(n + 1) / rs.d(n)));
    return s;
}

inline constexpr double kRatioFloor = 1e-13;

struct RigidityFit {
    FitResult fit;
    /// rho_n = |I_n(g)| / |I_n(f)| for n = n_lo..n_hi+1.
    std::vector<double> rho;
    std::vector<int> excluded;
};

/// Log-linear fit of |rho_n - rho_{n+1}| against n.
inline RigidityFit rigidity_fit_detail(const MapSpec& f, const MapSpec& g, const ContinuedFraction& cf, int n_lo,
                                       int n_hi) {
    if (n_hi - n_lo < 4) throw DomainError("rigidity_fit: need n_hi - n_lo >= 4");
    if (n_lo < 0) throw DomainError("rigidity_fit: n_lo must be >= 0");
    const ReturnStructure rf = return_structure(f, cf, n_hi);
    const ReturnStructure rg = return_structure(g, cf, n_hi);
    RigidityFit out;
    for (int n = n_lo; n <= n_hi + 1; ++n) out.rho.push_back(std::abs(rg.d(n) / rf.d(n)));
    std::vector<double> xs, ys;
    for (int n = n_lo; n <= n_hi; ++n) {
        const double diff = std::abs(out.rho[static_cast<std::size_t>(n - n_lo)] - out.rho[static_cast<std::size_t>(n - n_lo + 1)]);
        if (diff < kRatioFloor) {
            out.excluded.push_back(n);
            continue;
        }
        xs.push_back(n);
        ys.push_back(std::log(diff));
    }
    if (xs.empty()) throw InsufficientDataError("rigidity_fit: all differences zero");
    if (xs.size() < 4) throw InsufficientDataError("rigidity_fit: fewer than 4 usable levels");
    out.fit = linear_fit(xs, ys);
    return out;
}

inline FitResult rigidity_fit(const MapSpec& f, const MapSpec& g, const ContinuedFraction& cf, int n_lo, int n_hi) {
    return rigidity_fit_detail(f, g, cf, n_lo, n_hi).fit;
}

} // namespace renormlab
