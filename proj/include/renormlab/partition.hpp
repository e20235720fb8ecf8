#pragma once

#include "renormlab/rotation.hpp"

#include <string>
#include <vector>

namespace renormlab {

inline constexpr long long kMaxOrbitLength = 200'000;
inline constexpr double kEndpointTol = 1e-9;

/// Orbit of the critical point c = 0 together with the closest-return data up
/// to level n+1. Immutable once built; construction certifies the closest
/// returns.
class ReturnStructure {
public:
    ReturnStructure(const MapSpec& spec, const ContinuedFraction& cf, int n) : spec_(spec), cf_(cf), level_(n) {
        if (n < 0) throw DomainError("return_structure: level must be >= 0");
        if (n + 2 > cf.depth()) throw DomainError("return_structure: need n + 2 <= depth(cf)");
        conv_ = convergents(cf);
        const long long len = conv_.q[n + 1] + conv_.q[n];
        if (len > kMaxOrbitLength) throw DomainError("return_structure: orbit length exceeds budget");
        orbit_.reserve(static_cast<std::size_t>(len + 1));
        LiftPoint p{0, 0.0};
        for (long long j = 0; j <= len; ++j) {
            orbit_.push_back(p);
            p = step(spec, p);
        }
        for (int k = 0; k <= n + 1; ++k) d_.push_back(orbit_[conv_.q[k]].minus(conv_.p[k]));
        certify();
    }

    [[nodiscard]] const MapSpec& spec() const { return spec_; }
    [[nodiscard]] const ContinuedFraction& cf() const { return cf_; }
    [[nodiscard]] const Convergents& conv() const { return conv_; }
    [[nodiscard]] int level() const { return level_; }
    [[nodiscard]] long long q(int k) const { return conv_.q.at(k); }
    [[nodiscard]] long long p(int k) const { return conv_.p.at(k); }
    [[nodiscard]] long long orbit_length() const { return static_cast<long long>(orbit_.size()); }
    [[nodiscard]] const LiftPoint& orbit(long long j) const { return orbit_.at(static_cast<std::size_t>(j)); }

    /// Signed displacement f^{q_k}(c) - c in the lift, k = 0..n+1.
    [[nodiscard]] double d(int k) const { return d_.at(k); }

    /// f^j(c) - f^i(c) measured in the lift, minus the integer shift p.
    [[nodiscard]] double lift_diff(long long j, long long i, long long shift) const {
        const LiftPoint& a = orbit(j);
        const LiftPoint& b = orbit(i);
        return static_cast<double>(a.wind - b.wind - shift) + (a.pos - b.pos);
    }

    /// I_k: the arc between c and f^{q_k}(c).
    [[nodiscard]] Arc I(int k) const { return Arc::between(0.0, d(k)); }
    /// Delta_k = I_k union I_{k+1}.
    [[nodiscard]] Arc Delta(int k) const { return Arc::between(d(k + 1), d(k)); }

    /// f^j(I_k) for k in {n, n+1}, or any k whose q_k + j stays inside the orbit.
    [[nodiscard]] Arc image_of_I(int k, long long j) const {
        return Arc::between(orbit(j).pos, orbit(j).pos + lift_diff(j + q(k), j, p(k)));
    }

private:
    void certify() const {
        for (int k = 1; k <= level_ + 1; ++k) {
            const double dk = d_[k];
            const bool positive = (k % 2) == 0;
            if ((dk > 0.0) != positive || dk == 0.0) {
                throw CertificationError("return_structure: closest return k=" + std::to_string(k) +
                                         " on the wrong side (j=" + std::to_string(q(k)) + ")");
            }
            for (long long j = 1; j < q(k); ++j) {
                const double x = orbit_[static_cast<std::size_t>(j)].pos;
                if (!(std::abs(dk) < std::min(x, 1.0 - x))) {
                    throw CertificationError("return_structure: closest return violated at k=" + std::to_string(k) +
                                             ", j=" + std::to_string(j));
                }
            }
        }
    }

    MapSpec spec_;
    ContinuedFraction cf_;
    int level_;
    Convergents conv_;
    std::vector<LiftPoint> orbit_;
    std::vector<double> d_;
};

inline ReturnStructure return_structure(const MapSpec& spec, const ContinuedFraction& cf, int n) {
    return ReturnStructure(spec, cf, n);
}

struct Atom {
    Arc arc;
    int generation = 0;
    long long iterate = 0;
};

struct DynamicalPartition {
    int level = 0;
    std::vector<Atom> atoms;

    [[nodiscard]] double total_length() const {
        double s = 0.0;
        for (const auto& a : atoms) s += a.arc.length;
        return s;
    }
};

/// P_n: the q_{n+1} images f^i(I_n) and the q_n images f^i(I_{n+1}).
inline DynamicalPartition dynamical_partition(const ReturnStructure& rs) {
    const int n = rs.level();
    DynamicalPartition P;
    P.level = n;
    for (long long i = 0; i < rs.q(n + 1); ++i) P.atoms.push_back({rs.image_of_I(n, i), n, i});
    for (long long i = 0; i < rs.q(n); ++i) P.atoms.push_back({rs.image_of_I(n + 1, i), n + 1, i});

    const double tol = kEndpointTol * static_cast<double>(P.atoms.size());
    if (std::abs(P.total_length() - 1.0) > tol) {
        throw PrecisionError("dynamical_partition: atoms do not cover the circle (total " +
                             std::to_string(P.total_length()) + ")");
    }
    std::vector<Arc> arcs;
    for (const auto& a : P.atoms) arcs.push_back(a.arc);
    if (!arcs_disjoint(arcs, kEndpointTol)) throw PrecisionError("dynamical_partition: atoms overlap");
    return P;
}

/// Atoms sorted counterclockwise starting from the one at the smallest left
/// endpoint.
inline std::vector<Atom> circular_order(const DynamicalPartition& P) {
    std::vector<Atom> s = P.atoms;
    std::sort(s.begin(), s.end(), [](const Atom& a, const Atom& b) { return a.arc.left < b.arc.left; });
    return s;
}

/// Every atom of `finer` lies inside some atom of `coarser`.
inline bool refines(const DynamicalPartition& finer, const DynamicalPartition& coarser, double tol = kEndpointTol) {
    const auto sorted = circular_order(coarser);
    for (const auto& a : finer.atoms) {
        auto it = std::upper_bound(sorted.begin(), sorted.end(), a.arc.left + tol,
                                   [](double x, const Atom& b) { return x < b.arc.left; });
        const Atom& host = it == sorted.begin() ? sorted.back() : *std::prev(it);
        if (!host.arc.contains(a.arc, tol)) return false;
    }
    return true;
}

struct AdjacentRatio {
    int level = 0;
    double ratio = 0.0;
    Atom first;
    Atom second;
};

/// Largest ratio of lengths of two circularly adjacent atoms of P_n.
inline AdjacentRatio max_adjacent_ratio(const DynamicalPartition& P) {
    const auto s = circular_order(P);
    AdjacentRatio best;
    best.level = P.level;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const Atom& a = s[i];
        const Atom& b = s[(i + 1) % s.size()];
        const double r = std::max(a.arc.length / b.arc.length, b.arc.length / a.arc.length);
        if (r > best.ratio) {
            best.ratio = r;
            best.first = a;
            best.second = b;
        }
    }
    return best;
}

inline std::vector<AdjacentRatio> real_bounds_stats(const MapSpec& spec, const ContinuedFraction& cf, int n_lo,
                                                    int n_hi) {
    if (n_hi > cf.depth() - 2) throw DomainError("real_bounds_stats: n_hi must be <= depth(cf) - 2");
    std::vector<AdjacentRatio> out;
    for (int n = n_lo; n <= n_hi; ++n) {
        out.push_back(max_adjacent_ratio(dynamical_partition(return_structure(spec, cf, n))));
    }
    return out;
}

struct MomentsReport {
    int level = 0;
    int m = 0;
    std::vector<long long> moments;
    /// Index e with J_{-i_k} inside f^{q_m + e q_{m+1}}(I_{m+1}), per moment.
    std::vector<int> host_exponent;
    double first_edge_ratio = 0.0;
    double last_edge_ratio = 0.0;
};

/// Backward orbit J_{-i} = f^{q_{n+1}-i}(I_n) of the level-n interval, looking
/// at the times 1 <= i < q_{m+2} before its first return to I_{m+1}. There are
/// a_{m+1} moments with J_{-i} inside I_m, and the k-th of them sits in
/// f^{q_m + (a_{m+1}-k) q_{m+1}}(I_{m+1}).
inline MomentsReport backward_moments(const ReturnStructure& rs, int m) {
    const int n = rs.level();
    if (m < 0 || m >= n) throw DomainError("backward_moments: need 0 <= m < level");
    const int a = rs.cf()[m + 1];
    const double tol = 1e-12;
    MomentsReport rep;
    rep.level = n;
    rep.m = m;
    const Arc Im = rs.I(m);
    const double In_len = rs.I(n).length;
    for (long long i = 1; i < rs.q(m + 2); ++i) {
        const Arc J = rs.image_of_I(n, rs.q(n + 1) - i);
        if (Im.contains(J, tol)) rep.moments.push_back(i);
    }
    if (static_cast<int>(rep.moments.size()) != a) {
        throw CertificationError("backward_moments: found " + std::to_string(rep.moments.size()) +
                                 " moments, expected a_{m+1} = " + std::to_string(a));
    }
    for (int k = 1; k <= a; ++k) {
        const long long i = rep.moments[static_cast<std::size_t>(k - 1)];
        const Arc J = rs.image_of_I(n, rs.q(n + 1) - i);
        const int e = a - k;
        const Arc host = rs.image_of_I(m + 1, rs.q(m) + e * rs.q(m + 1));
        if (!host.contains(J, tol)) {
            throw CertificationError("backward_moments: moment k=" + std::to_string(k) + " (i=" + std::to_string(i) +
                                     ") escapes its predicted host interval");
        }
        rep.host_exponent.push_back(e);
    }
    rep.first_edge_ratio = rs.image_of_I(n, rs.q(n + 1) - rep.moments.front()).length / In_len;
    rep.last_edge_ratio = rs.image_of_I(n, rs.q(n + 1) - rep.moments.back()).length / In_len;
    return rep;
}

/// The arcs f^{-j}(Delta_n), 0 <= j < q_n, realised through forward orbit
/// points as the arcs between f^{q_n - j}(c) and f^{q_{n+1} - j}(c).
inline std::vector<Arc> preimage_arcs(const ReturnStructure& rs) {
    const int n = rs.level();
    std::vector<Arc> arcs;
    for (long long j = 0; j < rs.q(n); ++j) {
        const long long i1 = rs.q(n) - j;
        const long long i2 = rs.q(n + 1) - j;
        const double x1 = rs.orbit(i1).pos;
        arcs.push_back(Arc::between(x1, x1 + rs.lift_diff(i2, i1, rs.p(n + 1) - rs.p(n))));
    }
    return arcs;
}

inline bool disjoint_preimages_check(const ReturnStructure& rs) {
    const auto arcs = preimage_arcs(rs);
    return arcs_disjoint(arcs, 1e-12);
}

} // namespace renormlab
