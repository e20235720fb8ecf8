#pragma once

#include "renormlab/maps.hpp"

#include <cstdint>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

namespace renormlab {

inline constexpr int kMaxCfDepth = 25;

/// Continued fraction rho = 1/(a_0 + 1/(a_1 + ...)). Note the indexing: a_0 is
/// the first denominator, so there is no integer part.
struct ContinuedFraction {
    std::vector<int> quotients;
    std::optional<int> bounded_by;

    ContinuedFraction() = default;
    explicit ContinuedFraction(std::vector<int> a, std::optional<int> bound = std::nullopt)
        : quotients(std::move(a)), bounded_by(bound) {
        for (int q : quotients) {
            if (q < 1) throw DomainError("ContinuedFraction: partial quotients must be >= 1");
            if (bounded_by && q > *bounded_by) throw DomainError("ContinuedFraction: quotient exceeds bound");
        }
    }

    static ContinuedFraction constant(int a, int depth) { return ContinuedFraction(std::vector<int>(depth, a)); }

    [[nodiscard]] int depth() const { return static_cast<int>(quotients.size()); }
    [[nodiscard]] int operator[](int i) const { return quotients.at(static_cast<std::size_t>(i)); }

    /// Value of the finite expansion.
    [[nodiscard]] double value() const {
        double x = 0.0;
        for (auto it = quotients.rbegin(); it != quotients.rend(); ++it) {
            x = 1.0 / (*it + x);
        }
        return x;
    }

    /// The quadratic irrational whose expansion is this prefix followed by the
    /// last quotient repeated forever. This is the rotation number a finite
    /// target stands for.
    [[nodiscard]] double periodic_value() const {
        if (quotients.empty()) throw DomainError("ContinuedFraction: empty");
        const double a = quotients.back();
        double x = 0.5 * (std::sqrt(a * a + 4.0) - a);
        for (int i = depth() - 2; i >= 0; --i) {
            x = 1.0 / (quotients[static_cast<std::size_t>(i)] + x);
        }
        return x;
    }

    /// Prefix extended to `depth` quotients by repeating the last one.
    [[nodiscard]] ContinuedFraction extended(int new_depth) const {
        if (quotients.empty()) throw DomainError("ContinuedFraction: empty");
        std::vector<int> a = quotients;
        while (static_cast<int>(a.size()) < new_depth) a.push_back(a.back());
        return ContinuedFraction(std::move(a), bounded_by);
    }

    friend bool operator==(const ContinuedFraction&, const ContinuedFraction&) = default;
};

struct Convergents {
    std::vector<long long> p;
    std::vector<long long> q;

    [[nodiscard]] int size() const { return static_cast<int>(q.size()); }
    [[nodiscard]] double ratio(int n) const { return static_cast<double>(p.at(n)) / static_cast<double>(q.at(n)); }
};

/// q_0 = 1, q_1 = a_0, q_{n+1} = a_n q_n + q_{n-1}; p_0 = 0, p_1 = 1 with the
/// same recursion. Entries 0..depth.
inline Convergents convergents(const ContinuedFraction& cf) {
    if (cf.quotients.empty()) throw DomainError("convergents: empty continued fraction");
    Convergents c;
    c.p = {0, 1};
    c.q = {1, cf[0]};
    for (int n = 1; n < cf.depth(); ++n) {
        c.p.push_back(cf[n] * c.p[n] + c.p[n - 1]);
        c.q.push_back(cf[n] * c.q[n] + c.q[n - 1]);
    }
    return c;
}

/// Gauss-map expansion of rho, computed exactly on the binary value of rho
/// with 128-bit integer Euclid so the quotients are not polluted by rounding
/// in 1/x - floor(1/x).
inline ContinuedFraction continued_fraction(double rho, int depth) {
    if (!(rho > 0.0 && rho < 1.0)) throw DomainError("continued_fraction: rho must lie in (0,1)");
    if (depth < 1 || depth > kMaxCfDepth) throw DomainError("continued_fraction: depth must be in [1, 25]");
    int exp = 0;
    const double mant = std::frexp(rho, &exp);
    const int shift = 53 - exp;
    if (shift > 126) throw DomainError("continued_fraction: rho too small");
    using u128 = unsigned __int128;
    u128 num = static_cast<u128>(static_cast<std::uint64_t>(std::ldexp(mant, 53)));
    u128 den = static_cast<u128>(1) << shift;
    // rho = num/den < 1, so the first quotient is floor(den/num).
    std::vector<int> a;
    long long q_prev = 1, q_cur = 1;
    while (static_cast<int>(a.size()) < depth) {
        if (num == 0) throw DomainError("continued_fraction: rational input (expansion terminates)");
        const u128 quot = den / num;
        const u128 rem = den % num;
        if (quot > static_cast<u128>(1) << 30) {
            throw DomainError("continued_fraction: rational input (quotient beyond double resolution)");
        }
        const int ai = static_cast<int>(quot);
        const long long q_next = a.empty() ? ai : ai * q_cur + q_prev;
        if (!a.empty()) q_prev = q_cur;
        q_cur = q_next;
        // Beyond q^2 ~ 2^52 the remaining quotients describe rounding, not rho.
        if (static_cast<double>(q_cur) * static_cast<double>(q_cur) > 0x1p52) {
            throw DomainError("continued_fraction: rational input (depth exceeds double resolution)");
        }
        a.push_back(ai);
        den = num;
        num = rem;
    }
    return ContinuedFraction(std::move(a));
}

/// Lift average (F^N(x0) - x0)/N together with the a-priori error bound 1/N.
/// The compensated mode accumulates per-step displacements with Kahan
/// summation instead of tracking the winding integer.
inline std::pair<double, double> rotation_number(const MapSpec& spec, double x0, long long iterates,
                                                 bool compensated = false) {
    if (iterates < 1000) throw DomainError("rotation_number: need at least 1000 iterates");
    const double n = static_cast<double>(iterates);
    if (!compensated) {
        const LiftPoint end = iterate(spec, x0, iterates);
        const LiftPoint start = reduce(x0);
        return {(static_cast<double>(end.wind - start.wind) + (end.pos - start.pos)) / n, 1.0 / n};
    }
    double x = frac(x0);
    double sum = 0.0, carry = 0.0;
    for (long long i = 0; i < iterates; ++i) {
        const double y = eval_lift(spec, x);
        const double term = (y - x) - carry;
        const double t = sum + term;
        carry = (t - sum) - term;
        sum = t;
        x = frac(y);
    }
    return {sum / n, 1.0 / n};
}

/// True iff the first `count` points of the orbit of 0 appear in the same
/// cyclic order as those of the rigid rotation by rho.
inline bool orbit_order_matches(const MapSpec& spec, double rho, long long count) {
    std::vector<double> xs(static_cast<std::size_t>(count));
    std::vector<double> rs(static_cast<std::size_t>(count));
    LiftPoint p{0, 0.0};
    for (long long j = 0; j < count; ++j) {
        xs[static_cast<std::size_t>(j)] = p.pos;
        rs[static_cast<std::size_t>(j)] = frac(static_cast<double>(j) * rho);
        p = step(spec, p);
    }
    std::vector<long long> ix(static_cast<std::size_t>(count)), ir(static_cast<std::size_t>(count));
    std::iota(ix.begin(), ix.end(), 0LL);
    std::iota(ir.begin(), ir.end(), 0LL);
    std::sort(ix.begin(), ix.end(), [&](long long a, long long b) { return xs[a] < xs[b]; });
    std::sort(ir.begin(), ir.end(), [&](long long a, long long b) { return rs[a] < rs[b]; });
    // Both orders start at index 0 (the point 0 is the smallest in [0,1)).
    return ix == ir;
}

struct TuneResult {
    double theta = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    int steps = 0;
    bool resolution_limited = false;
    int certified_level = 0;
};

namespace detail {

enum class Side { TooSmall, TooBig, Open };

// Compares rho(theta) with the target through the convergents of the target:
// below a lower convergent p/q everywhere iff F^q(0) <= p is possible, and
// symmetrically for upper convergents.
inline Side tuning_side(const MapSpec& spec, const Convergents& conv, long long max_iter) {
    LiftPoint x{0, 0.0};
    long long done = 0;
    for (int k = 1; k < conv.size(); ++k) {
        const long long qk = conv.q[k];
        if (qk > max_iter) break;
        while (done < qk) {
            x = step(spec, x);
            ++done;
        }
        const double d = x.minus(conv.p[k]);
        const bool lower = (k % 2) == 0; // q_k rho - p_k has sign (-1)^k
        if (lower && d <= 0.0) return Side::TooSmall;
        if (!lower && d >= 0.0) return Side::TooBig;
    }
    return Side::Open;
}

} // namespace detail

/// Bisection over theta for the target combinatorics. The target prefix
/// stands for the quadratic irrational obtained by repeating its last quotient.
inline TuneResult tune_parameter(Family family, double b, const ContinuedFraction& target, double tol,
                                 long long max_iter = 10'000'000) {
    if (target.depth() < 8) throw DomainError("tune_parameter: target depth must be >= 8");
    if (tol < 1e-14) throw DomainError("tune_parameter: tol must be >= 1e-14");
    const double rho_t = target.periodic_value();
    // Convergents of the target value, as deep as the iteration budget allows.
    ContinuedFraction deep = target.extended(40);
    Convergents conv = convergents(deep);

    if (family == Family::RigidRotation) {
        TuneResult r;
        r.theta = rho_t;
        r.lo = r.hi = rho_t;
        r.certified_level = target.depth();
        return r;
    }

    TuneResult r;
    double lo = 0.0, hi = std::nextafter(1.0, 0.0);
    if (detail::tuning_side(MapSpec::make(family, lo, b), conv, max_iter) != detail::Side::TooSmall ||
        detail::tuning_side(MapSpec::make(family, hi, b), conv, max_iter) != detail::Side::TooBig) {
        throw CertificationError("tune_parameter: target not bracketed by theta in [0,1)");
    }
    int steps = 0;
    double theta = 0.5 * (lo + hi);
    while (hi - lo > tol) {
        if (++steps > 200) {
            throw CertificationError("tune_parameter: no convergence after 200 steps, bracket [" +
                                     std::to_string(lo) + ", " + std::to_string(hi) + "]");
        }
        theta = 0.5 * (lo + hi);
        auto side = detail::tuning_side(MapSpec::make(family, theta, b), conv, max_iter);
        if (side == detail::Side::Open) {
            const double nudged = theta + tol / 10.0;
            if (nudged < hi) {
                side = detail::tuning_side(MapSpec::make(family, nudged, b), conv, max_iter);
                if (side != detail::Side::Open) theta = nudged;
            }
        }
        if (side == detail::Side::Open) {
            r.resolution_limited = true;
            break;
        }
        (side == detail::Side::TooSmall ? lo : hi) = theta;
    }
    if (!r.resolution_limited) theta = 0.5 * (lo + hi);
    r.theta = theta;
    r.lo = lo;
    r.hi = hi;
    r.steps = steps;

    const MapSpec tuned = MapSpec::make(family, theta, b);
    const Convergents tc = convergents(target);
    for (int k = 1; k <= target.depth(); ++k) {
        if (!orbit_order_matches(tuned, rho_t, tc.q[k])) break;
        r.certified_level = k;
    }
    if (r.certified_level < target.depth()) {
        throw CertificationError("tune_parameter: orbit order differs from the rigid rotation at level " +
                                 std::to_string(r.certified_level + 1));
    }
    return r;
}

/// Convenience: tuned map for a target (periodically extended) prefix.
inline MapSpec tuned_map(Family family, double b, const ContinuedFraction& target, double tol = 1e-14) {
    return MapSpec::make(family, tune_parameter(family, b, target.depth() < 8 ? target.extended(8) : target, tol).theta,
                         b);
}

} // namespace renormlab
