#pragma once

#include "renormlab/renorm.hpp"

#include <functional>
#include <optional>
#include <random>
#include <vector>

namespace renormlab {

/// Points seeing the real segment [a,b] under a visual angle >= angle.
struct PoincareRegion {
    double a = 0.0;
    double b = 1.0;
    double angle = kPi / 2;

    PoincareRegion(double a_, double b_, double angle_) : a(a_), b(b_), angle(angle_) {
        if (!(b > a)) throw DomainError("PoincareRegion: need a < b");
        if (!(angle > 0.0 && angle < kPi)) throw DomainError("PoincareRegion: angle must lie in (0, pi)");
    }

    [[nodiscard]] double half_width() const { return 0.5 * (b - a); }
    [[nodiscard]] double mid() const { return 0.5 * (a + b); }
    /// Center (upper half) and radius of the arc along which the angle is exact.
    [[nodiscard]] cplx arc_center() const { return {mid(), half_width() / std::tan(angle)}; }
    [[nodiscard]] double arc_radius() const { return half_width() / std::sin(angle); }
};

/// Membership through the inscribed-angle circles: the upper part of the
/// region is the disk bounded by the circle through a and b whose center sits
/// at height r cot(angle); the lower part is its mirror image. Real points
/// count as outside.
inline bool poincare_contains(const PoincareRegion& reg, cplx z) {
    if (z.imag() == 0.0) return false;
    const cplx w(z.real(), std::abs(z.imag()));
    return std::norm(w - reg.arc_center()) <= reg.arc_radius() * reg.arc_radius();
}

/// Upper boundary arc of the region, `samples` interior points of the arc.
inline std::vector<cplx> poincare_boundary(const PoincareRegion& reg, int samples) {
    const cplx c = reg.arc_center();
    const double R = reg.arc_radius();
    // Angular positions of a and b seen from the center.
    const double phi_b = std::atan2(-c.imag(), reg.b - c.real());
    const double phi_a = std::atan2(-c.imag(), reg.a - c.real());
    double span = phi_a - phi_b;
    while (span <= 0.0) span += kTwoPi;
    std::vector<cplx> pts;
    pts.reserve(static_cast<std::size_t>(samples));
    for (int i = 1; i <= samples; ++i) {
        const double t = phi_b + span * i / (samples + 1.0);
        pts.push_back(c + std::polar(R, t));
    }
    return pts;
}

struct QuasiInvariance {
    double theta_min_out = 0.0;
    double loss = 0.0;
    int used = 0;
    int excluded = 0;
};

/// Pushes the boundary of P_theta(J) through a map G fixing both ends of J and
/// reports the worst loss of visual angle. Each sample is compared with its
/// own visual angle so that the identity loses exactly nothing.
inline QuasiInvariance quasi_invariance_measure(const std::function<cplx(cplx)>& G, double a, double b, double theta,
                                                int samples) {
    const PoincareRegion reg(a, b, theta);
    QuasiInvariance q;
    double worst = 0.0;
    bool first = true;
    for (const cplx z0 : poincare_boundary(reg, samples)) {
        for (const cplx z : {z0, std::conj(z0)}) {
            const cplx w = G(z);
            if (w.imag() == 0.0 && w.real() >= a && w.real() <= b) {
                ++q.excluded;
                continue;
            }
            const double drop = visual_angle(a, b, z) - visual_angle(a, b, w);
            worst = first ? drop : std::max(worst, drop);
            first = false;
            ++q.used;
        }
    }
    if (q.excluded * 10 > q.used + q.excluded) {
        throw PrecisionError("quasi_invariance_measure: more than 10% of the images landed on J");
    }
    q.loss = worst;
    q.theta_min_out = theta - worst;
    return q;
}

/// Same measurement for the lift of `spec` on J = [a,b], renormalized so that
/// the endpoints of J are fixed.
inline QuasiInvariance quasi_invariance_measure(const MapSpec& spec, double a, double b, double theta, int samples) {
    if (b - a > 0.05) throw DomainError("quasi_invariance_measure: |J| must be <= 0.05");
    if (spec.family() == Family::RigidRotation) {
        return quasi_invariance_measure([](cplx z) { return z; }, a, b, theta, samples);
    }
    if (!(derivative(spec, a, 1) > 0.0 && derivative(spec, b, 1) > 0.0) || (a <= 0.0 && b >= 0.0)) {
        throw DomainError("quasi_invariance_measure: J must avoid the critical point");
    }
    const double Fa = eval_lift(spec, a);
    const double k = (b - a) / (eval_lift(spec, b) - Fa);
    return quasi_invariance_measure([&](cplx z) { return a + (eval_lift_complex(spec, z) - Fa) * k; }, a, b, theta,
                                    samples);
}

struct CubicGrowth {
    double c = 0.0;
    int count = 0;
    int discarded = 0;
};

/// Samples z with B < |z| < r_max uniformly in area, keeps those where the map
/// is defined and |g(z)| < R, and returns min |g(z)| / |z|^3.
inline CubicGrowth cubic_growth_check(const std::function<std::optional<cplx>(cplx)>& g, double B, double R,
                                      double r_max, int samples, std::uint64_t seed) {
    if (!(r_max > B && B > 0.0)) throw DomainError("cubic_growth_check: need 0 < B < r_max");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    CubicGrowth out;
    out.c = std::numeric_limits<double>::infinity();
    for (int i = 0; i < samples; ++i) {
        const double r = std::sqrt(B * B + (r_max * r_max - B * B) * u(rng));
        const double t = kTwoPi * u(rng);
        const cplx z = std::polar(r, t);
        const auto w = g(z);
        if (!w || !(std::abs(*w) < R)) {
            ++out.discarded;
            continue;
        }
        out.c = std::min(out.c, std::abs(*w) / (r * r * r));
        ++out.count;
    }
    if (out.count < 50) {
        throw InsufficientDataError("cubic_growth_check: only " + std::to_string(out.count) + " samples retained");
    }
    return out;
}

/// The harness applied to the eta branch of R^n f.
inline CubicGrowth cubic_growth_check(const MapSpec& f, const ContinuedFraction& cf, int n, double B, double R,
                                      int samples, std::uint64_t seed, double r_max = 0.0) {
    const auto p = renormalize(commuting_pair(return_structure(f, cf, n)));
    if (r_max <= 0.0) r_max = 1.5 * B;
    return cubic_growth_check([&p](cplx z) { return p.eta_hat(z); }, B, R, r_max, samples, seed);
}

struct ReturnDisk {
    int m = 0;
    double center = 0.0;
    double radius = 0.0;
    double left = 0.0;
    double right = 0.0;

    [[nodiscard]] bool contains(cplx z) const { return std::abs(z - center) < radius; }
};

/// D_m: the disk whose diameter is the real interval between f^{q_{m+1}}(c)
/// and f^{q_m - q_{m+1}}(c); the second point is a backward iterate.
inline ReturnDisk return_disk(const ReturnStructure& rs, int m) {
    if (m < 0 || m > rs.level()) throw DomainError("return_disk: m out of range");
    const double x1 = rs.d(m + 1);
    const double x2 = iterate_inverse(rs.spec(), 0.0, rs.q(m + 1) - rs.q(m)).minus(rs.p(m) - rs.p(m + 1));
    ReturnDisk D;
    D.m = m;
    D.left = std::min(x1, x2);
    D.right = std::max(x1, x2);
    D.center = 0.5 * (x1 + x2);
    D.radius = 0.5 * std::abs(x1 - x2);
    return D;
}

/// Radius R_0 of the disks on which local inverse branches are trusted:
/// 0.1, or half the distance from the real line to the nearest non-real
/// critical value in the annulus if that is smaller.
inline double inverse_branch_radius(const MapSpec& spec) {
    double r0 = 0.1;
    if (spec.family() != Family::PerturbedArnold) return r0;
    // Locate complex zeros of F' by Newton from a grid of seeds.
    for (int i = 0; i < 40; ++i) {
        for (int j = 1; j <= 20; ++j) {
            cplx z(i / 40.0, 0.05 * j * (j % 2 ? 1 : -1));
            for (int it = 0; it < 60; ++it) {
                const double h = 1e-7;
                const cplx d1 = derivative_complex(spec, z);
                const cplx d2 = (derivative_complex(spec, z + h) - derivative_complex(spec, z - h)) / (2 * h);
                if (std::abs(d2) == 0.0) break;
                z -= d1 / d2;
                if (std::abs(z.imag()) > 2.0) break;
            }
            if (std::abs(derivative_complex(spec, z)) < 1e-10 && std::abs(z.imag()) > 1e-6 &&
                std::abs(z.imag()) < kAnnulusRadius) {
                const cplx v = eval_lift_complex(spec, z);
                r0 = std::min(r0, 0.5 * std::abs(v.imag()));
            }
        }
    }
    return r0;
}

/// One local inverse of the lift: the solution of F(w) = z near the real
/// preimage of Re z, by Newton iteration confined to a disk of radius `guard`
/// around the seed.
inline std::optional<cplx> local_inverse(const MapSpec& spec, cplx z, double guard) {
    const double x = inverse_lift(spec, z.real());
    const double d = derivative(spec, x, 1);
    if (!(d > 0.0)) return std::nullopt;
    const cplx seed(x, z.imag() / d);
    cplx w = seed;
    for (int it = 0; it < 60; ++it) {
        const cplx fw = eval_lift_complex(spec, w) - z;
        const cplx dw = derivative_complex(spec, w);
        if (std::abs(dw) == 0.0) return std::nullopt;
        const cplx step = fw / dw;
        w -= step;
        if (std::abs(w - seed) > guard || !std::isfinite(w.real())) return std::nullopt;
        if (std::abs(step) <= 1e-16 * (1.0 + std::abs(w))) break;
    }
    if (std::abs(eval_lift_complex(spec, w) - z) > 1e-13 * (1.0 + std::abs(z))) return std::nullopt;
    return w;
}

/// k successive local inverses starting from z (lift coordinates). The
/// winding is carried separately so that the Newton steps run on reduced
/// values.
inline std::optional<cplx> pull_back(const MapSpec& spec, cplx z, long long k, double guard) {
    ComplexLiftPoint w = reduce(z);
    for (long long i = 0; i < k; ++i) {
        if (std::abs(w.pos.imag()) >= kAnnulusRadius) return std::nullopt;
        const auto v = local_inverse(spec, w.pos, guard);
        if (!v) return std::nullopt;
        ComplexLiftPoint r = reduce(*v);
        r.wind += w.wind;
        w = r;
    }
    return w.minus(0);
}

struct Prop33Sample {
    cplx z;
    double x = 0.0;   // dist(z, I_n) / |I_n|
    double lhs = 0.0; // dist(pullback, f(I_n)) / |f(I_n)|
};

struct Prop33Result {
    FitResult fit;
    std::vector<Prop33Sample> samples;
    int discarded = 0;
    double max_roundtrip_error = 0.0;
    double r0 = 0.0;
};

/// Pulls samples of D_{n-N} (and real points of f^{q_{n+1}}(I_n)) back along
/// the orbit by q_{n+1} - 1 local inverses and fits the normalized distance to
/// f(I_n) against the normalized distance to I_n.
inline Prop33Result prop33_inequality_fit(const MapSpec& f, const ContinuedFraction& cf, int n, int N, int samples,
                                          std::uint64_t seed) {
    if (N < 1 || N > n - 4) throw DomainError("prop33_inequality_fit: need 1 <= N <= n - 4");
    const auto rs = return_structure(f, cf, n);
    const ReturnDisk D = return_disk(rs, n - N);
    const double r0 = inverse_branch_radius(f);
    const double guard = 0.4 * r0;
    const long long k = rs.q(n + 1) - 1;
    const long long shift = rs.p(n + 1);
    const Arc In = rs.I(n);
    const double in_lo = std::min(0.0, rs.d(n)), in_hi = std::max(0.0, rs.d(n));
    const double fa = eval_lift(f, 0.0), fb = eval_lift(f, rs.d(n));
    const double f_lo = std::min(fa, fb), f_hi = std::max(fa, fb);
    const double f_len = f_hi - f_lo;

    Prop33Result res;
    res.r0 = r0;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<cplx> zs;
    const int n_real = std::max(4, samples / 10);
    // Real points of f^{q_{n+1}}(I_n), between d_{n+1} and its eta-image of d_n.
    const double r_lo = rs.d(n + 1);
    const double r_hi = rs.lift_diff(rs.q(n + 1) + rs.q(n), 0, rs.p(n + 1) + rs.p(n));
    for (int i = 0; i < n_real; ++i) zs.emplace_back(r_lo + (r_hi - r_lo) * (i + 0.5) / n_real, 0.0);
    while (static_cast<int>(zs.size()) < samples) {
        const double r = D.radius * std::sqrt(u(rng));
        const double t = kTwoPi * u(rng);
        const cplx z = D.center + std::polar(r, t);
        if (z.imag() == 0.0) continue;
        zs.push_back(z);
    }
    std::vector<double> xs, ys;
    for (const cplx z : zs) {
        const auto w = pull_back(f, z + static_cast<double>(shift), k, guard);
        if (!w) {
            ++res.discarded;
            continue;
        }
        const auto back = iterate_complex(f, *w, k, shift);
        if (back) res.max_roundtrip_error = std::max(res.max_roundtrip_error, std::abs(*back - z));
        Prop33Sample s;
        s.z = z;
        s.x = dist_to_segment(z, in_lo, in_hi) / In.length;
        s.lhs = dist_to_segment(*w, f_lo, f_hi) / f_len;
        res.samples.push_back(s);
        xs.push_back(s.x);
        ys.push_back(s.lhs);
    }
    if (res.samples.size() < 30) {
        throw InsufficientDataError("prop33_inequality_fit: only " + std::to_string(res.samples.size()) +
                                    " samples survived");
    }
    res.fit = linear_fit(xs, ys);
    return res;
}

struct ModulusBounds {
    double lower = 0.0;
    double sep = 0.0;
    double diam = 0.0;
};

/// (4/pi) (sep/diam)^2, a lower bound for the modulus of an annulus of
/// diameter `diam` whose two boundary components are `sep` apart.
inline ModulusBounds modulus_lower_bound(double sep, double diam) {
    if (!(diam > 0.0)) throw DomainError("modulus_lower_bound: diameter must be positive");
    if (sep < 0.0) throw DomainError("modulus_lower_bound: negative separation");
    if (sep > diam) throw DomainError("modulus_lower_bound: separation exceeds diameter");
    const double r = sep / diam;
    return {4.0 / kPi * r * r, sep, diam};
}

} // namespace renormlab
