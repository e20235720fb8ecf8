#pragma once

#include "renormlab/common.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace renormlab {

enum class Family { RigidRotation, Arnold, PerturbedArnold };

inline std::string_view to_string(Family f) {
    switch (f) {
    case Family::RigidRotation: return "RigidRotation";
    case Family::Arnold: return "Arnold";
    case Family::PerturbedArnold: return "PerturbedArnold";
    }
    return "?";
}

inline Family family_from_string(std::string_view s) {
    if (s == "RigidRotation") return Family::RigidRotation;
    if (s == "Arnold") return Family::Arnold;
    if (s == "PerturbedArnold") return Family::PerturbedArnold;
    throw DomainError("unknown map family '" + std::string(s) + "'");
}

/// Height of the annulus |Im z| < R on which complex evaluation is allowed.
inline constexpr double kAnnulusRadius = 1.0;

/// Largest perturbation amplitude accepted for PerturbedArnold.
inline constexpr double kMaxPerturbation = 0.05;

/// Below this amplitude the sin^3 perturbation destroys monotonicity at 0.
inline constexpr double kMinPerturbation = -1.0 / (12.0 * kPi);

/// A member of one of the analytic circle-map families, described by its
/// degree-one lift
///   F(x) = x + theta - sin(2 pi x) / (2 pi) + b sin^3(2 pi x).
/// Immutable once constructed; invalid parameters are rejected up front.
class MapSpec {
public:
    static MapSpec rigid_rotation(double theta) { return MapSpec(Family::RigidRotation, theta, 0.0); }
    static MapSpec arnold(double theta) { return MapSpec(Family::Arnold, theta, 0.0); }
    static MapSpec perturbed_arnold(double theta, double b) { return MapSpec(Family::PerturbedArnold, theta, b); }
    static MapSpec make(Family f, double theta, double b = 0.0) { return MapSpec(f, theta, b); }

    [[nodiscard]] Family family() const { return family_; }
    [[nodiscard]] double theta() const { return theta_; }
    [[nodiscard]] double b() const { return b_; }
    [[nodiscard]] bool is_critical_family() const { return family_ != Family::RigidRotation; }

    [[nodiscard]] MapSpec with_theta(double theta) const { return MapSpec(family_, theta, b_); }

    friend bool operator==(const MapSpec&, const MapSpec&) = default;

private:
    MapSpec(Family f, double theta, double b) : family_(f), theta_(theta), b_(b) {
        if (!(theta >= 0.0 && theta < 1.0)) {
            throw DomainError("MapSpec: theta must lie in [0,1), got " + std::to_string(theta));
        }
        if (f != Family::PerturbedArnold && b != 0.0) {
            throw DomainError("MapSpec: perturbation amplitude only applies to PerturbedArnold");
        }
        if (f == Family::PerturbedArnold && (std::abs(b) > kMaxPerturbation || b <= kMinPerturbation)) {
            throw DomainError("MapSpec: perturbation amplitude " + std::to_string(b) +
                              " outside the critical range (-1/(12 pi), 0.05]");
        }
    }

    Family family_;
    double theta_;
    double b_;
};

/// Point of the cylinder C/Z; x is kept in [0,1).
struct CylinderPoint {
    double x = 0.0;
    double y = 0.0;

    static CylinderPoint from(cplx z) { return {frac(z.real()), z.imag()}; }
    [[nodiscard]] cplx as_complex() const { return {x, y}; }
};

namespace detail {

template <typename T>
T lift_value(const MapSpec& spec, T x) {
    if (spec.family() == Family::RigidRotation) {
        return x + spec.theta();
    }
    const T s = std::sin(kTwoPi * x);
    T out = x + spec.theta() - s / kTwoPi;
    if (spec.family() == Family::PerturbedArnold) {
        out += spec.b() * s * s * s;
    }
    return out;
}

template <typename T>
T lift_derivative1(const MapSpec& spec, T x) {
    if (spec.family() == Family::RigidRotation) {
        return T(1.0);
    }
    const T s = std::sin(kTwoPi * x);
    const T c = std::cos(kTwoPi * x);
    T out = T(1.0) - c;
    if (spec.family() == Family::PerturbedArnold) {
        out += 3.0 * kTwoPi * spec.b() * s * s * c;
    }
    return out;
}

} // namespace detail

/// F(x) for the lift.
inline double eval_lift(const MapSpec& spec, double x) { return detail::lift_value(spec, x); }

/// Holomorphic extension of the lift to C (no reduction mod 1, no domain check).
inline cplx eval_lift_complex(const MapSpec& spec, cplx z) { return detail::lift_value(spec, z); }

/// Complex derivative F'(z) of the lift.
inline cplx derivative_complex(const MapSpec& spec, cplx z) { return detail::lift_derivative1(spec, z); }

/// Holomorphic extension evaluated on the cylinder; refuses points outside
/// the annulus |Im z| < kAnnulusRadius.
inline CylinderPoint eval_complex(const MapSpec& spec, CylinderPoint p) {
    if (!(std::abs(p.y) < kAnnulusRadius)) {
        throw DomainError("eval_complex: |Im z| = " + std::to_string(std::abs(p.y)) + " leaves the annulus");
    }
    return CylinderPoint::from(eval_lift_complex(spec, p.as_complex()));
}

/// Closed-form derivative of the lift of order 1, 2 or 3.
inline double derivative(const MapSpec& spec, double x, int order) {
    if (order < 1 || order > 3) {
        throw DomainError("derivative: order must be 1, 2 or 3");
    }
    if (spec.family() == Family::RigidRotation) {
        return order == 1 ? 1.0 : 0.0;
    }
    const double s = std::sin(kTwoPi * x);
    const double c = std::cos(kTwoPi * x);
    const double b = spec.family() == Family::PerturbedArnold ? spec.b() : 0.0;
    switch (order) {
    case 1:
        return 1.0 - c + 3.0 * kTwoPi * b * s * s * c;
    case 2:
        return kTwoPi * s + 3.0 * kTwoPi * kTwoPi * b * (2.0 * s * c * c - s * s * s);
    default:
        return kTwoPi * kTwoPi * c + 3.0 * kTwoPi * kTwoPi * kTwoPi * b * (2.0 * c * c * c - 7.0 * s * s * c);
    }
}

struct CriticalityReport {
    double critical_point = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
    double d3 = 0.0;
    double grid_min_d1 = 0.0;
    int grid_points = 0;
    bool pass = false;
};

/// Checks that 0 is a cubic critical point and that the lift is monotone.
inline CriticalityReport verify_critical_cubic(const MapSpec& spec, int grid_points = 20000) {
    CriticalityReport r;
    r.d1 = derivative(spec, 0.0, 1);
    r.d2 = derivative(spec, 0.0, 2);
    r.d3 = derivative(spec, 0.0, 3);
    r.grid_points = grid_points;
    double m = r.d1;
    for (int i = 0; i < grid_points; ++i) {
        m = std::min(m, derivative(spec, static_cast<double>(i) / grid_points, 1));
    }
    r.grid_min_d1 = m;
    r.pass = std::abs(r.d1) <= 1e-12 && std::abs(r.d2) <= 1e-12 && r.d3 > 0.0 && m >= -1e-12;
    return r;
}

/// Lift position split into an integer winding count and a fractional part in
/// [0,1). Keeps full absolute precision along long orbits.
struct LiftPoint {
    long long wind = 0;
    double pos = 0.0;

    [[nodiscard]] double value() const { return static_cast<double>(wind) + pos; }
    /// Value of this point minus the integer p, without cancellation loss.
    [[nodiscard]] double minus(long long p) const { return static_cast<double>(wind - p) + pos; }
};

inline LiftPoint reduce(double x) {
    const double f = std::floor(x);
    return {static_cast<long long>(f), x - f};
}

/// One step of the lift, with the result re-reduced.
inline LiftPoint step(const MapSpec& spec, LiftPoint p) {
    LiftPoint q = reduce(eval_lift(spec, p.pos));
    q.wind += p.wind;
    return q;
}

/// F^n(x) in reduced form.
inline LiftPoint iterate(const MapSpec& spec, double x, long long n) {
    LiftPoint p = reduce(x);
    for (long long i = 0; i < n; ++i) {
        p = step(spec, p);
    }
    return p;
}

/// Complex analogue of LiftPoint: integer winding plus a point whose real part
/// lies in [0,1).
struct ComplexLiftPoint {
    long long wind = 0;
    cplx pos;

    [[nodiscard]] cplx minus(long long p) const { return cplx(static_cast<double>(wind - p), 0.0) + pos; }
};

inline ComplexLiftPoint reduce(cplx z) {
    const double f = std::floor(z.real());
    return {static_cast<long long>(f), cplx(z.real() - f, z.imag())};
}

/// F^n(z) - p computed step by step on the cylinder. Returns nullopt if some
/// iterate leaves the annulus of definition. When `deriv` is given it receives
/// the complex derivative of F^n at z.
inline std::optional<cplx> iterate_complex(const MapSpec& spec, cplx z, long long n, long long p,
                                           cplx* deriv = nullptr) {
    ComplexLiftPoint w = reduce(z);
    cplx d(1.0, 0.0);
    for (long long i = 0; i < n; ++i) {
        if (!(std::abs(w.pos.imag()) < kAnnulusRadius)) {
            return std::nullopt;
        }
        if (deriv != nullptr) {
            d *= derivative_complex(spec, w.pos);
        }
        ComplexLiftPoint nxt = reduce(eval_lift_complex(spec, w.pos));
        nxt.wind += w.wind;
        w = nxt;
    }
    if (!(std::abs(w.pos.imag()) < kAnnulusRadius) || !std::isfinite(w.pos.real())) {
        return std::nullopt;
    }
    if (deriv != nullptr) {
        *deriv = d;
    }
    return w.minus(p);
}

/// Real inverse of the lift: the unique x with F(x) = y.
inline double inverse_lift(const MapSpec& spec, double y) {
    if (spec.family() == Family::RigidRotation) {
        return y - spec.theta();
    }
    // |F(x) - x - theta| <= 1/(2 pi) + 0.05, so the root is bracketed.
    double lo = y - spec.theta() - 0.3;
    double hi = y - spec.theta() + 0.3;
    double x = y - spec.theta();
    for (int it = 0; it < 200; ++it) {
        const double fx = eval_lift(spec, x) - y;
        if (fx > 0.0) hi = x; else lo = x;
        const double d = derivative(spec, x, 1);
        double nx = d > 0.0 ? x - fx / d : 0.5 * (lo + hi);
        if (!(nx > lo && nx < hi)) {
            nx = 0.5 * (lo + hi);
        }
        if (std::abs(nx - x) <= 1e-17 * std::max(1.0, std::abs(x)) || hi - lo <= 4e-16 * std::max(1.0, std::abs(x))) {
            return nx;
        }
        x = nx;
    }
    return x;
}

/// F^{-n}(x) in reduced form.
inline LiftPoint iterate_inverse(const MapSpec& spec, double x, long long n) {
    LiftPoint p = reduce(x);
    for (long long i = 0; i < n; ++i) {
        LiftPoint q = reduce(inverse_lift(spec, p.pos));
        q.wind += p.wind;
        p = q;
    }
    return p;
}

} // namespace renormlab
