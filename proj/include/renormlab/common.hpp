#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace renormlab {

using cplx = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kGolden = 0.6180339887498949;  // (sqrt(5) - 1) / 2
inline constexpr double kSilver = 0.41421356237309515; // sqrt(2) - 1

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// A combinatorial or geometric certificate could not be established.
class CertificationError : public Error {
public:
    using Error::Error;
};

/// Floating point resolution is exhausted for the requested computation.
class PrecisionError : public Error {
public:
    using Error::Error;
};

/// Too few usable data points survived filtering.
class InsufficientDataError : public Error {
public:
    using Error::Error;
};

inline double frac(double x) { return x - std::floor(x); }

/// Closed arc of the circle R/Z, stored as a left endpoint in [0,1) and a
/// length. Arcs of length >= 1 are not representable.
struct Arc {
    double left = 0.0;
    double length = 0.0;

    [[nodiscard]] double right() const { return left + length; }

    /// Arc between two lift points; order of the arguments is irrelevant.
    static Arc between(double x, double y) {
        const double lo = std::min(x, y);
        return Arc{frac(lo), std::abs(x - y)};
    }

    /// Offset of `x` measured counterclockwise from the left endpoint, in [0,1).
    [[nodiscard]] double offset(double x) const { return frac(x - left); }

    [[nodiscard]] bool contains(const Arc& inner, double tol) const {
        double off = frac(inner.left - left + tol) - tol;
        return off >= -tol && off + inner.length <= length + tol;
    }
};

/// Pairwise disjointness of arc interiors up to `tol` of overlap.
inline bool arcs_disjoint(std::span<const Arc> arcs, double tol = 1e-12) {
    if (arcs.size() < 2) {
        return true;
    }
    std::vector<Arc> sorted(arcs.begin(), arcs.end());
    std::sort(sorted.begin(), sorted.end(), [](const Arc& a, const Arc& b) { return a.left < b.left; });
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        if (sorted[i].right() > sorted[i + 1].left + tol) {
            return false;
        }
    }
    return sorted.back().right() <= sorted.front().left + 1.0 + tol;
}

/// Least-squares line through (x_i, y_i): the shared record of every
/// power-law and exponential-rate claim.
struct FitResult {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    int n_points = 0;
};

inline FitResult linear_fit(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) {
        throw DomainError("linear_fit: size mismatch");
    }
    if (xs.size() < 4) {
        throw InsufficientDataError("linear_fit: need at least 4 points, got " + std::to_string(xs.size()));
    }
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx, dy = ys[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0) {
        throw DomainError("linear_fit: abscissae are all equal");
    }
    FitResult fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r2 = syy == 0.0 ? 1.0 : std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0);
    fit.n_points = static_cast<int>(xs.size());
    return fit;
}

/// Visual angle under which the real segment [a,b] is seen from z, in [0, pi].
inline double visual_angle(double a, double b, cplx z) {
    const cplx u = cplx(a) - z;
    const cplx v = cplx(b) - z;
    const double cross = u.real() * v.imag() - u.imag() * v.real();
    const double dot = u.real() * v.real() + u.imag() * v.imag();
    return std::abs(std::atan2(cross, dot));
}

/// Distance from z to the real segment [a,b].
inline double dist_to_segment(cplx z, double a, double b) {
    const double x = std::clamp(z.real(), std::min(a, b), std::max(a, b));
    return std::abs(z - cplx(x));
}

} // namespace renormlab
