#pragma once

#include "renormlab/common.hpp"

#include <optional>
#include <vector>

namespace renormlab {

/// phi(x) = x + eps + x^2 on J = [-1/2, 1/2]: the saddle-node normal form
/// just after the fixed points have gone complex. All lengths below are in
/// the normalized coordinate A(x) = (x + 1/2) / (x_a + 1/2), in which the
/// fundamental domains tile [0,1].
class AlmostParabolic {
public:
    static constexpr double kJLeft = -0.5;
    static constexpr double kJRight = 0.5;

    explicit AlmostParabolic(double eps) : eps_(eps) {
        if (!(eps >= 1e-5 && eps <= 1e-2)) throw DomainError("make_almost_parabolic: eps must lie in [1e-5, 1e-2]");
        orbit_.push_back(kJLeft);
        while (true) {
            const double next = phi(orbit_.back());
            if (next > kJRight) break;
            orbit_.push_back(next);
        }
        a_ = static_cast<int>(orbit_.size()) - 1;
        if (a_ < 2) throw DomainError("make_almost_parabolic: degenerate orbit");
        scale_ = orbit_.back() - kJLeft;
        sigma_ = std::min(fundamental_length(0), fundamental_length(a_ - 1));
    }

    [[nodiscard]] double eps() const { return eps_; }
    [[nodiscard]] int length() const { return a_; }
    [[nodiscard]] double sigma() const { return sigma_; }

    [[nodiscard]] double phi(double x) const { return x + eps_ + x * x; }
    [[nodiscard]] cplx phi(cplx z) const { return z + eps_ + z * z; }

    /// Original -> normalized coordinate and back.
    [[nodiscard]] cplx normalize(cplx z) const { return (z - kJLeft) / scale_; }
    [[nodiscard]] cplx denormalize(cplx w) const { return w * scale_ + kJLeft; }
    [[nodiscard]] double normalize(double x) const { return (x - kJLeft) / scale_; }

    /// phi^j(-1/2), j = 0..a.
    [[nodiscard]] double orbit(int j) const { return orbit_.at(static_cast<std::size_t>(j)); }

    /// Normalized length of phi^j(Delta), 0 <= j < a.
    [[nodiscard]] double fundamental_length(int j) const {
        return (orbit_.at(static_cast<std::size_t>(j) + 1) - orbit_.at(static_cast<std::size_t>(j))) / scale_;
    }

private:
    double eps_;
    std::vector<double> orbit_;
    int a_ = 0;
    double scale_ = 1.0;
    double sigma_ = 0.0;
};

inline AlmostParabolic make_almost_parabolic(double eps) { return AlmostParabolic(eps); }

struct YoccozRow {
    int j = 0;
    double length = 0.0;
    int m = 0;
    double product = 0.0;
};

struct YoccozProfile {
    std::vector<YoccozRow> rows;
    /// Smallest C with 1/C <= |phi^j(Delta)| m(j)^2 <= C for every j.
    double c_fit = 0.0;
};

inline YoccozProfile yoccoz_profile(const AlmostParabolic& ap) {
    YoccozProfile p;
    const int a = ap.length();
    for (int j = 0; j < a; ++j) {
        YoccozRow r;
        r.j = j;
        r.length = ap.fundamental_length(j);
        r.m = std::min(j + 1, a - j);
        r.product = r.length * r.m * r.m;
        p.c_fit = std::max({p.c_fit, r.product, 1.0 / r.product});
        p.rows.push_back(r);
    }
    return p;
}

struct FixedPointReport {
    cplx z_plus_original;
    cplx z_plus;
    double check = 0.0;
    double residual = 0.0;
};

/// The complex fixed points +-i sqrt(eps) of phi. `check` is a * Im z_+ in
/// normalized coordinates.
inline FixedPointReport complex_fixed_points(const AlmostParabolic& ap) {
    FixedPointReport r;
    r.z_plus_original = cplx(0.0, std::sqrt(ap.eps()));
    r.z_plus = ap.normalize(r.z_plus_original);
    r.check = ap.length() * r.z_plus.imag();
    r.residual = std::abs(ap.phi(r.z_plus_original) - r.z_plus_original);
    return r;
}

inline constexpr int kEscapeStepCap = 10'000;

/// Smallest n with phi^n(z) within distance `radius` of [0,1] (normalized
/// coordinates), or nullopt if that does not happen within the step cap.
/// The map is only used on the closed disk |x| <= 1/2 of the original
/// coordinate; leaving it is an error.
inline std::optional<int> escape_time(const AlmostParabolic& ap, cplx z, double radius,
                                      int step_cap = kEscapeStepCap) {
    if (!(radius > 0.0)) throw DomainError("escape_time: target radius must be positive");
    if (z.imag() < 0.0) throw DomainError("escape_time: start must lie in the upper half-plane");
    cplx x = ap.denormalize(z);
    for (int n = 0; n <= step_cap; ++n) {
        if (std::abs(x) > 0.5) {
            throw DomainError("escape_time: orbit left the domain of analyticity at step " + std::to_string(n));
        }
        if (dist_to_segment(ap.normalize(x), 0.0, 1.0) < radius) return n;
        x = ap.phi(x);
    }
    return std::nullopt;
}

} // namespace renormlab
