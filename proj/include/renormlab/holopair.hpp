#pragma once

#include "renormlab/complexgeom.hpp"

#include <array>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace renormlab {

/// Closed polyline; the last vertex connects back to the first.
struct Polygon {
    std::vector<cplx> v;

    /// Winding number of the boundary around z.
    [[nodiscard]] int winding(cplx z) const {
        int wn = 0;
        const std::size_t n = v.size();
        for (std::size_t i = 0; i < n; ++i) {
            const cplx p = v[i], q = v[(i + 1) % n];
            const double cross = (q.real() - p.real()) * (z.imag() - p.imag()) -
                                 (z.real() - p.real()) * (q.imag() - p.imag());
            if (p.imag() <= z.imag()) {
                if (q.imag() > z.imag() && cross > 0) ++wn;
            } else if (q.imag() <= z.imag() && cross < 0) {
                --wn;
            }
        }
        return wn;
    }

    [[nodiscard]] bool contains(cplx z) const { return winding(z) != 0; }

    [[nodiscard]] double boundary_distance(cplx z) const {
        double best = std::numeric_limits<double>::infinity();
        const std::size_t n = v.size();
        for (std::size_t i = 0; i < n; ++i) {
            const cplx p = v[i], q = v[(i + 1) % n];
            const cplx e = q - p;
            const double len2 = std::norm(e);
            double t = len2 > 0 ? ((z - p) * std::conj(e)).real() / len2 : 0.0;
            t = std::clamp(t, 0.0, 1.0);
            best = std::min(best, std::abs(z - (p + t * e)));
        }
        return best;
    }
};

struct Disk {
    cplx center;
    double radius = 0.0;
    [[nodiscard]] bool contains(cplx z) const { return std::abs(z - center) < radius; }
};

/// Holomorphic branch: value and derivative at z, or nullopt when undefined.
using Branch = std::function<std::optional<cplx>(cplx, cplx*)>;

namespace detail {

inline std::optional<cplx> newton_solve(const Branch& G, cplx w, cplx z, double tol, int max_iter = 40) {
    for (int it = 0; it < max_iter; ++it) {
        cplx d;
        const auto v = G(z, &d);
        if (!v || std::abs(d) == 0.0) return std::nullopt;
        const cplx r = *v - w;
        // Rounding in G grows with |G'|, so the residual test scales with it.
        if (std::abs(r) <= tol * std::max(1.0, std::abs(d))) return z;
        z -= r / d;
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return std::nullopt;
    }
    cplx d;
    const auto v = G(z, &d);
    if (v && std::abs(*v - w) <= 10 * tol * std::max(1.0, std::abs(d))) return z;
    return std::nullopt;
}

/// Follows the solution of G(z) = w(t) along the straight segment from
/// w_from (where z_from solves it) to w_to, with adaptive steps.
inline std::optional<cplx> continue_along(const Branch& G, cplx w_from, cplx z_from, cplx w_to, double hmax,
                                          double tol) {
    double t = 0.0, dt = 1.0;
    cplx z = z_from;
    int guard = 0;
    while (t < 1.0) {
        if (++guard > 4000 || dt < 1e-9) return std::nullopt;
        const double t1 = std::min(1.0, t + dt);
        const cplx w0 = w_from + t * (w_to - w_from);
        const cplx w1 = w_from + t1 * (w_to - w_from);
        cplx d;
        const auto v = G(z, &d);
        if (!v || std::abs(d) == 0.0) return std::nullopt;
        const cplx pred = z + (w1 - w0) / d;
        if (std::abs(pred - z) > hmax) {
            dt *= 0.5;
            continue;
        }
        const auto sol = newton_solve(G, w1, pred, tol, 12);
        // A poor predictor means a nearby critical point; shrink the step
        // rather than risk jumping to another branch.
        if (!sol || std::abs(*sol - pred) > 0.25 * std::abs(pred - z) + 1e-10) {
            dt *= 0.5;
            continue;
        }
        z = *sol;
        t = t1;
        dt *= 1.5;
    }
    return z;
}

/// Root of a monotone real function on [lo, hi] by bisection.
template <typename Fn>
double bisect(Fn&& g, double target, double lo, double hi) {
    double glo = g(lo) - target;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double gm = g(mid) - target;
        if ((gm > 0) == (glo > 0)) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

inline std::vector<cplx> resample(const std::vector<cplx>& pts, int count) {
    std::vector<double> acc(pts.size(), 0.0);
    for (std::size_t i = 1; i < pts.size(); ++i) acc[i] = acc[i - 1] + std::abs(pts[i] - pts[i - 1]);
    std::vector<cplx> out;
    out.reserve(static_cast<std::size_t>(count));
    std::size_t j = 0;
    for (int k = 0; k < count; ++k) {
        const double s = acc.back() * k / (count - 1);
        while (j + 2 < pts.size() && acc[j + 1] < s) ++j;
        const double seg = acc[j + 1] - acc[j];
        const double t = seg > 0 ? std::clamp((s - acc[j]) / seg, 0.0, 1.0) : 0.0;
        out.push_back(pts[j] + t * (pts[j + 1] - pts[j]));
    }
    out.front() = pts.front();
    out.back() = pts.back();
    return out;
}

} // namespace detail

inline constexpr int kBoundaryVertices = 512;
inline constexpr double kDefaultLambda = 3.0;

/// A holomorphic pair over level n of a critical circle map, in the
/// normalized coordinate of R^n f.
class HoloPair {
public:
    HoloPair(const MapSpec& f, const ContinuedFraction& cf, int n, double lambda)
        : pair_(renormalize(commuting_pair(return_structure(f, cf, n)))), level_(n), lambda_(lambda) {
        if (n < 6) throw DomainError("build_holo_pair: level must be >= 6");
        if (!f.is_critical_family()) throw DomainError("build_holo_pair: map must be critical");
        if (!(lambda > 1.0)) throw DomainError("build_holo_pair: lambda must exceed 1");
        const auto rs = return_structure(f, cf, n);
        s_ = pair_.ratio();
        tol_ = 1e-4 * (1.0 + s_);
        // Rounding noise of one evaluation of eta in normalized units.
        newton_tol_ = std::max(1e-12, 4e-16 * static_cast<double>(pair_.eta_exponent()) / std::abs(pair_.scale()));
        locate_real_data(rs);
        V_ = Disk{cplx(0.5 * (1.0 - s_), 0.0), 0.5 * lambda * (1.0 + s_)};
        trace_domains();
        certify();
    }

    [[nodiscard]] int level() const { return level_; }
    [[nodiscard]] double lambda() const { return lambda_; }
    [[nodiscard]] double s() const { return s_; }
    [[nodiscard]] double a() const { return a_; }
    [[nodiscard]] double b() const { return b_; }
    [[nodiscard]] int height() const { return m_; }
    [[nodiscard]] double J_length() const { return b_ - a_; }
    [[nodiscard]] const Disk& V() const { return V_; }
    [[nodiscard]] const Polygon& O_xi() const { return O_xi_; }
    [[nodiscard]] const Polygon& O_eta() const { return O_eta_; }
    [[nodiscard]] const Polygon& O_nu() const { return O_nu_; }
    [[nodiscard]] double vertex_tol() const { return tol_; }
    [[nodiscard]] double nu_left() const { return nu_left_; }
    [[nodiscard]] double nu_right() const { return nu_right_; }
    [[nodiscard]] const NormalizedPair& pair() const { return pair_; }

    /// Copy with V rescaled about its center; domains are not retraced.
    [[nodiscard]] HoloPair with_V_scaled(double factor) const {
        HoloPair h = *this;
        h.V_.radius *= factor;
        return h;
    }

    [[nodiscard]] std::optional<cplx> xi(cplx z, cplx* d = nullptr) const { return pair_.xi_hat(z, d); }
    [[nodiscard]] std::optional<cplx> eta(cplx z, cplx* d = nullptr) const { return pair_.eta_hat(z, d); }
    [[nodiscard]] std::optional<cplx> nu(cplx z, cplx* d = nullptr) const {
        cplx d1, d2;
        const auto u = eta(z, d ? &d1 : nullptr);
        if (!u) return std::nullopt;
        const auto w = xi(*u, d ? &d2 : nullptr);
        if (!w) return std::nullopt;
        if (d) *d = d1 * d2;
        return w;
    }
    [[nodiscard]] double xi(double x) const { return pair_.xi_hat(x); }
    [[nodiscard]] double eta(double x) const { return pair_.eta_hat(x); }

    [[nodiscard]] Branch xi_branch() const {
        return [this](cplx z, cplx* d) { return xi(z, d); };
    }
    [[nodiscard]] Branch eta_branch() const {
        return [this](cplx z, cplx* d) { return eta(z, d); };
    }
    [[nodiscard]] Branch nu_branch() const {
        return [this](cplx z, cplx* d) { return nu(z, d); };
    }

    [[nodiscard]] bool in_U(cplx z) const { return O_xi_.contains(z) || O_eta_.contains(z) || O_nu_.contains(z); }

    [[nodiscard]] double boundary_distance(cplx z) const {
        return std::min({O_xi_.boundary_distance(z), O_eta_.boundary_distance(z), O_nu_.boundary_distance(z)});
    }

    // ---- inverse branches -------------------------------------------------

    /// xi^{-1} onto O_xi, for w in V minus the real line outside [xi(a), 1].
    [[nodiscard]] std::optional<cplx> xi_inverse(cplx w) const {
        return real_continued_inverse(xi_branch(), w, xi_a_, 1.0, a_, 0.0);
    }
    /// eta^{-1} onto O_eta, for w in V minus the real line outside [-s, 1].
    [[nodiscard]] std::optional<cplx> eta_inverse(cplx w) const {
        return real_continued_inverse(eta_branch(), w, -s_, 1.0, 0.0, b_);
    }
    /// The (up to) three nu-preimages of w, for w in V minus the real line
    /// outside [eta(0), xi(0)]. Continued from the cube-root seeds near the
    /// critical value nu(0) along the segment to w.
    [[nodiscard]] std::vector<cplx> nu_inverse(cplx w) const {
        std::vector<cplx> out;
        if (!V_.contains(w)) return out;
        if (w.imag() == 0.0 && (w.real() < -s_ || w.real() > 1.0)) return out;
        const cplx dw = w - nu0_;
        if (std::abs(dw) == 0.0) return {cplx(0.0, 0.0)};
        const double hmax = 0.05 * (1.0 + s_);
        const double t0 = std::min(1.0, std::pow(0.02 * (1.0 + s_), 3) * std::abs(nu_kappa_) / std::abs(dw));
        const cplx w0 = nu0_ + t0 * dw;
        const cplx root = std::pow((w0 - nu0_) / nu_kappa_, 1.0 / 3.0);
        for (int k = 0; k < 3; ++k) {
            const cplx seed = root * std::polar(1.0, kTwoPi * k / 3.0);
            const auto z0 = detail::newton_solve(nu_branch(), w0, seed, newton_tol_);
            if (!z0) continue;
            const auto z = detail::continue_along(nu_branch(), w0, *z0, w, hmax, newton_tol_);
            if (z) out.push_back(*z);
        }
        return out;
    }

    // ---- shadow -----------------------------------------------------------

    enum class Piece { Xi, Eta, Nu, Escape };

    /// Which map the shadow applies at z. Throws when z is within the vertex
    /// tolerance of a boundary that decides the answer: the edge of O_xi or
    /// O_eta anywhere, the edge of O_nu only outside both.
    [[nodiscard]] Piece classify(cplx z) const {
        if (std::abs(z) <= tol_) return Piece::Nu;
        auto ambiguous = [] { throw DomainError("shadow_eval: point within vertex tolerance of a domain boundary"); };
        if (O_xi_.boundary_distance(z) <= tol_ || O_eta_.boundary_distance(z) <= tol_) ambiguous();
        if (O_xi_.contains(z)) return Piece::Xi;
        if (O_eta_.contains(z)) return Piece::Eta;
        if (O_nu_.boundary_distance(z) <= tol_) ambiguous();
        if (O_nu_.contains(z)) return Piece::Nu;
        return Piece::Escape;
    }

    [[nodiscard]] std::optional<cplx> apply(Piece p, cplx z, cplx* d = nullptr) const {
        switch (p) {
        case Piece::Xi: return xi(z, d);
        case Piece::Eta: return eta(z, d);
        case Piece::Nu: return nu(z, d);
        default: return std::nullopt;
        }
    }

private:
    void locate_real_data(const ReturnStructure& rs) {
        const int n = level_;
        // a: the critical point of xi with xi(a) = d_{n-1}/d_n; b: eta(b) = xi(0) = 1.
        xi_a_ = rs.d(n - 1) / rs.d(n);
        const double span = 1.0 / s_ + 4.0;
        a_ = detail::bisect([this](double x) { return xi(x); }, xi_a_, -span - 2.0, -s_);
        b_ = detail::bisect([this](double x) { return eta(x); }, 1.0, 0.0, span);
        if (!(std::abs(xi(a_) - xi_a_) < 1e-9 && std::abs(eta(b_) - 1.0) < 1e-9)) {
            throw CertificationError("build_holo_pair: could not locate the long dynamical interval");
        }
        // Height: xi^m(a) = eta(0).
        m_ = 0;
        double x = a_;
        for (int k = 1; k <= 64; ++k) {
            x = xi(x);
            if (std::abs(x - eta(0.0)) <= 1e-7) {
                m_ = k;
                break;
            }
        }
        if (m_ == 0) throw CertificationError("build_holo_pair: H5 violated (no height found)");
        nu0_ = xi(eta(0.0));
        // nu is critical at x_r = eta^{-1}(0) because xi is critical at 0.
        nu_right_ = detail::bisect([this](double y) { return eta(y); }, 0.0, 0.0, b_);
        const double h = 1e-3;
        nu_kappa_ = (xi(eta(h)) - xi(eta(-h))) / (2 * h * h * h);
    }

    [[nodiscard]] std::optional<cplx> real_continued_inverse(const Branch& G, cplx w, double img_lo, double img_hi,
                                                             double dom_lo, double dom_hi) const {
        if (!V_.contains(w)) return std::nullopt;
        if (w.imag() == 0.0 && (w.real() < img_lo || w.real() > img_hi)) return std::nullopt;
        const double margin = 1e-6 * (img_hi - img_lo);
        const double w0 = std::clamp(w.real(), img_lo + margin, img_hi - margin);
        auto real_fn = [&](double x) {
            const auto v = G(cplx(x, 0.0), nullptr);
            return v ? v->real() : std::numeric_limits<double>::quiet_NaN();
        };
        const double x0 = detail::bisect(real_fn, w0, dom_lo, dom_hi);
        if (w.imag() == 0.0 && w.real() == w0) return cplx(x0, 0.0);
        return detail::continue_along(G, cplx(w0, 0.0), cplx(x0, 0.0), w, 0.05 * (1.0 + s_), newton_tol_);
    }

    struct Trace {
        Polygon poly;
        std::vector<cplx> corners;
    };

    /// Zero of G' near z (Newton with a centred difference for G'').
    [[nodiscard]] std::optional<cplx> critical_point_near(const Branch& G, cplx z) const {
        auto dG = [&](cplx p) {
            cplx d;
            return G(p, &d) ? d : cplx(std::nan(""), 0.0);
        };
        const double h = 1e-6 * (1.0 + s_);
        double last = std::numeric_limits<double>::infinity();
        for (int it = 0; it < 50; ++it) {
            const cplx d = dG(z);
            const cplx d2 = (dG(z + h) - dG(z - h)) / (2 * h);
            if (!std::isfinite(d.real()) || std::abs(d2) == 0.0) return std::nullopt;
            const cplx step = d / d2;
            z -= step;
            last = std::abs(step);
            if (last < 1e-14 * (1.0 + std::abs(z))) break;
        }
        // Rounding limits the location to roughly 1e-6 relative.
        if (!(last < 1e-6 * (1.0 + s_))) return std::nullopt;
        return z;
    }

    /// Boundary of the component of G^{-1}(V minus the real line outside
    /// [lo, hi]) that has the real critical point z0 (G(z0) = hi) on its
    /// boundary. The target boundary is walked `turns` times: out along the
    /// upper side of the right slit, around the circle, in along the left
    /// slit, around its tip, and back along the lower sides. Each slit tip is
    /// the image of a critical corner, recorded exactly.
    [[nodiscard]] Trace trace_boundary(const Branch& G, double z0, double lo, double hi, int turns,
                                       const char* name) const {
        const double scale = 1.0 + s_;
        const double hmax = 0.01 * scale;
        const double delta = 1e-5 * scale;
        // Slit sides are walked at this height so that critical values lying
        // on a slit are passed on the correct side.
        const double eps = 1e-6 * scale;
        auto real_fn = [&](double x) { return G(cplx(x, 0.0), nullptr)->real(); };
        const double r = detail::bisect(real_fn, hi + delta, z0, z0 + scale) - z0;
        auto start = detail::newton_solve(G, hi + delta, z0 + std::polar(r, 2 * kPi / 3), newton_tol_);
        if (!start) throw CertificationError(std::string("build_holo_pair: could not start tracing ") + name);

        Trace out;
        std::vector<std::vector<cplx>> pieces(1, {cplx(z0, 0.0), *start});
        out.corners.emplace_back(z0, 0.0);
        cplx z = *start;
        cplx w = hi + delta;
        auto follow = [&](cplx target) {
            const auto next = detail::continue_along(G, w, z, target, hmax, newton_tol_);
            if (!next) {
                throw CertificationError(std::string("build_holo_pair: boundary tracing failed on ") + name +
                                         " near w = " + std::to_string(target.real()) + " + " +
                                         std::to_string(target.imag()) + "i");
            }
            z = *next;
            w = target;
        };
        auto walk = [&](auto&& path, int count) {
            for (int i = 1; i <= count; ++i) {
                follow(path(static_cast<double>(i) / count));
                pieces.back().push_back(z);
            }
        };
        // Swing around a slit tip on a small circle; the preimage turns
        // around a critical corner, which becomes a polygon vertex.
        auto swing = [&](double tip, double phi0, double phi1) {
            cplx mid;
            const int steps = 48;
            for (int i = 1; i <= steps; ++i) {
                follow(tip + std::polar(delta, phi0 + (phi1 - phi0) * i / steps));
                if (2 * i == steps) mid = z;
            }
            auto c = critical_point_near(G, mid);
            if (!c) throw CertificationError(std::string("build_holo_pair: lost a critical corner of ") + name);
            // Corners on the line are located only to about the square root
            // of the rounding noise; snap them to the known real ones.
            for (const double known : {a_, 0.0, b_, nu_right_}) {
                if (std::abs(*c - known) < 10 * tol_) c = cplx(known, 0.0);
            }
            pieces.back().push_back(*c);
            out.corners.push_back(*c);
            pieces.push_back({*c, z});
        };
        const double right = V_.center.real() + V_.radius;
        const double left = V_.center.real() - V_.radius;
        const int seg = 64;
        for (int t = 0; t < turns; ++t) {
            walk([&](double u) { return cplx(hi + delta + (right - hi - delta) * u, eps); }, seg);
            walk([&](double u) { return V_.center + std::polar(V_.radius, kPi * u); }, 4 * seg);
            walk([&](double u) { return cplx(left + (lo - delta - left) * u, eps); }, seg);
            swing(lo, kPi, -kPi);
            walk([&](double u) { return cplx(lo - delta + (left - lo + delta) * u, -eps); }, seg);
            walk([&](double u) { return V_.center + std::polar(V_.radius, kPi + kPi * u); }, 4 * seg);
            walk([&](double u) { return cplx(right + (hi + delta - right) * u, -eps); }, seg);
            swing(hi, kTwoPi, 0.0);
        }
        out.corners.pop_back();
        if (std::abs(pieces.back().front() - cplx(z0, 0.0)) > 10 * tol_) {
            const cplx e = pieces.back().front();
            throw CertificationError(std::string("build_holo_pair: boundary of ") + name + " does not close (ends at " +
                                     std::to_string(e.real()) + " + " + std::to_string(e.imag()) + "i)");
        }
        pieces.pop_back();

        // The walk starts upward from the right real corner, so the pieces
        // up to the next real corner form the upper arc. The polygon is that
        // arc resampled and mirrored, which makes it exactly symmetric; the
        // lower walk above serves only to certify closure.
        std::size_t upper = 1;
        while (upper < out.corners.size() && std::abs(out.corners[upper].imag()) > 10 * tol_) ++upper;
        if (upper == out.corners.size()) {
            throw CertificationError(std::string("build_holo_pair: no left real corner on ") + name);
        }
        out.corners[upper] = cplx(out.corners[upper].real(), 0.0);
        pieces[upper - 1].back() = out.corners[upper];
        pieces.resize(upper);

        // Distribute the vertex budget over the pieces by length, keeping the
        // corners exact.
        double total = 0.0;
        std::vector<double> lengths;
        for (const auto& pc : pieces) {
            double len = 0.0;
            for (std::size_t k = 1; k < pc.size(); ++k) len += std::abs(pc[k] - pc[k - 1]);
            lengths.push_back(len);
            total += len;
        }
        const int budget = kBoundaryVertices / 2;
        std::vector<int> counts;
        for (const double len : lengths) counts.push_back(std::max(2, static_cast<int>(std::lround(budget * len / total))));
        const auto longest = std::max_element(lengths.begin(), lengths.end()) - lengths.begin();
        counts[static_cast<std::size_t>(longest)] += budget - std::accumulate(counts.begin(), counts.end(), 0);
        std::vector<cplx> arc;
        for (std::size_t k = 0; k < pieces.size(); ++k) {
            auto res = detail::resample(pieces[k], counts[k] + 1);
            res.pop_back();
            arc.insert(arc.end(), res.begin(), res.end());
        }
        arc.push_back(out.corners[upper]);
        arc.front() = cplx(z0, 0.0);
        out.poly.v = arc;
        for (std::size_t k = arc.size() - 2; k >= 1; --k) out.poly.v.push_back(std::conj(arc[k]));
        return out;
    }

    void trace_domains() {
        // O_xi: real trace [a, 0], image slit outside [xi(a), xi(0) = 1].
        O_xi_ = trace_boundary(xi_branch(), 0.0, xi_a_, 1.0, 1, "O_xi").poly;
        // O_eta: real trace [0, b], image slit outside [eta(0), eta(b) = 1].
        O_eta_ = trace_boundary(eta_branch(), b_, -s_, 1.0, 1, "O_eta").poly;
        // O_nu: three-fold over V slit outside [eta(0), xi(0)], with real
        // trace [c, x_r] between the nearest critical points of nu.
        const auto tr = trace_boundary(nu_branch(), nu_right_, -s_, 1.0, 3, "O_nu");
        O_nu_ = tr.poly;
        nu_left_ = 0.0;
        for (const cplx c : tr.corners) {
            if (std::abs(c.imag()) < 1e-8 && c.real() < nu_left_) nu_left_ = c.real();
        }
    }

    void certify() const {
        for (const Polygon* P : {&O_xi_, &O_eta_, &O_nu_}) {
            for (const cplx v : P->v) {
                if (!(std::abs(v - V_.center) < V_.radius)) {
                    throw CertificationError("build_holo_pair: bowtie (a) violated, a domain leaves V");
                }
            }
        }
        for (const cplx v : O_xi_.v) {
            if (std::abs(v) <= 10 * tol_) continue;
            if (O_eta_.contains(v) || O_eta_.boundary_distance(v) <= tol_) {
                throw CertificationError("build_holo_pair: bowtie (b) violated, closures of O_xi and O_eta meet");
            }
        }
        if (!O_nu_.contains(0.0)) throw CertificationError("build_holo_pair: bowtie (b) violated, 0 not in O_nu");
        if (!(O_xi_.contains(-s_) && -s_ < 0.0 && 0.0 < 1.0 && O_eta_.contains(1.0))) {
            throw CertificationError("build_holo_pair: H3 ordering violated");
        }
        if (std::abs(eta(b_) - xi(0.0)) > 1e-7) throw CertificationError("build_holo_pair: H5 violated at b");
        // Bowtie (c): the four difference sets are non-empty.
        const auto grid = classify_grid(161);
        const std::array<std::pair<int, int>, 4> diffs{{{0, 2}, {1, 2}, {2, 0}, {2, 1}}};
        for (const auto& [in, out] : diffs) {
            if (components(grid, 161, [&](int mask) { return (mask >> in & 1) && !(mask >> out & 1); }) == 0) {
                throw CertificationError("build_holo_pair: bowtie (c) violated");
            }
        }
    }

public:
    /// Membership bit masks (1: O_xi, 2: O_eta, 4: O_nu) on an N x N grid over
    /// the bounding square of V.
    [[nodiscard]] std::vector<int> classify_grid(int N) const {
        std::vector<int> g(static_cast<std::size_t>(N * N), 0);
        for (int i = 0; i < N; ++i) {
            for (int j = 0; j < N; ++j) {
                const cplx z = grid_point(N, i, j);
                int mask = 0;
                if (O_xi_.contains(z)) mask |= 1;
                if (O_eta_.contains(z)) mask |= 2;
                if (O_nu_.contains(z)) mask |= 4;
                g[static_cast<std::size_t>(i * N + j)] = mask;
            }
        }
        return g;
    }

    [[nodiscard]] cplx grid_point(int N, int i, int j) const {
        const double h = 2 * V_.radius / (N - 1);
        return V_.center + cplx(-V_.radius + h * j, -V_.radius + h * i);
    }

    /// Number of 4-connected components of grid cells selected by `pred`.
    template <typename Pred>
    static int components(const std::vector<int>& g, int N, Pred&& pred) {
        std::vector<char> seen(g.size(), 0);
        int count = 0;
        std::vector<int> stack;
        for (int start = 0; start < N * N; ++start) {
            if (seen[static_cast<std::size_t>(start)] || !pred(g[static_cast<std::size_t>(start)])) continue;
            ++count;
            stack.push_back(start);
            seen[static_cast<std::size_t>(start)] = 1;
            while (!stack.empty()) {
                const int c = stack.back();
                stack.pop_back();
                const int i = c / N, j = c % N;
                const int nb[4][2] = {{i - 1, j}, {i + 1, j}, {i, j - 1}, {i, j + 1}};
                for (const auto& p : nb) {
                    if (p[0] < 0 || p[0] >= N || p[1] < 0 || p[1] >= N) continue;
                    const int k = p[0] * N + p[1];
                    if (!seen[static_cast<std::size_t>(k)] && pred(g[static_cast<std::size_t>(k)])) {
                        seen[static_cast<std::size_t>(k)] = 1;
                        stack.push_back(k);
                    }
                }
            }
        }
        return count;
    }

private:
    NormalizedPair pair_;
    int level_;
    double lambda_;
    double s_ = 0.0;
    double tol_ = 0.0;
    double newton_tol_ = 1e-12;
    double a_ = 0.0, b_ = 0.0, xi_a_ = 0.0;
    double nu_left_ = 0.0, nu_right_ = 0.0;
    double nu0_ = 0.0, nu_kappa_ = 1.0;
    int m_ = 0;
    Disk V_;
    Polygon O_xi_, O_eta_, O_nu_;
};

inline HoloPair build_holo_pair(const MapSpec& f, const ContinuedFraction& cf, int n,
                                double lambda = kDefaultLambda) {
    return HoloPair(f, cf, n, lambda);
}

/// One step of the shadow; nullopt means escape (z outside U).
inline std::optional<cplx> shadow_eval(const HoloPair& hp, cplx z) {
    const auto piece = hp.classify(z);
    if (piece == HoloPair::Piece::Escape) return std::nullopt;
    return hp.apply(piece, z);
}

} // namespace renormlab

namespace renormlab {

struct ControlCondition {
    std::string name;
    /// Smallest K for which the condition holds (infinite when it fails).
    double K = 0.0;
    /// The underlying measurement (distance ratio, derivative bound, modulus...).
    double measured = 0.0;
    bool pass = false;
};

struct ControlReport {
    std::array<ControlCondition, 8> conditions;
    double K_est = 1.0;
    double modulus_lower = 0.0;

    [[nodiscard]] bool all_pass() const {
        return std::all_of(conditions.begin(), conditions.end(), [](const auto& c) { return c.pass; });
    }
};

namespace detail {

inline constexpr double kControlKMax = 1e4;

/// Smallest K on the geometric ladder 1, 1.02, 1.02^2, ... for which ok(K)
/// holds, or +inf.
template <typename Pred>
double smallest_K(Pred&& ok) {
    for (double K = 1.0; K <= kControlKMax; K *= 1.02) {
        if (ok(K)) return K;
    }
    return std::numeric_limits<double>::infinity();
}

/// Distortion of phi = ((g - g(c)) / kappa)^{1/3} on D(c, rho), i.e. of the
/// inner factor when g = affine o Q o phi. Sampled on a polar grid.
inline double cubic_factor_distortion(const Branch& g, cplx c, double rho) {
    const auto gc = g(c, nullptr);
    if (!gc) return std::numeric_limits<double>::infinity();
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (int i = 1; i <= 8; ++i) {
        const double r = rho * i / 8.0;
        for (int k = 0; k < 32; ++k) {
            const cplx z = c + std::polar(r, kTwoPi * (k + 0.5) / 32.0);
            cplx d;
            const auto v = g(z, &d);
            if (!v) return std::numeric_limits<double>::infinity();
            const double gap = std::abs(*v - *gc);
            if (gap == 0.0) return std::numeric_limits<double>::infinity();
            const double dphi = std::abs(d) / std::pow(gap, 2.0 / 3.0);
            lo = std::min(lo, dphi);
            hi = std::max(hi, dphi);
        }
    }
    return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
}

/// Number of 4-connected components of {P} intersected with D(c, rho), on a grid.
inline int disk_components(const Polygon& P, cplx c, double rho, int N = 81) {
    std::vector<int> g(static_cast<std::size_t>(N * N), 0);
    const double h = 2 * rho / (N - 1);
    for (int i = 0; i < N; ++i) {
        for (int j = 0; j < N; ++j) {
            const cplx z = c + cplx(-rho + h * j, -rho + h * i);
            g[static_cast<std::size_t>(i * N + j)] = (std::abs(z - c) < rho && P.contains(z)) ? 1 : 0;
        }
    }
    return HoloPair::components(g, N, [](int m) { return m != 0; });
}

} // namespace detail

inline ControlReport control_report(const HoloPair& hp) {
    ControlReport rep;
    const double inf = std::numeric_limits<double>::infinity();
    const double J = hp.J_length();
    const double R = hp.V().radius;

    // G1: ratio of the largest to the smallest non-zero distance.
    {
        const double nu0 = hp.xi(hp.eta(0.0));
        const std::array<double, 6> pts{0.0, hp.xi(0.0), hp.eta(0.0), nu0, hp.a(), hp.b()};
        double dmin = inf, dmax = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            for (std::size_t j = i + 1; j < pts.size(); ++j) {
                const double d = std::abs(pts[i] - pts[j]);
                if (d == 0.0) continue;
                dmin = std::min(dmin, d);
                dmax = std::max(dmax, d);
            }
        }
        const double K = std::max(1.0, dmax / dmin);
        rep.conditions[0] = {"G1", K, K, std::isfinite(K)};
    }
    // G2: diam V <= K |J|.
    {
        const double ratio = 2 * R / J;
        rep.conditions[1] = {"G2", std::max(1.0, ratio), ratio, true};
    }
    // G3: sup |gamma'| on the real traces.
    {
        double sup = 0.0;
        auto scan = [&](const Branch& g, double lo, double hi) {
            for (int i = 0; i <= 400; ++i) {
                cplx d;
                if (!g(cplx(lo + (hi - lo) * i / 400.0, 0.0), &d)) {
                    sup = inf;
                    return;
                }
                sup = std::max(sup, std::abs(d));
            }
        };
        scan(hp.xi_branch(), hp.a(), 0.0);
        scan(hp.eta_branch(), 0.0, hp.b());
        scan(hp.nu_branch(), hp.nu_left(), hp.nu_right());
        rep.conditions[2] = {"G3", std::max(1.0, sup), sup, std::isfinite(sup)};
    }
    // G4 / G5: cubic factorizations at the critical points, inner factor
    // distortion on D(c, |J|/K) bounded by K.
    auto factor_K = [&](const Branch& g, double c1, double c2) {
        return detail::smallest_K([&](double K) {
            const double rho = J / K;
            return detail::cubic_factor_distortion(g, c1, rho) <= K && detail::cubic_factor_distortion(g, c2, rho) <= K;
        });
    };
    {
        const double K4 = factor_K(hp.xi_branch(), hp.a(), 0.0);
        rep.conditions[3] = {"G4", K4, K4, std::isfinite(K4)};
        const double K5 = factor_K(hp.eta_branch(), hp.b(), 0.0);
        rep.conditions[4] = {"G5", K5, K5, std::isfinite(K5)};
    }
    // G6: O_xi near a and O_eta near b are connected.
    {
        const double K6 = detail::smallest_K([&](double K) {
            const double rho = J / K;
            return detail::disk_components(hp.O_xi(), hp.a(), rho) == 1 &&
                   detail::disk_components(hp.O_eta(), hp.b(), rho) == 1;
        });
        rep.conditions[5] = {"G6", K6, K6, std::isfinite(K6)};
    }
    // G7: D(0, |J|/K) inside O_nu.
    {
        const double dist = hp.O_nu().contains(0.0) ? hp.O_nu().boundary_distance(0.0) : 0.0;
        const double K7 = dist > 0.0 ? std::max(1.0, J / dist) : inf;
        rep.conditions[6] = {"G7", K7, dist, std::isfinite(K7)};
    }
    // G8: modulus of the fundamental annulus V \ U. The distance from a
    // polygon edge to the circle is smallest at a vertex.
    {
        double sep = inf;
        for (const Polygon* P : {&hp.O_xi(), &hp.O_eta(), &hp.O_nu()}) {
            for (const cplx v : P->v) sep = std::min(sep, R - std::abs(v - hp.V().center));
        }
        if (sep > 0.0) {
            const auto mb = modulus_lower_bound(sep, 2 * R);
            rep.modulus_lower = mb.lower;
            rep.conditions[7] = {"G8", std::max(1.0, 1.0 / mb.lower), mb.lower, true};
        } else {
            rep.conditions[7] = {"G8", inf, 0.0, false};
        }
    }
    rep.K_est = 1.0;
    for (const auto& c : rep.conditions) rep.K_est = std::max(rep.K_est, c.K);
    return rep;
}

} // namespace renormlab

namespace renormlab {

inline constexpr int kMaxLimitDepth = 12;
inline constexpr std::size_t kDefaultGenerationCap = 4000;

struct LimitSetCloud {
    std::vector<cplx> points;
    /// Generation of each point (0 for the sample of J).
    std::vector<int> depth_of;
    int depth = 0;
    std::vector<std::size_t> counts;
    /// Inverse-branch evaluations that failed or landed on the wrong piece.
    std::size_t skipped = 0;
};

namespace detail {

/// Runs body(i) for i in [0, n) on up to `jobs` threads.
template <typename Body>
void parallel_for(std::size_t n, int jobs, Body&& body) {
    const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += workers) body(i);
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace detail

/// Backward orbit sample of J. Each generation pulls the previous one back
/// through every inverse branch of xi, eta and nu, and keeps a preimage only
/// when the shadow would map it forward by that same branch. Only the upper
/// half is computed; the rest is its mirror image.
inline LimitSetCloud limit_set_sample(const HoloPair& hp, int depth, int per_arc,
                                      std::size_t generation_cap = kDefaultGenerationCap, int jobs = 1) {
    if (depth < 0 || depth > kMaxLimitDepth) throw DomainError("limit_set_sample: depth must lie in [0, 12]");
    if (per_arc < 2) throw DomainError("limit_set_sample: per_arc must be >= 2");
    using Piece = HoloPair::Piece;
    LimitSetCloud cloud;
    cloud.depth = depth;

    std::vector<cplx> gen;
    for (int i = 1; i <= per_arc; ++i) gen.emplace_back(hp.a() * i / (per_arc + 1.0), 0.0);
    for (int i = 1; i <= per_arc; ++i) gen.emplace_back(hp.b() * i / (per_arc + 1.0), 0.0);
    gen.emplace_back(0.0, 0.0);
    auto record = [&](const std::vector<cplx>& upper, int d) {
        std::size_t count = 0;
        for (const cplx z : upper) {
            cloud.points.push_back(z);
            cloud.depth_of.push_back(d);
            ++count;
            if (z.imag() != 0.0) {
                cloud.points.push_back(std::conj(z));
                cloud.depth_of.push_back(d);
                ++count;
            }
        }
        cloud.counts.push_back(count);
    };
    record(gen, 0);

    auto piece_of = [&](cplx z) -> std::optional<Piece> {
        try {
            return hp.classify(z);
        } catch (const DomainError&) {
            return std::nullopt;
        }
    };
    for (int d = 1; d <= depth; ++d) {
        // Preimages of both w and its conjugate; the upper ones are kept and
        // the lower ones recovered by symmetry.
        std::vector<std::vector<cplx>> found(gen.size());
        std::vector<std::size_t> misses(gen.size(), 0);
        detail::parallel_for(gen.size(), jobs, [&](std::size_t i) {
            for (const cplx w : {gen[i], std::conj(gen[i])}) {
                if (w.imag() < 0.0 && gen[i].imag() == 0.0) continue;
                auto keep = [&](std::optional<cplx> z, Piece expected) {
                    if (!z) {
                        ++misses[i];
                        return;
                    }
                    if (z->imag() < 0.0) return;
                    // Both copies must classify, since the traced polygons
                    // are only symmetric up to discretization.
                    const auto p = piece_of(*z);
                    const auto q = piece_of(std::conj(*z));
                    if (p && q && *p == expected && *q == expected) {
                        found[i].push_back(*z);
                    } else {
                        ++misses[i];
                    }
                };
                keep(hp.xi_inverse(w), Piece::Xi);
                keep(hp.eta_inverse(w), Piece::Eta);
                for (const cplx z : hp.nu_inverse(w)) keep(z, Piece::Nu);
            }
        });
        std::vector<cplx> next;
        for (std::size_t i = 0; i < gen.size(); ++i) {
            next.insert(next.end(), found[i].begin(), found[i].end());
            cloud.skipped += misses[i];
        }
        if (next.size() > generation_cap) {
            std::vector<cplx> thinned;
            thinned.reserve(generation_cap);
            for (std::size_t k = 0; k < generation_cap; ++k) thinned.push_back(next[k * next.size() / generation_cap]);
            next.swap(thinned);
        }
        gen.swap(next);
        record(gen, d);
    }
    return cloud;
}

/// Largest distance from J after pushing each point forward by the shadow as
/// many times as its generation.
inline double forward_consistency(const HoloPair& hp, const LimitSetCloud& cloud) {
    double worst = 0.0;
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
        cplx z = cloud.points[i];
        for (int k = 0; k < cloud.depth_of[i]; ++k) {
            const auto w = shadow_eval(hp, z);
            if (!w) return std::numeric_limits<double>::infinity();
            z = *w;
        }
        const double off = std::abs(z.imag()) + std::max({0.0, hp.a() - z.real(), z.real() - hp.b()});
        worst = std::max(worst, off);
    }
    return worst;
}

} // namespace renormlab

namespace renormlab {

namespace detail {

/// Uniform bucket grid over a point set for nearest-neighbour queries.
class PointIndex {
public:
    PointIndex(const std::vector<cplx>& pts, cplx lo, cplx hi, double cell) : pts_(pts), lo_(lo), cell_(cell) {
        nx_ = std::max(1, static_cast<int>(std::ceil((hi.real() - lo.real()) / cell)));
        ny_ = std::max(1, static_cast<int>(std::ceil((hi.imag() - lo.imag()) / cell)));
        buckets_.assign(static_cast<std::size_t>(nx_) * ny_, {});
        for (std::size_t i = 0; i < pts_.size(); ++i) {
            const auto [ix, iy] = cell_of(pts_[i]);
            if (ix >= 0 && ix < nx_ && iy >= 0 && iy < ny_) buckets_[idx(ix, iy)].push_back(i);
        }
    }

    /// Distance from z to the nearest indexed point other than `skip`.
    [[nodiscard]] double nearest(cplx z, std::size_t skip = static_cast<std::size_t>(-1)) const {
        const auto [cx, cy] = cell_of(z);
        double best = std::numeric_limits<double>::infinity();
        for (int ring = 0; ring <= std::max(nx_, ny_); ++ring) {
            // Every point in ring k is at least (k-1) cells away.
            if (ring > 0 && (ring - 1) * cell_ > best) break;
            for (int ix = cx - ring; ix <= cx + ring; ++ix) {
                for (int iy = cy - ring; iy <= cy + ring; ++iy) {
                    if (std::max(std::abs(ix - cx), std::abs(iy - cy)) != ring) continue;
                    if (ix < 0 || ix >= nx_ || iy < 0 || iy >= ny_) continue;
                    for (const std::size_t i : buckets_[idx(ix, iy)]) {
                        if (i != skip) best = std::min(best, std::abs(pts_[i] - z));
                    }
                }
            }
        }
        return best;
    }

private:
    [[nodiscard]] std::pair<int, int> cell_of(cplx z) const {
        return {static_cast<int>(std::floor((z.real() - lo_.real()) / cell_)),
                static_cast<int>(std::floor((z.imag() - lo_.imag()) / cell_))};
    }
    [[nodiscard]] std::size_t idx(int ix, int iy) const { return static_cast<std::size_t>(iy) * nx_ + ix; }

    const std::vector<cplx>& pts_;
    cplx lo_;
    double cell_;
    int nx_ = 1, ny_ = 1;
    std::vector<std::vector<std::size_t>> buckets_;
};

} // namespace detail

inline constexpr int kDeepPointRadii = 12;

struct DeepPointProbe {
    double r = 0.0;
    double hole = 0.0;
    double spacing = 0.0;
    bool used = false;
};

struct DeepPointResult {
    FitResult fit;
    std::vector<DeepPointProbe> probes;
};

/// Largest empty disk centred in D(0, r) against the cloud, on a geometric
/// ladder of radii, and the log-log slope of hole(r) against r. A radius is
/// dropped when the hole is below 3x the nearest-neighbour spacing of the
/// cloud inside D(0, r), taken as the 90th percentile so that the random gaps
/// of an evenly filled region count as unresolved.
inline DeepPointResult deep_point_exponent_detail(const std::vector<cplx>& cloud, double r_lo, double r_hi, int grid) {
    if (!(r_lo > 0.0 && r_hi > r_lo)) throw DomainError("deep_point_exponent: need 0 < r_lo < r_hi");
    if (grid < 8) throw DomainError("deep_point_exponent: grid must be >= 8");
    std::vector<cplx> near;
    for (const cplx z : cloud) {
        if (std::abs(z) <= 2.0 * r_hi) near.push_back(z);
    }
    // Real points recur across generations; duplicates would zero the spacing.
    std::sort(near.begin(), near.end(), [](cplx u, cplx v) {
        return u.real() < v.real() || (u.real() == v.real() && u.imag() < v.imag());
    });
    near.erase(std::unique(near.begin(), near.end()), near.end());
    if (near.size() < 2) throw DomainError("deep_point_exponent: cloud is empty around 0");

    DeepPointResult res;
    std::vector<double> xs, ys;
    for (int k = 0; k < kDeepPointRadii; ++k) {
        DeepPointProbe pr;
        pr.r = r_lo * std::pow(r_hi / r_lo, static_cast<double>(k) / (kDeepPointRadii - 1));
        const double cell = 2.0 * pr.r / grid;
        const cplx lo(-2.0 * r_hi, -2.0 * r_hi);
        detail::PointIndex index(near, lo, -lo, std::max(cell, 4.0 * r_hi / 512.0));

        std::vector<double> nn;
        for (std::size_t i = 0; i < near.size(); ++i) {
            if (std::abs(near[i]) <= pr.r) nn.push_back(index.nearest(near[i], i));
        }
        if (nn.size() >= 2) {
            const auto q = nn.begin() + static_cast<std::ptrdiff_t>(9 * nn.size() / 10);
            std::nth_element(nn.begin(), q, nn.end());
            pr.spacing = *q;
        } else {
            pr.spacing = std::numeric_limits<double>::infinity();
        }
        for (int i = 0; i <= grid; ++i) {
            for (int j = 0; j <= grid; ++j) {
                const cplx g(-pr.r + i * cell, -pr.r + j * cell);
                if (std::abs(g) <= pr.r) pr.hole = std::max(pr.hole, index.nearest(g));
            }
        }
        pr.used = std::isfinite(pr.spacing) && pr.hole >= 3.0 * pr.spacing;
        if (pr.used) {
            xs.push_back(std::log(pr.r));
            ys.push_back(std::log(pr.hole));
        }
        res.probes.push_back(pr);
    }
    if (xs.size() < 4) {
        throw InsufficientDataError("deep_point_exponent: resolution-limited (" + std::to_string(xs.size()) +
                                    " usable radii)");
    }
    res.fit = linear_fit(xs, ys);
    return res;
}

inline FitResult deep_point_exponent(const LimitSetCloud& cloud, double r_lo, double r_hi, int grid) {
    return deep_point_exponent_detail(cloud.points, r_lo, r_hi, grid).fit;
}

struct ExpansionSequence {
    /// l_j = |DF^j(z)| |Im z| / |Im F^j(z)|, so l_0 = 1.
    std::vector<double> values;
    /// The shadow orbit escaped, hit the real line or became ambiguous
    /// before k steps.
    bool truncated = false;
};

/// Expansion of the 1/|Im| metric along the shadow orbit of z. Derivatives of
/// each step come from a centred difference of the branch the shadow chose.
inline ExpansionSequence expansion_proxy(const HoloPair& hp, cplx z, int k) {
    if (k < 0) throw DomainError("expansion_proxy: k must be >= 0");
    if (z.imag() == 0.0) throw DomainError("expansion_proxy: start must lie off the real line");
    if (!hp.in_U(z)) throw DomainError("expansion_proxy: start must lie in U");
    const double h = 1e-7 * (1.0 + hp.s());
    const double im0 = std::abs(z.imag());
    ExpansionSequence out;
    out.values.push_back(1.0);
    double dnorm = 1.0;
    for (int j = 1; j <= k; ++j) {
        HoloPair::Piece piece;
        try {
            piece = hp.classify(z);
        } catch (const DomainError&) {
            out.truncated = true;
            break;
        }
        if (piece == HoloPair::Piece::Escape) {
            out.truncated = true;
            break;
        }
        const auto w = hp.apply(piece, z, nullptr);
        const auto wp = hp.apply(piece, z + h, nullptr);
        const auto wm = hp.apply(piece, z - h, nullptr);
        if (!w || !wp || !wm || w->imag() == 0.0) {
            out.truncated = true;
            break;
        }
        dnorm *= std::abs((*wp - *wm) / (2.0 * h));
        z = *w;
        out.values.push_back(dnorm * im0 / std::abs(z.imag()));
    }
    return out;
}

/// A start whose shadow orbit stays in U for `steps` steps: `steps` random
/// inverse branches applied to w0, each kept only if the shadow maps the
/// preimage back by the same branch. nullopt when some w has no usable
/// preimage.
inline std::optional<cplx> backward_start(const HoloPair& hp, cplx w0, int steps, std::mt19937_64& rng) {
    using Piece = HoloPair::Piece;
    cplx w = w0;
    for (int done = 0; done < steps; ++done) {
        std::vector<std::pair<cplx, Piece>> options;
        if (auto z = hp.xi_inverse(w)) options.emplace_back(*z, Piece::Xi);
        if (auto z = hp.eta_inverse(w)) options.emplace_back(*z, Piece::Eta);
        for (const cplx z : hp.nu_inverse(w)) options.emplace_back(z, Piece::Nu);
        std::erase_if(options, [&](const auto& o) {
            if (o.first.imag() == 0.0) return true;
            try {
                return hp.classify(o.first) != o.second;
            } catch (const DomainError&) {
                return true;
            }
        });
        if (options.empty()) return std::nullopt;
        std::uniform_int_distribution<std::size_t> pick(0, options.size() - 1);
        w = options[pick(rng)].first;
    }
    return w;
}

} // namespace renormlab

