#pragma once

#include "renormlab/partition.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace renormlab {

inline constexpr double kCommutationTol = 1e-7;

/// The first-return pair at level n in lift coordinates around c = 0:
///   xi(x)  = F^{q_n}(x) - p_n         on I_{n+1},
///   eta(x) = F^{q_{n+1}}(x) - p_{n+1} on I_n.
struct CommutingPair {
    MapSpec base = MapSpec::arnold(0.0);
    int level = 0;
    long long xi_exponent = 0;
    long long eta_exponent = 0;
    long long xi_shift = 0;
    long long eta_shift = 0;
    Arc domain_xi;
    Arc domain_eta;
    double d_n = 0.0;
    double d_n1 = 0.0;
    double commutation_residual = 0.0;

    [[nodiscard]] double xi(double x) const { return iterate(base, x, xi_exponent).minus(xi_shift); }
    [[nodiscard]] double eta(double x) const { return iterate(base, x, eta_exponent).minus(eta_shift); }
};

inline CommutingPair commuting_pair(const ReturnStructure& rs) {
    const int n = rs.level();
    CommutingPair cp;
    cp.base = rs.spec();
    cp.level = n;
    cp.xi_exponent = rs.q(n);
    cp.eta_exponent = rs.q(n + 1);
    cp.xi_shift = rs.p(n);
    cp.eta_shift = rs.p(n + 1);
    cp.domain_xi = rs.I(n + 1);
    cp.domain_eta = rs.I(n);
    cp.d_n = rs.d(n);
    cp.d_n1 = rs.d(n + 1);

    // xi o eta = eta o xi = F^{q_n + q_{n+1}} - (p_n + p_{n+1}); the two
    // orders are separate floating point computations.
    double worst = 0.0;
    const double h = std::abs(cp.d_n1);
    for (int i = -4; i <= 4; ++i) {
        const double x = 0.1 * h * i;
        const double a = cp.xi(cp.eta(x));
        const double b = cp.eta(cp.xi(x));
        worst = std::max(worst, std::abs(a - b));
    }
    cp.commutation_residual = worst;
    if (!(worst <= kCommutationTol)) {
        throw PrecisionError("commuting_pair: commutation residual " + std::to_string(worst) + " at level " +
                             std::to_string(n));
    }
    return cp;
}

/// R^n f: the commuting pair conjugated by x -> d_n x, so that c = 0 and I_n
/// becomes [0,1]; xi_hat lives on [-s, 0] with s = |d_{n+1} / d_n|.
/// Evaluation iterates the original lift (no approximation of R^n f).
class NormalizedPair {
public:
    explicit NormalizedPair(const CommutingPair& cp)
        : base_(cp.base), level_(cp.level), q_xi_(cp.xi_exponent), q_eta_(cp.eta_exponent), p_xi_(cp.xi_shift),
          p_eta_(cp.eta_shift), scale_(cp.d_n), ratio_(std::abs(cp.d_n1 / cp.d_n)) {}

    [[nodiscard]] const MapSpec& base() const { return base_; }
    [[nodiscard]] int level() const { return level_; }
    [[nodiscard]] double ratio() const { return ratio_; }
    [[nodiscard]] double scale() const { return scale_; }
    [[nodiscard]] int parity() const { return scale_ > 0.0 ? 1 : -1; }
    [[nodiscard]] long long xi_exponent() const { return q_xi_; }
    [[nodiscard]] long long eta_exponent() const { return q_eta_; }

    [[nodiscard]] double eta_hat(double x) const { return iterate(base_, scale_ * x, q_eta_).minus(p_eta_) / scale_; }
    [[nodiscard]] double xi_hat(double x) const { return iterate(base_, scale_ * x, q_xi_).minus(p_xi_) / scale_; }

    /// Holomorphic extensions; nullopt when an intermediate iterate leaves the
    /// annulus of definition.
    [[nodiscard]] std::optional<cplx> eta_hat(cplx z, cplx* deriv = nullptr) const {
        return apply(z, q_eta_, p_eta_, deriv);
    }
    [[nodiscard]] std::optional<cplx> xi_hat(cplx z, cplx* deriv = nullptr) const {
        return apply(z, q_xi_, p_xi_, deriv);
    }

private:
    [[nodiscard]] std::optional<cplx> apply(cplx z, long long q, long long p, cplx* deriv) const {
        auto w = iterate_complex(base_, scale_ * z, q, p, deriv);
        if (!w) return std::nullopt;
        return *w / scale_;
    }

    MapSpec base_;
    int level_;
    long long q_xi_, q_eta_, p_xi_, p_eta_;
    double scale_;
    double ratio_;
};

inline NormalizedPair renormalize(const CommutingPair& cp) { return NormalizedPair(cp); }

inline constexpr int kDefaultGrid = 256;

/// C^0 distance between normalized pairs, including the domain mismatch.
inline double pair_distance(const NormalizedPair& p, const NormalizedPair& q, int grid = kDefaultGrid) {
    if (grid < 64) throw DomainError("pair_distance: grid must be >= 64");
    double de = 0.0, dx = 0.0;
    const double s = std::min(p.ratio(), q.ratio());
    for (int i = 0; i <= grid; ++i) {
        const double t = static_cast<double>(i) / grid;
        de = std::max(de, std::abs(p.eta_hat(t) - q.eta_hat(t)));
        dx = std::max(dx, std::abs(p.xi_hat(-s * t) - q.xi_hat(-s * t)));
    }
    return std::abs(p.ratio() - q.ratio()) + de + dx;
}

struct LevelDistance {
    int level = 0;
    double distance = 0.0;
};

struct ConvergenceResult {
    FitResult fit;
    std::vector<LevelDistance> levels;
    std::vector<int> excluded;
};

/// Exponential-rate fit of log d_n against n for two maps with the same
/// combinatorics.
inline ConvergenceResult convergence_rate(const MapSpec& f, const MapSpec& g, const ContinuedFraction& cf, int n_lo,
                                          int n_hi, int grid = kDefaultGrid) {
    if (!f.is_critical_family() || !g.is_critical_family()) {
        throw CertificationError("convergence_rate: both maps must be critical (rigid rotations are rejected)");
    }
    if (n_hi - n_lo < 4) throw DomainError("convergence_rate: need n_hi - n_lo >= 4");
    ConvergenceResult res;
    std::vector<double> xs, ys;
    for (int n = n_lo; n <= n_hi; ++n) {
        const auto pf = renormalize(commuting_pair(return_structure(f, cf, n)));
        const auto pg = renormalize(commuting_pair(return_structure(g, cf, n)));
        const double d = pair_distance(pf, pg, grid);
        res.levels.push_back({n, d});
        if (d == 0.0) {
            res.excluded.push_back(n);
            continue;
        }
        xs.push_back(n);
        ys.push_back(std::log(d));
    }
    if (xs.empty()) throw InsufficientDataError("convergence_rate: all distances zero");
    if (xs.size() < 4) throw InsufficientDataError("convergence_rate: fewer than 4 usable levels");
    res.fit = linear_fit(xs, ys);
    return res;
}

} // namespace renormlab
