#include "renormlab/renorm.hpp"

#include <gtest/gtest.h>

using namespace renormlab;

namespace {

const ContinuedFraction kGoldenCf = ContinuedFraction::constant(1, 20);

const MapSpec& arnold() {
    static const MapSpec f = tuned_map(Family::Arnold, 0.0, kGoldenCf);
    return f;
}

const MapSpec& perturbed() {
    static const MapSpec f = tuned_map(Family::PerturbedArnold, 0.03, kGoldenCf);
    return f;
}

NormalizedPair level(const MapSpec& f, int n) { return renormalize(commuting_pair(return_structure(f, kGoldenCf, n))); }

} // namespace

TEST(Renorm, RigidRotationPairIsTranslation) {
    const MapSpec rot = MapSpec::rigid_rotation(kGolden);
    const auto cp = commuting_pair(return_structure(rot, kGoldenCf, 4));
    for (double t : {0.0, 0.3, 1.0}) {
        EXPECT_NEAR(cp.xi(t * cp.d_n1) - t * cp.d_n1, cp.d_n, 1e-13);
        EXPECT_NEAR(cp.eta(t * cp.d_n) - t * cp.d_n, cp.d_n1, 1e-13);
    }
    for (int n : {3, 4, 5, 6}) {
        const auto p = level(rot, n);
        EXPECT_NEAR(p.ratio(), kGolden, 1e-10);
        for (double x : {0.0, 0.25, 0.5, 1.0}) {
            EXPECT_NEAR(p.eta_hat(x), x - kGolden, 1e-10);
            EXPECT_NEAR(p.xi_hat(-kGolden * x), -kGolden * x + 1.0, 1e-10);
        }
    }
}

TEST(Renorm, ArnoldPairCertifiedAndOrdered) {
    const auto cp = commuting_pair(return_structure(arnold(), kGoldenCf, 6));
    EXPECT_LE(cp.commutation_residual, 1e-12);
    const auto p = renormalize(cp);
    EXPECT_LT(p.eta_hat(0.0), 0.0);
    EXPECT_GT(p.xi_hat(0.0), 0.0);
    EXPECT_NEAR(p.xi_hat(0.0), 1.0, 1e-12);
    EXPECT_NEAR(p.eta_hat(0.0), -p.ratio(), 1e-12);
    EXPECT_GE(p.eta_hat(0.0), -p.ratio() - 1e-12);
    for (int i = 0; i <= 20; ++i) {
        const double x = -p.ratio() * i / 20.0;
        EXPECT_GE(p.xi_hat(x), -p.ratio() - 1e-12);
        EXPECT_LE(p.xi_hat(x), 1.0 + 1e-12);
    }
}

TEST(Renorm, ParityAlternates) {
    for (int n = 3; n < 12; ++n) EXPECT_EQ(level(arnold(), n).parity(), -level(arnold(), n + 1).parity());
}

TEST(Renorm, DeepLevelCommutationStaysPrecise) {
    // The two composition orders are the same lift iterates regrouped, so the
    // residual stays at rounding level even at level 16.
    const auto cp = commuting_pair(return_structure(arnold(), kGoldenCf, 16));
    EXPECT_LE(cp.commutation_residual, kCommutationTol);
}

TEST(Renorm, CompositionalExactness) {
    const auto rs = return_structure(arnold(), kGoldenCf, 7);
    const auto p = renormalize(commuting_pair(rs));
    // eta_hat at 1 (the image of f^{q_n}(c)) reproduces the stored orbit point.
    const double stored = rs.lift_diff(rs.q(7) + rs.q(8), 0, rs.p(7) + rs.p(8)) / rs.d(7);
    EXPECT_NEAR(p.eta_hat(1.0), stored, 1e-9);
    const double stored_xi = rs.lift_diff(rs.q(7) + rs.q(8), 0, rs.p(7) + rs.p(8)) / rs.d(7);
    EXPECT_NEAR(p.xi_hat(-p.ratio()), stored_xi, 1e-9);
}

TEST(Renorm, ComplexExtensionAgreesOnReals) {
    const auto p = level(arnold(), 6);
    for (double x : {0.1, 0.6}) {
        cplx d;
        const auto w = p.eta_hat(cplx(x, 0.0), &d);
        ASSERT_TRUE(w.has_value());
        EXPECT_NEAR(w->real(), p.eta_hat(x), 1e-9);
        EXPECT_NEAR(w->imag(), 0.0, 1e-12);
        const double h = 1e-6;
        EXPECT_NEAR(d.real(), (p.eta_hat(x + h) - p.eta_hat(x - h)) / (2 * h), 1e-5);
    }
}

TEST(Renorm, PairDistanceBasics) {
    const auto a = level(arnold(), 4);
    EXPECT_EQ(pair_distance(a, a), 0.0);
    const auto b = level(perturbed(), 4);
    EXPECT_GT(pair_distance(a, b), 0.0);
    EXPECT_NEAR(pair_distance(a, b), pair_distance(b, a), 1e-15);
    EXPECT_THROW(pair_distance(a, b, 32), DomainError);
    const MapSpec rot = MapSpec::rigid_rotation(kGolden);
    for (int n = 3; n <= 6; ++n) EXPECT_LT(pair_distance(level(rot, n), level(rot, n + 2)), 1e-12) << n;
}

TEST(Renorm, ConvergenceRate) {
    const auto res = convergence_rate(arnold(), perturbed(), kGoldenCf, 3, 12);
    // Level-by-level decrease is checked in known_failures.
    for (std::size_t i = 0; i + 2 < res.levels.size(); ++i) {
        EXPECT_LT(res.levels[i + 2].distance, res.levels[i].distance) << res.levels[i].level;
    }
    EXPECT_LT(res.fit.slope, 0.0);
    EXPECT_GE(res.fit.r2, 0.9);
    const auto fine = convergence_rate(arnold(), perturbed(), kGoldenCf, 3, 12, 512);
    for (std::size_t i = 0; i < res.levels.size(); ++i) {
        EXPECT_LT(std::abs(fine.levels[i].distance - res.levels[i].distance), 0.05 * res.levels[i].distance);
    }
}

TEST(Renorm, ConvergenceRateErrors) {
    EXPECT_THROW(convergence_rate(arnold(), arnold(), kGoldenCf, 3, 10), InsufficientDataError);
    EXPECT_THROW(convergence_rate(arnold(), MapSpec::rigid_rotation(kGolden), kGoldenCf, 3, 10), CertificationError);
    EXPECT_THROW(convergence_rate(arnold(), perturbed(), kGoldenCf, 3, 6), DomainError);
}
