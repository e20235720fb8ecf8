#include "renormlab/rigidity.hpp"

#include <gtest/gtest.h>

#include <map>

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

} // namespace

TEST(Rigidity, SelfConjugacyIsIdentity) {
    const auto oc = orbit_conjugacy(arnold(), arnold(), kGoldenCf, 10);
    EXPECT_EQ(oc.pairs.size(), 233u);
    EXPECT_EQ(oc.pairs.front(), std::make_pair(0.0, 0.0));
    EXPECT_EQ(oc.index.front(), 0);
    for (const auto& [x, y] : oc.pairs) EXPECT_EQ(x, y);
    EXPECT_EQ(qs_distortion(oc, 6), 1.0);
    for (const auto& s : qs_distortion_by_scale(oc, 6)) EXPECT_EQ(s.distortion, 1.0);
}

TEST(Rigidity, RotationPairing) {
    const MapSpec rot = MapSpec::rigid_rotation(kGolden);
    const auto oc = orbit_conjugacy(rot, rot, kGoldenCf, 12);
    for (std::size_t k = 0; k < oc.pairs.size(); ++k) {
        const double expected = oc.index[k] * kGolden - std::floor(oc.index[k] * kGolden);
        EXPECT_NEAR(oc.pairs[k].first, expected, 1e-12);
    }
    EXPECT_NEAR(qs_distortion(oc, 6), 1.0, 1e-9);
}

TEST(Rigidity, ArnoldVsPerturbedIsOrderPreserving) {
    const auto oc = orbit_conjugacy(arnold(), perturbed(), kGoldenCf, 10);
    for (std::size_t k = 1; k < oc.pairs.size(); ++k) {
        EXPECT_GT(oc.pairs[k].first, oc.pairs[k - 1].first);
        EXPECT_GT(oc.pairs[k].second, oc.pairs[k - 1].second);
    }
    // Swapping the maps swaps the pairing.
    const auto back = orbit_conjugacy(perturbed(), arnold(), kGoldenCf, 10);
    std::map<long long, std::pair<double, double>> fwd;
    for (std::size_t k = 0; k < oc.pairs.size(); ++k) fwd[oc.index[k]] = oc.pairs[k];
    for (std::size_t k = 0; k < back.pairs.size(); ++k) {
        const auto& p = fwd.at(back.index[k]);
        EXPECT_EQ(back.pairs[k].first, p.second);
        EXPECT_EQ(back.pairs[k].second, p.first);
    }
}

TEST(Rigidity, MistunedMapsAreRejected) {
    const MapSpec off = MapSpec::arnold(arnold().theta() + 1e-3);
    EXPECT_THROW(orbit_conjugacy(arnold(), off, kGoldenCf, 10), Error);
}

TEST(Rigidity, QsDistortionBoundedInLevel) {
    const double d10 = qs_distortion(orbit_conjugacy(arnold(), perturbed(), kGoldenCf, 10), 6);
    const double d14 = qs_distortion(orbit_conjugacy(arnold(), perturbed(), kGoldenCf, 14), 6);
    EXPECT_GT(d10, 1.0);
    EXPECT_TRUE(std::isfinite(d14));
    EXPECT_NEAR(d14 / d10, 1.0, 0.05);
}

TEST(Rigidity, QsPreconditions) {
    const auto small = orbit_conjugacy(arnold(), arnold(), kGoldenCf, 8);
    EXPECT_THROW(qs_distortion(small, 6), DomainError);
    const auto oc = orbit_conjugacy(arnold(), arnold(), kGoldenCf, 10);
    EXPECT_THROW(qs_distortion(oc, 0), DomainError);
    // At t = 2^-12 no orbit point of level 10 has neighbours that close.
    EXPECT_TRUE(qs_distortion_by_scale(oc, 11).size() < 11u);
}

TEST(Rigidity, ScalingRatiosOfRotation) {
    for (const double s : scaling_ratios(MapSpec::rigid_rotation(kGolden), kGoldenCf, 16)) {
        EXPECT_NEAR(s, kGolden, 1e-8);
    }
}

TEST(Rigidity, ScalingRatiosSettle) {
    const auto s = scaling_ratios(arnold(), kGoldenCf, 16);
    ASSERT_EQ(s.size(), 17u);
    EXPECT_LT(std::abs(s[16] - s[15]), 0.1 * std::abs(s[5] - s[4]));
    const ContinuedFraction silver = ContinuedFraction::constant(2, 14);
    const auto t = scaling_ratios(tuned_map(Family::Arnold, 0.0, silver), silver, 11);
    EXPECT_LT(std::abs(t[11] - t[10]), 0.1 * std::abs(t[3] - t[2]));
    EXPECT_GT(std::abs(t[11] - s[16]), 0.1);
}

TEST(Rigidity, FitOracles) {
    const auto r = rigidity_fit_detail(arnold(), perturbed(), kGoldenCf, 4, 12);
    EXPECT_LT(r.fit.slope, 0.0);
    EXPECT_GE(r.fit.r2, 0.8);
    EXPECT_EQ(r.rho.size(), 10u);
    EXPECT_THROW(rigidity_fit(arnold(), arnold(), kGoldenCf, 4, 12), InsufficientDataError);
    const MapSpec rot = MapSpec::rigid_rotation(kGolden);
    EXPECT_THROW(rigidity_fit(rot, rot, kGoldenCf, 4, 12), InsufficientDataError);
    EXPECT_THROW(rigidity_fit(arnold(), perturbed(), kGoldenCf, 4, 7), DomainError);
}

TEST(Rigidity, RatioIsScaleInvariant) {
    // rho_n compares lengths of corresponding intervals, so it is unchanged
    // if both maps are measured on the same circle at a different scale; the
    // fit only sees ratios of d_n, which are exactly the quantities below.
    const auto rf = return_structure(arnold(), kGoldenCf, 12);
    const auto rg = return_structure(perturbed(), kGoldenCf, 12);
    const auto r = rigidity_fit_detail(arnold(), perturbed(), kGoldenCf, 4, 12);
    for (int n = 4; n <= 13; ++n) {
        const double scaled = std::abs(3.0 * rg.d(n) / (3.0 * rf.d(n)));
        EXPECT_DOUBLE_EQ(r.rho[static_cast<std::size_t>(n - 4)], scaled);
    }
}
