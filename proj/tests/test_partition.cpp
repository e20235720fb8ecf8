#include "renormlab/partition.hpp"

#include <gtest/gtest.h>

using namespace renormlab;

namespace {

const ContinuedFraction kGoldenCf = ContinuedFraction::constant(1, 20);
const ContinuedFraction kSilverCf = ContinuedFraction::constant(2, 16);

const MapSpec& arnold_golden() {
    static const MapSpec f = tuned_map(Family::Arnold, 0.0, kGoldenCf);
    return f;
}

const MapSpec& arnold_silver() {
    static const MapSpec f = tuned_map(Family::Arnold, 0.0, kSilverCf);
    return f;
}

} // namespace

TEST(Partition, RigidGoldenIntervals) {
    const auto rs = return_structure(MapSpec::rigid_rotation(kGolden), kGoldenCf, 5);
    for (int k = 0; k <= 6; ++k) {
        EXPECT_NEAR(rs.I(k).length, std::pow(kGolden, k + 1), 1e-12) << k;
        EXPECT_EQ(rs.d(k) > 0, k % 2 == 0);
    }
}

TEST(Partition, ArnoldGoldenCertified) {
    const auto rs = return_structure(arnold_golden(), kGoldenCf, 8);
    for (int k = 1; k <= 9; ++k) {
        EXPECT_EQ(rs.d(k) > 0, k % 2 == 0);
        EXPECT_LT(std::abs(rs.d(k)), std::abs(rs.d(k - 1)));
    }
}

TEST(Partition, MistunedMapFailsCertification) {
    const MapSpec bad = MapSpec::arnold(arnold_golden().theta() + 1e-3);
    try {
        return_structure(bad, kGoldenCf, 10);
        FAIL() << "expected certification error";
    } catch (const CertificationError& e) {
        EXPECT_NE(std::string(e.what()).find("k="), std::string::npos);
    }
}

TEST(Partition, LevelPrecondition) {
    EXPECT_THROW(return_structure(arnold_golden(), ContinuedFraction::constant(1, 8), 7), DomainError);
}

TEST(Partition, AtomCounts) {
    const auto P = dynamical_partition(return_structure(MapSpec::rigid_rotation(kGolden), kGoldenCf, 2));
    EXPECT_EQ(P.atoms.size(), 5u);
    int g2 = 0, g3 = 0;
    for (const auto& a : P.atoms) (a.generation == 2 ? g2 : g3)++;
    EXPECT_EQ(g2, 3);
    EXPECT_EQ(g3, 2);
    const auto Q = dynamical_partition(return_structure(arnold_golden(), kGoldenCf, 6));
    EXPECT_EQ(Q.atoms.size(), 34u);
    EXPECT_NEAR(Q.total_length(), 1.0, 1e-9);
}

TEST(Partition, Refinement) {
    for (int n = 3; n <= 10; ++n) {
        const auto Pn = dynamical_partition(return_structure(arnold_golden(), kGoldenCf, n));
        const auto Pm = dynamical_partition(return_structure(arnold_golden(), kGoldenCf, n + 1));
        EXPECT_TRUE(refines(Pm, Pn)) << n;
        EXPECT_FALSE(refines(Pn, Pm)) << n;
    }
}

TEST(Partition, Telescope) {
    // Level n+1 atoms inside each level n atom add up to that atom.
    for (const auto* cf : {&kGoldenCf, &kSilverCf}) {
        const MapSpec& f = cf == &kGoldenCf ? arnold_golden() : arnold_silver();
        for (int n = 3; n <= 8; ++n) {
            const auto Pn = dynamical_partition(return_structure(f, *cf, n));
            const auto Pm = dynamical_partition(return_structure(f, *cf, n + 1));
            for (const auto& host : Pn.atoms) {
                double sum = 0.0;
                for (const auto& a : Pm.atoms) {
                    if (host.arc.contains(a.arc, 1e-9)) sum += a.arc.length;
                }
                EXPECT_NEAR(sum, host.arc.length, 1e-9);
            }
        }
    }
}

TEST(Partition, RealBoundsRigidGolden) {
    const auto stats = real_bounds_stats(MapSpec::rigid_rotation(kGolden), kGoldenCf, 2, 12);
    for (const auto& s : stats) EXPECT_NEAR(s.ratio, 1.0 / kGolden, 1e-6) << s.level;
}

TEST(Partition, RealBoundsArnold) {
    const auto g = real_bounds_stats(arnold_golden(), kGoldenCf, 4, 14);
    double early = 0.0, late = 0.0;
    for (const auto& s : g) {
        EXPECT_LE(s.ratio, 50.0);
        if (s.level <= 8) early = std::max(early, s.ratio);
        if (s.level >= 8) late = std::max(late, s.ratio);
    }
    EXPECT_LE(late, 1.25 * early);
    const auto s = real_bounds_stats(arnold_silver(), kSilverCf, 4, 10);
    for (const auto& r : s) EXPECT_LE(r.ratio, 50.0);
    EXPECT_THROW(real_bounds_stats(arnold_golden(), kGoldenCf, 4, 19), DomainError);
}

TEST(Partition, BackwardMoments) {
    const auto r = backward_moments(return_structure(MapSpec::rigid_rotation(kGolden), kGoldenCf, 8), 4);
    EXPECT_EQ(r.moments.size(), 1u);
    const auto s = backward_moments(return_structure(arnold_silver(), kSilverCf, 8), 4);
    EXPECT_EQ(s.moments.size(), 2u);
    EXPECT_EQ(s.host_exponent, (std::vector<int>{1, 0}));
    const auto rsg = return_structure(arnold_golden(), kGoldenCf, 12);
    const auto g = backward_moments(rsg, 6);
    const double bound = max_adjacent_ratio(dynamical_partition(rsg)).ratio;
    EXPECT_LE(g.first_edge_ratio, bound);
    EXPECT_GE(g.first_edge_ratio, 1.0 / bound);
    EXPECT_THROW(backward_moments(rsg, 12), DomainError);
}

TEST(Partition, BackwardMomentsAllLevels) {
    for (const auto* cf : {&kGoldenCf, &kSilverCf}) {
        const MapSpec& f = cf == &kGoldenCf ? arnold_golden() : arnold_silver();
        for (int n = 2; n <= 12; ++n) {
            const auto rs = return_structure(f, *cf, n);
            for (int m = 0; m <= n - 2; ++m) {
                EXPECT_NO_THROW(backward_moments(rs, m)) << n << " " << m;
            }
        }
    }
}

TEST(Partition, DisjointPreimages) {
    EXPECT_TRUE(disjoint_preimages_check(return_structure(MapSpec::rigid_rotation(kGolden), kGoldenCf, 6)));
    for (int n = 1; n <= 12; ++n) {
        EXPECT_TRUE(disjoint_preimages_check(return_structure(arnold_golden(), kGoldenCf, n))) << n;
        EXPECT_TRUE(disjoint_preimages_check(return_structure(arnold_silver(), kSilverCf, n))) << n;
    }
    auto arcs = preimage_arcs(return_structure(arnold_golden(), kGoldenCf, 8));
    EXPECT_TRUE(arcs_disjoint(arcs, 1e-12));
    arcs[3].length += 0.5 * arcs[3].length;
    arcs[7].left -= 0.5 * arcs[7].length;
    EXPECT_FALSE(arcs_disjoint(arcs, 1e-12));
}
