#include "renormlab/parabolic.hpp"

#include <gtest/gtest.h>

using namespace renormlab;

TEST(Parabolic, LengthOracles) {
    const auto a4 = make_almost_parabolic(1e-4).length();
    const auto a3 = make_almost_parabolic(1e-3).length();
    const auto a2 = make_almost_parabolic(1e-2).length();
    EXPECT_GE(a4, 280);
    EXPECT_LE(a4, 350);
    EXPECT_GE(a2, 25);
    EXPECT_LE(a2, 40);
    EXPECT_GT(a4, a3);
    EXPECT_GT(a3, a2);
    EXPECT_THROW(make_almost_parabolic(1e-6), DomainError);
    EXPECT_THROW(make_almost_parabolic(0.02), DomainError);
}

TEST(Parabolic, FundamentalDomainsTileUnitInterval) {
    for (double eps : {1e-5, 1e-4, 1e-3, 1e-2}) {
        const auto ap = make_almost_parabolic(eps);
        double right = 0.0;
        for (int j = 0; j < ap.length(); ++j) {
            EXPECT_NEAR(ap.normalize(ap.orbit(j)), right, 1e-9);
            right += ap.fundamental_length(j);
        }
        EXPECT_NEAR(right, 1.0, 1e-9);
        EXPECT_GT(ap.phi(ap.orbit(ap.length())), 0.5);
        EXPECT_LE(ap.orbit(ap.length()), 0.5);
    }
}

TEST(Parabolic, YoccozProfile) {
    double cmin = 1e300, cmax = 0.0;
    for (double eps : {1e-4, 1e-3, 1e-2}) {
        const auto ap = make_almost_parabolic(eps);
        const auto prof = yoccoz_profile(ap);
        ASSERT_EQ(static_cast<int>(prof.rows.size()), ap.length());
        EXPECT_LE(prof.c_fit, 50.0);
        for (const auto& r : prof.rows) {
            EXPECT_GE(r.product, 1.0 / prof.c_fit);
            EXPECT_LE(r.product, prof.c_fit);
        }
        EXPECT_GE(prof.rows.front().length, ap.sigma());
        cmin = std::min(cmin, prof.c_fit);
        cmax = std::max(cmax, prof.c_fit);
    }
    EXPECT_LE(cmax / cmin, 3.0);
}

TEST(Parabolic, ProfileMinimumNearMiddle) {
    const auto ap = make_almost_parabolic(1e-3);
    const auto prof = yoccoz_profile(ap);
    int jmin = 0;
    for (const auto& r : prof.rows) {
        if (r.length < prof.rows[static_cast<std::size_t>(jmin)].length) jmin = r.j;
    }
    EXPECT_NEAR(jmin, ap.length() / 2.0, ap.length() / 10.0);
}

TEST(Parabolic, FixedPoints) {
    const auto r4 = complex_fixed_points(make_almost_parabolic(1e-4));
    EXPECT_NEAR(r4.z_plus_original.imag(), 0.01, 1e-15);
    EXPECT_EQ(r4.z_plus_original.real(), 0.0);
    for (double eps : {1e-4, 1e-3, 1e-2}) {
        const auto ap = make_almost_parabolic(eps);
        const auto r = complex_fixed_points(ap);
        EXPECT_GE(r.check, 2.0);
        EXPECT_LE(r.check, 5.0);
        EXPECT_LE(r.residual, 1e-12);
        EXPECT_LE(std::abs(ap.phi(std::conj(r.z_plus_original)) - std::conj(r.z_plus_original)), 1e-12);
    }
}

TEST(Parabolic, EscapeTime) {
    const auto ap4 = make_almost_parabolic(1e-4);
    const auto ap3 = make_almost_parabolic(1e-3);
    EXPECT_EQ(escape_time(ap4, cplx(0.5, 0.01), 0.1), 0);
    const auto n4 = escape_time(ap4, cplx(0.5, 0.3), 0.1);
    const auto n3 = escape_time(ap3, cplx(0.5, 0.3), 0.1);
    ASSERT_TRUE(n4.has_value());
    ASSERT_TRUE(n3.has_value());
    EXPECT_LE(std::abs(*n4 - *n3), 2);
    const auto zp = complex_fixed_points(ap4).z_plus;
    EXPECT_FALSE(escape_time(ap4, zp + cplx(1e-7, 0.0), 0.5 * zp.imag()).has_value());
    EXPECT_THROW(escape_time(ap4, cplx(0.5, -0.1), 0.1), DomainError);
    EXPECT_THROW(escape_time(ap4, cplx(0.5, 0.9), 0.1), DomainError);
}
