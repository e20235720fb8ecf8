#include "renormlab/maps.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace renormlab;

TEST(Maps, EvalLiftOracles) {
    EXPECT_DOUBLE_EQ(eval_lift(MapSpec::arnold(0.0), 0.0), 0.0);
    EXPECT_DOUBLE_EQ(eval_lift(MapSpec::arnold(0.25), 0.0), 0.25);
    EXPECT_NEAR(eval_lift(MapSpec::rigid_rotation(kGolden), 0.5), 1.118033988749895, 1e-15);
}

TEST(Maps, ConstructionRejectsInvalidParameters) {
    EXPECT_THROW(MapSpec::perturbed_arnold(0.3, 0.06), DomainError);
    EXPECT_THROW(MapSpec::perturbed_arnold(0.3, -0.03), DomainError);
    EXPECT_THROW(MapSpec::arnold(1.0), DomainError);
    EXPECT_THROW(MapSpec::arnold(-0.1), DomainError);
    EXPECT_THROW(MapSpec::make(Family::Arnold, 0.2, 0.01), DomainError);
    EXPECT_NO_THROW(MapSpec::perturbed_arnold(0.3, -0.02));
    EXPECT_NO_THROW(MapSpec::perturbed_arnold(0.3, 0.05));
}

TEST(Maps, ComplexEvaluation) {
    const auto f = MapSpec::arnold(0.0);
    const auto w = eval_complex(f, {0.0, 0.0});
    EXPECT_EQ(w.x, 0.0);
    EXPECT_EQ(w.y, 0.0);
    const auto g = MapSpec::arnold(0.606);
    const auto v = eval_complex(g, {0.0, 0.01});
    EXPECT_GT(std::abs(v.y), 0.0);
    // Cauchy-Riemann: the complex derivative agrees with finite differences
    // in both directions.
    const cplx z(0.13, 0.2);
    const double h = 1e-6;
    const cplx dx = (eval_lift_complex(g, z + h) - eval_lift_complex(g, z - h)) / (2 * h);
    const cplx dy = (eval_lift_complex(g, z + cplx(0, h)) - eval_lift_complex(g, z - cplx(0, h))) / cplx(0, 2 * h);
    EXPECT_LT(std::abs(dx - dy), 1e-8);
    EXPECT_LT(std::abs(dx - derivative_complex(g, z)), 1e-8);
    EXPECT_THROW(eval_complex(g, {0.2, 1.0}), DomainError);
    EXPECT_THROW(eval_complex(g, {0.2, -1.5}), DomainError);
}

TEST(Maps, DerivativeOracles) {
    for (double th : {0.0, 0.3, 0.9}) {
        const auto f = MapSpec::arnold(th);
        EXPECT_EQ(derivative(f, 0.0, 1), 0.0);
        EXPECT_NEAR(derivative(f, 0.0, 3), kTwoPi * kTwoPi, 1e-12);
        EXPECT_NEAR(derivative(f, 0.5, 1), 2.0, 1e-15);
    }
    EXPECT_THROW(derivative(MapSpec::arnold(0.1), 0.0, 4), DomainError);
    EXPECT_THROW(derivative(MapSpec::arnold(0.1), 0.0, 0), DomainError);
}

TEST(Maps, DerivativesMatchFiniteDifferences) {
    const auto f = MapSpec::perturbed_arnold(0.4, 0.03);
    const double h = 1e-5;
    for (double x : {0.07, 0.31, 0.55, 0.92}) {
        EXPECT_NEAR(derivative(f, x, 1), (eval_lift(f, x + h) - eval_lift(f, x - h)) / (2 * h), 1e-8);
        EXPECT_NEAR(derivative(f, x, 2), (derivative(f, x + h, 1) - derivative(f, x - h, 1)) / (2 * h), 1e-6);
        EXPECT_NEAR(derivative(f, x, 3), (derivative(f, x + h, 2) - derivative(f, x - h, 2)) / (2 * h), 1e-4);
    }
    // Closed form of F' for the perturbed family.
    for (double x : {0.1, 0.2, 0.7}) {
        const double s = std::sin(kPi * x), c = std::cos(kPi * x);
        EXPECT_NEAR(derivative(f, x, 1), s * s * (2 + 24 * kPi * 0.03 * c * c * std::cos(kTwoPi * x)), 1e-13);
    }
    EXPECT_NEAR(derivative(f, 0.0, 3), 4 * kPi * kPi + 48 * kPi * kPi * kPi * 0.03, 1e-10);
}

TEST(Maps, CriticalityReport) {
    const auto a = verify_critical_cubic(MapSpec::arnold(0.3));
    EXPECT_TRUE(a.pass);
    EXPECT_NEAR(a.d3, kTwoPi * kTwoPi, 1e-12);
    EXPECT_GE(a.grid_points, 10000);
    EXPECT_TRUE(verify_critical_cubic(MapSpec::perturbed_arnold(0.3, 0.05)).pass);
    EXPECT_TRUE(verify_critical_cubic(MapSpec::perturbed_arnold(0.3, -0.02)).pass);
    const auto r = verify_critical_cubic(MapSpec::rigid_rotation(0.3));
    EXPECT_FALSE(r.pass);
    EXPECT_EQ(r.d1, 1.0);
}

TEST(Maps, PeriodicityMonotonicityReflection) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-3.0, 3.0), v(-0.9, 0.9);
    const MapSpec specs[] = {MapSpec::rigid_rotation(0.61), MapSpec::arnold(0.2), MapSpec::perturbed_arnold(0.7, 0.05),
                             MapSpec::perturbed_arnold(0.1, -0.02)};
    for (const auto& f : specs) {
        for (int i = 0; i < 1000; ++i) {
            const double x = u(rng);
            EXPECT_LE(std::abs(eval_lift(f, x + 1) - eval_lift(f, x) - 1), 1e-12);
            const cplx z(frac(x), v(rng));
            const auto w1 = eval_complex(f, CylinderPoint::from(std::conj(z)));
            const auto w2 = eval_complex(f, CylinderPoint::from(z));
            EXPECT_NEAR(w1.x, w2.x, 1e-12);
            EXPECT_NEAR(w1.y, -w2.y, 1e-12);
            const auto r = eval_complex(f, {frac(x), 0.0});
            EXPECT_NEAR(r.x, frac(eval_lift(f, frac(x))), 1e-12);
            EXPECT_EQ(r.y, 0.0);
        }
        double prev = eval_lift(f, 0.0);
        for (int i = 1; i <= 10000; ++i) {
            const double y = eval_lift(f, i / 10000.0);
            EXPECT_GE(y, prev);
            prev = y;
        }
    }
}

TEST(Maps, OrbitBookkeepingAndInverse) {
    const auto f = MapSpec::arnold(0.61);
    double x = 0.0;
    for (int i = 0; i < 50; ++i) x = eval_lift(f, x);
    const LiftPoint p = iterate(f, 0.0, 50);
    EXPECT_NEAR(p.value(), x, 1e-12);
    EXPECT_GE(p.pos, 0.0);
    EXPECT_LT(p.pos, 1.0);
    for (double y : {-0.4, 0.0, 0.3, 1.7}) {
        EXPECT_NEAR(eval_lift(f, inverse_lift(f, y)), y, 1e-14);
    }
    // Forward iteration undoes backward iteration (the reverse order amplifies
    // rounding near the critical value).
    const LiftPoint back = iterate_inverse(f, 0.3, 50);
    EXPECT_NEAR(iterate(f, back.value(), 50).value(), 0.3, 1e-12);
    const auto zc = iterate_complex(f, cplx(0.2, 0.0), 50, 0);
    ASSERT_TRUE(zc.has_value());
    EXPECT_NEAR(zc->real(), iterate(f, 0.2, 50).value(), 1e-12);
}
