// Tests for the Euler-Lagrange flow, its integrator and the omega-limit surrogate
#include "mather/flow.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

namespace mather {

namespace {

const MagneticModel kModel{};
const double kSqrt2 = std::sqrt(2.0);

/// The field with the sign of J flipped; used to show the checks can fail.
FlowRate flipped_field(const TorusPoint& q, const TangentVec& v) {
    const double k = kTwoPi * std::sin(kTwoPi * q.x());
    return {v, {k * v.v2, -k * v.v1}};
}

FlowState random_unit_energy_state(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0, 1);
    const double phi = kTwoPi * u(rng);
    return {{u(rng), u(rng)}, {kSqrt2 * std::cos(phi), kSqrt2 * std::sin(phi)}};
}

/// Trapezoid Lagrangian of the chord between two lifted points over time h.
double chord_action(const LiftedPoint& a, const LiftedPoint& b, double h) {
    const double v1 = (b.X - a.X) / h, v2 = (b.Y - a.Y) / h;
    const double m = 0.5 * (kModel.potential(a.X) + kModel.potential(b.X));
    return h * (0.5 * (v1 * v1 + v2 * v2) + m * v2);
}

/// Gradient of the two-chord action in the middle point, scaled by 1/h^2.
double discrete_el_residual(const VectorField& field, const FlowState& s, double h) {
    const FlowState fwd = integrate_field(field, s, h, h / 200).back();
    IntegrateOptions back;
    back.backward = true;
    const FlowState bwd = integrate_field(field, s, h, h / 200, back).back();
    auto action = [&](double dX, double dY) {
        const LiftedPoint mid{s.q.X + dX, s.q.Y + dY};
        return chord_action(bwd.q, mid, h) + chord_action(mid, fwd.q, h);
    };
    const double e = 1e-6;
    const double gx = (action(e, 0) - action(-e, 0)) / (2 * e);
    const double gy = (action(0, e) - action(0, -e)) / (2 * e);
    return std::hypot(gx, gy) / h;
}

}  // namespace

// =============================================================================
// Vector field
// =============================================================================

TEST(VectorFieldTest, Examples) {
    FlowRate r = vector_field(kModel, TorusPoint(0.5, 0), {0, kSqrt2});
    EXPECT_EQ(r.position_rate.v2, kSqrt2);
    EXPECT_NEAR(r.velocity_rate.v1, 0.0, 1e-14);
    EXPECT_NEAR(r.velocity_rate.v2, 0.0, 1e-14);

    r = vector_field(kModel, TorusPoint(0.25, 0), {1, 0});
    EXPECT_NEAR(r.velocity_rate.v1, 0.0, 1e-15);
    EXPECT_NEAR(r.velocity_rate.v2, kTwoPi, 1e-12);

    r = vector_field(kModel, TorusPoint(0.25, 0), {0, 1});
    EXPECT_NEAR(r.velocity_rate.v1, -kTwoPi, 1e-12);
}

TEST(VectorFieldTest, ContinuumEulerLagrangeHolds) {
    // d/dt (dL/dv) - dL/dx = 0 with dL/dv = (v1, v2 + a cos 2 pi x).
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int k = 0; k < 200; ++k) {
        const TorusPoint q(u(rng), 0.0);
        const TangentVec v{u(rng), u(rng)};
        const FlowRate r = vector_field(kModel, q, v);
        const double dp1 = r.velocity_rate.v1;
        const double dp2 = r.velocity_rate.v2 + kModel.potential_dx(q.x()) * v.v1;
        const double dLdx = kModel.potential_dx(q.x()) * v.v2;
        EXPECT_NEAR(dp1, dLdx, 1e-12);
        EXPECT_NEAR(dp2, 0.0, 1e-12);
    }
}

TEST(VectorFieldTest, OrbitsAreStationaryForDiscreteAction) {
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    const VectorField field = model_field(kModel);
    double worst = 0.0, flipped_best = 1e300;
    for (int k = 0; k < 50; ++k) {
        const FlowState s{{u(rng), u(rng)}, {u(rng), u(rng)}};
        worst = std::max(worst, discrete_el_residual(field, s, 2.5e-3));
        if (std::abs(std::sin(kTwoPi * s.q.X)) > 0.3 && s.v.norm() > 0.5) {
            flipped_best = std::min(flipped_best, discrete_el_residual(flipped_field, s, 2.5e-3));
        }
    }
    EXPECT_LT(worst, 1e-3);
    EXPECT_GT(flipped_best, 0.5);
}

TEST(FirstIntegralTest, Value) {
    EXPECT_NEAR(first_integral_value(kModel, {{0.5, 0}, {0, kSqrt2}}), kSqrt2 - 1.0, 1e-15);
    EXPECT_NEAR(first_integral_value(kModel, {{0.0, 0}, {1, 0}}), 1.0, 1e-15);
    EXPECT_THROW(first_integral_value(kModel, {{0.0, 0}, {0, 0}}), ZeroVelocity);
}

// =============================================================================
// Integrator
// =============================================================================

TEST(IntegrateTest, SampleCountAndTimes) {
    const Trajectory t = integrate(kModel, {{0, 0}, {1, 0}}, 1.0, 0.1);
    EXPECT_EQ(t.size(), 11u);
    EXPECT_DOUBLE_EQ(t.duration(), 1.0);
    const Trajectory u = integrate(kModel, {{0, 0}, {1, 0}}, 1.05, 0.1);
    EXPECT_EQ(u.size(), 12u);
}

TEST(IntegrateTest, RejectsBadArguments) {
    EXPECT_THROW(integrate(kModel, {{0, 0}, {1, 0}}, 0.01, 0.1), InvalidArgument);
    EXPECT_THROW(integrate(kModel, {{0, 0}, {1, 0}}, 0.0, 0.1), InvalidArgument);
    EXPECT_THROW(integrate(kModel, {{0, 0}, {1, 0}}, 1.0, -0.1), InvalidArgument);
    EXPECT_THROW(integrate(kModel, {{NAN, 0}, {1, 0}}, 1.0, 0.1), InvalidArgument);
}

TEST(IntegrateTest, NonFiniteStateIsReported) {
    const VectorField blowup = [](const TorusPoint&, const TangentVec& v) {
        return FlowRate{v, {v.v1 * v.v1 * 1e30, 0.0}};
    };
    EXPECT_THROW(integrate_field(blowup, {{0, 0}, {1e10, 0}}, 10.0, 0.1), NonFiniteState);
}

TEST(IntegrateTest, VerticalPeriodicOrbit) {
    const Trajectory t = integrate(kModel, {{0.5, 0}, {0, kSqrt2}}, 10.0, 1e-3);
    EXPECT_NEAR(t.back().q.Y - t.front().q.Y, 10.0 * kSqrt2, 1e-6);
    EXPECT_NEAR(t.back().q.X, 0.5, 1e-12);
    EXPECT_LT(first_integral_drift(kModel, t), 1e-12);
    const HomologyClass rho = rotation_vector_estimate(t);
    EXPECT_NEAR(rho.h1, 0.0, 1e-12);
    EXPECT_NEAR(rho.h2, kSqrt2, 1e-9);
}

TEST(IntegrateTest, SecondSingularOrbit) {
    const Trajectory t = integrate(kModel, {{0.0, 0}, {0, -kSqrt2}}, 10.0, 1e-3);
    const HomologyClass rho = rotation_vector_estimate(t);
    EXPECT_NEAR(rho.h1, 0.0, 1e-12);
    EXPECT_NEAR(rho.h2, -kSqrt2, 1e-9);
}

TEST(IntegrateTest, RestStateIsFixed) {
    const Trajectory t = integrate(kModel, {{0.3, 0.7}, {0, 0}}, 5.0, 1e-2);
    EXPECT_EQ(t.back().q.X, 0.3);
    EXPECT_EQ(t.back().q.Y, 0.7);
    EXPECT_EQ(t.back().v.norm(), 0.0);
}

TEST(IntegrateTest, ConservesEnergyAndFirstIntegral) {
    std::mt19937_64 rng(23);
    for (int k = 0; k < 16; ++k) {
        const FlowState s = random_unit_energy_state(rng);
        const Trajectory t = integrate(kModel, s, 50.0, 1e-3);
        EXPECT_LT(energy_drift(t), 1e-7);
        EXPECT_LT(first_integral_drift(kModel, t), 1e-7);
    }
}

TEST(IntegrateTest, DriftHasFourthOrderConvergence) {
    std::mt19937_64 rng(29);
    for (int k = 0; k < 8; ++k) {
        const FlowState s = random_unit_energy_state(rng);
        const double coarse = energy_drift(integrate(kModel, s, 20.0, 4e-3));
        const double fine = energy_drift(integrate(kModel, s, 20.0, 2e-3));
        EXPECT_GT(coarse / fine, 10.0);
    }
}

TEST(IntegrateTest, FlippedFieldViolatesFirstIntegral) {
    std::mt19937_64 rng(31);
    double worst = 0.0;
    for (int k = 0; k < 8; ++k) {
        const Trajectory t = integrate_field(flipped_field, random_unit_energy_state(rng), 10.0, 1e-3);
        worst = std::max(worst, first_integral_drift(kModel, t));
    }
    EXPECT_GT(worst, 0.1);
}

TEST(IntegrateTest, BackwardUndoesForward) {
    std::mt19937_64 rng(37);
    for (int k = 0; k < 8; ++k) {
        const FlowState s = random_unit_energy_state(rng);
        const FlowState end = integrate(kModel, s, 10.0, 1e-3).back();
        IntegrateOptions opt;
        opt.backward = true;
        const FlowState back = integrate(kModel, end, 10.0, 1e-3, opt).back();
        EXPECT_NEAR(back.q.X, s.q.X, 1e-8);
        EXPECT_NEAR(back.q.Y, s.q.Y, 1e-8);
        EXPECT_NEAR(back.v.v1, s.v.v1, 1e-8);
        EXPECT_NEAR(back.v.v2, s.v.v2, 1e-8);
    }
}

TEST(IntegrateTest, LiftIsContinuous) {
    const Trajectory t = integrate(kModel, {{0.9, 0.9}, {1.2, 0.8}}, 20.0, 1e-3);
    for (std::size_t k = 1; k < t.size(); ++k) {
        const double jump = std::hypot(t.state(k).q.X - t.state(k - 1).q.X, t.state(k).q.Y - t.state(k - 1).q.Y);
        ASSERT_LT(jump, 2.0 * 1e-3 * std::sqrt(2.0 * 1.0));
    }
    EXPECT_GT(std::abs(t.back().q.X), 1.0);
}

TEST(IntegrateTest, LevelProjectionKeepsBothIntegrals) {
    IntegrateOptions opt;
    opt.constraint = LevelConstraint{1.0, 0.2, 1.0};
    const Trajectory t = integrate(kModel, {{0.1, 0.0}, {1, 0}}, 30.0, 1e-2, opt);
    for (const auto& s : t.states()) {
        ASSERT_NEAR(0.5 * s.v.norm_sq(), 1.0, 1e-12);
        ASSERT_NEAR(kModel.potential(s.q.X) + s.v.v2, 0.2, 1e-12);
    }
}

// =============================================================================
// Section chart and omega-limit surrogate
// =============================================================================

TEST(SectionTest, ChartAndDistance) {
    const SectionPoint p = to_section({{1.25, 3.0}, {0, 1}});
    EXPECT_DOUBLE_EQ(p.x, 0.25);
    EXPECT_DOUBLE_EQ(p.phi, std::numbers::pi / 2);
    EXPECT_NEAR(section_distance({0.05, 0.1}, {0.95, kTwoPi - 0.1}), std::hypot(0.1, 0.2), 1e-12);
    EXPECT_THROW(to_section({{0, 0}, {0, 0}}), ZeroVelocity);
}

TEST(OmegaLimitTest, PeriodicOrbitIsItsOwnLimit) {
    // gamma_2 at x = 0, where sin(2 pi x) vanishes exactly; the orbit at x = 1/2 is
    // hyperbolic and rounding pushes a long plain integration off it.
    const PhaseCloud cloud = omega_limit_estimate(kModel, {{0.0, 0}, {0, -kSqrt2}}, 100.0, 10.0, 1e-3);
    EXPECT_GT(cloud.points.size(), 100u);
    const double d = cloud.max_distance([](const FlowState& s) {
        return section_distance(to_section(s), {0.0, -std::numbers::pi / 2});
    });
    EXPECT_LT(d, 1e-9);
    for (const auto& s : cloud.points) {
        ASSERT_GE(s.q.Y, 0.0);
        ASSERT_LT(s.q.Y, 1.0);
    }
}

TEST(OmegaLimitTest, ProjectedSaddleOrbitApproachesSingularOrbit) {
    // Upper saddle level on E = 1: F = sqrt(2) - 1, orbits accumulate on x = 1/2.
    OmegaOptions opt;
    opt.constraint = LevelConstraint{1.0, kSqrt2 - 1.0, 1.0};
    const PhaseCloud cloud = omega_limit_estimate(kModel, {{0.1, 0}, {1, 0}}, 200.0, 20.0, 1e-3, opt);
    const double d = cloud.max_distance([](const FlowState& s) {
        return section_distance(to_section(s), {0.5, std::numbers::pi / 2});
    });
    EXPECT_LT(d, 1e-2);
}

// =============================================================================
// Export
// =============================================================================

TEST(TrajectoryCsvTest, ColumnsAndRows) {
    const Trajectory t = integrate(kModel, {{0.5, 0}, {0, kSqrt2}}, 0.5, 0.1);
    std::ostringstream os;
    write_trajectory_csv(os, kModel, t);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, "t,X,Y,v1,v2,energy,first_integral");
    int rows = 0;
    while (std::getline(is, line)) ++rows;
    EXPECT_EQ(rows, 6);
}

}  // namespace mather
