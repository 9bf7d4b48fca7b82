#pragma once

// =============================================================================
// Euler-Lagrange flow of the magnetic model
// =============================================================================
//
//   xdot = v,   vdot = -2 pi a sin(2 pi x) J v,   J(v1, v2) = (v2, -v1)
//
// i.e. v1dot = -2 pi a sin(2 pi x) v2 and v2dot = +2 pi a sin(2 pi x) v1.
// This is d/dt(dL/dv) = dL/dx for L = |v|^2/2 + a cos(2 pi x) v2, and it
// conserves both E = |v|^2/2 and F_int = a cos(2 pi x) + v2.
//
// Positions live in the universal cover; periodic coefficients are
// evaluated on the reduced coordinate only.
//
// =============================================================================

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <utility>
#include <vector>

#include <boost/math/special_functions/cos_pi.hpp>
#include <boost/math/special_functions/sin_pi.hpp>

#include "mather/errors.hpp"
#include "mather/io.hpp"
#include "mather/torus.hpp"

namespace mather {

struct FlowState {
    LiftedPoint q;
    TangentVec v;

    bool finite() const {
        return std::isfinite(q.X) && std::isfinite(q.Y) && std::isfinite(v.v1) &&
               std::isfinite(v.v2);
    }
};

/// Time derivative of a FlowState.
struct FlowRate {
    TangentVec position_rate;
    TangentVec velocity_rate;
};

/// Signature of a vector field on TT^2 used by the generic integrator.
using VectorField = std::function<FlowRate(const TorusPoint&, const TangentVec&)>;

inline FlowRate vector_field(const MagneticModel& model, const TorusPoint& q, const TangentVec& v) {
    const double k = -model.potential_dx(q.x());
    return {v, {-k * v.v2, k * v.v1}};
}

/// The model field wrapped for the generic integrator.
inline VectorField model_field(const MagneticModel& model) {
    return [model](const TorusPoint& q, const TangentVec& v) { return vector_field(model, q, v); };
}

/// Value of the first integral a cos(2 pi x) + sqrt(2E) sin(phi).
inline double first_integral_value(const MagneticModel& model, const FlowState& s) {
    const double speed = s.v.norm();
    if (speed == 0.0) throw ZeroVelocity("first integral: angle undefined at zero velocity");
    const double phi = std::atan2(s.v.v2, s.v.v1);
    return model.potential(s.q.X) + speed * std::sin(phi);
}

// -----------------------------------------------------------------------------
// Level-set constraint
// -----------------------------------------------------------------------------

/// Joint level {E = energy, F_int = level} on one sign of v1.
///
/// On such a level v2 = F - a cos(2 pi x) and
///   v1^2 = (gap_upper + 2a cos^2(pi x)) (gap_lower + 2a sin^2(pi x))
/// with gap_upper = sqrt(2E) - a - F and gap_lower = sqrt(2E) + F - a.
/// The factored form stays accurate near the saddles, where v1 -> 0.
struct LevelConstraint {
    double energy = 1.0;
    double level = 0.0;
    double v1_sign = 1.0;

    double gap_upper(double amplitude) const {
        const double g = (std::sqrt(2.0 * energy) - amplitude) - level;
        return std::abs(g) < 1e-12 ? 0.0 : g;
    }
    double gap_lower(double amplitude) const {
        const double g = (std::sqrt(2.0 * energy) - amplitude) + level;
        return std::abs(g) < 1e-12 ? 0.0 : g;
    }

    /// Velocity on the level at abscissa x.
    TangentVec velocity_at(const MagneticModel& model, double x) const {
        const double a = model.amplitude();
        const double xr = wrap_unit(x);
        const double c = boost::math::cos_pi(xr);
        const double s = boost::math::sin_pi(xr);
        const double sq = (gap_upper(a) + 2.0 * a * c * c) * (gap_lower(a) + 2.0 * a * s * s);
        return {v1_sign * std::sqrt(std::max(0.0, sq)), level - model.potential(xr)};
    }
};

struct IntegrateOptions {
    /// Integrate the time-reversed flow.
    bool backward = false;
    /// Project onto a joint level of (E, F_int) after every step.
    std::optional<LevelConstraint> constraint;
    /// Model used by the projection; the field's own model by default.
    std::optional<MagneticModel> constraint_model;
};

// -----------------------------------------------------------------------------
// Trajectory
// -----------------------------------------------------------------------------

/// Uniformly sampled orbit; times are elapsed times starting at 0.
class Trajectory {
public:
    Trajectory(std::vector<FlowState> states, double dt) : states_(std::move(states)), dt_(dt) {
        require(states_.size() >= 2, "Trajectory: need at least two states");
        require(dt_ > 0.0, "Trajectory: dt must be positive");
    }

    std::size_t size() const { return states_.size(); }
    double dt() const { return dt_; }
    double time(std::size_t k) const { return static_cast<double>(k) * dt_; }
    double duration() const { return time(states_.size() - 1); }
    const FlowState& state(std::size_t k) const { return states_[k]; }
    const FlowState& front() const { return states_.front(); }
    const FlowState& back() const { return states_.back(); }
    std::span<const FlowState> states() const { return states_; }

private:
    std::vector<FlowState> states_;
    double dt_;
};

namespace detail {

/// RK4 increment of the state over one step of size h.
inline std::array<double, 4> rk4_increment(const VectorField& field, const FlowState& s, double h) {
    auto eval = [&](const FlowState& st) { return field(st.q.project(), st.v); };
    auto shifted = [](const FlowState& st, const FlowRate& r, double w) {
        return FlowState{{st.q.X + w * r.position_rate.v1, st.q.Y + w * r.position_rate.v2},
                         {st.v.v1 + w * r.velocity_rate.v1, st.v.v2 + w * r.velocity_rate.v2}};
    };
    const FlowRate k1 = eval(s);
    const FlowRate k2 = eval(shifted(s, k1, 0.5 * h));
    const FlowRate k3 = eval(shifted(s, k2, 0.5 * h));
    const FlowRate k4 = eval(shifted(s, k3, h));
    auto combine = [h](double a, double b, double c, double d) {
        return h / 6.0 * (a + 2.0 * b + 2.0 * c + d);
    };
    return {combine(k1.position_rate.v1, k2.position_rate.v1, k3.position_rate.v1, k4.position_rate.v1),
            combine(k1.position_rate.v2, k2.position_rate.v2, k3.position_rate.v2, k4.position_rate.v2),
            combine(k1.velocity_rate.v1, k2.velocity_rate.v1, k3.velocity_rate.v1, k4.velocity_rate.v1),
            combine(k1.velocity_rate.v2, k2.velocity_rate.v2, k3.velocity_rate.v2, k4.velocity_rate.v2)};
}

inline std::size_t step_count(double T, double dt) {
    return static_cast<std::size_t>(std::ceil(T / dt - 1e-9));
}

}  // namespace detail

/// Fixed-step RK4 propagator that does not store the path.
class FlowStepper {
public:
    FlowStepper(VectorField field, double dt, IntegrateOptions options = {},
                MagneticModel model = MagneticModel{})
        : field_(std::move(field)),
          h_(options.backward ? -dt : dt),
          constraint_(options.constraint),
          model_(options.constraint_model.value_or(model)) {
        require(dt > 0.0, "FlowStepper: dt must be positive");
    }

    /// Advances one step. Increments are added with compensated summation,
    /// so long runs on the lifted cover do not accumulate rounding in X.
    FlowState step(const FlowState& s) {
        const auto inc = detail::rk4_increment(field_, s, h_);
        std::array<double, 4> x{s.q.X, s.q.Y, s.v.v1, s.v.v2};
        for (std::size_t i = 0; i < 4; ++i) {
            const double y = inc[i] - carry_[i];
            const double t = x[i] + y;
            carry_[i] = (t - x[i]) - y;
            x[i] = t;
        }
        FlowState next{{x[0], x[1]}, {x[2], x[3]}};
        if (constraint_) {
            next.v = constraint_->velocity_at(model_, next.q.X);
            carry_[2] = carry_[3] = 0.0;
        }
        if (!next.finite()) throw NonFiniteState("integrate: state left the finite range");
        return next;
    }

private:
    VectorField field_;
    double h_;
    std::array<double, 4> carry_{};
    std::optional<LevelConstraint> constraint_;
    MagneticModel model_;
};

/// Integrates an arbitrary field; ceil(T/dt)+1 samples.
inline Trajectory integrate_field(const VectorField& field, const FlowState& s0, double T,
                                  double dt, const IntegrateOptions& options = {},
                                  const MagneticModel& model = MagneticModel{}) {
    require(T > 0.0 && dt > 0.0 && dt <= T, "integrate: require T > 0 and 0 < dt <= T");
    require(s0.finite(), "integrate: initial state must be finite");
    FlowStepper stepper(field, dt, options, model);
    const std::size_t n = detail::step_count(T, dt);
    std::vector<FlowState> states;
    states.reserve(n + 1);
    FlowState s = s0;
    if (options.constraint) s.v = options.constraint->velocity_at(model, s.q.X);
    states.push_back(s);
    for (std::size_t k = 0; k < n; ++k) {
        s = stepper.step(s);
        states.push_back(s);
    }
    return Trajectory(std::move(states), dt);
}

inline Trajectory integrate(const MagneticModel& model, const FlowState& s0, double T, double dt,
                            const IntegrateOptions& options = {}) {
    return integrate_field(model_field(model), s0, T, dt, options, model);
}

// -----------------------------------------------------------------------------
// Diagnostics
// -----------------------------------------------------------------------------

inline double first_integral_drift(const MagneticModel& model, const Trajectory& traj) {
    const double f0 = first_integral_value(model, traj.front());
    double drift = 0.0;
    for (const auto& s : traj.states()) {
        drift = std::max(drift, std::abs(first_integral_value(model, s) - f0));
    }
    return drift;
}

/// Max relative deviation of |v|^2/2 from its initial value.
inline double energy_drift(const Trajectory& traj) {
    const double e0 = 0.5 * traj.front().v.norm_sq();
    double drift = 0.0;
    for (const auto& s : traj.states()) drift = std::max(drift, std::abs(0.5 * s.v.norm_sq() - e0));
    return e0 > 0.0 ? drift / e0 : drift;
}

inline HomologyClass rotation_vector_estimate(const Trajectory& traj) {
    const double T = traj.duration();
    require(T >= 1.0, "rotation_vector_estimate: trajectory must last at least one time unit");
    return {(traj.back().q.X - traj.front().q.X) / T, (traj.back().q.Y - traj.front().q.Y) / T};
}

// -----------------------------------------------------------------------------
// Omega-limit surrogate
// -----------------------------------------------------------------------------

/// Phase point in the section chart (x mod 1, phi mod 2 pi) on an energy level.
struct SectionPoint {
    double x = 0.0;
    double phi = 0.0;
};

inline SectionPoint to_section(const FlowState& s) {
    if (s.v.v1 == 0.0 && s.v.v2 == 0.0) throw ZeroVelocity("section chart undefined at v = 0");
    return {wrap_unit(s.q.X), std::atan2(s.v.v2, s.v.v1)};
}

/// Flat distance in the (x mod 1, phi mod 2 pi) chart.
inline double section_distance(const SectionPoint& a, const SectionPoint& b) {
    double dx = std::abs(wrap_unit(a.x) - wrap_unit(b.x));
    dx = std::min(dx, 1.0 - dx);
    double dphi = std::fmod(std::abs(a.phi - b.phi), kTwoPi);
    dphi = std::min(dphi, kTwoPi - dphi);
    return std::hypot(dx, dphi);
}

/// States sampled after a transient, reduced to the fundamental domain.
struct PhaseCloud {
    std::vector<FlowState> points;

    /// sup over the cloud of dist(point, set).
    template <typename DistanceToSet>
    double max_distance(DistanceToSet&& distance_to_set) const {
        double d = 0.0;
        for (const auto& p : points) d = std::max(d, distance_to_set(p));
        return d;
    }
};

struct OmegaOptions {
    /// Keep every stride-th state of the sampling window.
    std::size_t stride = 10;
    std::optional<LevelConstraint> constraint;
};

inline PhaseCloud omega_limit_estimate(const MagneticModel& model, const FlowState& s0,
                                       double T_transient, double T_sample, double dt,
                                       const OmegaOptions& options = {}) {
    require(T_transient >= 0.0 && T_sample > 0.0, "omega_limit_estimate: bad time window");
    require(dt > 0.0 && dt <= T_sample, "omega_limit_estimate: bad dt");
    require(options.stride >= 1, "omega_limit_estimate: stride must be >= 1");
    IntegrateOptions io;
    io.constraint = options.constraint;
    FlowStepper stepper(model_field(model), dt, io, model);
    FlowState s = s0;
    if (options.constraint) s.v = options.constraint->velocity_at(model, s.q.X);
    const std::size_t n_transient = T_transient > 0.0 ? detail::step_count(T_transient, dt) : 0;
    for (std::size_t k = 0; k < n_transient; ++k) s = stepper.step(s);
    const std::size_t n_sample = detail::step_count(T_sample, dt);
    PhaseCloud cloud;
    cloud.points.reserve(n_sample / options.stride + 2);
    for (std::size_t k = 0; k <= n_sample; ++k) {
        if (k % options.stride == 0 || k == n_sample) {
            cloud.points.push_back({{wrap_unit(s.q.X), wrap_unit(s.q.Y)}, s.v});
        }
        if (k < n_sample) s = stepper.step(s);
    }
    return cloud;
}

// -----------------------------------------------------------------------------
// Export
// -----------------------------------------------------------------------------

/// CSV columns t,X,Y,v1,v2,energy,first_integral.
inline void write_trajectory_csv(std::ostream& out, const MagneticModel& model,
                                 const Trajectory& traj) {
    out << "t,X,Y,v1,v2,energy,first_integral\n";
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const FlowState& s = traj.state(k);
        const double fint = model.potential(s.q.X) + s.v.v2;
        out << fmt_sig(traj.time(k)) << ',' << fmt_sig(s.q.X) << ',' << fmt_sig(s.q.Y) << ','
            << fmt_sig(s.v.v1) << ',' << fmt_sig(s.v.v2) << ',' << fmt_sig(0.5 * s.v.norm_sq())
            << ',' << fmt_sig(fint) << '\n';
    }
}

}  // namespace mather
