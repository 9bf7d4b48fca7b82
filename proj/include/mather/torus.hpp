#pragma once

// =============================================================================
// Torus geometry and the vertical magnetic Lagrangian
// =============================================================================
//
// T^2 = R^2 / Z^2 with the flat metric. The model Lagrangian is
//
//     L(x, y, v) = |v|^2 / 2 + a cos(2 pi x) v2
//
// Its Legendre transform is p = (v1, v2 + a cos(2 pi x)) and the dual
// Hamiltonian is H(x, p) = ((p1)^2 + (p2 - a cos(2 pi x))^2) / 2.
// Nothing depends on y.
//
// =============================================================================

#include <cmath>
#include <numbers>

#include <boost/math/special_functions/cos_pi.hpp>
#include <boost/math/special_functions/sin_pi.hpp>

#include "mather/errors.hpp"

namespace mather {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Reduce a real to [0, 1).
inline double wrap_unit(double value) {
    double r = value - std::floor(value);
    return r >= 1.0 ? 0.0 : r;
}

/// Point of the fundamental domain [0,1)^2.
class TorusPoint {
public:
    TorusPoint() = default;
    TorusPoint(double x, double y) : x_(wrap_unit(x)), y_(wrap_unit(y)) {}

    double x() const { return x_; }
    double y() const { return y_; }

private:
    double x_ = 0.0;
    double y_ = 0.0;
};

/// Point of the universal cover R^2.
struct LiftedPoint {
    double X = 0.0;
    double Y = 0.0;

    TorusPoint project() const { return {X, Y}; }
    /// Integer cell containing the point.
    double winding_x() const { return std::floor(X); }
    double winding_y() const { return std::floor(Y); }
};

struct TangentVec {
    double v1 = 0.0;
    double v2 = 0.0;

    double norm_sq() const { return v1 * v1 + v2 * v2; }
    double norm() const { return std::hypot(v1, v2); }
};

struct CotangentVec {
    double p1 = 0.0;
    double p2 = 0.0;
};

/// Element of H^1(T^2; R).
struct CohomologyClass {
    double c1 = 0.0;
    double c2 = 0.0;

    friend CohomologyClass operator+(CohomologyClass a, CohomologyClass b) {
        return {a.c1 + b.c1, a.c2 + b.c2};
    }
    friend CohomologyClass operator-(CohomologyClass a, CohomologyClass b) {
        return {a.c1 - b.c1, a.c2 - b.c2};
    }
    friend CohomologyClass operator*(double s, CohomologyClass a) {
        return {s * a.c1, s * a.c2};
    }
};

/// Element of H_1(T^2; R).
struct HomologyClass {
    double h1 = 0.0;
    double h2 = 0.0;

    double norm() const { return std::hypot(h1, h2); }

    friend HomologyClass operator+(HomologyClass a, HomologyClass b) {
        return {a.h1 + b.h1, a.h2 + b.h2};
    }
    friend HomologyClass operator-(HomologyClass a, HomologyClass b) {
        return {a.h1 - b.h1, a.h2 - b.h2};
    }
    friend HomologyClass operator*(double s, HomologyClass a) {
        return {s * a.h1, s * a.h2};
    }
};

/// L = |v|^2/2 + a cos(2 pi x) v2 with amplitude a > 0.
class MagneticModel {
public:
    explicit MagneticModel(double amplitude = 1.0) : amplitude_(amplitude) {
        require(std::isfinite(amplitude) && amplitude > 0.0,
                "MagneticModel: amplitude must be positive");
    }

    double amplitude() const { return amplitude_; }

    /// Magnetic potential component a cos(2 pi x). Exact reduction keeps
    /// half-integer x on the critical lines.
    double potential(double x) const { return amplitude_ * boost::math::cos_pi(2.0 * x); }
    /// d/dx of the potential.
    double potential_dx(double x) const {
        return -kTwoPi * amplitude_ * boost::math::sin_pi(2.0 * x);
    }

private:
    double amplitude_;
};

inline double lagrangian(const MagneticModel& model, const TorusPoint& q, const TangentVec& v) {
    return 0.5 * v.norm_sq() + model.potential(q.x()) * v.v2;
}

inline double energy(const MagneticModel&, const TorusPoint&, const TangentVec& v) {
    return 0.5 * v.norm_sq();
}

inline CotangentVec legendre(const MagneticModel& model, const TorusPoint& q, const TangentVec& v) {
    return {v.v1, v.v2 + model.potential(q.x())};
}

inline TangentVec inverse_legendre(const MagneticModel& model, const TorusPoint& q,
                                   const CotangentVec& p) {
    return {p.p1, p.p2 - model.potential(q.x())};
}

inline double hamiltonian(const MagneticModel& model, const TorusPoint& q, const CotangentVec& p) {
    const double w = p.p2 - model.potential(q.x());
    return 0.5 * (p.p1 * p.p1 + w * w);
}

inline double pairing(const CohomologyClass& c, const HomologyClass& h) {
    return c.c1 * h.h1 + c.c2 * h.h2;
}

/// Evaluates the constant representative c1 dx + c2 dy of class c on v.
inline double constant_form_eval(const CohomologyClass& c, const TangentVec& v) {
    return c.c1 * v.v1 + c.c2 * v.v2;
}

}  // namespace mather
