#pragma once

// =============================================================================
// Vertical magnetic example: invariant graphs and their classes
// =============================================================================
//
// On the energy level E the velocity is v = sqrt(2E) (cos phi, sin phi) and
//
//     F_int(x, phi) = a cos(2 pi x) + sqrt(2E) sin(phi)
//
// is conserved. For E > a^2/2 and |F| < sqrt(2E) - a the level {F_int = F}
// is the union of two graphs over x:
//
//     branch 1: phi_1(x) = asin((F - a cos(2 pi x)) / sqrt(2E))
//     branch 2: phi_2(x) = pi - phi_1(x)
//
// At |F| = sqrt(2E) - a the branches touch at a saddle and form the
// saddle connections.
//
// =============================================================================

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>

#include "mather/errors.hpp"
#include "mather/flow.hpp"
#include "mather/io.hpp"
#include "mather/parallel.hpp"
#include "mather/torus.hpp"

namespace mather::example {

enum class GraphStatus { foliated, saddle_boundary, none };

inline const char* to_string(GraphStatus s) {
    switch (s) {
        case GraphStatus::foliated: return "foliated";
        case GraphStatus::saddle_boundary: return "saddle-boundary";
        case GraphStatus::none: return "none";
    }
    return "none";
}

struct GraphParams {
    double E = 1.0;
    double F = 0.0;
    int branch = 1;
};

/// F_int at (x, phi) on energy level E.
inline double first_integral(double x, double phi, double E, const MagneticModel& model = MagneticModel{}) {
    require(E > 0.0, "first_integral: E must be positive");
    return model.potential(x) + std::sqrt(2.0 * E) * std::sin(phi);
}

/// Saddle value sqrt(2E) - a of |F_int|.
inline double saddle_level(double E, const MagneticModel& model = MagneticModel{}) {
    return std::sqrt(2.0 * E) - model.amplitude();
}

inline GraphStatus graph_exists(double E, double F, const MagneticModel& model = MagneticModel{}) {
    require(E > 0.0, "graph_exists: E must be positive");
    const double a = model.amplitude();
    if (!(E > 0.5 * a * a)) return GraphStatus::none;
    const double gap = saddle_level(E, model) - std::abs(F);
    if (std::abs(gap) <= 1e-12) return GraphStatus::saddle_boundary;
    return gap > 0.0 ? GraphStatus::foliated : GraphStatus::none;
}

namespace detail {

inline void check_params(const GraphParams& p, const MagneticModel& model) {
    require(p.branch == 1 || p.branch == 2, "GraphParams: branch must be 1 or 2");
    require(p.E > 0.0, "GraphParams: E must be positive");
    if (graph_exists(p.E, p.F, model) == GraphStatus::none) {
        throw NoGraph("level (E=" + fmt_sig(p.E) + ", F=" + fmt_sig(p.F) + ") is not a graph over x");
    }
}

/// sqrt(2E) cos(phi_1(x)) >= 0, in the factored form that stays accurate
/// next to the saddles.
inline double horizontal_speed(double x, const GraphParams& p, const MagneticModel& model) {
    LevelConstraint level{p.E, p.F, 1.0};
    return level.velocity_at(model, x).v1;
}

}  // namespace detail

/// phi on the requested branch; branch 1 in [-pi/2, pi/2], branch 2 = pi - branch 1.
inline double solve_branch(double x, const GraphParams& p, const MagneticModel& model = MagneticModel{}) {
    detail::check_params(p, model);
    const double arg = (p.F - model.potential(x)) / std::sqrt(2.0 * p.E);
    if (std::abs(arg) > 1.0 + 1e-12) throw NoGraph("solve_branch: |sin phi| > 1");
    const double phi1 = std::asin(std::clamp(arg, -1.0, 1.0));
    return p.branch == 1 ? phi1 : std::numbers::pi - phi1;
}

/// eta_i = sqrt(2E) cos(phi_i(x)) dx + F dy.
inline CotangentVec eta_form(double x, const GraphParams& p, const MagneticModel& model = MagneticModel{}) {
    const double phi = solve_branch(x, p, model);
    return {std::sqrt(2.0 * p.E) * std::cos(phi), p.F};
}

/// Legendre image of the graph's velocity field at x.
inline CotangentVec graph_momentum(double x, const GraphParams& p, const MagneticModel& model = MagneticModel{}) {
    const double phi = solve_branch(x, p, model);
    const double speed = std::sqrt(2.0 * p.E);
    return legendre(model, TorusPoint(x, 0.0), {speed * std::cos(phi), speed * std::sin(phi)});
}

/// Phase state on the graph at (x, y).
inline FlowState graph_state(double x, double y, const GraphParams& p,
                             const MagneticModel& model = MagneticModel{}) {
    const double phi = solve_branch(x, p, model);
    const double speed = std::sqrt(2.0 * p.E);
    return {{x, y}, {speed * std::cos(phi), speed * std::sin(phi)}};
}

// -----------------------------------------------------------------------------
// Cohomology classes
// -----------------------------------------------------------------------------

/// [eta_i] = (int_0^1 sqrt(2E) cos(phi_i) dx, F). Adaptive Gauss-Kronrod,
/// split at x = 1/2 where the integrand has its only interior near-zero.
inline CohomologyClass cohomology_class(const GraphParams& p, const MagneticModel& model = MagneticModel{}) {
    detail::check_params(p, model);
    if (graph_exists(p.E, p.F, model) != GraphStatus::foliated) {
        throw NoGraph("cohomology_class: use saddle_class on the saddle-connection boundary");
    }
    using boost::math::quadrature::gauss_kronrod;
    auto f = [&](double x) { return detail::horizontal_speed(x, p, model); };
    double err = 0.0;
    const double left = gauss_kronrod<double, 61>::integrate(f, 0.0, 0.5, 20, 1e-13, &err);
    const double right = gauss_kronrod<double, 61>::integrate(f, 0.5, 1.0, 20, 1e-13, &err);
    const double c1 = left + right;
    return {p.branch == 1 ? c1 : -c1, p.F};
}

struct SaddleClass {
    CohomologyClass value;
    /// |difference| between the last two steps of the schedule.
    double last_change = 0.0;
    std::vector<std::pair<double, double>> schedule;  ///< (offset, c1) pairs
};

/// One-sided limit of [eta_i] as F approaches the saddle level: `upper`
/// selects F -> (sqrt(2E) - a)^- ([sigma_i]), otherwise F -> (a - sqrt(2E))^+
/// ([xi_i]). Offsets 10^-2 .. 10^-10.
inline SaddleClass saddle_class(double E, int branch, bool upper, const MagneticModel& model = MagneticModel{}) {
    require(E > 0.5 * model.amplitude() * model.amplitude(), "saddle_class: need E > a^2/2");
    const double level = saddle_level(E, model);
    SaddleClass out;
    double prev = std::numeric_limits<double>::quiet_NaN();
    for (int k = 2; k <= 10; ++k) {
        const double offset = std::pow(10.0, -k);
        if (offset >= level) continue;
        const double F = upper ? level - offset : -level + offset;
        const CohomologyClass c = cohomology_class({E, F, branch}, model);
        out.schedule.emplace_back(offset, c.c1);
        if (!std::isnan(prev)) out.last_change = std::abs(c.c1 - prev);
        prev = c.c1;
        out.value = {c.c1, upper ? level : -level};
    }
    require(!out.schedule.empty(), "saddle_class: saddle level too close to zero");
    return out;
}

// -----------------------------------------------------------------------------
// Critical points and singular orbits
// -----------------------------------------------------------------------------

enum class CriticalKind { maximum, saddle, minimum };

inline const char* to_string(CriticalKind k) {
    switch (k) {
        case CriticalKind::maximum: return "maximum";
        case CriticalKind::saddle: return "saddle";
        case CriticalKind::minimum: return "minimum";
    }
    return "saddle";
}

struct CriticalPoint {
    double x = 0.0;
    double phi = 0.0;
    CriticalKind kind = CriticalKind::saddle;
    double value = 0.0;
};

/// Hessian of F_int in (x, phi) at a critical point; it is diagonal there.
inline std::array<double, 2> first_integral_hessian(double x, double phi, double E,
                                                    const MagneticModel& model = MagneticModel{}) {
    const double a = model.amplitude();
    return {-kTwoPi * kTwoPi * a * std::cos(kTwoPi * x), -std::sqrt(2.0 * E) * std::sin(phi)};
}

inline CriticalKind classify_critical_point(double x, double phi, double E,
                                            const MagneticModel& model = MagneticModel{}) {
    const auto h = first_integral_hessian(x, phi, E, model);
    if (h[0] < 0.0 && h[1] < 0.0) return CriticalKind::maximum;
    if (h[0] > 0.0 && h[1] > 0.0) return CriticalKind::minimum;
    return CriticalKind::saddle;
}

/// The four critical points of F_int on the energy level E.
inline std::vector<CriticalPoint> critical_points(double E, const MagneticModel& model = MagneticModel{}) {
    require(E > 0.0, "critical_points: E must be positive");
    const double h = 0.5 * std::numbers::pi;
    std::vector<CriticalPoint> out;
    for (auto [x, phi] : std::array<std::pair<double, double>, 4>{{{0.0, h}, {0.0, -h}, {0.5, h}, {0.5, -h}}}) {
        out.push_back({x, phi, classify_critical_point(x, phi, E, model), first_integral(x, phi, E, model)});
    }
    return out;
}

/// Rotation vectors of the vertical orbits gamma_1 (x = 1/2) and gamma_2 (x = 0).
inline std::pair<HomologyClass, HomologyClass> singular_rotation_vectors(double E) {
    require(E > 0.0, "singular_rotation_vectors: E must be positive");
    const double s = std::sqrt(2.0 * E);
    return {{0.0, s}, {0.0, -s}};
}

inline FlowState gamma1_state(double E) { return {{0.5, 0.0}, {0.0, std::sqrt(2.0 * E)}}; }
inline FlowState gamma2_state(double E) { return {{0.0, 0.0}, {0.0, -std::sqrt(2.0 * E)}}; }

// -----------------------------------------------------------------------------
// Distances in the (x mod 1, phi mod 2 pi) chart
// -----------------------------------------------------------------------------

/// Distance from a section point to the branch graph of p.
inline double graph_distance(const SectionPoint& s, const GraphParams& p,
                             const MagneticModel& model = MagneticModel{}) {
    auto at = [&](double x) { return section_distance(s, {x, solve_branch(x, p, model)}); };
    // The vertical distance bounds the true one, so the nearest graph point
    // lies within that horizontal window.
    const double vertical = at(s.x);
    double lo = s.x - vertical;
    double hi = s.x + vertical;
    if (vertical > 0.05) {
        constexpr int kSamples = 256;
        double best = vertical;
        double best_x = s.x;
        for (int k = 0; k < kSamples; ++k) {
            const double x = static_cast<double>(k) / kSamples;
            const double d = at(x);
            if (d < best) {
                best = d;
                best_x = x;
            }
        }
        lo = best_x - 1.0 / kSamples;
        hi = best_x + 1.0 / kSamples;
    }
    if (!(hi > lo)) return vertical;
    const auto r = boost::math::tools::brent_find_minima([&](double x) { return at(x); }, lo, hi, 40);
    return std::min({vertical, r.second, at(lo), at(hi)});
}

/// Distance to the gamma_1 orbit set {x = 1/2, phi = pi/2}.
inline double gamma1_distance(const SectionPoint& s) {
    return section_distance(s, {0.5, 0.5 * std::numbers::pi});
}

// -----------------------------------------------------------------------------
// Invariance and absorbing checks
// -----------------------------------------------------------------------------

struct InvarianceOptions {
    std::size_t n_seeds = 16;
    double T = 50.0;
    double dt = 1e-3;
    /// Distances are measured on every stride-th state.
    std::size_t stride = 1;
    /// Project onto the joint (E, F) level after each step; used on the
    /// saddle-connection boundary where the hyperbolic saddle amplifies
    /// integration error.
    bool project = false;
    unsigned workers = 1;
};

struct InvarianceReport {
    double max_deviation = 0.0;
    std::vector<double> per_seed;
    /// Max distance to the gamma_1 orbit set over the final tenth of each run.
    double final_gamma1_distance = 0.0;
};

/// Orbits started on the branch graph at x_k = (k + 1/2)/n; reports the sup
/// over sampled states of the distance to the graph.
inline InvarianceReport graph_invariance_check(const GraphParams& p, const InvarianceOptions& opt,
                                               const VectorField& field,
                                               const MagneticModel& model = MagneticModel{}) {
    detail::check_params(p, model);
    require(opt.n_seeds >= 1 && opt.stride >= 1, "graph_invariance_check: bad options");
    InvarianceReport rep;
    rep.per_seed.assign(opt.n_seeds, 0.0);
    std::vector<double> tail(opt.n_seeds, 0.0);
    parallel_for(opt.n_seeds, opt.workers, [&](std::size_t k) {
        const double x0 = (static_cast<double>(k) + 0.5) / static_cast<double>(opt.n_seeds);
        IntegrateOptions io;
        if (opt.project) {
            io.constraint = LevelConstraint{p.E, p.F, p.branch == 1 ? 1.0 : -1.0};
            io.constraint_model = model;
        }
        const Trajectory traj = integrate_field(field, graph_state(x0, 0.0, p, model), opt.T, opt.dt, io, model);
        double dev = 0.0;
        double g1 = 0.0;
        const std::size_t tail_start = traj.size() - traj.size() / 10;
        for (std::size_t i = 0; i < traj.size(); i += opt.stride) {
            const SectionPoint s = to_section(traj.state(i));
            dev = std::max(dev, graph_distance(s, p, model));
            if (i >= tail_start) g1 = std::max(g1, gamma1_distance(s));
        }
        rep.per_seed[k] = dev;
        tail[k] = g1;
    });
    rep.max_deviation = *std::max_element(rep.per_seed.begin(), rep.per_seed.end());
    rep.final_gamma1_distance = *std::max_element(tail.begin(), tail.end());
    return rep;
}

inline InvarianceReport graph_invariance_check(const GraphParams& p, const InvarianceOptions& opt,
                                               const MagneticModel& model = MagneticModel{}) {
    return graph_invariance_check(p, opt, model_field(model), model);
}

struct WitnessOptions {
    double T_transient = 200.0;
    double T_sample = 20.0;
    double dt = 1e-3;
    std::size_t stride = 10;
    /// Omega-limit cloud must come this close to the graph.
    double omega_tol = 1e-2;
    /// Start point must be at least this far from the graph.
    double separation = 0.1;
    /// Orbits sampled in the foliated case.
    std::size_t n_orbits = 32;
    unsigned workers = 1;
};

struct WitnessCandidate {
    SectionPoint start;
    double start_distance = 0.0;  ///< start point to the tested graph
    double omega_distance = 0.0;  ///< omega-limit cloud to the tested graph
    double gamma1_distance = 0.0; ///< omega-limit cloud to the gamma_1 orbit set
    bool witness = false;
};

struct WitnessReport {
    double E = 0.0;
    double F = 0.0;
    int graph_branch = 2;
    std::string regime;
    bool found = false;
    /// Saddle case only: no candidate met the tolerances.
    bool inconclusive = false;
    std::optional<WitnessCandidate> witness;
    std::vector<WitnessCandidate> candidates;
};

namespace detail {

inline WitnessCandidate run_candidate(const MagneticModel& model, const FlowState& s0, const GraphParams& graph,
                                      const std::optional<LevelConstraint>& constraint,
                                      const WitnessOptions& opt) {
    WitnessCandidate c;
    c.start = to_section(s0);
    c.start_distance = graph_distance(c.start, graph, model);
    OmegaOptions oo;
    oo.stride = opt.stride;
    oo.constraint = constraint;
    const PhaseCloud cloud = omega_limit_estimate(model, s0, opt.T_transient, opt.T_sample, opt.dt, oo);
    c.omega_distance = cloud.max_distance([&](const FlowState& s) { return graph_distance(to_section(s), graph, model); });
    c.gamma1_distance = cloud.max_distance([&](const FlowState& s) { return gamma1_distance(to_section(s)); });
    c.witness = c.omega_distance < opt.omega_tol && c.start_distance > opt.separation;
    return c;
}

inline void finish(WitnessReport& rep) {
    for (const auto& c : rep.candidates) {
        if (c.witness) {
            rep.found = true;
            rep.witness = c;
            break;
        }
    }
}

}  // namespace detail

/// Saddle-connection case at energy E: points on the branch-1 connection
/// (x_k = k/8, off the vertical orbits) are integrated on their level and
/// tested against the branch-2 connection graph.
inline WitnessReport absorbing_witness(double E, const WitnessOptions& opt = {},
                                       const MagneticModel& model = MagneticModel{}) {
    require(E > 0.5 * model.amplitude() * model.amplitude(), "absorbing_witness: need E > a^2/2");
    const double F = saddle_level(E, model);
    const GraphParams source{E, F, 1};
    const GraphParams target{E, F, 2};
    WitnessReport rep;
    rep.E = E;
    rep.F = F;
    rep.regime = "saddle-boundary";
    std::vector<double> xs;
    for (int k = 0; k < 8; ++k) {
        if (k != 4) xs.push_back(k / 8.0);
    }
    rep.candidates.resize(xs.size());
    const LevelConstraint level{E, F, 1.0};
    parallel_for(xs.size(), opt.workers, [&](std::size_t k) {
        rep.candidates[k] = detail::run_candidate(model, graph_state(xs[k], 0.0, source, model), target, level, opt);
    });
    detail::finish(rep);
    rep.inconclusive = !rep.found;
    return rep;
}

/// Foliated case: orbits started away from the branch graph of p (on other
/// levels of F_int at the same energy, and on the opposite branch) are
/// tested for an omega-limit inside the graph.
inline WitnessReport absorbing_witness_foliated(const GraphParams& p, const WitnessOptions& opt = {},
                                                const MagneticModel& model = MagneticModel{}) {
    detail::check_params(p, model);
    require(graph_exists(p.E, p.F, model) == GraphStatus::foliated, "absorbing_witness_foliated: need a foliated level");
    WitnessReport rep;
    rep.E = p.E;
    rep.F = p.F;
    rep.graph_branch = p.branch;
    rep.regime = "foliated";
    const double speed = std::sqrt(2.0 * p.E);
    const std::array<double, 4> offsets{std::numbers::pi, 0.4, -0.4, 0.8};
    rep.candidates.resize(opt.n_orbits);
    parallel_for(opt.n_orbits, opt.workers, [&](std::size_t k) {
        const double x0 = (static_cast<double>(k / offsets.size()) + 0.25) /
                          std::ceil(static_cast<double>(opt.n_orbits) / offsets.size());
        const double phi0 = solve_branch(x0, p, model) + offsets[k % offsets.size()];
        const FlowState s0{{x0, 0.0}, {speed * std::cos(phi0), speed * std::sin(phi0)}};
        rep.candidates[k] = detail::run_candidate(model, s0, p, std::nullopt, opt);
    });
    detail::finish(rep);
    return rep;
}

// -----------------------------------------------------------------------------
// Scans and export
// -----------------------------------------------------------------------------

struct RegionCell {
    double E = 0.0;
    double F = 0.0;
    GraphStatus status = GraphStatus::none;
};

/// Cell-centred scan of [E_min, E_max] x [F_min, F_max].
inline std::vector<RegionCell> region_scan(double E_min, double E_max, std::size_t nE, double F_min,
                                           double F_max, std::size_t nF,
                                           const MagneticModel& model = MagneticModel{}) {
    require(E_min > 0.0 && E_max > E_min && F_max > F_min && nE >= 1 && nF >= 1, "region_scan: bad range");
    std::vector<RegionCell> out;
    out.reserve(nE * nF);
    for (std::size_t i = 0; i < nE; ++i) {
        const double E = E_min + (E_max - E_min) * (static_cast<double>(i) + 0.5) / static_cast<double>(nE);
        for (std::size_t j = 0; j < nF; ++j) {
            const double F = F_min + (F_max - F_min) * (static_cast<double>(j) + 0.5) / static_cast<double>(nF);
            out.push_back({E, F, graph_exists(E, F, model)});
        }
    }
    return out;
}

inline void write_region_csv(std::ostream& out, const std::vector<RegionCell>& cells) {
    out << "E,F,status\n";
    for (const auto& c : cells) out << fmt_sig(c.E) << ',' << fmt_sig(c.F) << ',' << to_string(c.status) << '\n';
}

inline void write_graph_csv(std::ostream& out, const GraphParams& p, std::size_t n,
                            const MagneticModel& model = MagneticModel{}) {
    require(n >= 2, "write_graph_csv: need at least two samples");
    out << "x,phi,p1,p2\n";
    for (std::size_t k = 0; k < n; ++k) {
        const double x = static_cast<double>(k) / static_cast<double>(n);
        const CotangentVec m = graph_momentum(x, p, model);
        out << fmt_sig(x) << ',' << fmt_sig(solve_branch(x, p, model)) << ',' << fmt_sig(m.p1) << ','
            << fmt_sig(m.p2) << '\n';
    }
}

}  // namespace mather::example
