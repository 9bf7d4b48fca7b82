#pragma once

// =============================================================================
// Closed discrete loops and their action
// =============================================================================
//
// A loop is N nodes q_0 .. q_{N-1} in the universal cover with the closure
// q_N := q_0 + h0 (h0 integer homology) and period T, time step dt = T/N.
// Segment k carries the velocity v_k = (q_{k+1} - q_k)/dt and contributes
//
//   dt * [ |v_k|^2/2 + (m(x_k) + m(x_{k+1}))/2 * v_k.y - <c, v_k> + offset ]
//
// where m(x) = a cos(2 pi x). Constant forms telescope, so changing c shifts
// the action by exactly -<c, h0>.
//
// =============================================================================

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "mather/errors.hpp"
#include "mather/torus.hpp"

namespace mather {

/// Integer homology class of a closed loop.
struct Winding {
    long p = 0;
    long q = 0;

    friend bool operator==(const Winding&, const Winding&) = default;
    HomologyClass as_homology() const {
        return {static_cast<double>(p), static_cast<double>(q)};
    }
    double norm() const { return std::hypot(static_cast<double>(p), static_cast<double>(q)); }
};

class DiscreteLoop {
public:
    static constexpr std::size_t kMinNodes = 8;

    DiscreteLoop(std::vector<LiftedPoint> nodes, Winding h0, double period)
        : nodes_(std::move(nodes)), h0_(h0), period_(period) {
        require(nodes_.size() >= kMinNodes, "DiscreteLoop: need at least 8 nodes");
        require(period_ > 0.0 && std::isfinite(period_), "DiscreteLoop: period must be positive");
    }

    /// Constant-speed straight loop from `start` to start + h0.
    static DiscreteLoop straight(Winding h0, double period, std::size_t n,
                                 LiftedPoint start = {}) {
        std::vector<LiftedPoint> nodes(n);
        for (std::size_t k = 0; k < n; ++k) {
            const double s = static_cast<double>(k) / static_cast<double>(n);
            nodes[k] = {start.X + s * static_cast<double>(h0.p),
                        start.Y + s * static_cast<double>(h0.q)};
        }
        return DiscreteLoop(std::move(nodes), h0, period);
    }

    std::size_t size() const { return nodes_.size(); }
    Winding winding() const { return h0_; }
    double period() const { return period_; }
    double dt() const { return period_ / static_cast<double>(nodes_.size()); }
    std::span<const LiftedPoint> nodes() const { return nodes_; }

    /// Node k for k in [0, N]; k == N applies the closure offset.
    LiftedPoint node(std::size_t k) const {
        if (k == nodes_.size()) {
            return {nodes_[0].X + static_cast<double>(h0_.p), nodes_[0].Y + static_cast<double>(h0_.q)};
        }
        return nodes_[k];
    }

    /// Homology class of the associated periodic measure, h0 / T.
    HomologyClass rotation_vector() const { return (1.0 / period_) * h0_.as_homology(); }

private:
    std::vector<LiftedPoint> nodes_;
    Winding h0_;
    double period_;
};

struct MinimizeReport {
    double action = 0.0;
    int iterations = 0;
    /// max over nodes of |dS/dq_k| / dt (discrete Euler-Lagrange residual).
    double grad_norm = 0.0;
    bool converged = false;
    std::uint64_t seed = 0;
};

struct LoopMinimum {
    DiscreteLoop loop;
    MinimizeReport report;
};

// -----------------------------------------------------------------------------
// Action and gradient on the flat coordinate vector [X0, Y0, X1, Y1, ...]
// -----------------------------------------------------------------------------

namespace detail {

struct LoopGeometry {
    std::size_t n;
    double dt;
    double hx;
    double hy;
};

/// Action of L - eta_c + offset; fills `grad` (size 2N) when non-empty.
inline double loop_action(const MagneticModel& model, const LoopGeometry& g,
                          std::span<const double> z, const CohomologyClass& c, double offset,
                          std::span<double> grad) {
    const std::size_t n = g.n;
    const double a = model.amplitude();
    const bool want_grad = !grad.empty();
    if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);

    double kinetic = 0.0;
    double magnetic = 0.0;
    double m_prev = a * std::cos(kTwoPi * z[0]);
    double dm_prev = -kTwoPi * a * std::sin(kTwoPi * z[0]);
    const double m_first = m_prev;
    const double dm_first = dm_prev;
    for (std::size_t k = 0; k < n; ++k) {
        const bool last = (k + 1 == n);
        const std::size_t j = last ? 0 : k + 1;
        const double x1 = z[2 * j] + (last ? g.hx : 0.0);
        const double y1 = z[2 * j + 1] + (last ? g.hy : 0.0);
        const double dx = x1 - z[2 * k];
        const double dy = y1 - z[2 * k + 1];
        const double m_next = last ? m_first : a * std::cos(kTwoPi * x1);
        const double dm_next = last ? dm_first : -kTwoPi * a * std::sin(kTwoPi * x1);
        kinetic += dx * dx + dy * dy;
        const double m_avg = 0.5 * (m_prev + m_next);
        magnetic += m_avg * dy;
        if (want_grad) {
            const double vx = dx / g.dt;
            const double vy = dy / g.dt;
            grad[2 * k] += -vx + 0.5 * dm_prev * dy;
            grad[2 * k + 1] += -vy - m_avg;
            grad[2 * j] += vx + 0.5 * dm_next * dy;
            grad[2 * j + 1] += vy + m_avg;
        }
        m_prev = m_next;
        dm_prev = dm_next;
    }
    const double T = g.dt * static_cast<double>(n);
    return 0.5 * kinetic / g.dt + magnetic - (c.c1 * g.hx + c.c2 * g.hy) + offset * T;
}

inline LoopGeometry geometry_of(const DiscreteLoop& loop) {
    return {loop.size(), loop.dt(), static_cast<double>(loop.winding().p),
            static_cast<double>(loop.winding().q)};
}

inline std::vector<double> flatten(const DiscreteLoop& loop) {
    std::vector<double> z(2 * loop.size());
    for (std::size_t k = 0; k < loop.size(); ++k) {
        z[2 * k] = loop.nodes()[k].X;
        z[2 * k + 1] = loop.nodes()[k].Y;
    }
    return z;
}

inline DiscreteLoop unflatten(std::span<const double> z, Winding h0, double period) {
    std::vector<LiftedPoint> nodes(z.size() / 2);
    for (std::size_t k = 0; k < nodes.size(); ++k) nodes[k] = {z[2 * k], z[2 * k + 1]};
    return DiscreteLoop(std::move(nodes), h0, period);
}

inline double residual_norm(std::span<const double> grad, double dt) {
    double r = 0.0;
    for (std::size_t k = 0; k < grad.size() / 2; ++k) {
        r = std::max(r, std::hypot(grad[2 * k], grad[2 * k + 1]) / dt);
    }
    return r;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Solves (L + mu I) z = r in place, L the cyclic second-difference matrix
/// (2 on the diagonal, -1 on the cyclic off-diagonals).
inline void cyclic_laplacian_solve(std::span<double> r, double mu, std::vector<double>& work) {
    const std::size_t n = r.size();
    // Sherman-Morrison on the tridiagonal part with corner correction u v^T,
    // u = (gamma, 0, .., 0, -1), v = (1, 0, .., 0, -1/gamma).
    const double diag = 2.0 + mu;
    const double gamma = -diag;
    work.assign(3 * n, 0.0);
    double* cprime = work.data();
    double* zsol = work.data() + n;
    double* usol = work.data() + 2 * n;
    auto thomas = [&](auto rhs_at, double* out) {
        double b0 = diag - gamma;
        cprime[0] = -1.0 / b0;
        out[0] = rhs_at(0) / b0;
        for (std::size_t i = 1; i < n; ++i) {
            const double b = (i + 1 == n) ? diag - 1.0 / gamma : diag;
            const double m = b + cprime[i - 1];
            cprime[i] = -1.0 / m;
            out[i] = (rhs_at(i) + out[i - 1]) / m;
        }
        for (std::size_t i = n - 1; i-- > 0;) out[i] -= cprime[i] * out[i + 1];
    };
    thomas([&](std::size_t i) { return r[i]; }, zsol);
    thomas([&](std::size_t i) { return i == 0 ? gamma : (i + 1 == n ? -1.0 : 0.0); }, usol);
    const double vz = zsol[0] - zsol[n - 1] / gamma;
    const double vu = usol[0] - usol[n - 1] / gamma;
    const double factor = vz / (1.0 + vu);
    for (std::size_t i = 0; i < n; ++i) r[i] = zsol[i] - factor * usol[i];
}

}  // namespace detail

inline double discrete_action(const MagneticModel& model, const DiscreteLoop& loop,
                              const CohomologyClass& c = {}, double offset = 0.0) {
    const auto z = detail::flatten(loop);
    return detail::loop_action(model, detail::geometry_of(loop), z, c, offset, {});
}

/// Gradient of discrete_action with respect to node positions (same layout).
inline std::vector<double> discrete_action_gradient(const MagneticModel& model,
                                                    const DiscreteLoop& loop) {
    const auto z = detail::flatten(loop);
    std::vector<double> g(z.size());
    detail::loop_action(model, detail::geometry_of(loop), z, {}, 0.0, g);
    return g;
}

/// Discrete Euler-Lagrange residual max_k |dS/dq_k| / dt.
inline double euler_lagrange_residual(const MagneticModel& model, const DiscreteLoop& loop) {
    return detail::residual_norm(discrete_action_gradient(model, loop), loop.dt());
}

// -----------------------------------------------------------------------------
// Minimization
// -----------------------------------------------------------------------------

struct MinimizeOptions {
    int max_iters = 4000;
    double grad_tol = 1e-6;
    /// Std-dev of the per-node perturbation of the initial straight loop.
    double noise = 0.02;
    int history = 12;
};

namespace detail {

/// L-BFGS with a cyclic-Laplacian preconditioner (the exact Hessian of the
/// kinetic part) and Armijo backtracking.
inline MinimizeReport lbfgs_minimize(const MagneticModel& model, const LoopGeometry& g,
                                     std::vector<double>& z, const MinimizeOptions& opt) {
    const std::size_t dim = z.size();
    const std::size_t n = g.n;
    const double mu = std::pow(kTwoPi * g.dt, 2) * model.amplitude() + 1e-10;
    std::vector<double> grad(dim), trial(dim), trial_grad(dim), dir(dim), work, column(n);
    struct Pair {
        std::vector<double> s, y;
        double rho;
    };
    std::deque<Pair> memory;

    auto precondition = [&](std::vector<double>& v) {
        for (int comp = 0; comp < 2; ++comp) {
            for (std::size_t k = 0; k < n; ++k) column[k] = v[2 * k + comp] * g.dt;
            cyclic_laplacian_solve(column, mu, work);
            for (std::size_t k = 0; k < n; ++k) v[2 * k + comp] = column[k];
        }
    };
    auto dot = [](const std::vector<double>& a, const std::vector<double>& b) {
        return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
    };

    MinimizeReport rep;
    double f = loop_action(model, g, z, {}, 0.0, grad);
    rep.grad_norm = residual_norm(grad, g.dt);
    int it = 0;
    for (; it < opt.max_iters && rep.grad_norm > opt.grad_tol; ++it) {
        // Two-loop recursion.
        dir = grad;
        std::vector<double> alpha(memory.size());
        for (std::size_t i = memory.size(); i-- > 0;) {
            alpha[i] = memory[i].rho * dot(memory[i].s, dir);
            for (std::size_t d = 0; d < dim; ++d) dir[d] -= alpha[i] * memory[i].y[d];
        }
        precondition(dir);
        if (!memory.empty()) {
            const Pair& last = memory.back();
            std::vector<double> py = last.y;
            precondition(py);
            const double scale = 1.0 / (last.rho * dot(last.y, py));
            for (double& d : dir) d *= scale;
        }
        for (std::size_t i = 0; i < memory.size(); ++i) {
            const double beta = memory[i].rho * dot(memory[i].y, dir);
            for (std::size_t d = 0; d < dim; ++d) dir[d] += (alpha[i] - beta) * memory[i].s[d];
        }
        double slope = -dot(grad, dir);
        if (!(slope < 0.0)) {
            memory.clear();
            dir = grad;
            precondition(dir);
            slope = -dot(grad, dir);
            if (!(slope < 0.0)) break;
        }
        double step = 1.0;
        double f_trial = 0.0;
        bool accepted = false;
        for (int ls = 0; ls < 50; ++ls) {
            for (std::size_t d = 0; d < dim; ++d) trial[d] = z[d] - step * dir[d];
            f_trial = loop_action(model, g, trial, {}, 0.0, trial_grad);
            if (std::isfinite(f_trial) && f_trial <= f + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            // Decrease below the rounding level of f: accept if the residual drops.
            if (std::isfinite(f_trial) &&
                std::abs(f_trial - f) <= 1e-13 * std::max(1.0, std::abs(f)) &&
                residual_norm(trial_grad, g.dt) < rep.grad_norm) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            if (!memory.empty()) {
                memory.clear();
                continue;
            }
            break;
        }
        Pair pair{std::vector<double>(dim), std::vector<double>(dim), 0.0};
        for (std::size_t d = 0; d < dim; ++d) {
            pair.s[d] = trial[d] - z[d];
            pair.y[d] = trial_grad[d] - grad[d];
        }
        const double sy = dot(pair.s, pair.y);
        z.swap(trial);
        grad.swap(trial_grad);
        f = f_trial;
        rep.grad_norm = residual_norm(grad, g.dt);
        if (sy > 1e-14 * std::sqrt(dot(pair.s, pair.s) * dot(pair.y, pair.y))) {
            pair.rho = 1.0 / sy;
            memory.push_back(std::move(pair));
            if (memory.size() > static_cast<std::size_t>(opt.history)) memory.pop_front();
        }
    }
    rep.action = f;
    rep.iterations = it;
    rep.converged = rep.grad_norm <= opt.grad_tol;
    return rep;
}

/// Initial loop for restart `restart`: straight line for h0 != 0, a vertical
/// circuit (up near x = 1/2, down near x = 0) for h0 = 0; plus seeded noise.
inline std::vector<double> initial_loop(Winding h0, double T, std::size_t n, std::uint64_t seed,
                                        int restart, double noise) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> z(2 * n);
    const double x0 = restart == 0 ? 0.5 : unit(rng);
    const double y0 = unit(rng);
    if (h0.p == 0 && h0.q == 0) {
        const double amplitude = (0.5 + 0.5 * unit(rng)) * T / kTwoPi;
        const double orientation = (restart % 2 == 0) ? 1.0 : -1.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double th = kTwoPi * static_cast<double>(k) / static_cast<double>(n);
            z[2 * k] = 0.25 + 0.25 * std::cos(th) + (restart == 0 ? 0.0 : x0 - 0.5);
            z[2 * k + 1] = y0 + orientation * amplitude * std::sin(th);
        }
    } else {
        for (std::size_t k = 0; k < n; ++k) {
            const double s = static_cast<double>(k) / static_cast<double>(n);
            z[2 * k] = x0 + s * static_cast<double>(h0.p);
            z[2 * k + 1] = y0 + s * static_cast<double>(h0.q);
        }
    }
    if (restart > 0) {
        for (double& v : z) v += noise * gauss(rng);
    }
    return z;
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    return splitmix64(seed ^ splitmix64(a * 0x9e3779b97f4a7c15ULL + b + 1));
}

}  // namespace detail

/// Local minimization of the c = 0 action over loops with homology h0 and
/// period T; best of `restarts` starts, deterministic in `seed`.
inline LoopMinimum minimize_loop(const MagneticModel& model, Winding h0, double T, std::size_t n,
                                 int restarts, std::uint64_t seed,
                                 const MinimizeOptions& options = {}) {
    require(T > 0.0 && std::isfinite(T), "minimize_loop: T must be positive");
    require(n >= DiscreteLoop::kMinNodes, "minimize_loop: N must be at least 8");
    require(restarts >= 1, "minimize_loop: restarts must be >= 1");
    const detail::LoopGeometry geom{n, T / static_cast<double>(n), static_cast<double>(h0.p),
                                    static_cast<double>(h0.q)};
    std::optional<LoopMinimum> best;
    for (int r = 0; r < restarts; ++r) {
        const std::uint64_t restart_seed = detail::derive_seed(seed, static_cast<std::uint64_t>(r));
        auto z = detail::initial_loop(h0, T, n, restart_seed, r, options.noise);
        MinimizeReport rep = detail::lbfgs_minimize(model, geom, z, options);
        rep.seed = seed;
        const bool better =
            !best || (rep.converged && !best->report.converged) ||
            (rep.converged == best->report.converged && rep.action < best->report.action);
        if (better) best = LoopMinimum{detail::unflatten(z, h0, T), rep};
    }
    return *best;
}

// -----------------------------------------------------------------------------
// Beta estimation
// -----------------------------------------------------------------------------

struct BetaOptions {
    /// Largest multiplicity k of the primitive direction tried.
    int q_max = 2;
    /// Periods of the zero-homology candidates are period_scale * k.
    double period_scale = 20.0;
    /// Minimum node count per loop.
    std::size_t nodes = 64;
    /// Node count is raised so that T / N <= max_dt.
    double max_dt = 0.02;
    int restarts = 2;
    std::uint64_t seed = 1;
    MinimizeOptions minimize;
};

struct BetaCandidate {
    Winding h0;
    double period = 0.0;
    std::size_t nodes = 0;
    double normalized_action = 0.0;
    MinimizeReport report;
};

struct BetaEstimate {
    double value = 0.0;
    BetaCandidate best;
    std::vector<BetaCandidate> candidates;
};

/// Primitive integer direction of h: exact when h is rational with small
/// denominators, otherwise the best continued-fraction convergent with
/// entries bounded by `max_entry`.
inline Winding primitive_direction(const HomologyClass& h, long max_entry = 4096) {
    require(h.norm() > 0.0, "primitive_direction: zero class has no direction");
    const double ax = std::abs(h.h1);
    const double ay = std::abs(h.h2);
    const long sx = h.h1 < 0 ? -1 : 1;
    const long sy = h.h2 < 0 ? -1 : 1;
    if (ax <= 1e-14 * ay) return {0, sy};
    if (ay <= 1e-14 * ax) return {sx, 0};
    // Convergents of ratio = ay/ax.
    const double ratio = ay / ax;
    long p_prev = 1, p = static_cast<long>(std::floor(ratio));
    long q_prev = 0, q = 1;
    double rem = ratio - std::floor(ratio);
    while (rem > 1e-12 && std::abs(static_cast<double>(p) / q - ratio) > 1e-13 * ratio) {
        const double inv = 1.0 / rem;
        const long a = static_cast<long>(std::floor(inv));
        const long p_next = a * p + p_prev;
        const long q_next = a * q + q_prev;
        if (p_next > max_entry || q_next > max_entry) break;
        p_prev = p;
        q_prev = q;
        p = p_next;
        q = q_next;
        rem = inv - static_cast<double>(a);
    }
    return {sx * q, sy * p};
}

/// Upper estimate of beta(h): minimum over candidate loops h0 = k (p, q),
/// k = 1..q_max, T = |h0| / |h| of action / T. Ties keep the smaller k.
inline BetaEstimate beta_estimate(const MagneticModel& model, const HomologyClass& h,
                                  const BetaOptions& opt) {
    require(opt.q_max >= 1, "beta_estimate: q_max must be >= 1");
    require(opt.period_scale > 0.0, "beta_estimate: period_scale must be positive");
    const bool zero = h.norm() <= 1e-14;
    const Winding dir = zero ? Winding{0, 0} : primitive_direction(h);
    BetaEstimate out;
    bool have = false;
    for (int k = 1; k <= opt.q_max; ++k) {
        BetaCandidate cand;
        cand.h0 = {k * dir.p, k * dir.q};
        cand.period = zero ? opt.period_scale * k : cand.h0.norm() / h.norm();
        cand.nodes = std::max(opt.nodes, static_cast<std::size_t>(std::ceil(cand.period / opt.max_dt)));
        const auto seed = detail::derive_seed(opt.seed, 1000 + static_cast<std::uint64_t>(k));
        const LoopMinimum m = minimize_loop(model, cand.h0, cand.period, cand.nodes, opt.restarts,
                                            seed, opt.minimize);
        cand.report = m.report;
        cand.normalized_action = m.report.action / cand.period;
        out.candidates.push_back(cand);
        if (!cand.report.converged) continue;
        if (!have || cand.normalized_action < out.best.normalized_action) {
            out.best = cand;
            have = true;
        }
    }
    if (!have) throw NoConvergence("beta_estimate: no candidate loop converged");
    out.value = out.best.normalized_action;
    return out;
}

}  // namespace mather
