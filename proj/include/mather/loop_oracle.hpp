#pragma once

// Brute-force reference for loop minimization.
//
// Deliberately shares no code with minimize_loop: its own evaluation of the
// discrete action (same trapezoidal functional, written per segment), a
// Polak-Ribiere nonlinear conjugate-gradient optimizer without
// preconditioning, and dense random Fourier-mode starting loops in addition
// to straight seeds at several abscissae. Slow; intended for tests.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "mather/errors.hpp"
#include "mather/loop.hpp"
#include "mather/torus.hpp"

namespace mather::oracle {

struct BruteForceResult {
    double normalized_action = std::numeric_limits<double>::infinity();
    double action = std::numeric_limits<double>::infinity();
    int starts_converged = 0;
    int starts_total = 0;
};

namespace detail {

struct Problem {
    double amplitude;
    std::size_t n;
    double T;
    double wx;
    double wy;

    double h() const { return T / static_cast<double>(n); }

    // Coordinates stored as two arrays xs, ys packed into one vector: [xs | ys].
    double value(const std::vector<double>& u, std::vector<double>* grad) const {
        const double step = h();
        double total = 0.0;
        if (grad) grad->assign(u.size(), 0.0);
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t k1 = (k + 1) % n;
            const double xa = u[k];
            const double ya = u[n + k];
            const double xb = u[k1] + (k1 == 0 ? wx : 0.0);
            const double yb = u[n + k1] + (k1 == 0 ? wy : 0.0);
            const double ca = std::cos(2.0 * std::numbers::pi * xa);
            const double cb = std::cos(2.0 * std::numbers::pi * xb);
            const double sa = std::sin(2.0 * std::numbers::pi * xa);
            const double sb = std::sin(2.0 * std::numbers::pi * xb);
            const double ux = (xb - xa) / step;
            const double uy = (yb - ya) / step;
            const double coupling = 0.5 * amplitude * (ca + cb);
            // Segment Lagrangian times step.
            total += step * (0.5 * (ux * ux + uy * uy) + coupling * uy);
            if (grad) {
                auto& gr = *grad;
                const double dcoup_dxa = -std::numbers::pi * amplitude * sa;
                const double dcoup_dxb = -std::numbers::pi * amplitude * sb;
                gr[k] += -ux + step * dcoup_dxa * uy;
                gr[k1] += ux + step * dcoup_dxb * uy;
                gr[n + k] += -uy - coupling;
                gr[n + k1] += uy + coupling;
            }
        }
        return total;
    }
};

inline double norm_inf_scaled(const std::vector<double>& g, std::size_t n, double step) {
    double r = 0.0;
    for (std::size_t k = 0; k < n; ++k) r = std::max(r, std::hypot(g[k], g[n + k]) / step);
    return r;
}

/// Polak-Ribiere+ CG with backtracking/expanding line search.
inline bool conjugate_gradient(const Problem& pb, std::vector<double>& u, double tol, int max_iters,
                               double& f_out) {
    const std::size_t dim = u.size();
    std::vector<double> g, g_new, d(dim), trial(dim);
    double f = pb.value(u, &g);
    for (std::size_t i = 0; i < dim; ++i) d[i] = -g[i];
    double step = pb.h() * 0.5;
    for (int it = 0; it < max_iters; ++it) {
        if (norm_inf_scaled(g, pb.n, pb.h()) <= tol) {
            f_out = f;
            return true;
        }
        double slope = 0.0;
        for (std::size_t i = 0; i < dim; ++i) slope += g[i] * d[i];
        if (slope >= 0.0) {
            for (std::size_t i = 0; i < dim; ++i) d[i] = -g[i];
            slope = 0.0;
            for (std::size_t i = 0; i < dim; ++i) slope -= g[i] * g[i];
        }
        // Expand while the decrease keeps improving, then backtrack to Armijo.
        auto eval_at = [&](double t) {
            for (std::size_t i = 0; i < dim; ++i) trial[i] = u[i] + t * d[i];
            return pb.value(trial, nullptr);
        };
        double t = step;
        double ft = eval_at(t);
        while (ft <= f + 1e-4 * t * slope) {
            const double t2 = 2.0 * t;
            const double f2 = eval_at(t2);
            if (!(f2 < ft)) break;
            t = t2;
            ft = f2;
        }
        int back = 0;
        while (!(ft <= f + 1e-4 * t * slope) && back < 60) {
            t *= 0.5;
            ft = eval_at(t);
            ++back;
        }
        if (!(ft <= f + 1e-4 * t * slope) &&
            std::abs(ft - f) <= 1e-13 * std::max(1.0, std::abs(f))) {
            // Rounding-level plateau: take the step if it shrinks the gradient.
            std::vector<double> g_trial;
            pb.value(trial, &g_trial);
            if (norm_inf_scaled(g_trial, pb.n, pb.h()) < norm_inf_scaled(g, pb.n, pb.h())) ft = f + 1e-4 * t * slope;
        }
        if (!(ft <= f + 1e-4 * t * slope)) {
            // Restart along steepest descent once before giving up.
            bool steepest = true;
            for (std::size_t i = 0; i < dim && steepest; ++i) steepest = (d[i] == -g[i]);
            if (steepest) break;
            for (std::size_t i = 0; i < dim; ++i) d[i] = -g[i];
            continue;
        }
        for (std::size_t i = 0; i < dim; ++i) u[i] += t * d[i];
        step = t;
        f = pb.value(u, &g_new);
        double num = 0.0;
        double den = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            num += g_new[i] * (g_new[i] - g[i]);
            den += g[i] * g[i];
        }
        const double beta = (den > 0.0) ? std::max(0.0, num / den) : 0.0;
        g.swap(g_new);
        for (std::size_t i = 0; i < dim; ++i) d[i] = -g[i] + beta * d[i];
        if (it % static_cast<int>(dim) == static_cast<int>(dim) - 1) {
            for (std::size_t i = 0; i < dim; ++i) d[i] = -g[i];
        }
    }
    f_out = f;
    return norm_inf_scaled(g, pb.n, pb.h()) <= tol;
}

}  // namespace detail

struct BruteForceOptions {
    double grad_tol = 1e-5;
    int max_iters = 20000;
};

/// Multi-start minimum of action/T over loops with homology h0 and period T.
inline BruteForceResult brute_force_beta(const MagneticModel& model, Winding h0, double T,
                                         std::size_t n_coarse, int dense_restarts,
                                         std::uint64_t seed, const BruteForceOptions& opt = {}) {
    require(T > 0.0, "brute_force_beta: T must be positive");
    require(n_coarse >= DiscreteLoop::kMinNodes, "brute_force_beta: N must be at least 8");
    require(dense_restarts >= 0, "brute_force_beta: dense_restarts must be >= 0");
    const detail::Problem pb{model.amplitude(), n_coarse, T, static_cast<double>(h0.p),
                             static_cast<double>(h0.q)};
    const std::size_t n = n_coarse;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);

    std::vector<std::vector<double>> starts;
    auto straight_at = [&](double x0) {
        std::vector<double> u(2 * n);
        for (std::size_t k = 0; k < n; ++k) {
            const double s = static_cast<double>(k) / static_cast<double>(n);
            u[k] = x0 + s * pb.wx;
            u[n + k] = s * pb.wy;
        }
        return u;
    };
    for (double x0 : {0.0, 0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875}) starts.push_back(straight_at(x0));
    const double y_scale = std::max(0.25, 0.25 * T);
    for (int r = 0; r < dense_restarts; ++r) {
        auto u = straight_at(0.5 * (uni(rng) + 1.0));
        const int modes = 1 + r % 6;
        for (int m = 1; m <= modes; ++m) {
            const double ax = 0.4 * uni(rng) / m;
            const double bx = 0.4 * uni(rng) / m;
            const double ay = y_scale * uni(rng) / m;
            const double by = y_scale * uni(rng) / m;
            for (std::size_t k = 0; k < n; ++k) {
                const double th = 2.0 * std::numbers::pi * m * static_cast<double>(k) / n;
                u[k] += ax * std::cos(th) + bx * std::sin(th);
                u[n + k] += ay * std::cos(th) + by * std::sin(th);
            }
        }
        starts.push_back(std::move(u));
    }

    BruteForceResult out;
    for (auto& u : starts) {
        ++out.starts_total;
        double f = 0.0;
        if (!detail::conjugate_gradient(pb, u, opt.grad_tol, opt.max_iters, f)) continue;
        ++out.starts_converged;
        if (f < out.action) out.action = f;
    }
    if (out.starts_converged == 0) throw NoConvergence("brute_force_beta: no start converged");
    out.normalized_action = out.action / T;
    return out;
}

}  // namespace mather::oracle
