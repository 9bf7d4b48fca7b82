#pragma once

// =============================================================================
// Gridded beta, convex envelope, conjugation and non-smoothness detection
// =============================================================================
//
// A ConvexTable holds estimates of beta on a uniform grid of H_1(T^2; R).
// The lower convex envelope is evaluated exactly: at a query point h it is
// the value of the linear program
//
//     min sum_i w_i beta_i   s.t.  sum_i w_i h_i = h,  sum_i w_i = 1,  w >= 0
//
// solved by a revised simplex method with a 3x3 basis (a triangle of grid
// nodes). The optimal basis is the lower-hull facet above h, so evaluations
// off the grid are piecewise linear and convex.
//
// alpha is the discrete conjugate  alpha(c) = max_i <c, h_i> - beta_i.
//
// =============================================================================

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mather/errors.hpp"
#include "mather/io.hpp"
#include "mather/loop.hpp"
#include "mather/parallel.hpp"
#include "mather/torus.hpp"

namespace mather {

/// Uniform rectangular grid over a box of H_1; `steps` nodes per axis.
struct GridBox {
    double h1_min = -2.0;
    double h1_max = 2.0;
    double h2_min = -2.0;
    double h2_max = 2.0;
    std::size_t steps1 = 33;
    std::size_t steps2 = 33;

    void validate() const {
        require(h1_max > h1_min && h2_max > h2_min, "GridBox: empty box");
        require(steps1 >= 2 && steps2 >= 2, "GridBox: need at least two nodes per axis");
    }
    double spacing1() const { return (h1_max - h1_min) / static_cast<double>(steps1 - 1); }
    double spacing2() const { return (h2_max - h2_min) / static_cast<double>(steps2 - 1); }
    std::size_t size() const { return steps1 * steps2; }
    /// Row-major: h1 index outer, h2 index inner.
    std::size_t index(std::size_t i, std::size_t j) const { return i * steps2 + j; }
    HomologyClass node(std::size_t i, std::size_t j) const {
        return {h1_min + static_cast<double>(i) * spacing1(),
                h2_min + static_cast<double>(j) * spacing2()};
    }
    HomologyClass node(std::size_t k) const { return node(k / steps2, k % steps2); }
    bool on_boundary(std::size_t k) const {
        const std::size_t i = k / steps2;
        const std::size_t j = k % steps2;
        return i == 0 || j == 0 || i + 1 == steps1 || j + 1 == steps2;
    }
    /// Index of the grid node closest to h (clamped to the box).
    std::size_t nearest(const HomologyClass& h) const {
        auto snap = [](double v, double lo, double step, std::size_t n) {
            const double r = std::round((v - lo) / step);
            return static_cast<std::size_t>(std::clamp(r, 0.0, static_cast<double>(n - 1)));
        };
        return index(snap(h.h1, h1_min, spacing1(), steps1), snap(h.h2, h2_min, spacing2(), steps2));
    }
    bool contains(const HomologyClass& h, double slack = 1e-12) const {
        return h.h1 >= h1_min - slack && h.h1 <= h1_max + slack && h.h2 >= h2_min - slack &&
               h.h2 <= h2_max + slack;
    }
};

class ConvexTable {
public:
    ConvexTable(GridBox box, std::vector<double> values, std::vector<bool> valid = {})
        : box_(box), values_(std::move(values)), valid_(std::move(valid)) {
        box_.validate();
        require(values_.size() == box_.size(), "ConvexTable: value count does not match the grid");
        if (valid_.empty()) valid_.assign(values_.size(), true);
        require(valid_.size() == values_.size(), "ConvexTable: validity mask size mismatch");
        for (std::size_t k = 0; k < values_.size(); ++k) {
            if (valid_[k]) require(std::isfinite(values_[k]), "ConvexTable: non-finite valid value");
        }
    }

    /// Table of f evaluated at every node.
    template <typename F>
    static ConvexTable from_function(const GridBox& box, F&& f) {
        std::vector<double> v(box.size());
        for (std::size_t k = 0; k < box.size(); ++k) v[k] = f(box.node(k));
        return ConvexTable(box, std::move(v));
    }

    const GridBox& box() const { return box_; }
    std::size_t size() const { return values_.size(); }
    double value(std::size_t k) const { return values_[k]; }
    double value(std::size_t i, std::size_t j) const { return values_[box_.index(i, j)]; }
    bool valid(std::size_t k) const { return valid_[k]; }
    const std::vector<double>& values() const { return values_; }
    std::size_t invalid_count() const {
        return static_cast<std::size_t>(std::count(valid_.begin(), valid_.end(), false));
    }
    bool convexified() const { return convexified_; }

    /// Lower convex envelope of the valid nodes evaluated at h (inside the box).
    double envelope_at(const HomologyClass& h) const;

    /// Value at h: the stored value on nodes of a convexified table, the
    /// envelope elsewhere.
    double value_at(const HomologyClass& h) const {
        const std::size_t k = box_.nearest(h);
        const HomologyClass n = box_.node(k);
        if (convexified_ && valid_[k] && std::abs(n.h1 - h.h1) < 1e-12 && std::abs(n.h2 - h.h2) < 1e-12) {
            return values_[k];
        }
        return envelope_at(h);
    }

    friend ConvexTable convexify(const ConvexTable& table);

private:
    GridBox box_;
    std::vector<double> values_;
    std::vector<bool> valid_;
    bool convexified_ = false;
};

namespace detail {

struct Basis {
    std::array<std::size_t, 3> idx{};
    std::array<double, 3> weight{};
};

inline bool solve3(const std::array<std::array<double, 3>, 3>& m, const std::array<double, 3>& rhs,
                   std::array<double, 3>& out) {
    const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                       m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                       m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    if (std::abs(det) < 1e-300) return false;
    for (int c = 0; c < 3; ++c) {
        auto mc = m;
        for (int r = 0; r < 3; ++r) mc[r][c] = rhs[r];
        out[c] = (mc[0][0] * (mc[1][1] * mc[2][2] - mc[1][2] * mc[2][1]) -
                  mc[0][1] * (mc[1][0] * mc[2][2] - mc[1][2] * mc[2][0]) +
                  mc[0][2] * (mc[1][0] * mc[2][1] - mc[1][1] * mc[2][0])) /
                 det;
    }
    return true;
}

/// Revised simplex for the envelope LP. Columns are the valid nodes.
inline double envelope_lp(const GridBox& box, const std::vector<double>& values,
                          const std::vector<bool>& valid, const HomologyClass& h) {
    require(box.contains(h), "envelope: query outside the table box");
    const std::size_t c00 = box.index(0, 0);
    const std::size_t c10 = box.index(box.steps1 - 1, 0);
    const std::size_t c01 = box.index(0, box.steps2 - 1);
    const std::size_t c11 = box.index(box.steps1 - 1, box.steps2 - 1);
    for (std::size_t c : {c00, c10, c01, c11}) {
        if (!valid[c]) throw NumericalError("envelope: corner nodes of the table must be valid");
    }
    auto point = [&](std::size_t k) { return box.node(k); };
    auto column_matrix = [&](const Basis& b) {
        std::array<std::array<double, 3>, 3> m{};
        for (int c = 0; c < 3; ++c) {
            const HomologyClass p = point(b.idx[c]);
            m[0][c] = p.h1;
            m[1][c] = p.h2;
            m[2][c] = 1.0;
        }
        return m;
    };
    const std::array<double, 3> target{h.h1, h.h2, 1.0};

    // Start from the corner triangle containing h.
    Basis basis;
    const double s = (h.h1 - box.h1_min) / (box.h1_max - box.h1_min);
    const double t = (h.h2 - box.h2_min) / (box.h2_max - box.h2_min);
    basis.idx = (t <= s) ? std::array<std::size_t, 3>{c00, c10, c11}
                         : std::array<std::size_t, 3>{c00, c11, c01};
    if (!solve3(column_matrix(basis), target, basis.weight)) {
        throw NumericalError("envelope: degenerate start basis");
    }
    for (double& w : basis.weight) w = std::max(0.0, w);

    const double scale = 1.0 + std::abs(values[c00]) + std::abs(values[c11]);
    const double eps = 1e-13 * scale;
    const std::size_t n = values.size();
    for (int iter = 0; iter < 20000; ++iter) {
        // Plane through the basis points: c1 h1 + c2 h2 + b = beta.
        auto m = column_matrix(basis);
        std::array<std::array<double, 3>, 3> mt{};
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) mt[r][c] = m[c][r];
        std::array<double, 3> plane{};
        const std::array<double, 3> fb{values[basis.idx[0]], values[basis.idx[1]], values[basis.idx[2]]};
        if (!solve3(mt, fb, plane)) throw NumericalError("envelope: singular basis");
        const bool bland = iter > 200;
        std::size_t entering = n;
        double most_negative = -eps;
        for (std::size_t k = 0; k < n; ++k) {
            if (!valid[k]) continue;
            const HomologyClass p = point(k);
            const double reduced = values[k] - (plane[0] * p.h1 + plane[1] * p.h2 + plane[2]);
            if (reduced < most_negative) {
                entering = k;
                if (bland) break;
                most_negative = reduced;
            }
        }
        if (entering == n) {
            return plane[0] * h.h1 + plane[1] * h.h2 + plane[2];
        }
        const HomologyClass pe = point(entering);
        std::array<double, 3> dir{};
        if (!solve3(m, {pe.h1, pe.h2, 1.0}, dir)) throw NumericalError("envelope: singular basis");
        int leave = -1;
        double ratio = std::numeric_limits<double>::infinity();
        for (int c = 0; c < 3; ++c) {
            if (dir[c] > 1e-12) {
                const double r = basis.weight[c] / dir[c];
                if (r < ratio - 1e-15 ||
                    (r <= ratio + 1e-15 && leave >= 0 && basis.idx[c] < basis.idx[leave])) {
                    ratio = r;
                    leave = c;
                }
            }
        }
        if (leave < 0) throw NumericalError("envelope: unbounded pivot");
        for (int c = 0; c < 3; ++c) basis.weight[c] = std::max(0.0, basis.weight[c] - ratio * dir[c]);
        basis.idx[leave] = entering;
        basis.weight[leave] = ratio;
    }
    throw NumericalError("envelope: simplex iteration limit");
}

}  // namespace detail

inline double ConvexTable::envelope_at(const HomologyClass& h) const {
    return detail::envelope_lp(box_, values_, valid_, h);
}

/// Largest convex minorant on the grid. Invalid nodes are filled by the
/// envelope of the valid ones.
inline ConvexTable convexify(const ConvexTable& table) {
    std::vector<double> env(table.size());
    for (std::size_t k = 0; k < table.size(); ++k) {
        const double e = table.envelope_at(table.box().node(k));
        env[k] = table.valid(k) ? std::min(e, table.value(k)) : e;
    }
    ConvexTable out(table.box(), std::move(env));
    out.convexified_ = true;
    return out;
}

// -----------------------------------------------------------------------------
// Table construction
// -----------------------------------------------------------------------------

struct TableBuildOptions {
    BetaOptions estimator;
    unsigned workers = 1;
    /// Abort when more than this fraction of nodes fails.
    double max_invalid_fraction = 0.05;
};

/// Per-node beta estimates; node k uses seed derived from (seed, k).
inline ConvexTable build_beta_table(const MagneticModel& model, const GridBox& box,
                                    const TableBuildOptions& options) {
    box.validate();
    require(box.steps1 >= 8 && box.steps2 >= 8, "build_beta_table: need at least 8 steps per axis");
    std::vector<double> values(box.size(), 0.0);
    std::vector<char> ok(box.size(), 0);
    parallel_for(box.size(), options.workers, [&](std::size_t k) {
        BetaOptions opt = options.estimator;
        opt.seed = detail::derive_seed(options.estimator.seed, 77, k);
        try {
            values[k] = beta_estimate(model, box.node(k), opt).value;
            ok[k] = 1;
        } catch (const NoConvergence&) {
            ok[k] = 0;
        }
    });
    std::vector<bool> valid(ok.begin(), ok.end());
    const std::size_t bad = static_cast<std::size_t>(std::count(valid.begin(), valid.end(), false));
    if (static_cast<double>(bad) > options.max_invalid_fraction * static_cast<double>(box.size())) {
        throw TableBuildError("build_beta_table: " + std::to_string(bad) + " of " +
                              std::to_string(box.size()) + " nodes failed");
    }
    ConvexTable raw(box, values, valid);
    if (bad == 0) return raw;
    for (std::size_t k = 0; k < box.size(); ++k) {
        if (!valid[k]) values[k] = raw.envelope_at(box.node(k));
    }
    return ConvexTable(box, std::move(values));
}

// -----------------------------------------------------------------------------
// Conjugation
// -----------------------------------------------------------------------------

struct ConjugateResult {
    double value = -std::numeric_limits<double>::infinity();
    std::size_t argmax = 0;
};

/// max over valid nodes of <c, h> - beta(h), without boundary checks.
/// Among tied maximizers an interior node is reported, so a flat reaching
/// the boundary does not hide an interior maximum.
inline ConjugateResult conjugate(const ConvexTable& table, const CohomologyClass& c) {
    ConjugateResult r;
    for (std::size_t k = 0; k < table.size(); ++k) {
        if (!table.valid(k)) continue;
        const double v = pairing(c, table.box().node(k)) - table.value(k);
        const double tie = 1e-12 * (1.0 + std::abs(v));
        if (v > r.value + tie) {
            r.value = v;
            r.argmax = k;
        } else if (v >= r.value - tie && table.box().on_boundary(r.argmax) &&
                   !table.box().on_boundary(k)) {
            r.value = std::max(r.value, v);
            r.argmax = k;
        }
    }
    return r;
}

inline double alpha_from_beta(const ConvexTable& table, const CohomologyClass& c) {
    const ConjugateResult r = conjugate(table, c);
    if (table.box().on_boundary(r.argmax)) {
        throw BoundaryAttained("alpha_from_beta: maximizer on the table boundary; enlarge the box");
    }
    return r.value;
}

inline double fenchel_residual(const ConvexTable& table, const CohomologyClass& c,
                               const HomologyClass& h) {
    const std::size_t k = table.box().nearest(h);
    return alpha_from_beta(table, c) + table.value(k) - pairing(c, table.box().node(k));
}

/// beta**(h_k) = max over a grid of classes c of <c, h_k> - alpha(c), per node.
inline std::vector<double> biconjugate(const ConvexTable& table, const GridBox& c_grid) {
    c_grid.validate();
    std::vector<double> alpha(c_grid.size());
    std::vector<CohomologyClass> cs(c_grid.size());
    for (std::size_t m = 0; m < c_grid.size(); ++m) {
        const HomologyClass g = c_grid.node(m);
        cs[m] = {g.h1, g.h2};
        alpha[m] = conjugate(table, cs[m]).value;
    }
    std::vector<double> out(table.size(), -std::numeric_limits<double>::infinity());
    for (std::size_t k = 0; k < table.size(); ++k) {
        const HomologyClass h = table.box().node(k);
        for (std::size_t m = 0; m < cs.size(); ++m) {
            out[k] = std::max(out[k], pairing(cs[m], h) - alpha[m]);
        }
    }
    return out;
}

// -----------------------------------------------------------------------------
// Subdifferentials, corners, flats
// -----------------------------------------------------------------------------

/// One-sided slopes of a convexified table at a node along one direction.
struct DirectionalSlopes {
    double u1 = 0.0;
    double u2 = 0.0;
    double backward = 0.0;
    double forward = 0.0;
    double width() const { return forward - backward; }
};

struct SubdifferentialEstimate {
    HomologyClass at;
    std::vector<DirectionalSlopes> directions;
    /// Vertices of the polygon cut out by all slope constraints.
    std::vector<CohomologyClass> vertices;
    bool singleton = false;

    double width_along(double u1, double u2) const {
        for (const auto& d : directions) {
            if (std::abs(d.u1 - u1) < 1e-12 && std::abs(d.u2 - u2) < 1e-12) return d.width();
        }
        throw InvalidArgument("width_along: direction not sampled");
    }
};

namespace detail {

/// One-sided derivative at node (i, j) along grid step (di, dj), second
/// order (2 D(delta) - D(2 delta)) when two steps fit in the box.
inline std::optional<double> one_sided_slope(const ConvexTable& t, long i, long j, long di, long dj) {
    const auto& b = t.box();
    auto inside = [&](long a, long c) {
        return a >= 0 && c >= 0 && a < static_cast<long>(b.steps1) && c < static_cast<long>(b.steps2);
    };
    if (!inside(i + di, j + dj)) return std::nullopt;
    const double len = std::hypot(static_cast<double>(di) * b.spacing1(), static_cast<double>(dj) * b.spacing2());
    const double f0 = t.value(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    const double f1 = t.value(static_cast<std::size_t>(i + di), static_cast<std::size_t>(j + dj));
    const double d1 = (f1 - f0) / len;
    if (!inside(i + 2 * di, j + 2 * dj)) return d1;
    const double f2 = t.value(static_cast<std::size_t>(i + 2 * di), static_cast<std::size_t>(j + 2 * dj));
    const double d2 = (f2 - f0) / (2.0 * len);
    return 2.0 * d1 - d2;
}

/// Clip a convex polygon by the half-plane a.x <= b.
inline std::vector<CohomologyClass> clip(const std::vector<CohomologyClass>& poly, double a1, double a2,
                                         double b) {
    std::vector<CohomologyClass> out;
    const std::size_t n = poly.size();
    for (std::size_t k = 0; k < n; ++k) {
        const CohomologyClass& p = poly[k];
        const CohomologyClass& q = poly[(k + 1) % n];
        const double fp = a1 * p.c1 + a2 * p.c2 - b;
        const double fq = a1 * q.c1 + a2 * q.c2 - b;
        if (fp <= 0.0) out.push_back(p);
        if ((fp < 0.0 && fq > 0.0) || (fp > 0.0 && fq < 0.0)) {
            const double s = fp / (fp - fq);
            out.push_back({p.c1 + s * (q.c1 - p.c1), p.c2 + s * (q.c2 - p.c2)});
        }
    }
    return out;
}

}  // namespace detail

/// Supporting slopes at the node nearest h along the four axis/diagonal
/// lines (eight compass directions). Singleton iff every width <= tol.
inline SubdifferentialEstimate subdifferential_beta(const ConvexTable& table, const HomologyClass& h,
                                                    double tol) {
    const auto& b = table.box();
    const std::size_t k = b.nearest(h);
    const long i = static_cast<long>(k / b.steps2);
    const long j = static_cast<long>(k % b.steps2);
    SubdifferentialEstimate est;
    est.at = b.node(k);
    const std::array<std::array<long, 2>, 4> steps{{{1, 0}, {0, 1}, {1, 1}, {1, -1}}};
    const double big = 1e6;
    std::vector<CohomologyClass> poly{{-big, -big}, {big, -big}, {big, big}, {-big, big}};
    bool all_narrow = true;
    for (const auto& st : steps) {
        const auto fwd = detail::one_sided_slope(table, i, j, st[0], st[1]);
        const auto bwd = detail::one_sided_slope(table, i, j, -st[0], -st[1]);
        const double len = std::hypot(st[0] * b.spacing1(), st[1] * b.spacing2());
        const double u1 = st[0] * b.spacing1() / len;
        const double u2 = st[1] * b.spacing2() / len;
        if (!fwd || !bwd) continue;
        DirectionalSlopes d{u1, u2, -*bwd, *fwd};
        est.directions.push_back(d);
        all_narrow = all_narrow && d.width() <= tol;
        // c.u <= forward and c.u >= backward; extrapolated slopes may cross
        // by rounding, so order them first.
        const double lo = std::min(d.backward, d.forward) - 1e-12;
        const double hi = std::max(d.backward, d.forward) + 1e-12;
        poly = detail::clip(poly, u1, u2, hi);
        poly = detail::clip(poly, -u1, -u2, -lo);
    }
    est.singleton = all_narrow;
    if (est.singleton || poly.empty()) {
        // Gradient from the axis midpoint slopes.
        CohomologyClass g;
        for (const auto& d : est.directions) {
            const double mid = 0.5 * (d.backward + d.forward);
            if (d.u2 == 0.0) g.c1 = mid;
            if (d.u1 == 0.0) g.c2 = mid;
        }
        est.vertices = {g};
    } else {
        est.vertices = std::move(poly);
    }
    return est;
}

struct CornerReport {
    HomologyClass location;
    double u1 = 0.0;
    double u2 = 0.0;
    double left_slope = 0.0;
    double right_slope = 0.0;
    double gap = 0.0;
    /// Segment parameter in [0, 1].
    double t = 0.0;
};

struct CornerSample {
    double t = 0.0;
    HomologyClass at;
    double left_slope = 0.0;
    double right_slope = 0.0;
    double gap() const { return right_slope - left_slope; }
};

/// One-sided directional derivatives of the envelope along the segment,
/// using steps of one grid cell and second-order one-sided differences.
inline std::vector<CornerSample> directional_profile(const ConvexTable& table,
                                                     const HomologyClass& start,
                                                     const HomologyClass& end, std::size_t samples) {
    require(samples >= 2, "corner_scan: need at least two samples");
    require(table.box().contains(start) && table.box().contains(end), "corner_scan: segment leaves the box");
    const HomologyClass d = end - start;
    const double len = d.norm();
    require(len > 0.0, "corner_scan: degenerate segment");
    const HomologyClass u = (1.0 / len) * d;
    const double delta = std::min(table.box().spacing1(), table.box().spacing2());
    auto f = [&](const HomologyClass& p) -> std::optional<double> {
        if (!table.box().contains(p)) return std::nullopt;
        return table.value_at(p);
    };
    std::vector<CornerSample> out;
    for (std::size_t s = 0; s < samples; ++s) {
        const double t = static_cast<double>(s) / static_cast<double>(samples - 1);
        const HomologyClass p = start + (t * len) * u;
        const double f0 = table.value_at(p);
        auto slope = [&](double sign) {
            const auto f1 = f(p + (sign * delta) * u);
            const auto f2 = f(p + (sign * 2.0 * delta) * u);
            if (!f1) throw InvalidArgument("corner_scan: segment too close to the box edge");
            const double d1 = (*f1 - f0) / delta;
            if (!f2) return d1;
            return 2.0 * d1 - (*f2 - f0) / (2.0 * delta);
        };
        out.push_back({t, p, -slope(-1.0), slope(1.0)});
    }
    return out;
}

/// Reports, for each run of consecutive samples with gap > tol, the sample
/// with the largest gap.
inline std::vector<CornerReport> corner_scan(const ConvexTable& table, const HomologyClass& start,
                                             const HomologyClass& end, std::size_t samples,
                                             double tol) {
    const auto profile = directional_profile(table, start, end, samples);
    const HomologyClass d = end - start;
    const double len = d.norm();
    std::vector<CornerReport> out;
    std::optional<CornerReport> run;
    for (const auto& s : profile) {
        if (s.gap() > tol) {
            if (!run || s.gap() > run->gap) {
                run = CornerReport{s.at, d.h1 / len, d.h2 / len, s.left_slope, s.right_slope, s.gap(), s.t};
            }
        } else if (run) {
            out.push_back(*run);
            run.reset();
        }
    }
    if (run) out.push_back(*run);
    return out;
}

struct FlatEstimate {
    double alpha = 0.0;
    std::vector<HomologyClass> nodes;

    /// Largest distance between two nodes of the set.
    double diameter() const {
        double d = 0.0;
        for (std::size_t a = 0; a < nodes.size(); ++a)
            for (std::size_t b = a + 1; b < nodes.size(); ++b) d = std::max(d, (nodes[a] - nodes[b]).norm());
        return d;
    }
    HomologyClass centroid() const {
        HomologyClass s;
        for (const auto& n : nodes) s = s + n;
        return nodes.empty() ? s : (1.0 / static_cast<double>(nodes.size())) * s;
    }
    /// Unit direction of the largest spread (principal axis of the set).
    HomologyClass principal_axis() const {
        const HomologyClass m = centroid();
        double sxx = 0.0, sxy = 0.0, syy = 0.0;
        for (const auto& n : nodes) {
            const double dx = n.h1 - m.h1;
            const double dy = n.h2 - m.h2;
            sxx += dx * dx;
            sxy += dx * dy;
            syy += dy * dy;
        }
        const double theta = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
        return {std::cos(theta), std::sin(theta)};
    }
};

/// Nodes within tol of the conjugation maximum for class c.
inline FlatEstimate flat_detect_alpha(const ConvexTable& table, const CohomologyClass& c, double tol) {
    FlatEstimate out;
    out.alpha = alpha_from_beta(table, c);
    for (std::size_t k = 0; k < table.size(); ++k) {
        const HomologyClass h = table.box().node(k);
        if (pairing(c, h) - table.value(k) >= out.alpha - tol) out.nodes.push_back(h);
    }
    return out;
}

// -----------------------------------------------------------------------------
// Export
// -----------------------------------------------------------------------------

inline void write_beta_csv(std::ostream& out, const ConvexTable& table) {
    out << "h1,h2,beta\n";
    for (std::size_t k = 0; k < table.size(); ++k) {
        const HomologyClass h = table.box().node(k);
        out << fmt_sig(h.h1) << ',' << fmt_sig(h.h2) << ',' << fmt_sig(table.value(k)) << '\n';
    }
}

inline void write_corner_csv(std::ostream& out, const std::vector<CornerSample>& profile) {
    out << "t,h1,h2,left_slope,right_slope,gap\n";
    for (const auto& s : profile) {
        out << fmt_sig(s.t) << ',' << fmt_sig(s.at.h1) << ',' << fmt_sig(s.at.h2) << ','
            << fmt_sig(s.left_slope) << ',' << fmt_sig(s.right_slope) << ',' << fmt_sig(s.gap()) << '\n';
    }
}

}  // namespace mather
