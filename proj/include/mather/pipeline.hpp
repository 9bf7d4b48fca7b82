#pragma once

// =============================================================================
// Pipelines behind the command-line tool
// =============================================================================
//
// Each pipeline turns a RunConfig plus command arguments into the bytes of
// one output document. Outputs carry a provenance header (config hash and
// seed) and no timestamps, so identical inputs give identical bytes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mather/config.hpp"
#include "mather/convex.hpp"
#include "mather/flow.hpp"
#include "mather/io.hpp"
#include "mather/loop.hpp"
#include "mather/magnetic_example.hpp"
#include "mather/torus.hpp"

namespace mather::pipeline {

using nlohmann::json;

inline json provenance(const std::string& command, const RunConfig& config) {
    return {{"command", command},
            {"schema_version", 1},
            {"config_hash", hex64(config.hash())},
            {"seed", config.variational.seed}};
}

inline std::string csv_header(const std::string& command, const RunConfig& config) {
    return "# mather " + command + " schema_version=1 config_hash=" + hex64(config.hash()) +
           " seed=" + std::to_string(config.variational.seed) + "\n";
}

/// CSV body (header row + numeric/string cells) as an array of records.
inline json csv_to_records(const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    std::vector<std::string> cols;
    json rows = json::array();
    auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::stringstream ss(s);
        std::string cell;
        while (std::getline(ss, cell, ',')) out.push_back(cell);
        return out;
    };
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (cols.empty()) {
            cols = split(line);
            continue;
        }
        const auto cells = split(line);
        json row = json::object();
        for (std::size_t i = 0; i < cols.size() && i < cells.size(); ++i) {
            char* end = nullptr;
            const double v = std::strtod(cells[i].c_str(), &end);
            if (end && *end == '\0' && !cells[i].empty()) {
                row[cols[i]] = v;
            } else {
                row[cols[i]] = cells[i];
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

/// Wraps a CSV body in the configured output format.
inline std::string emit_table(const std::string& command, const RunConfig& config, const std::string& csv_body) {
    if (config.output.format == OutputFormat::csv) return csv_header(command, config) + csv_body;
    json j{{"provenance", provenance(command, config)}, {"rows", csv_to_records(csv_body)}};
    return j.dump(2) + "\n";
}

inline std::string emit_document(const std::string& command, const RunConfig& config, json body) {
    body["provenance"] = provenance(command, config);
    return body.dump(2) + "\n";
}

// -----------------------------------------------------------------------------
// model-eval, flow-integrate
// -----------------------------------------------------------------------------

inline json model_eval(const RunConfig& config, double x, double y, double v1, double v2) {
    const MagneticModel model = config.magnetic_model();
    const TorusPoint q(x, y);
    const TangentVec v{v1, v2};
    const CotangentVec p = legendre(model, q, v);
    return {{"L", lagrangian(model, q, v)},
            {"E", energy(model, q, v)},
            {"p", {p.p1, p.p2}},
            {"H", hamiltonian(model, q, p)}};
}

inline std::string flow_integrate(const RunConfig& config, const FlowState& s0, double T) {
    require(T > 0.0, "flow-integrate: T must be positive");
    require(config.integrator.dt <= T, "flow-integrate: integrator.dt exceeds T");
    require(T <= config.integrator.max_T, "flow-integrate: T exceeds integrator.max_T");
    const MagneticModel model = config.magnetic_model();
    const Trajectory traj = integrate(model, s0, T, config.integrator.dt);
    std::ostringstream out;
    write_trajectory_csv(out, model, traj);
    return emit_table("flow-integrate", config, out.str());
}

// -----------------------------------------------------------------------------
// beta-grid, alpha-grid, corner-scan
// -----------------------------------------------------------------------------

inline ConvexTable beta_table(const RunConfig& config, unsigned workers) {
    TableBuildOptions opt;
    opt.estimator = config.beta_options();
    opt.workers = workers;
    return build_beta_table(config.magnetic_model(), config.grid_box(), opt);
}

inline std::string beta_grid(const RunConfig& config, unsigned workers, bool convexified) {
    const ConvexTable raw = beta_table(config, workers);
    std::ostringstream out;
    write_beta_csv(out, convexified ? convexify(raw) : raw);
    return emit_table(convexified ? "beta-grid" : "beta-grid-raw", config, out.str());
}

/// One record per candidate loop: action, grad_norm, iterations, seed, h0, T, N.
inline json beta_point(const RunConfig& config, const HomologyClass& h) {
    const BetaEstimate est = beta_estimate(config.magnetic_model(), h, config.beta_options());
    json candidates = json::array();
    for (const auto& c : est.candidates) {
        candidates.push_back({{"h0", {c.h0.p, c.h0.q}},
                              {"T", c.period},
                              {"N", c.nodes},
                              {"action", c.report.action},
                              {"normalized_action", c.normalized_action},
                              {"grad_norm", c.report.grad_norm},
                              {"iterations", c.report.iterations},
                              {"converged", c.report.converged},
                              {"seed", c.report.seed}});
    }
    return {{"h", {h.h1, h.h2}}, {"beta", est.value}, {"candidates", candidates}};
}

/// Reads a beta-grid CSV written with the same grid settings.
inline ConvexTable read_beta_csv(std::istream& in, const GridBox& box) {
    std::string line;
    std::vector<double> values;
    bool header = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header) {
            if (line != "h1,h2,beta") throw ConfigError("beta table: expected header h1,h2,beta");
            header = true;
            continue;
        }
        std::stringstream ss(line);
        std::string a, b, c;
        std::getline(ss, a, ',');
        std::getline(ss, b, ',');
        std::getline(ss, c);
        const std::size_t k = values.size();
        if (k >= box.size()) throw ConfigError("beta table: more rows than the configured grid");
        const HomologyClass h = box.node(k);
        if (std::abs(std::stod(a) - h.h1) > 1e-8 || std::abs(std::stod(b) - h.h2) > 1e-8) {
            throw ConfigError("beta table: row " + std::to_string(k + 1) + " does not match the configured grid");
        }
        values.push_back(std::stod(c));
    }
    if (values.size() != box.size()) throw ConfigError("beta table: row count does not match the configured grid");
    return ConvexTable(box, std::move(values));
}

inline std::string alpha_grid(const RunConfig& config, const ConvexTable& table,
                              const std::vector<CohomologyClass>& classes) {
    const ConvexTable t = table.convexified() ? table : convexify(table);
    std::ostringstream out;
    out << "c1,c2,alpha\n";
    for (const auto& c : classes) {
        out << fmt_sig(c.c1) << ',' << fmt_sig(c.c2) << ',' << fmt_sig(alpha_from_beta(t, c)) << '\n';
    }
    return emit_table("alpha-grid", config, out.str());
}

struct CornerScanOutput {
    std::string profile;
    std::string reports;
};

inline CornerScanOutput corner_scan_run(const RunConfig& config, const ConvexTable& table, const HomologyClass& a,
                                        const HomologyClass& b, std::size_t samples) {
    const ConvexTable t = table.convexified() ? table : convexify(table);
    std::ostringstream out;
    write_corner_csv(out, directional_profile(t, a, b, samples));
    CornerScanOutput o;
    o.profile = emit_table("corner-scan", config, out.str());
    json reps = json::array();
    for (const auto& r : corner_scan(t, a, b, samples, config.tolerances.corner_gap_tol)) {
        reps.push_back({{"location", {r.location.h1, r.location.h2}},
                        {"direction", {r.u1, r.u2}},
                        {"left_slope", r.left_slope},
                        {"right_slope", r.right_slope},
                        {"gap", r.gap}});
    }
    o.reports = emit_document("corner-scan", config, {{"corners", reps}, {"tol", config.tolerances.corner_gap_tol}});
    return o;
}

// -----------------------------------------------------------------------------
// Example pipelines
// -----------------------------------------------------------------------------

inline std::string example_region(const RunConfig& config, double E_min, double E_max, std::size_t nE,
                                  double F_min, double F_max, std::size_t nF) {
    std::ostringstream out;
    example::write_region_csv(out, example::region_scan(E_min, E_max, nE, F_min, F_max, nF, config.magnetic_model()));
    return emit_table("example-region", config, out.str());
}

inline std::string example_graph(const RunConfig& config, const example::GraphParams& p, std::size_t samples) {
    std::ostringstream out;
    example::write_graph_csv(out, p, samples, config.magnetic_model());
    return emit_table("example-graph", config, out.str());
}

inline json witness_json(const example::WitnessReport& r) {
    auto cand = [](const example::WitnessCandidate& c) {
        return json{{"x", c.start.x},
                    {"phi", c.start.phi},
                    {"start_distance", c.start_distance},
                    {"omega_distance", c.omega_distance},
                    {"gamma1_distance", c.gamma1_distance},
                    {"witness", c.witness}};
    };
    json cands = json::array();
    for (const auto& c : r.candidates) cands.push_back(cand(c));
    json j{{"E", r.E},
           {"F", r.F},
           {"regime", r.regime},
           {"graph_branch", r.graph_branch},
           {"found", r.found},
           {"inconclusive", r.inconclusive},
           {"candidates", cands}};
    j["witness"] = r.witness ? cand(*r.witness) : json(nullptr);
    return j;
}

inline example::WitnessOptions witness_options(const RunConfig& config, unsigned workers) {
    example::WitnessOptions o;
    o.dt = config.integrator.dt;
    o.workers = workers;
    return o;
}

inline std::string absorbing_witness(const RunConfig& config, double E, unsigned workers) {
    const auto r = example::absorbing_witness(E, witness_options(config, workers), config.magnetic_model());
    return emit_document("absorbing-witness", config, witness_json(r));
}

inline std::string absorbing_witness_foliated(const RunConfig& config, const example::GraphParams& p,
                                              unsigned workers) {
    const auto r = example::absorbing_witness_foliated(p, witness_options(config, workers), config.magnetic_model());
    return emit_document("absorbing-witness", config, witness_json(r));
}

/// Closed-form checks of the example plus the cheap flow cross-checks.
inline json example_verify(const RunConfig& config, unsigned workers) {
    using namespace example;
    const MagneticModel model = config.magnetic_model();
    const double pi = std::numbers::pi;
    json checks = json::array();
    bool all = true;
    auto check = [&](const std::string& name, bool ok, json detail = nullptr) {
        checks.push_back({{"name", name}, {"pass", ok}, {"detail", detail}});
        all = all && ok;
    };
    auto near = [](double a, double b, double tol) { return std::abs(a - b) <= tol; };

    check("graph_exists(1,0) foliated", graph_exists(1.0, 0.0, model) == GraphStatus::foliated);
    check("graph_exists(1,0.4) foliated", graph_exists(1.0, 0.4, model) == GraphStatus::foliated);
    check("graph_exists(1,0.42) none", graph_exists(1.0, 0.42, model) == GraphStatus::none);
    check("graph_exists(0.4,0) none", graph_exists(0.4, 0.0, model) == GraphStatus::none);

    const double s1 = solve_branch(0.0, {2.0, 0.0, 1}, model);
    const double s2 = solve_branch(0.0, {2.0, 0.0, 2}, model);
    check("solve_branch(0; E=2, F=0)", near(s1, -pi / 6, 1e-12) && near(s2, 7 * pi / 6, 1e-12), {s1, s2});
    const double tang = solve_branch(0.5, {1.0, std::sqrt(2.0) - 1.0, 1}, model);
    check("solve_branch saddle tangency", near(tang, pi / 2, 1e-6), tang);

    const CotangentVec e1 = eta_form(0.25, {2.0, 0.0, 1}, model);
    const CotangentVec e2 = eta_form(0.25, {2.0, 0.0, 2}, model);
    check("eta_form(0.25; E=2, F=0)", near(e1.p1, 2.0, 1e-12) && near(e2.p1, -2.0, 1e-12) && e1.p2 == 0.0);

    const CohomologyClass c_e2 = cohomology_class({2.0, 0.0, 1}, model);
    const double elliptic = 4.0 / pi * std::comp_ellint_2(0.5);
    check("cohomology_class(E=2, F=0)", near(c_e2.c1, elliptic, 1e-9) && c_e2.c2 == 0.0, c_e2.c1);

    double diff = 0.0;
    std::mt19937_64 rng(config.variational.seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int branch : {1, 2}) {
        for (int k = 0; k < 1000; ++k) {
            const double x = uni(rng);
            const CotangentVec g = graph_momentum(x, {1.0, 0.2, branch}, model);
            const CotangentVec e = eta_form(x, {1.0, 0.2, branch}, model);
            diff = std::max({diff, std::abs(g.p1 - e.p1), std::abs(g.p2 - e.p2)});
        }
    }
    check("graph_momentum == eta_form", diff < 1e-12, diff);

    const auto cps = critical_points(1.0, model);
    const bool kinds = cps.size() == 4 && cps[0].kind == CriticalKind::maximum &&
                       cps[1].kind == CriticalKind::saddle && cps[2].kind == CriticalKind::saddle &&
                       cps[3].kind == CriticalKind::minimum;
    check("critical points", kinds && near(cps[1].value, 1.0 - std::sqrt(2.0), 1e-12) &&
                                 near(cps[2].value, std::sqrt(2.0) - 1.0, 1e-12));

    const auto [r1, r2] = singular_rotation_vectors(1.0);
    const HomologyClass g1 = rotation_vector_estimate(integrate(model, gamma1_state(1.0), 10.0, config.integrator.dt));
    const HomologyClass g2 = rotation_vector_estimate(integrate(model, gamma2_state(1.0), 10.0, config.integrator.dt));
    check("singular rotation vectors", near(g1.h1, r1.h1, 1e-6) && near(g1.h2, r1.h2, 1e-6) &&
                                           near(g2.h1, r2.h1, 1e-6) && near(g2.h2, r2.h2, 1e-6),
          {g1.h2, g2.h2});

    InvarianceOptions io;
    io.dt = config.integrator.dt;
    io.workers = workers;
    double dev = 0.0;
    for (int branch : {1, 2}) dev = std::max(dev, graph_invariance_check({1.0, 0.0, branch}, io, model).max_deviation);
    check("graph invariance (E=1, F=0)", dev < config.tolerances.invariance_tol, dev);

    const auto w = example::absorbing_witness(1.0, witness_options(config, workers), model);
    check("absorbing witness (E=1)", w.found);
    const auto wf = example::absorbing_witness_foliated({1.0, 0.0, 1}, witness_options(config, workers), model);
    check("no witness on foliated graph (E=1, F=0)", !wf.found);

    return {{"checks", checks}, {"all_pass", all}};
}

}  // namespace mather::pipeline
