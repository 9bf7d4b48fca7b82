// Command-line front end for the mather pipelines.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mather/config.hpp"
#include "mather/errors.hpp"
#include "mather/io.hpp"
#include "mather/pipeline.hpp"

namespace {

using namespace mather;

constexpr int kUsageError = 1;
constexpr int kNumericalError = 2;

struct Globals {
    std::string config_path;
    unsigned workers = 1;
    std::string out;
};

RunConfig resolve_config(const Globals& g) {
    RunConfig defaults;
    if (const char* env = std::getenv("MATHER_OUTPUT_DIR"); env && *env) defaults.output.directory = env;
    if (g.config_path.empty()) {
        defaults.validate();
        return defaults;
    }
    return load_config(g.config_path, defaults);
}

std::filesystem::path output_path(const Globals& g, const RunConfig& c, const std::string& stem) {
    if (!g.out.empty()) return g.out;
    return std::filesystem::path(c.output.directory) /
           (stem + (c.output.format == OutputFormat::csv ? ".csv" : ".json"));
}

void emit(const std::filesystem::path& path, const std::string& bytes) {
    write_file_atomically(path, [&](std::ostream& os) { os << bytes; });
    std::cout << path.string() << '\n';
}

HomologyClass parse_pair(const std::vector<double>& v, const char* what) {
    if (v.size() != 2) throw InvalidArgument(std::string(what) + ": expected two numbers");
    return {v[0], v[1]};
}

ConvexTable table_for(const Globals& g, const RunConfig& c, const std::string& table_path) {
    if (table_path.empty()) return pipeline::beta_table(c, g.workers);
    std::ifstream in(table_path);
    if (!in) throw ConfigError("--table: cannot open " + table_path);
    return pipeline::read_beta_csv(in, c.grid_box());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Average-action toolkit for the vertical magnetic Lagrangian on the 2-torus"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("-c,--config", g.config_path, "JSON run configuration")->check(CLI::ExistingFile);
    app.add_option("-w,--workers", g.workers, "Worker threads for grid work")->check(CLI::Range(1u, 256u));
    app.add_option("-o,--out", g.out, "Output file (default: <output.directory>/<command>.<format>)");

    // model-eval
    auto* model_eval = app.add_subcommand("model-eval", "Evaluate L, E, p and H at one tangent vector");
    double x = 0, y = 0, v1 = 0, v2 = 0;
    model_eval->add_option("x", x)->required();
    model_eval->add_option("y", y)->required();
    model_eval->add_option("v1", v1)->required();
    model_eval->add_option("v2", v2)->required();

    // flow-integrate
    auto* flow = app.add_subcommand("flow-integrate", "Integrate the Euler-Lagrange flow, write a trajectory CSV");
    double T = 0;
    flow->add_option("x", x)->required();
    flow->add_option("y", y)->required();
    flow->add_option("v1", v1)->required();
    flow->add_option("v2", v2)->required();
    flow->add_option("T", T, "Integration time")->required();

    // beta-grid
    auto* beta = app.add_subcommand("beta-grid", "Estimate beta on the configured grid");
    bool raw = false;
    beta->add_flag("--raw", raw, "Write the raw estimates instead of the convex envelope");

    // beta-point
    auto* beta_pt = app.add_subcommand("beta-point", "Estimate beta at one class, print minimizer diagnostics");
    double h1 = 0, h2 = 0;
    beta_pt->add_option("h1", h1)->required();
    beta_pt->add_option("h2", h2)->required();

    // alpha-grid
    auto* alpha = app.add_subcommand("alpha-grid", "Conjugate the beta table at a list of classes");
    std::vector<double> cs;
    std::string table_path;
    alpha->add_option("--c", cs, "Classes as c1 c2 pairs")->required()->expected(2, 1 << 20);
    alpha->add_option("--table", table_path, "Reuse a beta-grid CSV instead of rebuilding");

    // corner-scan
    auto* corner = app.add_subcommand("corner-scan", "One-sided slopes of beta along a segment");
    std::vector<double> from, to;
    std::size_t samples = 25;
    corner->add_option("--from", from, "Segment start h1 h2")->required()->expected(2);
    corner->add_option("--to", to, "Segment end h1 h2")->required()->expected(2);
    corner->add_option("--samples", samples, "Samples along the segment")->check(CLI::Range(2ul, 100000ul));
    corner->add_option("--table", table_path, "Reuse a beta-grid CSV instead of rebuilding");

    // example-verify
    auto* verify = app.add_subcommand("example-verify", "Run the closed-form checks of the example");

    // example-region
    auto* region = app.add_subcommand("example-region", "Scan graph existence over (E, F)");
    std::vector<double> e_range{0.2, 2.0}, f_range{-1.0, 1.0};
    std::size_t nE = 50, nF = 50;
    region->add_option("--E-range", e_range, "E_min E_max")->expected(2);
    region->add_option("--F-range", f_range, "F_min F_max")->expected(2);
    region->add_option("--nE", nE)->check(CLI::Range(1ul, 100000ul));
    region->add_option("--nF", nF)->check(CLI::Range(1ul, 100000ul));

    // example-graph
    auto* graph = app.add_subcommand("example-graph", "Export one invariant graph as x,phi,p1,p2");
    double E = 1.0, F = 0.0;
    int branch = 1;
    std::size_t graph_samples = 200;
    graph->add_option("--E", E)->required();
    graph->add_option("--F", F)->required();
    graph->add_option("--branch", branch)->check(CLI::IsMember({1, 2}));
    graph->add_option("--samples", graph_samples)->check(CLI::Range(2ul, 10000000ul));

    // absorbing-witness
    auto* witness = app.add_subcommand("absorbing-witness", "Search for a non-absorbing witness");
    std::optional<double> foliated_F;
    witness->add_option("--E", E, "Energy level (> 1/2)")->required();
    witness->add_option("--foliated-F", foliated_F, "Test the branch-1 foliated graph at this F instead");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kUsageError;
    }

    try {
        const RunConfig config = resolve_config(g);
        if (*model_eval) {
            std::cout << pipeline::emit_document("model-eval", config, pipeline::model_eval(config, x, y, v1, v2));
        } else if (*flow) {
            const FlowState s0{{x, y}, {v1, v2}};
            emit(output_path(g, config, "flow-integrate"), pipeline::flow_integrate(config, s0, T));
        } else if (*beta) {
            emit(output_path(g, config, raw ? "beta-grid-raw" : "beta-grid"), pipeline::beta_grid(config, g.workers, !raw));
        } else if (*beta_pt) {
            std::cout << pipeline::emit_document("beta-point", config, pipeline::beta_point(config, {h1, h2}));
        } else if (*alpha) {
            if (cs.size() % 2 != 0) throw InvalidArgument("--c: expected c1 c2 pairs");
            std::vector<CohomologyClass> classes;
            for (std::size_t i = 0; i < cs.size(); i += 2) classes.push_back({cs[i], cs[i + 1]});
            const ConvexTable table = table_for(g, config, table_path);
            emit(output_path(g, config, "alpha-grid"), pipeline::alpha_grid(config, table, classes));
        } else if (*corner) {
            const ConvexTable table = table_for(g, config, table_path);
            const auto result = pipeline::corner_scan_run(config, table, parse_pair(from, "--from"), parse_pair(to, "--to"), samples);
            emit(output_path(g, config, "corner-scan"), result.profile);
            std::cout << result.reports;
        } else if (*verify) {
            const auto report = pipeline::example_verify(config, g.workers);
            const bool ok = report.at("all_pass").get<bool>();
            auto path = g.out.empty() ? std::filesystem::path(config.output.directory) / "example-verify.json"
                                      : std::filesystem::path(g.out);
            emit(path, pipeline::emit_document("example-verify", config, report));
            return ok ? 0 : kNumericalError;
        } else if (*region) {
            emit(output_path(g, config, "example-region"),
                 pipeline::example_region(config, e_range[0], e_range[1], nE, f_range[0], f_range[1], nF));
        } else if (*graph) {
            emit(output_path(g, config, "example-graph"), pipeline::example_graph(config, {E, F, branch}, graph_samples));
        } else if (*witness) {
            auto path = g.out.empty() ? std::filesystem::path(config.output.directory) / "absorbing-witness.json"
                                      : std::filesystem::path(g.out);
            emit(path, foliated_F ? pipeline::absorbing_witness_foliated(config, {E, *foliated_F, 1}, g.workers)
                                  : pipeline::absorbing_witness(config, E, g.workers));
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsageError;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumericalError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kNumericalError;
    }
    return 0;
}
