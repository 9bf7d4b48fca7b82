// End-to-end tests of the pipelines and the command-line tool
#include "mather/pipeline.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace mather {

namespace fs = std::filesystem;

namespace {

struct CliRun {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("mather_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    CliRun cli(const std::string& args) const {
        const fs::path out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
        const std::string cmd = "cd '" + dir_.string() + "' && '" MATHER_CLI_PATH "' " + args + " >'" + out.string() +
                                "' 2>'" + err.string() + "'";
        const int status = std::system(cmd.c_str());
        CliRun r;
        r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        r.out = slurp(out);
        r.err = slurp(err);
        return r;
    }

    fs::path write(const std::string& name, const std::string& text) const {
        const fs::path p = dir_ / name;
        std::ofstream(p) << text;
        return p;
    }

    fs::path dir_;
};

const char* kSmallGrid = R"({
    "variational": {"nodes": 32, "q_max": 1, "period_scale": 4, "max_dt": 0.05},
    "grid": {"h_box": [-1, 1, -1, 1], "steps": 9}
})";

}  // namespace

// =============================================================================
// Library pipelines
// =============================================================================

TEST(PipelineTest, ModelEvalExamples) {
    const RunConfig c;
    auto j = pipeline::model_eval(c, 0, 0, 1, 0);
    EXPECT_DOUBLE_EQ(j["L"].get<double>(), 0.5);
    j = pipeline::model_eval(c, 0, 0, 0, 1);
    EXPECT_DOUBLE_EQ(j["L"].get<double>(), 1.5);
    EXPECT_DOUBLE_EQ(j["p"][1].get<double>(), 2.0);
    j = pipeline::model_eval(c, 0.25, 0, 0, 1);
    EXPECT_NEAR(j["L"].get<double>(), 0.5, 1e-15);
    EXPECT_NEAR(j["H"].get<double>(), 0.5, 1e-15);
}

TEST(PipelineTest, CsvHeaderCarriesProvenance) {
    RunConfig c;
    c.variational.seed = 17;
    const std::string csv = pipeline::example_region(c, 0.2, 2.0, 2, -1, 1, 2);
    EXPECT_EQ(csv.rfind("# mather example-region schema_version=1 config_hash=" + hex64(c.hash()) + " seed=17\n", 0), 0u);
    EXPECT_NE(csv.find("E,F,status\n"), std::string::npos);
}

TEST(PipelineTest, JsonFormatWrapsRows) {
    RunConfig c;
    c.output.format = OutputFormat::json;
    const auto j = nlohmann::json::parse(pipeline::example_region(c, 1.0, 1.2, 1, 0.0, 0.2, 1));
    EXPECT_EQ(j["provenance"]["command"], "example-region");
    ASSERT_EQ(j["rows"].size(), 1u);
    EXPECT_EQ(j["rows"][0]["status"], "foliated");
    EXPECT_DOUBLE_EQ(j["rows"][0]["E"].get<double>(), 1.1);
}

TEST(PipelineTest, FlowIntegrateChecksTimes) {
    RunConfig c;
    EXPECT_THROW(pipeline::flow_integrate(c, {{0.5, 0}, {0, 1}}, 1e-4), InvalidArgument);
    c.integrator.max_T = 5;
    EXPECT_THROW(pipeline::flow_integrate(c, {{0.5, 0}, {0, 1}}, 10), InvalidArgument);
}

TEST(PipelineTest, BetaTableRoundTripsThroughCsv) {
    const RunConfig c = parse_config(kSmallGrid);
    const std::string csv = pipeline::beta_grid(c, 1, true);
    std::istringstream in(csv);
    const ConvexTable t = pipeline::read_beta_csv(in, c.grid_box());
    const ConvexTable direct = convexify(pipeline::beta_table(c, 1));
    for (std::size_t k = 0; k < t.size(); ++k) EXPECT_NEAR(t.value(k), direct.value(k), 1e-9 * (1 + std::abs(direct.value(k))));
    RunConfig other = c;
    other.grid.steps = 10;
    std::istringstream again(csv);
    EXPECT_THROW(pipeline::read_beta_csv(again, other.grid_box()), ConfigError);
}

TEST(PipelineTest, BetaPointDiagnostics) {
    const RunConfig c = parse_config(kSmallGrid);
    const auto j = pipeline::beta_point(c, {0, std::sqrt(2.0)});
    ASSERT_EQ(j["candidates"].size(), 1u);
    const auto& cand = j["candidates"][0];
    for (const char* key : {"action", "grad_norm", "iterations", "seed", "h0", "T", "N"}) EXPECT_TRUE(cand.contains(key)) << key;
    EXPECT_NEAR(j["beta"].get<double>(), 1.0 - std::sqrt(2.0), 5e-3);
}

TEST(PipelineTest, ExampleVerifyPasses) {
    const auto j = pipeline::example_verify(RunConfig{}, 1);
    for (const auto& c : j["checks"]) EXPECT_TRUE(c["pass"].get<bool>()) << c["name"];
    EXPECT_TRUE(j["all_pass"].get<bool>());
}

// =============================================================================
// Command-line tool
// =============================================================================

TEST_F(CliTest, ModelEvalPrintsJson) {
    const CliRun r = cli("model-eval 0 0 0 1");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_DOUBLE_EQ(j["L"].get<double>(), 1.5);
    EXPECT_EQ(j["provenance"]["command"], "model-eval");
}

TEST_F(CliTest, UsageErrorsExitWithOne) {
    EXPECT_EQ(cli("").code, 1);
    EXPECT_EQ(cli("no-such-command").code, 1);
    EXPECT_EQ(cli("model-eval 0 0").code, 1);
    EXPECT_EQ(cli("-c missing.json model-eval 0 0 0 1").code, 1);
}

TEST_F(CliTest, MalformedConfigNamesTheField) {
    const fs::path cfg = write("bad.json", R"({"grid": {"steps": "many"}})");
    const CliRun r = cli("-c '" + cfg.string() + "' model-eval 0 0 0 1");
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("grid.steps"), std::string::npos) << r.err;
}

TEST_F(CliTest, FlowIntegrateWritesTrajectory) {
    const CliRun r = cli("-o traj.csv flow-integrate 0.5 0 0 1.4142135623730951 10");
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream in(slurp(dir_ / "traj.csv"));
    std::string line, last;
    std::getline(in, line);
    EXPECT_EQ(line.rfind("# mather flow-integrate", 0), 0u);
    std::getline(in, line);
    EXPECT_EQ(line, "t,X,Y,v1,v2,energy,first_integral");
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        last = line;
        ++rows;
    }
    EXPECT_EQ(rows, 10001u);
    std::stringstream ss(last);
    std::string t, X, Y;
    std::getline(ss, t, ',');
    std::getline(ss, X, ',');
    std::getline(ss, Y, ',');
    EXPECT_NEAR(std::stod(Y), 10.0 * std::sqrt(2.0), 1e-6);
    EXPECT_NEAR(std::stod(X), 0.5, 1e-9);
}

TEST_F(CliTest, FlowIntegrateRejectsStepLargerThanHorizon) {
    const fs::path cfg = write("dt.json", R"({"integrator": {"dt": 0.5}})");
    const CliRun r = cli("-c '" + cfg.string() + "' flow-integrate 0 0 1 0 0.1");
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("dt"), std::string::npos);
    EXPECT_FALSE(fs::exists(dir_ / "out" / "flow-integrate.csv"));
}

TEST_F(CliTest, DefaultOutputDirectoryFromConfig) {
    const fs::path cfg = write("c.json", R"({"output": {"directory": "results"}})");
    const CliRun r = cli("-c '" + cfg.string() + "' example-region --nE 5 --nF 5");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(fs::exists(dir_ / "results" / "example-region.csv"));
}

TEST_F(CliTest, ExampleRegionBoundary) {
    const CliRun r = cli("-o region.csv example-region");
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream in(slurp(dir_ / "region.csv"));
    std::string line;
    std::getline(in, line);
    std::getline(in, line);
    int cells = 0, foliated = 0;
    while (std::getline(in, line)) {
        ++cells;
        std::stringstream ss(line);
        std::string e, f, status;
        std::getline(ss, e, ',');
        std::getline(ss, f, ',');
        std::getline(ss, status);
        const double E = std::stod(e), F = std::stod(f);
        const bool inside = E > 0.5 && std::abs(F) < std::sqrt(2 * E) - 1.0;
        EXPECT_EQ(status == "foliated", inside) << line;
        foliated += status == "foliated";
    }
    EXPECT_EQ(cells, 2500);
    EXPECT_GT(foliated, 0);
}

TEST_F(CliTest, ExampleGraphRejectsMissingGraph) {
    EXPECT_EQ(cli("example-graph --E 1 --F 0").code, 0);
    const CliRun r = cli("example-graph --E 1 --F 0.5");
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("not a graph"), std::string::npos);
}

TEST_F(CliTest, BetaGridIsByteIdenticalAcrossRunsAndWorkers) {
    const fs::path cfg = write("small.json", kSmallGrid);
    const std::string base = "-c '" + cfg.string() + "' ";
    ASSERT_EQ(cli(base + "-o a.csv beta-grid").code, 0);
    ASSERT_EQ(cli(base + "-o b.csv beta-grid").code, 0);
    ASSERT_EQ(cli(base + "-w 2 -o c.csv beta-grid").code, 0);
    const std::string a = slurp(dir_ / "a.csv");
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(a, slurp(dir_ / "b.csv"));
    EXPECT_EQ(a, slurp(dir_ / "c.csv"));
}

TEST_F(CliTest, AlphaAndCornerScanReuseATable) {
    const fs::path cfg = write("small.json", kSmallGrid);
    const std::string base = "-c '" + cfg.string() + "' ";
    ASSERT_EQ(cli(base + "-o beta.csv beta-grid").code, 0);
    const CliRun alpha = cli(base + "-o alpha.csv alpha-grid --table beta.csv --c 0 0 0.2 0");
    ASSERT_EQ(alpha.code, 0) << alpha.err;
    const std::string a = slurp(dir_ / "alpha.csv");
    EXPECT_NE(a.find("c1,c2,alpha\n0,0,0.5\n0.2,0,0.5\n"), std::string::npos) << a;
    const CliRun corner = cli(base + "-o corner.csv corner-scan --table beta.csv --from -0.5 0.5 --to 0.5 0.5 --samples 9");
    ASSERT_EQ(corner.code, 0) << corner.err;
    const auto reports = nlohmann::json::parse(corner.out.substr(corner.out.find('{')));
    EXPECT_EQ(reports["corners"].size(), 1u);
    EXPECT_NE(slurp(dir_ / "corner.csv").find("t,h1,h2,left_slope,right_slope,gap"), std::string::npos);
}

TEST_F(CliTest, BetaPointPrintsDiagnostics) {
    const fs::path cfg = write("small.json", kSmallGrid);
    const CliRun r = cli("-c '" + cfg.string() + "' beta-point 0.5 0");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_TRUE(j["candidates"][0]["converged"].get<bool>());
}

TEST_F(CliTest, AtomicWriteLeavesNoPartialFile) {
    // The target directory is a file, so the write fails and nothing is left behind.
    write("blocker", "x");
    const CliRun r = cli("-o blocker/region.csv example-region --nE 2 --nF 2");
    EXPECT_NE(r.code, 0);
    for (const auto& e : fs::directory_iterator(dir_)) {
        EXPECT_EQ(e.path().filename().string().find(".tmp"), std::string::npos) << e.path();
    }
}

}  // namespace mather
