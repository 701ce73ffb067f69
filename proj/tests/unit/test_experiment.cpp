#include "fixtures.hpp"
#include "rkf/csv.hpp"
#include "rkf/error.hpp"
#include "rkf/experiment.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = fs::path(RKF_SOURCE_DIR) / "configs";

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string first_line(const fs::path& p)
{
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    return line;
}

fs::path scratch(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / ("rkf_test_" + name);
    fs::remove_all(dir);
    return dir;
}

// Small config with every feature switched on, cheap enough for unit tests.
std::string small_config(int horizon = 60)
{
    return R"({
  "model": {
    "A": [[0.1, 1.0], [0.0, 1.2]],
    "B": [[0.01, 0.0, 0.0], [0.0, 0.01, 0.0]],
    "C": [[1.0, -1.0]],
    "D": [[0.0, 0.0, 0.1]],
    "x0_mean": [0.0, 0.0],
    "x0_cov": [[0.01, 0.0], [0.0, 0.01]],
    "horizon": )" + std::to_string(horizon) + R"(
  },
  "policies": [
    {"name": "KF", "mode": "standard"},
    {"name": "RKF0", "mode": "robust", "tau": 0, "c": 0.1},
    {"name": "RS", "mode": "risk_sensitive", "tau": 0.5, "theta": 0.05}
  ],
  "lfm_sources": [{"tau": 0, "c": 0.1}],
  "monte_carlo": {"seed": 5, "num_paths": 200, "checkpoints": [10, )" + std::to_string(horizon) + R"(], "threads": 2}
})";
}

bool mentions(const std::vector<std::string>& issues, const std::string& needle)
{
    for (const auto& s : issues) {
        if (s.find(needle) != std::string::npos) {
            return true;
        }
    }
    return false;
}

} // namespace

TEST(Config, BundledConfigsValidate)
{
    for (const char* name : {"two_state_c0.1.json", "two_state_c0.005.json", "kalman_only.json"}) {
        EXPECT_TRUE(rkf::validate_config(kConfigs / name).empty()) << name;
    }
}

TEST(Config, TauOutOfRange)
{
    std::string text = small_config();
    text.replace(text.find("\"tau\": 0, \"c\""), 9, "\"tau\": 1.5,");
    const auto issues = rkf::validate_config_text(text);
    ASSERT_FALSE(issues.empty());
    EXPECT_TRUE(mentions(issues, "policies[1].tau")) << issues.front();
    EXPECT_THROW(rkf::parse_config(text), rkf::Error);
}

TEST(Config, WrongNoiseWidthCitesGammaRule)
{
    std::string text = small_config();
    text.replace(text.find("\"D\": [[0.0, 0.0, 0.1]]"), 22, "\"D\": [[0.0, 0.1]]");
    text.replace(text.find("\"B\": [[0.01, 0.0, 0.0], [0.0, 0.01, 0.0]]"), 41, "\"B\": [[0.01, 0.0], [0.0, 0.01]]");
    const auto issues = rkf::validate_config_text(text);
    EXPECT_TRUE(mentions(issues, "Gamma"));
}

TEST(Config, CollectsEveryIssue)
{
    const auto issues = rkf::validate_config_text(R"({"model": {"A": [[1]]}, "policies": [
        {"name": "a", "mode": "bogus"}, {"name": "b", "mode": "robust", "tau": 0, "c": -1}], "colour": 1})");
    EXPECT_GE(issues.size(), 3U);
    EXPECT_TRUE(mentions(issues, "policies[0].mode"));
    EXPECT_TRUE(mentions(issues, "policies[1].c"));
    EXPECT_TRUE(mentions(issues, "colour"));
    EXPECT_FALSE(rkf::validate_config_text("{not json").empty());
}

TEST(Config, MissingFileIsIoError)
{
    try {
        rkf::validate_config(kConfigs / "does_not_exist.json");
        FAIL();
    } catch (const rkf::Error& e) {
        EXPECT_EQ(e.code(), rkf::ErrorCode::io);
    }
}

TEST(Experiment, SteadyStateMean)
{
    std::vector<double> v(100);
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = static_cast<double>(i);
    }
    EXPECT_DOUBLE_EQ(rkf::steady_state_mean(v, 0.1), 94.5);
    EXPECT_DOUBLE_EQ(rkf::steady_state_mean(std::span<const double>(v.data(), 5), 0.1), 4.0);
}

TEST(Experiment, WritesGoldenHeaders)
{
    const fs::path dir = scratch("headers");
    const auto result = rkf::run_experiment(rkf::parse_config(small_config()), dir);
    EXPECT_EQ(result.files.size(), 4U);
    EXPECT_EQ(first_line(dir / "theta_trace.csv"), "t,policy,theta");
    EXPECT_EQ(first_line(dir / "variance_trace.csv"), "t,policy,plant,component,variance");
    EXPECT_EQ(first_line(dir / "summary.csv"), "metric,policy,plant,component,steady_state");
    EXPECT_EQ(first_line(dir / "mc_check.csv"), "t,policy,plant,component,lyapunov,monte_carlo,std_error,z_score");
    // 3 policies x 2 plants x 2 checkpoints x 2 error components.
    EXPECT_EQ(result.monte_carlo.size(), 24U);
    EXPECT_EQ(result.variance("RKF0", "lfm:tau=0,c=0.1").variance.size(), 62U);
    fs::remove_all(dir);
}

TEST(Experiment, RerunIsByteIdentical)
{
    const fs::path a = scratch("rerun_a");
    const fs::path b = scratch("rerun_b");
    auto config = rkf::parse_config(small_config());
    rkf::run_experiment(config, a);
    config.monte_carlo->threads = 1;
    rkf::run_experiment(config, b);
    for (const char* f : {"theta_trace.csv", "variance_trace.csv", "summary.csv", "mc_check.csv"}) {
        EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    }
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST(Experiment, KalmanOnlyVarianceIsNominalCovariance)
{
    const auto config = rkf::load_config(kConfigs / "kalman_only.json");
    const auto result = rkf::run_experiment(config, {});
    const auto& series = result.variance("KF", "nominal").variance;
    const auto schedule = rkf::run_gain_schedule(rkf::StateSpaceModel(config.model), rkf::RobustPolicy::standard());
    ASSERT_EQ(series.size(), schedule.size() + 1);
    for (std::size_t t = 1; t < series.size(); ++t) {
        const Eigen::VectorXd p = schedule[t - 1].nominal_cov.matrix().diagonal();
        EXPECT_LT((series[t] - p).cwiseAbs().maxCoeff(), 1e-12 * p.maxCoeff());
    }
    EXPECT_TRUE(result.files.empty());
}

TEST(Experiment, ThetaSeries)
{
    const auto result = rkf::run_experiment(rkf::parse_config(small_config()), {});
    for (double th : result.theta("KF").theta) {
        EXPECT_EQ(th, 0.0);
    }
    for (double th : result.theta("RS").theta) {
        EXPECT_EQ(th, 0.05);
    }
    EXPECT_GT(result.theta("RKF0").theta.back(), 0.0);
    EXPECT_THROW(result.theta("nope"), rkf::Error);
}

TEST(Csv, FormatRoundTrips)
{
    for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0}) {
        EXPECT_EQ(std::stod(rkf::csv::format(v)), v);
    }
}

TEST(Csv, ReadObservations)
{
    std::istringstream in("y1,y2\n1.5,2\n-3,4e-2\n");
    const auto ys = rkf::csv::read_observations(in, 2);
    ASSERT_EQ(ys.size(), 2U);
    EXPECT_DOUBLE_EQ(ys[1](1), 0.04);

    std::istringstream bad("1,2\n3\n");
    try {
        rkf::csv::read_observations(bad, 2);
        FAIL();
    } catch (const rkf::Error& e) {
        EXPECT_EQ(e.code(), rkf::ErrorCode::io);
        EXPECT_NE(e.message().find('2'), std::string::npos);
    }
}

TEST(Csv, FilterTrace)
{
    const auto model = rkf::testing::example_model(4);
    const std::vector<Eigen::VectorXd> ys(5, Eigen::VectorXd::Constant(1, 0.2));
    const auto trace = rkf::run_filter(model, rkf::RobustPolicy::robust(rkf::Tau(1), 0.1), ys);
    std::ostringstream out;
    rkf::csv::write_filter_trace(out, trace);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "t,theta,xhat_1,xhat_2,P_1_1,P_1_2,P_2_2,V_1_1,V_1_2,V_2_2,G_1_1,G_2_1");
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
    }
    EXPECT_EQ(rows, 5);
}

TEST(LfmDump, ContainsMatrixSequences)
{
    const auto model = rkf::testing::example_model(3);
    const auto lfm = rkf::build_least_favorable(model, rkf::RobustPolicy::robust(rkf::Tau(0), 0.1));
    const std::string json = rkf::lfm_to_json(lfm, {rkf::Tau(0), 0.1});
    for (const char* key : {"A_tilde", "B_tilde", "C_tilde", "D_tilde", "H", "Kv_tilde", "omega_inv"}) {
        EXPECT_NE(json.find(key), std::string::npos) << key;
    }
}

#ifdef RKF_CLI_PATH
namespace {

int run_cli(const std::string& args, const std::string& env = {})
{
    const std::string cmd = env + " \"" RKF_CLI_PATH "\" " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

} // namespace

TEST(Cli, ValidateExitCodes)
{
    EXPECT_EQ(run_cli("validate \"" + (kConfigs / "kalman_only.json").string() + "\""), 0);
    const fs::path dir = scratch("cli_validate");
    fs::create_directories(dir);
    std::ofstream(dir / "bad.json") << R"({"model": {}, "policies": []})";
    EXPECT_EQ(run_cli("validate \"" + (dir / "bad.json").string() + "\""), 1);
    EXPECT_EQ(run_cli("run \"" + (dir / "missing.json").string() + "\""), 2);
    fs::remove_all(dir);
}

TEST(Cli, OutputDirectoryPrecedence)
{
    const fs::path dir = scratch("cli_out");
    fs::create_directories(dir);
    std::ofstream(dir / "cfg.json") << small_config(20);
    const std::string cfg = "\"" + (dir / "cfg.json").string() + "\"";
    EXPECT_EQ(run_cli("run " + cfg, "RKF_OUTPUT_DIR=\"" + (dir / "env").string() + "\""), 0);
    EXPECT_TRUE(fs::exists(dir / "env" / "summary.csv"));
    EXPECT_EQ(run_cli("run " + cfg + " --out \"" + (dir / "flag").string() + "\"",
                      "RKF_OUTPUT_DIR=\"" + (dir / "env2").string() + "\""),
              0);
    EXPECT_TRUE(fs::exists(dir / "flag" / "summary.csv"));
    EXPECT_FALSE(fs::exists(dir / "env2"));

    EXPECT_EQ(run_cli("lfm " + cfg + " --tau 1 --c 0.1 --out \"" + (dir / "lfm.json").string() + "\""), 0);
    EXPECT_GT(fs::file_size(dir / "lfm.json"), 100U);

    std::ofstream obs(dir / "obs.csv");
    obs << "y\n";
    for (int t = 0; t <= 20; ++t) {
        obs << 0.01 * t << '\n';
    }
    obs.close();
    EXPECT_EQ(run_cli("filter " + cfg + " --policy RKF0 --obs \"" + (dir / "obs.csv").string() + "\" --out \"" +
                      (dir / "trace.csv").string() + "\""),
              0);
    EXPECT_EQ(first_line(dir / "trace.csv").substr(0, 8), "t,theta,");
    EXPECT_EQ(run_cli("filter " + cfg + " --policy nope --obs \"" + (dir / "obs.csv").string() + "\""), 2);
    fs::remove_all(dir);
}
#endif
