// rkf: batch front end for the robust Kalman filter toolkit.
//
//   rkf validate <config>
//   rkf run <config> [--out <dir>]
//   rkf lfm <config> --tau <v> --c <v> --out <path>
//   rkf filter <config> --policy <name> --obs <csv> [--out <path>]
//
// RKF_OUTPUT_DIR overrides the config's output_dir for `run` (--out wins).

#include "rkf/csv.hpp"
#include "rkf/error.hpp"
#include "rkf/experiment.hpp"
#include "rkf/least_favorable.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

namespace {

int cmd_validate(const std::string& config_path)
{
    const auto issues = rkf::validate_config(config_path);
    for (const auto& issue : issues) {
        std::cerr << config_path << ": " << issue << '\n';
    }
    if (issues.empty()) {
        std::cout << config_path << ": ok\n";
        return 0;
    }
    return 1;
}

int cmd_run(const std::string& config_path, const std::string& out_flag)
{
    const rkf::ExperimentConfig config = rkf::load_config(config_path);
    std::filesystem::path out = config.output_dir;
    if (const char* env = std::getenv("RKF_OUTPUT_DIR"); env != nullptr && *env != '\0') {
        out = env;
    }
    if (!out_flag.empty()) {
        out = out_flag;
    }
    const rkf::ExperimentResult result = rkf::run_experiment(config, out);
    for (const auto& row : result.summary) {
        if (row.metric == "theta") {
            std::cout << "steady-state theta  " << row.policy << " = " << rkf::csv::format(row.value) << '\n';
        }
    }
    for (const auto& file : result.files) {
        std::cout << "wrote " << file.string() << '\n';
    }
    return 0;
}

int cmd_lfm(const std::string& config_path, double tau, double c, const std::string& out_path)
{
    const rkf::ExperimentConfig config = rkf::load_config(config_path);
    const rkf::StateSpaceModel model(config.model);
    const rkf::LfmSource source{rkf::Tau(tau), c};
    const auto lfm = rkf::build_least_favorable(model, rkf::RobustPolicy::robust(source.tau, source.c));
    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw rkf::Error(rkf::ErrorCode::io, "cannot write " + out_path);
    }
    out << rkf::lfm_to_json(lfm, source);
    std::cout << "wrote " << out_path << '\n';
    return 0;
}

int cmd_filter(const std::string& config_path, const std::string& policy_name, const std::string& obs_path,
               const std::string& out_path)
{
    const rkf::ExperimentConfig config = rkf::load_config(config_path);
    const rkf::StateSpaceModel model(config.model);
    const rkf::PolicySpec& spec = config.policy(policy_name);
    std::ifstream in(obs_path, std::ios::binary);
    if (!in) {
        throw rkf::Error(rkf::ErrorCode::io, "cannot open " + obs_path);
    }
    const auto observations = rkf::csv::read_observations(in, model.obs_dim());
    const auto trace = rkf::run_filter(model, spec.policy, observations, config_path);
    if (out_path.empty() || out_path == "-") {
        rkf::csv::write_filter_trace(std::cout, trace);
    } else {
        std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw rkf::Error(rkf::ErrorCode::io, "cannot write " + out_path);
        }
        rkf::csv::write_filter_trace(out, trace);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Robust Kalman filtering under tau-divergence model perturbations"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out;
    std::string policy;
    std::string obs;
    double tau = 0.0;
    double c = 0.0;

    auto* validate = app.add_subcommand("validate", "Check a config without running anything");
    validate->add_option("config", config_path, "Experiment config (JSON)")->required();

    auto* run = app.add_subcommand("run", "Run the experiment and write CSV outputs");
    run->add_option("config", config_path, "Experiment config (JSON)")->required();
    run->add_option("--out", out, "Output directory (overrides RKF_OUTPUT_DIR and the config)");

    auto* lfm = app.add_subcommand("lfm", "Synthesize a least-favorable model and dump it as JSON");
    lfm->add_option("config", config_path, "Experiment config (JSON)")->required();
    lfm->add_option("--tau", tau, "Divergence parameter in [0,1]")->required();
    lfm->add_option("--c", c, "Tolerance c >= 0")->required();
    lfm->add_option("--out", out, "Output JSON path")->required();

    auto* filter = app.add_subcommand("filter", "Run one policy on observations read from CSV");
    filter->add_option("config", config_path, "Experiment config (JSON)")->required();
    filter->add_option("--policy", policy, "Policy name from the config")->required();
    filter->add_option("--obs", obs, "Observation CSV, one row per time step")->required();
    filter->add_option("--out", out, "Trace CSV path (default: stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) {
            return cmd_validate(config_path);
        }
        if (run->parsed()) {
            return cmd_run(config_path, out);
        }
        if (lfm->parsed()) {
            return cmd_lfm(config_path, tau, c, out);
        }
        if (filter->parsed()) {
            return cmd_filter(config_path, policy, obs, out);
        }
    } catch (const rkf::Error& e) {
        std::cerr << "rkf: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "rkf: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
