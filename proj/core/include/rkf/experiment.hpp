#pragma once

// Batch experiment harness: JSON configuration, validation, and the run
// that writes theta_trace.csv, variance_trace.csv, summary.csv and
// (optionally) mc_check.csv.

#include "rkf/least_favorable.hpp"
#include "rkf/robust_filter.hpp"
#include "rkf/state_space.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rkf {

struct PolicySpec {
    std::string name;
    RobustPolicy policy;
};

/// Least-favorable plant synthesized from a robust policy with tolerance c.
struct LfmSource {
    Tau tau;
    double c;

    /// "lfm:tau=<tau>,c=<c>" with shortest round-trip number formatting.
    std::string label() const;
};

struct MonteCarloSpec {
    std::uint64_t seed = 0;
    std::size_t num_paths = 1000;
    /// Times reported in mc_check.csv; empty means every t.
    std::vector<std::size_t> checkpoints;
    unsigned threads = 0;
};

struct ExperimentConfig {
    ModelData model;
    std::vector<PolicySpec> policies;
    std::vector<LfmSource> lfm_sources;
    std::optional<MonteCarloSpec> monte_carlo;
    std::filesystem::path output_dir = "rkf_out";
    /// Steady state = mean over this trailing fraction of a series.
    double steady_state_fraction = 0.1;
    InitialCoupling coupling = InitialCoupling::independent;

    const PolicySpec& policy(std::string_view name) const;
};

/// Every problem in the JSON text: parse errors, unknown policy modes,
/// tau outside [0,1], negative tolerances, model dimension and Gamma
/// invertibility violations. Each entry starts with the offending key.
std::vector<std::string> validate_config_text(std::string_view json_text);

/// Reads `path` and validates it. Only IO failures throw (Error{io}).
std::vector<std::string> validate_config(const std::filesystem::path& path);

/// Throws Error{config} carrying every diagnostic.
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

struct ThetaSeries {
    std::string policy;
    std::vector<double> theta; // t = 0..T
};

struct VarianceSeries {
    std::string policy;
    std::string plant;                       // "nominal" or LfmSource::label()
    std::vector<Eigen::VectorXd> variance;   // t = 0..T+1
};

struct SummaryRow {
    std::string metric; // "theta" or "variance"
    std::string policy;
    std::string plant;  // empty for theta
    std::size_t component = 0; // 1-based; 0 for theta
    double value = 0.0;
};

struct MonteCarloRow {
    std::size_t t = 0;
    std::string policy;
    std::string plant;
    std::size_t component = 0;
    double lyapunov = 0.0;
    double monte_carlo = 0.0;
    double std_error = 0.0;
    double z_score = 0.0;
};

struct ExperimentResult {
    std::vector<ThetaSeries> thetas;
    std::vector<VarianceSeries> variances;
    std::vector<SummaryRow> summary;
    std::vector<MonteCarloRow> monte_carlo;
    std::vector<std::filesystem::path> files;

    const VarianceSeries& variance(std::string_view policy, std::string_view plant) const;
    const ThetaSeries& theta(std::string_view policy) const;
};

/// Mean of the trailing max(1, floor(fraction * size)) entries.
double steady_state_mean(std::span<const double> series, double fraction);

/// Runs every policy, synthesizes the nominal plant plus every lfm source,
/// evaluates each policy on each plant and writes the CSV files into
/// `output_dir` (created if missing). Pass an empty path to skip writing.
ExperimentResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& output_dir);
ExperimentResult run_experiment(const ExperimentConfig& config);

/// JSON dump of the augmented least-favorable matrices per time step.
std::string lfm_to_json(const LeastFavorableModel& lfm, const LfmSource& source);

inline constexpr std::string_view kThetaTraceHeader = "t,policy,theta";
inline constexpr std::string_view kVarianceTraceHeader = "t,policy,plant,component,variance";
inline constexpr std::string_view kSummaryHeader = "metric,policy,plant,component,steady_state";
inline constexpr std::string_view kMonteCarloHeader =
    "t,policy,plant,component,lyapunov,monte_carlo,std_error,z_score";

} // namespace rkf
