#include "rkf/experiment.hpp"

#include "rkf/csv.hpp"
#include "rkf/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace rkf {
namespace {

using json = nlohmann::json;

std::string shortest(double value)
{
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return ec == std::errc() ? std::string(buf, ptr) : csv::format(value);
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::io, "cannot open " + path.string());
    }
    std::ostringstream os;
    os << in.rdbuf();
    if (in.bad()) {
        throw Error(ErrorCode::io, "failed reading " + path.string());
    }
    return os.str();
}

// Collects every problem instead of stopping at the first one.
class ConfigReader {
public:
    std::vector<std::string> issues;

    void fail(const std::string& key, const std::string& message) { issues.push_back(key + ": " + message); }

    std::optional<double> number(const json& obj, const char* field, const std::string& key, bool required)
    {
        const std::string path = key + "." + field;
        if (!obj.contains(field)) {
            if (required) {
                fail(path, "missing");
            }
            return std::nullopt;
        }
        const json& v = obj.at(field);
        if (!v.is_number()) {
            fail(path, "expected a number");
            return std::nullopt;
        }
        const double d = v.get<double>();
        if (!std::isfinite(d)) {
            fail(path, "must be finite");
            return std::nullopt;
        }
        return d;
    }

    std::optional<std::uint64_t> count(const json& obj, const char* field, const std::string& key, bool required)
    {
        const std::string path = key + "." + field;
        if (!obj.contains(field)) {
            if (required) {
                fail(path, "missing");
            }
            return std::nullopt;
        }
        const json& v = obj.at(field);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
            fail(path, "expected a non-negative integer");
            return std::nullopt;
        }
        return v.get<std::uint64_t>();
    }

    std::optional<Tau> tau(const json& obj, const std::string& key)
    {
        const auto v = number(obj, "tau", key, true);
        if (!v) {
            return std::nullopt;
        }
        if (!(*v >= 0.0 && *v <= 1.0)) {
            fail(key + ".tau", "tau out of [0,1] (got " + shortest(*v) + ")");
            return std::nullopt;
        }
        return Tau(*v);
    }

    std::optional<Eigen::MatrixXd> matrix(const json& j, const std::string& key)
    {
        if (!j.is_array() || j.empty()) {
            fail(key, "expected a non-empty array of rows");
            return std::nullopt;
        }
        const std::size_t rows = j.size();
        std::size_t cols = 0;
        for (std::size_t r = 0; r < rows; ++r) {
            if (!j[r].is_array() || j[r].empty()) {
                fail(key, "row " + std::to_string(r) + " is not a non-empty array of numbers");
                return std::nullopt;
            }
            if (r == 0) {
                cols = j[r].size();
            } else if (j[r].size() != cols) {
                fail(key, "ragged rows (row 0 has " + std::to_string(cols) + " entries, row " + std::to_string(r) +
                              " has " + std::to_string(j[r].size()) + ")");
                return std::nullopt;
            }
        }
        Eigen::MatrixXd m(static_cast<Index>(rows), static_cast<Index>(cols));
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) {
                const json& v = j[r][c];
                if (!v.is_number()) {
                    fail(key, "entry [" + std::to_string(r) + "][" + std::to_string(c) + "] is not a number");
                    return std::nullopt;
                }
                m(static_cast<Index>(r), static_cast<Index>(c)) = v.get<double>();
            }
        }
        return m;
    }

    std::optional<std::vector<Eigen::MatrixXd>> matrix_sequence(const json& obj, const char* field,
                                                                const std::string& key)
    {
        const std::string path = key + "." + field;
        if (!obj.contains(field)) {
            fail(path, "missing");
            return std::nullopt;
        }
        const json& j = obj.at(field);
        const bool sequence = j.is_array() && !j.empty() && j[0].is_array() && !j[0].empty() && j[0][0].is_array();
        std::vector<Eigen::MatrixXd> out;
        if (!sequence) {
            auto m = matrix(j, path);
            if (!m) {
                return std::nullopt;
            }
            out.push_back(std::move(*m));
            return out;
        }
        for (std::size_t t = 0; t < j.size(); ++t) {
            auto m = matrix(j[t], path + "[" + std::to_string(t) + "]");
            if (!m) {
                return std::nullopt;
            }
            out.push_back(std::move(*m));
        }
        return out;
    }

    std::optional<Eigen::VectorXd> vector(const json& obj, const char* field, const std::string& key)
    {
        const std::string path = key + "." + field;
        if (!obj.contains(field)) {
            fail(path, "missing");
            return std::nullopt;
        }
        const json& j = obj.at(field);
        if (!j.is_array() || j.empty()) {
            fail(path, "expected a non-empty array of numbers");
            return std::nullopt;
        }
        Eigen::VectorXd v(static_cast<Index>(j.size()));
        for (std::size_t i = 0; i < j.size(); ++i) {
            if (!j[i].is_number()) {
                fail(path, "entry " + std::to_string(i) + " is not a number");
                return std::nullopt;
            }
            v(static_cast<Index>(i)) = j[i].get<double>();
        }
        return v;
    }

    void unknown_keys(const json& obj, const std::string& key, std::initializer_list<std::string_view> allowed)
    {
        for (auto it = obj.begin(); it != obj.end(); ++it) {
            const std::string& k = it.key();
            if (!k.empty() && k.front() == '_') {
                continue; // comments
            }
            if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
                fail(key.empty() ? k : key + "." + k, "unknown key");
            }
        }
    }
};

std::optional<ModelData> read_model(ConfigReader& r, const json& root)
{
    if (!root.contains("model") || !root.at("model").is_object()) {
        r.fail("model", "missing or not an object");
        return std::nullopt;
    }
    const json& m = root.at("model");
    r.unknown_keys(m, "model", {"A", "B", "C", "D", "x0_mean", "x0_cov", "horizon"});
    const std::size_t before = r.issues.size();
    ModelData data;
    const auto horizon = r.count(m, "horizon", "model", true);
    auto a = r.matrix_sequence(m, "A", "model");
    auto b = r.matrix_sequence(m, "B", "model");
    auto c = r.matrix_sequence(m, "C", "model");
    auto d = r.matrix_sequence(m, "D", "model");
    auto x0 = r.vector(m, "x0_mean", "model");
    std::optional<Eigen::MatrixXd> v0;
    if (m.contains("x0_cov")) {
        v0 = r.matrix(m.at("x0_cov"), "model.x0_cov");
    } else {
        r.fail("model.x0_cov", "missing");
    }
    if (r.issues.size() != before) {
        return std::nullopt;
    }
    data.horizon = static_cast<std::size_t>(*horizon);
    data.A = std::move(*a);
    data.B = std::move(*b);
    data.C = std::move(*c);
    data.D = std::move(*d);
    data.x0_mean = std::move(*x0);
    data.x0_cov = std::move(*v0);
    for (const auto& problem : diagnose(data)) {
        r.fail("model", problem);
    }
    return data;
}

std::optional<PolicySpec> read_policy(ConfigReader& r, const json& j, const std::string& key,
                                      std::optional<std::size_t> horizon)
{
    if (!j.is_object()) {
        r.fail(key, "expected an object");
        return std::nullopt;
    }
    r.unknown_keys(j, key, {"name", "mode", "tau", "c", "theta"});
    std::string name;
    if (!j.contains("name") || !j.at("name").is_string() || j.at("name").get<std::string>().empty()) {
        r.fail(key + ".name", "missing or not a non-empty string");
    } else {
        name = j.at("name").get<std::string>();
        if (name.find_first_of(",\n\r\"") != std::string::npos) {
            r.fail(key + ".name", "must not contain commas, quotes or newlines");
        }
    }
    if (!j.contains("mode") || !j.at("mode").is_string()) {
        r.fail(key + ".mode", "missing; expected \"standard\", \"robust\" or \"risk_sensitive\"");
        return std::nullopt;
    }
    const std::string mode = j.at("mode").get<std::string>();
    if (mode == "standard") {
        if (name.empty()) {
            return std::nullopt;
        }
        return PolicySpec{name, RobustPolicy::standard()};
    }
    if (mode == "robust") {
        const auto tau = r.tau(j, key);
        std::vector<double> c;
        if (!j.contains("c")) {
            r.fail(key + ".c", "missing");
        } else if (j.at("c").is_number()) {
            c.push_back(j.at("c").get<double>());
        } else if (j.at("c").is_array() && !j.at("c").empty()) {
            for (const auto& v : j.at("c")) {
                if (!v.is_number()) {
                    r.fail(key + ".c", "schedule entries must be numbers");
                    return std::nullopt;
                }
                c.push_back(v.get<double>());
            }
            if (horizon && c.size() != 1 && c.size() != *horizon + 1) {
                r.fail(key + ".c", "schedule has " + std::to_string(c.size()) + " entries, expected 1 or horizon + 1 = " +
                                       std::to_string(*horizon + 1));
            }
        } else {
            r.fail(key + ".c", "expected a number or a non-empty array");
        }
        bool ok = !c.empty();
        for (double v : c) {
            if (!(v >= 0.0) || !std::isfinite(v)) {
                r.fail(key + ".c", "tolerance must be finite and >= 0 (got " + shortest(v) + ")");
                ok = false;
                break;
            }
        }
        if (!tau || !ok || name.empty()) {
            return std::nullopt;
        }
        return PolicySpec{name, RobustPolicy::robust(*tau, std::move(c))};
    }
    if (mode == "risk_sensitive") {
        const auto tau = r.tau(j, key);
        const auto theta = r.number(j, "theta", key, true);
        if (theta && !(*theta > 0.0)) {
            r.fail(key + ".theta", "must be > 0 (got " + shortest(*theta) + ")");
            return std::nullopt;
        }
        if (!tau || !theta || name.empty()) {
            return std::nullopt;
        }
        return PolicySpec{name, RobustPolicy::risk_sensitive(*tau, *theta)};
    }
    r.fail(key + ".mode", "unknown mode \"" + mode + "\"; expected \"standard\", \"robust\" or \"risk_sensitive\"");
    return std::nullopt;
}

struct ParseOutcome {
    ExperimentConfig config;
    std::vector<std::string> issues;
};

ParseOutcome read_config(std::string_view text)
{
    ParseOutcome out;
    ConfigReader r;
    json root;
    try {
        root = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        out.issues.push_back(std::string("<json>: ") + e.what());
        return out;
    }
    if (!root.is_object()) {
        out.issues.emplace_back("<root>: expected a JSON object");
        return out;
    }
    r.unknown_keys(root, "",
                   {"model", "policies", "lfm_sources", "monte_carlo", "output_dir", "steady_state_fraction",
                    "initial_coupling"});

    auto model = read_model(r, root);
    std::optional<std::size_t> horizon;
    if (model) {
        horizon = model->horizon;
        out.config.model = std::move(*model);
    }

    if (!root.contains("policies") || !root.at("policies").is_array() || root.at("policies").empty()) {
        r.fail("policies", "missing or empty; expected an array of policy objects");
    } else {
        std::set<std::string> names;
        const json& policies = root.at("policies");
        for (std::size_t i = 0; i < policies.size(); ++i) {
            const std::string key = "policies[" + std::to_string(i) + "]";
            auto spec = read_policy(r, policies[i], key, horizon);
            if (!spec) {
                continue;
            }
            if (!names.insert(spec->name).second) {
                r.fail(key + ".name", "duplicate policy name \"" + spec->name + "\"");
                continue;
            }
            out.config.policies.push_back(std::move(*spec));
        }
    }

    if (root.contains("lfm_sources")) {
        const json& sources = root.at("lfm_sources");
        if (!sources.is_array()) {
            r.fail("lfm_sources", "expected an array of {tau, c} objects");
        } else {
            for (std::size_t i = 0; i < sources.size(); ++i) {
                const std::string key = "lfm_sources[" + std::to_string(i) + "]";
                if (!sources[i].is_object()) {
                    r.fail(key, "expected an object");
                    continue;
                }
                r.unknown_keys(sources[i], key, {"tau", "c"});
                const auto tau = r.tau(sources[i], key);
                const auto c = r.number(sources[i], "c", key, true);
                if (c && !(*c >= 0.0)) {
                    r.fail(key + ".c", "tolerance must be >= 0 (got " + shortest(*c) + ")");
                    continue;
                }
                if (tau && c) {
                    out.config.lfm_sources.push_back(LfmSource{*tau, *c});
                }
            }
        }
    }

    if (root.contains("monte_carlo")) {
        const json& mc = root.at("monte_carlo");
        if (!mc.is_object()) {
            r.fail("monte_carlo", "expected an object");
        } else {
            r.unknown_keys(mc, "monte_carlo", {"seed", "num_paths", "checkpoints", "threads"});
            MonteCarloSpec spec;
            if (auto seed = r.count(mc, "seed", "monte_carlo", true)) {
                spec.seed = *seed;
            }
            if (auto paths = r.count(mc, "num_paths", "monte_carlo", true)) {
                if (*paths < 2) {
                    r.fail("monte_carlo.num_paths", "must be at least 2");
                }
                spec.num_paths = static_cast<std::size_t>(*paths);
            }
            if (auto threads = r.count(mc, "threads", "monte_carlo", false)) {
                spec.threads = static_cast<unsigned>(*threads);
            }
            if (mc.contains("checkpoints")) {
                const json& cps = mc.at("checkpoints");
                if (!cps.is_array()) {
                    r.fail("monte_carlo.checkpoints", "expected an array of time indices");
                } else {
                    for (const auto& v : cps) {
                        if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
                            r.fail("monte_carlo.checkpoints", "entries must be non-negative integers");
                            break;
                        }
                        const auto t = v.get<std::size_t>();
                        if (horizon && t > *horizon + 1) {
                            r.fail("monte_carlo.checkpoints",
                                   "time " + std::to_string(t) + " beyond horizon + 1 = " + std::to_string(*horizon + 1));
                            break;
                        }
                        spec.checkpoints.push_back(t);
                    }
                }
            }
            out.config.monte_carlo = spec;
        }
    }

    if (root.contains("output_dir")) {
        if (!root.at("output_dir").is_string()) {
            r.fail("output_dir", "expected a string");
        } else {
            out.config.output_dir = root.at("output_dir").get<std::string>();
        }
    }
    if (auto f = r.number(root, "steady_state_fraction", "<root>", false)) {
        if (!(*f > 0.0 && *f <= 1.0)) {
            r.fail("steady_state_fraction", "must lie in (0, 1]");
        } else {
            out.config.steady_state_fraction = *f;
        }
    }
    if (root.contains("initial_coupling")) {
        const json& v = root.at("initial_coupling");
        const std::string s = v.is_string() ? v.get<std::string>() : std::string();
        if (s == "independent") {
            out.config.coupling = InitialCoupling::independent;
        } else if (s == "shared") {
            out.config.coupling = InitialCoupling::shared;
        } else {
            r.fail("initial_coupling", "expected \"independent\" or \"shared\"");
        }
    }

    out.issues = std::move(r.issues);
    return out;
}

Error with_context(const Error& e, const std::string& context)
{
    return Error(e.code(), context + ": " + e.message(), e.step());
}

void write_text(const std::filesystem::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorCode::io, "cannot write " + path.string());
    }
    out << content;
    if (!out) {
        throw Error(ErrorCode::io, "failed writing " + path.string());
    }
}

json matrix_json(const Eigen::MatrixXd& m)
{
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < m.cols(); ++j) {
            row.push_back(m(i, j));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace

std::string LfmSource::label() const
{
    return "lfm:tau=" + shortest(tau.value()) + ",c=" + shortest(c);
}

const PolicySpec& ExperimentConfig::policy(std::string_view name) const
{
    for (const auto& p : policies) {
        if (p.name == name) {
            return p;
        }
    }
    throw Error(ErrorCode::config, "policy \"" + std::string(name) + "\" is not defined in the config");
}

std::vector<std::string> validate_config_text(std::string_view json_text)
{
    return read_config(json_text).issues;
}

std::vector<std::string> validate_config(const std::filesystem::path& path)
{
    return validate_config_text(read_file(path));
}

ExperimentConfig parse_config(std::string_view json_text)
{
    ParseOutcome parsed = read_config(json_text);
    if (!parsed.issues.empty()) {
        std::string message;
        for (const auto& issue : parsed.issues) {
            message += (message.empty() ? "" : "; ") + issue;
        }
        throw Error(ErrorCode::config, message);
    }
    return std::move(parsed.config);
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    return parse_config(read_file(path));
}

const VarianceSeries& ExperimentResult::variance(std::string_view policy, std::string_view plant) const
{
    for (const auto& v : variances) {
        if (v.policy == policy && v.plant == plant) {
            return v;
        }
    }
    throw Error(ErrorCode::invalid_argument,
                "no variance series for policy " + std::string(policy) + " on plant " + std::string(plant));
}

const ThetaSeries& ExperimentResult::theta(std::string_view policy) const
{
    for (const auto& s : thetas) {
        if (s.policy == policy) {
            return s;
        }
    }
    throw Error(ErrorCode::invalid_argument, "no theta series for policy " + std::string(policy));
}

double steady_state_mean(std::span<const double> series, double fraction)
{
    if (series.empty()) {
        throw Error(ErrorCode::invalid_argument, "steady state of an empty series");
    }
    const auto window = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(fraction * static_cast<double>(series.size()))));
    double sum = 0.0;
    for (std::size_t i = series.size() - window; i < series.size(); ++i) {
        sum += series[i];
    }
    return sum / static_cast<double>(window);
}

ExperimentResult run_experiment(const ExperimentConfig& config)
{
    return run_experiment(config, config.output_dir);
}

ExperimentResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& output_dir)
{
    const StateSpaceModel model(config.model);
    const Index n = model.state_dim();
    ExperimentResult result;

    std::vector<std::vector<Eigen::MatrixXd>> gains;
    for (const auto& spec : config.policies) {
        try {
            const auto schedule = run_gain_schedule(model, spec.policy);
            ThetaSeries series{spec.name, {}};
            series.theta.reserve(schedule.size());
            for (const auto& s : schedule) {
                series.theta.push_back(s.theta);
            }
            result.thetas.push_back(std::move(series));
            gains.push_back(gains_of(schedule));
        } catch (const Error& e) {
            throw with_context(e, "robust-filter, policy " + spec.name);
        }
    }

    struct Plant {
        std::string label;
        LeastFavorableModel lfm;
    };
    std::vector<Plant> plants;
    try {
        plants.push_back({"nominal", build_least_favorable(model, RobustPolicy::standard())});
    } catch (const Error& e) {
        throw with_context(e, "least-favorable, plant nominal");
    }
    for (const auto& source : config.lfm_sources) {
        try {
            plants.push_back({source.label(), build_least_favorable(model, RobustPolicy::robust(source.tau, source.c))});
        } catch (const Error& e) {
            throw with_context(e, "least-favorable, plant " + source.label());
        }
    }

    for (const auto& plant : plants) {
        for (std::size_t k = 0; k < config.policies.size(); ++k) {
            const std::string& name = config.policies[k].name;
            const PerformanceReport report = evaluate_filter(plant.lfm, gains[k], config.coupling);
            result.variances.push_back({name, plant.label, report.variance_primary});

            if (!config.monte_carlo) {
                continue;
            }
            const MonteCarloSpec& mc = *config.monte_carlo;
            const MonteCarloResult sim =
                simulate_lfm(plant.lfm, gains[k], {mc.seed, mc.num_paths, config.coupling, mc.threads});
            std::vector<std::size_t> times = mc.checkpoints;
            if (times.empty()) {
                for (std::size_t t = 0; t < report.pi.size(); ++t) {
                    times.push_back(t);
                }
            }
            for (std::size_t t : times) {
                for (Index i = 0; i < n; ++i) {
                    MonteCarloRow row;
                    row.t = t;
                    row.policy = name;
                    row.plant = plant.label;
                    row.component = static_cast<std::size_t>(i) + 1;
                    row.lyapunov = report.pi[t](i, i);
                    row.monte_carlo = sim.second_moment[t](i, i);
                    row.std_error = sim.diagonal_std_error[t](i);
                    row.z_score = row.std_error > 0.0 ? (row.monte_carlo - row.lyapunov) / row.std_error : 0.0;
                    result.monte_carlo.push_back(std::move(row));
                }
            }
        }
    }

    for (const auto& series : result.thetas) {
        result.summary.push_back({"theta", series.policy, "", 0,
                                  steady_state_mean(series.theta, config.steady_state_fraction)});
    }
    for (const auto& series : result.variances) {
        for (Index i = 0; i < n; ++i) {
            std::vector<double> component;
            component.reserve(series.variance.size());
            for (const auto& v : series.variance) {
                component.push_back(v(i));
            }
            result.summary.push_back({"variance", series.policy, series.plant, static_cast<std::size_t>(i) + 1,
                                      steady_state_mean(component, config.steady_state_fraction)});
        }
    }

    if (output_dir.empty()) {
        return result;
    }
    std::error_code ec;
    std::filesystem::create_directories(output_dir, ec);
    if (ec) {
        throw Error(ErrorCode::io, "cannot create " + output_dir.string() + ": " + ec.message());
    }

    auto header = [](std::string_view h) {
        std::vector<std::string> cols;
        std::string cell;
        std::istringstream is{std::string(h)};
        while (std::getline(is, cell, ',')) {
            cols.push_back(cell);
        }
        return cols;
    };

    {
        std::ostringstream os;
        csv::Writer w(os, header(kThetaTraceHeader));
        for (const auto& series : result.thetas) {
            for (std::size_t t = 0; t < series.theta.size(); ++t) {
                w.field(t).field(series.policy).field(series.theta[t]);
                w.end_row();
            }
        }
        result.files.push_back(output_dir / "theta_trace.csv");
        write_text(result.files.back(), os.str());
    }
    {
        std::ostringstream os;
        csv::Writer w(os, header(kVarianceTraceHeader));
        for (const auto& series : result.variances) {
            for (std::size_t t = 0; t < series.variance.size(); ++t) {
                for (Index i = 0; i < n; ++i) {
                    w.field(t).field(series.policy).field("\"" + series.plant + "\"");
                    w.field(static_cast<std::size_t>(i) + 1).field(series.variance[t](i));
                    w.end_row();
                }
            }
        }
        result.files.push_back(output_dir / "variance_trace.csv");
        write_text(result.files.back(), os.str());
    }
    {
        std::ostringstream os;
        csv::Writer w(os, header(kSummaryHeader));
        for (const auto& row : result.summary) {
            w.field(row.metric).field(row.policy).field(row.plant.empty() ? "" : "\"" + row.plant + "\"");
            if (row.component == 0) {
                w.field(std::string_view());
            } else {
                w.field(row.component);
            }
            w.field(row.value);
            w.end_row();
        }
        result.files.push_back(output_dir / "summary.csv");
        write_text(result.files.back(), os.str());
    }
    if (config.monte_carlo) {
        std::ostringstream os;
        csv::Writer w(os, header(kMonteCarloHeader));
        for (const auto& row : result.monte_carlo) {
            w.field(row.t).field(row.policy).field("\"" + row.plant + "\"").field(row.component);
            w.field(row.lyapunov).field(row.monte_carlo).field(row.std_error).field(row.z_score);
            w.end_row();
        }
        result.files.push_back(output_dir / "mc_check.csv");
        write_text(result.files.back(), os.str());
    }
    return result;
}

std::string lfm_to_json(const LeastFavorableModel& lfm, const LfmSource& source)
{
    nlohmann::ordered_json root;
    root["tau"] = source.tau.value();
    root["c"] = source.c;
    root["horizon"] = lfm.horizon();
    root["state_dim"] = lfm.nominal.state_dim();
    root["obs_dim"] = lfm.nominal.obs_dim();
    root["noise_dim"] = lfm.nominal.noise_dim();
    nlohmann::ordered_json steps = nlohmann::ordered_json::array();
    for (std::size_t t = 0; t <= lfm.horizon(); ++t) {
        nlohmann::ordered_json s;
        s["t"] = t;
        s["theta"] = lfm.schedule[t].theta;
        s["gain"] = matrix_json(lfm.schedule[t].gain);
        s["A_tilde"] = matrix_json(lfm.A_tilde[t]);
        s["B_tilde"] = matrix_json(lfm.B_tilde[t]);
        s["C_tilde"] = matrix_json(lfm.C_tilde[t]);
        s["D_tilde"] = matrix_json(lfm.D_tilde[t]);
        s["H"] = matrix_json(lfm.H[t]);
        s["Kv_tilde"] = matrix_json(lfm.Kv_tilde[t].matrix());
        s["L"] = matrix_json(lfm.noise_factor[t]);
        s["omega_inv"] = matrix_json(lfm.omega_inv[t].matrix());
        steps.push_back(std::move(s));
    }
    root["steps"] = std::move(steps);
    root["omega_inv_terminal"] = matrix_json(lfm.omega_inv.back().matrix());
    return root.dump(1) + "\n";
}

} // namespace rkf
