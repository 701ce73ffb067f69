#include "rkf/robust_filter.hpp"

#include "rkf/error.hpp"
#include "rkf/tau_divergence.hpp"

#include <sstream>

namespace rkf {
namespace {

void check_policy(const StateSpaceModel& model, const RobustPolicy& policy)
{
    if (policy.mode() == RobustPolicy::Mode::robust) {
        const auto& c = policy.tolerances();
        if (c.size() != 1 && c.size() < model.horizon() + 1) {
            std::ostringstream os;
            os << "tolerance schedule has " << c.size() << " entries, horizon needs " << model.horizon() + 1;
            throw Error(ErrorCode::dimension_mismatch, os.str());
        }
    }
}

double select_theta(const SymMatrix& p, const RobustPolicy& policy, std::size_t t)
{
    switch (policy.mode()) {
    case RobustPolicy::Mode::standard:
        return 0.0;
    case RobustPolicy::Mode::robust:
        return solve_theta(p, policy.tolerance(t), policy.tau());
    case RobustPolicy::Mode::risk_sensitive: {
        const double theta = policy.theta();
        const double tau = policy.tau().value();
        if (tau < 1.0) {
            const double limit = 1.0 / (theta * (1.0 - tau));
            const double top = operator_norm(p);
            if (!(top < limit)) {
                std::ostringstream os;
                os << "risk-sensitive update needs 0 < P_{t+1} < (theta(1-tau))^{-1} I, but ||P_{t+1}||="
                   << top << " >= " << limit;
                throw Error(ErrorCode::theta_out_of_range, os.str());
            }
        }
        return theta;
    }
    }
    return 0.0;
}

} // namespace

CovarianceStep covariance_step(const StateSpaceModel& model, std::size_t t, const SymMatrix& v,
                               const RobustPolicy& policy)
{
    try {
        const Eigen::MatrixXd& a = model.A(t);
        const Eigen::MatrixXd& b = model.B(t);
        const Eigen::MatrixXd& c = model.C(t);
        const Eigen::MatrixXd& d = model.D(t);
        if (v.dim() != model.state_dim()) {
            throw Error(ErrorCode::dimension_mismatch, "covariance V does not match the state dimension");
        }

        const Eigen::MatrixXd vc = v.matrix() * c.transpose();
        const SymMatrix innovation(Eigen::MatrixXd(c * vc + d * d.transpose()));
        SpdFactor innovation_factor = [&] {
            try {
                return cholesky(innovation);
            } catch (const Error& e) {
                throw Error(ErrorCode::not_positive_definite,
                            "innovation covariance C V C^T + D D^T: " + e.message());
            }
        }();
        const Eigen::MatrixXd cross = a * vc + b * d.transpose();
        Eigen::MatrixXd gain = innovation_factor.solve(cross.transpose()).transpose();

        SymMatrix p(Eigen::MatrixXd(a * v.matrix() * a.transpose() - gain * innovation.matrix() * gain.transpose() +
                                    b * b.transpose()));
        SpdFactor p_factor = [&] {
            try {
                return cholesky(p);
            } catch (const Error& e) {
                throw Error(ErrorCode::not_positive_definite, "predicted covariance P_{t+1}: " + e.message());
            }
        }();

        const double theta = select_theta(p, policy, t);
        if (theta == 0.0) {
            SymMatrix zero = SymMatrix::zero(p.dim());
            return CovarianceStep{std::move(gain), p, p, 0.0, std::move(zero)};
        }
        SymMatrix distorted = least_favorable_cov(p, theta, policy.tau());
        SymMatrix phi = p_factor.inverse() - cholesky(distorted).inverse();
        return CovarianceStep{std::move(gain), std::move(p), std::move(distorted), theta, std::move(phi)};
    } catch (const Error& e) {
        throw e.at_step(t);
    }
}

FilterStep filter_step(const StateSpaceModel& model, std::size_t t, const Eigen::VectorXd& x_hat,
                       const SymMatrix& v, const Eigen::VectorXd& y, const RobustPolicy& policy)
{
    if (x_hat.size() != model.state_dim() || y.size() != model.obs_dim()) {
        throw Error(ErrorCode::dimension_mismatch, "state or observation has the wrong length", t);
    }
    FilterStep step;
    static_cast<CovarianceStep&>(step) = covariance_step(model, t, v, policy);
    step.state_pred = model.A(t) * x_hat + step.gain * (y - model.C(t) * x_hat);
    return step;
}

FilterTrace run_filter(const StateSpaceModel& model, const RobustPolicy& policy,
                       std::span<const Eigen::VectorXd> observations, std::string model_id)
{
    check_policy(model, policy);
    const std::size_t steps = model.horizon() + 1;
    if (observations.size() != steps) {
        std::ostringstream os;
        os << "expected " << steps << " observations (horizon + 1), got " << observations.size();
        throw Error(ErrorCode::dimension_mismatch, os.str());
    }
    FilterTrace trace;
    trace.model_id = std::move(model_id);
    trace.policy = policy;
    trace.steps.reserve(steps);

    Eigen::VectorXd x_hat = model.x0_mean();
    SymMatrix v = model.x0_cov();
    for (std::size_t t = 0; t < steps; ++t) {
        FilterStep step = filter_step(model, t, x_hat, v, observations[t], policy);
        x_hat = step.state_pred;
        v = step.distorted_cov;
        trace.steps.push_back(std::move(step));
    }
    return trace;
}

std::vector<CovarianceStep> run_gain_schedule(const StateSpaceModel& model, const RobustPolicy& policy)
{
    check_policy(model, policy);
    const std::size_t steps = model.horizon() + 1;
    std::vector<CovarianceStep> out;
    out.reserve(steps);
    SymMatrix v = model.x0_cov();
    for (std::size_t t = 0; t < steps; ++t) {
        out.push_back(covariance_step(model, t, v, policy));
        v = out.back().distorted_cov;
    }
    return out;
}

std::vector<Eigen::MatrixXd> gains_of(std::span<const CovarianceStep> schedule)
{
    std::vector<Eigen::MatrixXd> out;
    out.reserve(schedule.size());
    for (const auto& s : schedule) {
        out.push_back(s.gain);
    }
    return out;
}

} // namespace rkf
