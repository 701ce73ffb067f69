#include "rkf/static_estimator.hpp"

#include "rkf/error.hpp"

#include <sstream>

namespace rkf {
namespace {

struct Posterior {
    Eigen::MatrixXd gain;
    Eigen::MatrixXd explained; // K_xy K_y^{-1} K_yx
    SymMatrix p;
};

Posterior posterior(const JointGaussian& model)
{
    const SpdFactor ky = cholesky(SymMatrix(model.cov_y()));
    const Eigen::MatrixXd kxy = model.cov_xy();
    Eigen::MatrixXd gain = ky.solve(kxy.transpose()).transpose();
    Eigen::MatrixXd explained = gain * kxy.transpose();
    SymMatrix p(Eigen::MatrixXd(model.cov_x() - explained));
    try {
        cholesky(p);
    } catch (const Error&) {
        throw Error(ErrorCode::not_positive_definite, "posterior covariance P is not positive definite");
    }
    return {std::move(gain), std::move(explained), std::move(p)};
}

StaticSolution assemble(const JointGaussian& model, Posterior post, SymMatrix v, double theta)
{
    const Index n = model.state_dim();
    Eigen::MatrixXd cov = model.cov().matrix();
    cov.topLeftCorner(n, n) = SymMatrix(Eigen::MatrixXd(v.matrix() + post.explained)).matrix();
    JointGaussian lf(model.mean(), SymMatrix(cov), n);
    Eigen::VectorXd intercept = model.mean_x() - post.gain * model.mean_y();
    return StaticSolution{std::move(post.gain), std::move(intercept), std::move(post.p),
                          std::move(v), std::move(lf), theta};
}

} // namespace

JointGaussian::JointGaussian(Eigen::VectorXd mean, SymMatrix cov, Index n)
    : mean_(std::move(mean)), cov_(std::move(cov)), n_(n)
{
    if (n_ <= 0 || mean_.size() <= n_ || cov_.dim() != mean_.size()) {
        std::ostringstream os;
        os << "joint Gaussian needs n >= 1, p >= 1 and matching sizes (mean " << mean_.size()
           << ", cov " << cov_.dim() << ", n " << n_ << ")";
        throw Error(ErrorCode::dimension_mismatch, os.str());
    }
    cholesky(cov_);
    cholesky(SymMatrix(cov_y()));
}

StaticSolution solve_static(const JointGaussian& model, double c, Tau tau)
{
    Posterior post = posterior(model);
    const double theta = solve_theta(post.p, c, tau);
    SymMatrix v = least_favorable_cov(post.p, theta, tau);
    return assemble(model, std::move(post), std::move(v), theta);
}

StaticSolution solve_static_fixed_theta(const JointGaussian& model, double theta, Tau tau)
{
    if (!(theta > 0.0)) {
        std::ostringstream os;
        os << "fixed theta must be positive, got " << theta;
        throw Error(ErrorCode::theta_out_of_range, os.str());
    }
    Posterior post = posterior(model);
    SymMatrix v = least_favorable_cov(post.p, theta, tau);
    return assemble(model, std::move(post), std::move(v), theta);
}

} // namespace rkf
