#pragma once

// Robust static minimax estimation of x from y for a jointly Gaussian
// z = [x; y] under a tau-divergence ball (or a fixed multiplier).

#include "rkf/spd.hpp"
#include "rkf/tau_divergence.hpp"

#include <Eigen/Dense>

namespace rkf {

/// Mean and covariance of z = [x; y] with x of size n and y of size p.
class JointGaussian {
public:
    /// Throws Error{dimension_mismatch} on inconsistent sizes and
    /// Error{not_positive_definite} if cov or K_y is not SPD.
    JointGaussian(Eigen::VectorXd mean, SymMatrix cov, Index n);

    Index state_dim() const noexcept { return n_; }
    Index obs_dim() const noexcept { return mean_.size() - n_; }

    const Eigen::VectorXd& mean() const noexcept { return mean_; }
    const SymMatrix& cov() const noexcept { return cov_; }

    Eigen::VectorXd mean_x() const { return mean_.head(n_); }
    Eigen::VectorXd mean_y() const { return mean_.tail(obs_dim()); }
    Eigen::MatrixXd cov_x() const { return cov_.matrix().topLeftCorner(n_, n_); }
    Eigen::MatrixXd cov_xy() const { return cov_.matrix().topRightCorner(n_, obs_dim()); }
    Eigen::MatrixXd cov_y() const { return cov_.matrix().bottomRightCorner(obs_dim(), obs_dim()); }

private:
    Eigen::VectorXd mean_;
    SymMatrix cov_;
    Index n_;
};

struct StaticSolution {
    Eigen::MatrixXd gain;                  // K_xy K_y^{-1}
    Eigen::VectorXd intercept;             // m_x - gain m_y
    SymMatrix nominal_posterior_cov;       // P
    SymMatrix least_favorable_posterior_cov; // V
    JointGaussian least_favorable_joint;   // only the K_x block differs from nominal
    double theta = 0.0;

    /// g(y) = gain y + intercept.
    Eigen::VectorXd estimate(const Eigen::VectorXd& y) const { return gain * y + intercept; }
};

StaticSolution solve_static(const JointGaussian& model, double c, Tau tau);

/// Same solution for an a priori chosen multiplier theta > 0.
StaticSolution solve_static_fixed_theta(const JointGaussian& model, double theta, Tau tau);

} // namespace rkf
