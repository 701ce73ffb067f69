#pragma once

// Kalman-like robust filter driven by a time-varying (robust mode) or fixed
// (risk-sensitive mode) multiplier theta_t. Each step computes
//   G_t     = (A V C^T + B D^T)(C V C^T + D D^T)^{-1}
//   x_{t+1} = A x_t + G_t (y_t - C x_t)
//   P_{t+1} = A V A^T - G_t (C V C^T + D D^T) G_t^T + B B^T
//   V_{t+1} = least_favorable_cov(P_{t+1}, theta_t, tau)
// where V is the distorted covariance carried from the previous step.

#include "rkf/spd.hpp"
#include "rkf/state_space.hpp"

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace rkf {

/// Observation-independent part of one step.
struct CovarianceStep {
    Eigen::MatrixXd gain;     // G_t
    SymMatrix nominal_cov;    // P_{t+1}
    SymMatrix distorted_cov;  // V_{t+1}
    double theta = 0.0;       // theta_t
    SymMatrix phi;            // P_{t+1}^{-1} - V_{t+1}^{-1}
};

struct FilterStep : CovarianceStep {
    Eigen::VectorXd state_pred; // x_{t+1}
};

struct FilterTrace {
    std::vector<FilterStep> steps; // t = 0..T
    std::string model_id;
    RobustPolicy policy = RobustPolicy::standard();
};

CovarianceStep covariance_step(const StateSpaceModel& model, std::size_t t, const SymMatrix& v,
                               const RobustPolicy& policy);

FilterStep filter_step(const StateSpaceModel& model, std::size_t t, const Eigen::VectorXd& x_hat,
                       const SymMatrix& v, const Eigen::VectorXd& y, const RobustPolicy& policy);

/// Folds filter_step over t = 0..T from (x0_mean, x0_cov). Needs T + 1
/// observations. Errors carry the failing t.
FilterTrace run_filter(const StateSpaceModel& model, const RobustPolicy& policy,
                       std::span<const Eigen::VectorXd> observations, std::string model_id = {});

/// Covariance/gain recursion only; identical arithmetic to run_filter.
std::vector<CovarianceStep> run_gain_schedule(const StateSpaceModel& model, const RobustPolicy& policy);

std::vector<Eigen::MatrixXd> gains_of(std::span<const CovarianceStep> schedule);

} // namespace rkf
