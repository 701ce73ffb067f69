#pragma once

// The tau-divergence family between Gaussian densities, the budget function
// gamma_tau(P, theta), the least-favorable covariance map V(P, theta, tau),
// and the multiplier solver for c = gamma_tau(P, theta).

#include "rkf/spd.hpp"

#include <Eigen/Dense>

namespace rkf {

/// Divergence family parameter, 0 <= tau <= 1. The endpoints select their
/// own branches; there is no blending between them.
class Tau {
public:
    explicit Tau(double value);

    double value() const noexcept { return value_; }
    bool is_zero() const noexcept { return value_ == 0.0; }
    bool is_one() const noexcept { return value_ == 1.0; }

    friend bool operator==(const Tau&, const Tau&) = default;

private:
    double value_;
};

struct GaussianPair {
    Eigen::VectorXd nominal_mean;
    SymMatrix nominal_cov;
    Eigen::VectorXd actual_mean;
    SymMatrix actual_cov;
};

/// D_tau(actual || nominal). Returns +infinity for tau = 1 with a mean shift.
double tau_divergence(const GaussianPair& pair, Tau tau);

/// Supremum of the admissible multipliers: 1 / ((1 - tau) ||p||), or
/// +infinity when tau = 1.
double theta_upper_bound(const SymMatrix& p, Tau tau);

/// gamma_tau(p, theta). Exactly 0 at theta = 0. Throws
/// Error{theta_out_of_range} unless I - theta (1 - tau) L^T L is positive
/// definite.
double gamma_tau(const SymMatrix& p, double theta, Tau tau);

/// V(p, theta, tau) computed from the Cholesky factor of p. Returns p itself
/// at theta = 0. Same theta range as gamma_tau; additionally
/// Error{theta_out_of_range} if the spectral scaling overflows a double.
SymMatrix least_favorable_cov(const SymMatrix& p, double theta, Tau tau);

struct ThetaSolverOptions {
    int max_iterations = 200;
    /// Relative back-off from the singular boundary for tau < 1.
    double boundary_margin = 1e-9;
};

/// theta >= 0 with |gamma_tau(p, theta) - c| <= max(1e-12, 1e-9 c), found by
/// bisection. Returns exactly 0 for c = 0.
double solve_theta(const SymMatrix& p, double c, Tau tau, const ThetaSolverOptions& options = {});

/// Acceptance tolerance used by solve_theta.
inline double budget_tolerance(double c)
{
    return c * 1e-9 > 1e-12 ? c * 1e-9 : 1e-12;
}

} // namespace rkf
