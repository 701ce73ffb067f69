#pragma once

// Nominal Gauss-Markov model
//   x_{t+1} = A_t x_t + B_t v_t,   y_t = C_t x_t + D_t v_t,   v_t ~ WGN(0, I_m)
// and the policy that selects how the filter distorts its covariance.

#include "rkf/spd.hpp"
#include "rkf/tau_divergence.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <vector>

namespace rkf {

/// Raw model description. Each matrix sequence holds either one matrix
/// (time invariant) or horizon + 1 matrices indexed by t = 0..horizon.
struct ModelData {
    std::vector<Eigen::MatrixXd> A;
    std::vector<Eigen::MatrixXd> B;
    std::vector<Eigen::MatrixXd> C;
    std::vector<Eigen::MatrixXd> D;
    Eigen::VectorXd x0_mean;
    Eigen::MatrixXd x0_cov;
    std::size_t horizon = 0;
};

/// Every violation found in `data`; empty means the model is usable.
std::vector<std::string> diagnose(const ModelData& data);

/// Largest admissible condition number of Gamma_t = [B_t; D_t].
inline constexpr double kMaxGammaCondition = 1e12;

class StateSpaceModel {
public:
    /// Throws Error{invalid_model} listing every diagnostic.
    explicit StateSpaceModel(ModelData data);

    static StateSpaceModel time_invariant(Eigen::MatrixXd A, Eigen::MatrixXd B, Eigen::MatrixXd C,
                                          Eigen::MatrixXd D, Eigen::VectorXd x0_mean,
                                          Eigen::MatrixXd x0_cov, std::size_t horizon);

    Index state_dim() const noexcept { return n_; }
    Index obs_dim() const noexcept { return p_; }
    Index noise_dim() const noexcept { return n_ + p_; }
    std::size_t horizon() const noexcept { return data_.horizon; }
    bool is_time_invariant() const noexcept;

    const Eigen::MatrixXd& A(std::size_t t) const { return at(data_.A, t); }
    const Eigen::MatrixXd& B(std::size_t t) const { return at(data_.B, t); }
    const Eigen::MatrixXd& C(std::size_t t) const { return at(data_.C, t); }
    const Eigen::MatrixXd& D(std::size_t t) const { return at(data_.D, t); }

    const Eigen::VectorXd& x0_mean() const noexcept { return data_.x0_mean; }
    const SymMatrix& x0_cov() const noexcept { return x0_cov_; }
    const ModelData& data() const noexcept { return data_; }

    /// Same model with a different horizon (time-varying sequences must
    /// still cover it).
    StateSpaceModel with_horizon(std::size_t horizon) const;

private:
    const Eigen::MatrixXd& at(const std::vector<Eigen::MatrixXd>& seq, std::size_t t) const;

    ModelData data_;
    SymMatrix x0_cov_;
    Index n_ = 0;
    Index p_ = 0;
};

/// tau plus the rule that fixes theta_t at each step.
class RobustPolicy {
public:
    enum class Mode { standard, robust, risk_sensitive };

    /// Plain Kalman filter (theta_t = 0).
    static RobustPolicy standard();
    /// Tolerance schedule c_t >= 0; a single value applies at every t.
    static RobustPolicy robust(Tau tau, std::vector<double> tolerances);
    static RobustPolicy robust(Tau tau, double tolerance);
    /// Fixed theta > 0.
    static RobustPolicy risk_sensitive(Tau tau, double theta);

    Mode mode() const noexcept { return mode_; }
    Tau tau() const noexcept { return tau_; }
    double tolerance(std::size_t t) const;
    const std::vector<double>& tolerances() const noexcept { return values_; }
    double theta() const;

    std::string describe() const;

private:
    RobustPolicy(Mode mode, Tau tau, std::vector<double> values);

    Mode mode_;
    Tau tau_;
    std::vector<double> values_;
};

std::string_view to_string(RobustPolicy::Mode mode);

} // namespace rkf
