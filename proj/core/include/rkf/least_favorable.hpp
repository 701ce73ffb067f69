#pragma once

// Least-favorable state-space model for a robust policy, and exact
// (Lyapunov) and Monte Carlo evaluation of Kalman-like filters against it.
//
// The augmented state is [x_t; e_t] with e_t the error of the policy's own
// filter. The adversarial noise is v_t = H_t e_t + L_t w_t, w_t ~ WGN(0, I),
// with L_t L_t^T = Kv_t.

#include "rkf/robust_filter.hpp"
#include "rkf/spd.hpp"
#include "rkf/state_space.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace rkf {

struct LeastFavorableModel {
    StateSpaceModel nominal;
    RobustPolicy policy;
    std::vector<CovarianceStep> schedule; // forward sweep, t = 0..T

    std::vector<Eigen::MatrixXd> A_tilde; // 2n x 2n
    std::vector<Eigen::MatrixXd> B_tilde; // 2n x m
    std::vector<Eigen::MatrixXd> C_tilde; // p x 2n
    std::vector<Eigen::MatrixXd> D_tilde; // p x m
    std::vector<Eigen::MatrixXd> H;       // m x n
    std::vector<SymMatrix> Kv_tilde;      // m x m
    std::vector<Eigen::MatrixXd> noise_factor; // L_t, Cholesky factor of Kv_tilde
    std::vector<SymMatrix> omega_inv;     // t = 0..T+1, omega_inv[T+1] = 0

    std::size_t horizon() const noexcept { return nominal.horizon(); }
    std::vector<Eigen::MatrixXd> gains() const { return gains_of(schedule); }
};

/// Forward gain sweep followed by the backward Omega sweep anchored at
/// Omega_{T+1}^{-1} = 0. Throws Error{not_positive_definite} (with t) when
/// I - (B - G D)^T (Omega_{t+1}^{-1} + Phi_t)(B - G D) is not positive definite.
LeastFavorableModel build_least_favorable(const StateSpaceModel& model, const RobustPolicy& policy);

/// Coupling of the two filters' initial errors.
enum class InitialCoupling {
    /// Pi_0 = I_2 (x) V_0: independent initial errors.
    independent,
    /// Both filters start from the same estimate: Pi_0 = [[V_0, V_0], [V_0, V_0]].
    shared,
};

SymMatrix initial_joint_cov(const SymMatrix& v0, InitialCoupling coupling);

struct PerformanceReport {
    std::vector<SymMatrix> pi;                      // Pi_t, t = 0..T+1
    std::vector<Eigen::VectorXd> variance_primary;   // diag of the e' block
    std::vector<Eigen::VectorXd> variance_reference; // diag of the e block
};

/// Propagates the joint second moment of [e'; e] where e' is the error of
/// the filter with gains `gain_schedule` (T + 1 gains) run on the
/// least-favorable model.
PerformanceReport evaluate_filter(const LeastFavorableModel& lfm, std::span<const Eigen::MatrixXd> gain_schedule,
                                  InitialCoupling coupling = InitialCoupling::independent);

struct MonteCarloOptions {
    std::uint64_t seed = 0;
    std::size_t num_paths = 1000;
    InitialCoupling coupling = InitialCoupling::independent;
    /// 0 selects std::thread::hardware_concurrency().
    unsigned threads = 0;
};

struct MonteCarloResult {
    std::size_t num_paths = 0;
    std::vector<SymMatrix> second_moment;          // empirical E[[e';e][e';e]^T], t = 0..T+1
    std::vector<Eigen::VectorXd> diagonal_std_error; // standard error of each diagonal entry
};

/// Draws paths of the adversarial noise v_t = H_t e_t + L_t w_t, propagates
/// the errors of the policy's filter and of the evaluated filter through the
/// nominal dynamics, and accumulates the empirical second moments of
/// [e'; e]. Deterministic for a fixed seed regardless of the thread count.
MonteCarloResult simulate_lfm(const LeastFavorableModel& lfm, std::span<const Eigen::MatrixXd> gain_schedule,
                              const MonteCarloOptions& options);

/// Seeded normal variates: mt19937_64 seeded with splitmix64(seed, stream),
/// uniforms from the top 53 bits, Box-Muller pairs.
class NormalStream {
public:
    NormalStream(std::uint64_t seed, std::uint64_t stream);
    double next();

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace rkf
