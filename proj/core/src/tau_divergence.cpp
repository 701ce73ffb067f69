#include "rkf/tau_divergence.hpp"

#include "rkf/error.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace rkf {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Per-eigenvalue contribution of the divergence for a whitened covariance
// eigenvalue lambda (lambda = 1 contributes zero in every branch).
double divergence_term(double lambda, double tau)
{
    if (tau == 0.0) {
        return -std::log(lambda) + lambda - 1.0;
    }
    if (tau == 1.0) {
        return lambda * std::log(lambda) - lambda + 1.0;
    }
    return -std::pow(lambda, tau) / (tau * (1.0 - tau)) + lambda / (1.0 - tau) + 1.0 / tau;
}

// Per-eigenvalue contribution of gamma_tau for an eigenvalue mu of L^T L.
// Written with log1p/expm1 so small theta does not cancel catastrophically.
double gamma_term(double mu, double theta, double tau)
{
    if (tau == 1.0) {
        const double x = theta * mu;
        return std::expm1(x) * (x - 1.0) + x;
    }
    const double w = theta * (1.0 - tau) * mu;
    if (tau == 0.0) {
        return std::log1p(-w) + w / (1.0 - w);
    }
    // u = (1 - w)^{1/(tau-1)} - 1. Grouped so that an overflowing u near the
    // boundary gives +inf rather than inf - inf.
    const double u = std::expm1(std::log1p(-w) / (tau - 1.0));
    return (w + u * (w - (1.0 - tau))) / (tau * (1.0 - tau));
}

void check_square(const SymMatrix& p, const char* what)
{
    if (p.dim() == 0) {
        throw Error(ErrorCode::dimension_mismatch, std::string(what) + " must be non-empty");
    }
}

// Whitened Gram matrix L^T L of the Cholesky factor of p, and its spectrum.
struct GramSpectrum {
    SpdFactor factor;
    Eigen::MatrixXd eigenvectors;
    Eigen::VectorXd mu;
};

GramSpectrum gram_spectrum(const SymMatrix& p)
{
    SpdFactor factor = cholesky(p);
    const SymMatrix gram(Eigen::MatrixXd(factor.lower().transpose() * factor.lower()));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram.matrix());
    if (eig.info() != Eigen::Success) {
        throw Error(ErrorCode::no_convergence, "symmetric eigensolver failed");
    }
    return {std::move(factor), eig.eigenvectors(), eig.eigenvalues()};
}

void check_theta(const Eigen::VectorXd& mu, double theta, double tau)
{
    if (!(theta >= 0.0) || !std::isfinite(theta)) {
        std::ostringstream os;
        os << "theta must be finite and non-negative, got " << theta;
        throw Error(ErrorCode::theta_out_of_range, os.str());
    }
    if (tau == 1.0) {
        return;
    }
    const double top = mu.maxCoeff();
    if (!(1.0 - theta * (1.0 - tau) * top > 0.0)) {
        std::ostringstream os;
        os << "theta=" << theta << " violates theta^-1 > (1-tau)||P|| (||P||=" << top
           << ", tau=" << tau << ")";
        throw Error(ErrorCode::theta_out_of_range, os.str());
    }
}

double gamma_from_spectrum(const Eigen::VectorXd& mu, double theta, double tau)
{
    double sum = 0.0;
    for (Index i = 0; i < mu.size(); ++i) {
        sum += gamma_term(mu(i), theta, tau);
    }
    return sum;
}

} // namespace

Tau::Tau(double value) : value_(value)
{
    if (!(value >= 0.0 && value <= 1.0)) {
        std::ostringstream os;
        os << "tau out of [0,1]: " << value;
        throw Error(ErrorCode::invalid_argument, os.str());
    }
}

double tau_divergence(const GaussianPair& pair, Tau tau)
{
    const Index d = pair.nominal_cov.dim();
    if (pair.actual_cov.dim() != d || pair.nominal_mean.size() != d || pair.actual_mean.size() != d) {
        throw Error(ErrorCode::dimension_mismatch, "Gaussian pair components differ in dimension");
    }
    const SpdFactor lz = cholesky(pair.nominal_cov);
    // Whitened actual covariance L^{-1} K~ L^{-T}; its spectrum equals that of K~ K^{-1}.
    const Eigen::MatrixXd half = lz.solve_lower(pair.actual_cov.matrix());
    const SymMatrix whitened(Eigen::MatrixXd(lz.solve_lower(half.transpose())));
    const Eigen::VectorXd lambda = eigenvalues(whitened);
    if (!(lambda.minCoeff() > 0.0)) {
        throw Error(ErrorCode::not_positive_definite, "actual covariance is not positive definite");
    }

    const Eigen::VectorXd delta = pair.actual_mean - pair.nominal_mean;
    const double t = tau.value();

    double mean_term = 0.0;
    if (tau.is_one()) {
        if (!delta.isZero(0.0)) {
            return kInf;
        }
    } else {
        const Eigen::VectorXd white = lz.solve_lower(delta);
        mean_term = white.squaredNorm() / (1.0 - t);
    }

    double trace_term = 0.0;
    for (Index i = 0; i < lambda.size(); ++i) {
        trace_term += divergence_term(lambda(i), t);
    }
    // Round-off can leave a tiny negative sum for (near) identical pairs.
    return std::max(0.0, mean_term + trace_term);
}

double theta_upper_bound(const SymMatrix& p, Tau tau)
{
    if (tau.is_one()) {
        return kInf;
    }
    return 1.0 / ((1.0 - tau.value()) * operator_norm(p));
}

double gamma_tau(const SymMatrix& p, double theta, Tau tau)
{
    check_square(p, "P");
    if (theta == 0.0) {
        cholesky(p);
        return 0.0;
    }
    const GramSpectrum g = gram_spectrum(p);
    check_theta(g.mu, theta, tau.value());
    return gamma_from_spectrum(g.mu, theta, tau.value());
}

SymMatrix least_favorable_cov(const SymMatrix& p, double theta, Tau tau)
{
    check_square(p, "P");
    if (theta == 0.0) {
        cholesky(p);
        return p;
    }
    const GramSpectrum g = gram_spectrum(p);
    const double t = tau.value();
    check_theta(g.mu, theta, t);

    Eigen::VectorXd scale(g.mu.size());
    for (Index i = 0; i < g.mu.size(); ++i) {
        if (tau.is_one()) {
            scale(i) = std::exp(theta * g.mu(i));
        } else {
            scale(i) = std::pow(1.0 - theta * (1.0 - t) * g.mu(i), 1.0 / (t - 1.0));
        }
        if (!std::isfinite(scale(i))) {
            std::ostringstream os;
            os << "least-favorable covariance overflows at theta=" << theta << " (tau=" << t << ")";
            throw Error(ErrorCode::theta_out_of_range, os.str());
        }
    }
    // L Q f(Lambda) Q^T L^T
    const Eigen::MatrixXd lq = g.factor.lower() * g.eigenvectors;
    return SymMatrix(Eigen::MatrixXd(lq * scale.asDiagonal() * lq.transpose()));
}

double solve_theta(const SymMatrix& p, double c, Tau tau, const ThetaSolverOptions& options)
{
    check_square(p, "P");
    if (!(c >= 0.0) || !std::isfinite(c)) {
        std::ostringstream os;
        os << "tolerance c must be finite and non-negative, got " << c;
        throw Error(ErrorCode::invalid_argument, os.str());
    }
    const GramSpectrum g = gram_spectrum(p);
    if (c == 0.0) {
        return 0.0;
    }
    const double t = tau.value();
    const double tol = budget_tolerance(c);
    const double top = g.mu.maxCoeff();
    auto gamma = [&](double theta) { return gamma_from_spectrum(g.mu, theta, t); };

    double lo = 0.0;
    double hi = 0.0;
    if (tau.is_one()) {
        hi = 1.0 / top;
        int doublings = 0;
        while (!(gamma(hi) >= c)) {
            if (++doublings > options.max_iterations || !std::isfinite(hi)) {
                throw Error(ErrorCode::budget_unreachable, "could not bracket the tolerance");
            }
            lo = hi;
            hi *= 2.0;
        }
    } else {
        hi = (1.0 - options.boundary_margin) / ((1.0 - t) * top);
        const double g_hi = gamma(hi);
        if (!(g_hi >= c)) {
            std::ostringstream os;
            os << "tolerance c=" << c << " exceeds gamma at the admissible boundary (" << g_hi << ")";
            throw Error(ErrorCode::budget_unreachable, os.str());
        }
        if (std::abs(g_hi - c) <= tol) {
            return hi;
        }
    }

    for (int it = 0; it < options.max_iterations; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double value = gamma(mid);
        if (std::isnan(value)) {
            break;
        }
        if (std::abs(value - c) <= tol) {
            return mid;
        }
        if (mid <= lo || mid >= hi) {
            break;
        }
        if (value < c) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    std::ostringstream os;
    os << "bisection for c=" << c << " stalled in [" << lo << ", " << hi << "]";
    throw Error(ErrorCode::no_convergence, os.str());
}

} // namespace rkf
