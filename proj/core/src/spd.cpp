#include "rkf/spd.hpp"

#include "rkf/error.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace rkf {
namespace {

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m)
{
    Eigen::MatrixXd out = 0.5 * (m + m.transpose());
    return out;
}

bool needs_positive_spectrum(const MatrixFunction& f)
{
    switch (f.kind) {
    case MatrixFunction::Kind::exp:
        return false;
    case MatrixFunction::Kind::log:
    case MatrixFunction::Kind::inverse:
        return true;
    case MatrixFunction::Kind::power:
        return f.exponent < 0.0 || f.exponent != std::floor(f.exponent);
    }
    return true;
}

double apply(const MatrixFunction& f, double lambda)
{
    switch (f.kind) {
    case MatrixFunction::Kind::exp: return std::exp(lambda);
    case MatrixFunction::Kind::log: return std::log(lambda);
    case MatrixFunction::Kind::inverse: return 1.0 / lambda;
    case MatrixFunction::Kind::power: return std::pow(lambda, f.exponent);
    }
    return std::numeric_limits<double>::quiet_NaN();
}

} // namespace

SymMatrix::SymMatrix(const Eigen::MatrixXd& m)
{
    if (m.rows() != m.cols()) {
        std::ostringstream os;
        os << "symmetric matrix must be square, got " << m.rows() << "x" << m.cols();
        throw Error(ErrorCode::dimension_mismatch, os.str());
    }
    m_ = symmetrize(m);
}

SymMatrix SymMatrix::identity(Index n)
{
    return SymMatrix(Eigen::MatrixXd::Identity(n, n));
}

SymMatrix SymMatrix::zero(Index n)
{
    return SymMatrix(Eigen::MatrixXd::Zero(n, n));
}

SymMatrix SymMatrix::diagonal(const Eigen::VectorXd& d)
{
    return SymMatrix(Eigen::MatrixXd(d.asDiagonal()));
}

SymMatrix SymMatrix::operator+(const SymMatrix& other) const
{
    return SymMatrix(Eigen::MatrixXd(m_ + other.m_));
}

SymMatrix SymMatrix::operator-(const SymMatrix& other) const
{
    return SymMatrix(Eigen::MatrixXd(m_ - other.m_));
}

SymMatrix SymMatrix::operator*(double s) const
{
    return SymMatrix(Eigen::MatrixXd(s * m_));
}

Eigen::MatrixXd SpdFactor::solve(const Eigen::MatrixXd& rhs) const
{
    Eigen::MatrixXd y = lower_.triangularView<Eigen::Lower>().solve(rhs);
    return lower_.transpose().triangularView<Eigen::Upper>().solve(y);
}

Eigen::MatrixXd SpdFactor::solve_lower(const Eigen::MatrixXd& rhs) const
{
    return lower_.triangularView<Eigen::Lower>().solve(rhs);
}

SymMatrix SpdFactor::inverse() const
{
    return SymMatrix(solve(Eigen::MatrixXd::Identity(dim(), dim())));
}

SymMatrix SpdFactor::reconstruct() const
{
    return SymMatrix(Eigen::MatrixXd(lower_ * lower_.transpose()));
}

double SpdFactor::log_determinant() const
{
    return 2.0 * lower_.diagonal().array().log().sum();
}

SpdFactor cholesky(const SymMatrix& m)
{
    Eigen::LLT<Eigen::MatrixXd> llt(m.matrix());
    if (llt.info() != Eigen::Success) {
        throw Error(ErrorCode::not_positive_definite, "Cholesky pivot is not positive");
    }
    Eigen::MatrixXd lower = llt.matrixL();
    for (Index i = 0; i < lower.rows(); ++i) {
        if (!(lower(i, i) > 0.0) || !std::isfinite(lower(i, i))) {
            std::ostringstream os;
            os << "Cholesky pivot " << i << " is " << lower(i, i);
            throw Error(ErrorCode::not_positive_definite, os.str());
        }
    }
    return SpdFactor(std::move(lower));
}

SymMatrix sym_matrix_function(const SymMatrix& m, MatrixFunction f)
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m.matrix());
    if (eig.info() != Eigen::Success) {
        throw Error(ErrorCode::no_convergence, "symmetric eigensolver failed");
    }
    const Eigen::VectorXd& lambda = eig.eigenvalues();
    if (needs_positive_spectrum(f) && lambda.size() > 0) {
        const double tol = 1e-13 * lambda.cwiseAbs().maxCoeff();
        for (Index i = 0; i < lambda.size(); ++i) {
            if (!(lambda(i) > tol)) {
                std::ostringstream os;
                os << "eigenvalue " << lambda(i) << " outside the domain of the matrix function";
                throw Error(ErrorCode::spectrum_out_of_domain, os.str());
            }
        }
    }
    Eigen::VectorXd mapped(lambda.size());
    for (Index i = 0; i < lambda.size(); ++i) {
        mapped(i) = apply(f, lambda(i));
    }
    const Eigen::MatrixXd& q = eig.eigenvectors();
    return SymMatrix(Eigen::MatrixXd(q * mapped.asDiagonal() * q.transpose()));
}

double operator_norm(const SymMatrix& m)
{
    if (m.dim() == 0) {
        return 0.0;
    }
    return eigenvalues(m).cwiseAbs().maxCoeff();
}

Eigen::VectorXd eigenvalues(const SymMatrix& m)
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m.matrix(), Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) {
        throw Error(ErrorCode::no_convergence, "symmetric eigensolver failed");
    }
    return eig.eigenvalues();
}

double min_eigenvalue(const SymMatrix& m)
{
    return eigenvalues(m).minCoeff();
}

double positivity_tolerance(const SymMatrix& m)
{
    return 1e-13 * operator_norm(m);
}

SymMatrix kron_i2(const SymMatrix& m)
{
    const Index n = m.dim();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    out.topLeftCorner(n, n) = m.matrix();
    out.bottomRightCorner(n, n) = m.matrix();
    return SymMatrix(out);
}

SymMatrix congruence(const Eigen::MatrixXd& a, const SymMatrix& s)
{
    return SymMatrix(Eigen::MatrixXd(a * s.matrix() * a.transpose()));
}

double relative_frobenius(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b)
{
    const double denom = std::max(b.norm(), std::numeric_limits<double>::min());
    return (a - b).norm() / denom;
}

} // namespace rkf
