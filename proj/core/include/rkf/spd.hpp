#pragma once

// Dense symmetric / symmetric-positive-definite kernels shared by the
// filters: Cholesky factors, spectral matrix functions, norms.

#include <Eigen/Dense>

namespace rkf {

using Index = Eigen::Index;

/// Square matrix that is exactly symmetric. Construction replaces the input
/// by the average with its transpose, so entries(i,j) == entries(j,i) bitwise.
class SymMatrix {
public:
    SymMatrix() = default;
    explicit SymMatrix(const Eigen::MatrixXd& m);

    static SymMatrix identity(Index n);
    static SymMatrix zero(Index n);
    static SymMatrix diagonal(const Eigen::VectorXd& d);

    Index dim() const noexcept { return m_.rows(); }
    const Eigen::MatrixXd& matrix() const noexcept { return m_; }
    double operator()(Index i, Index j) const { return m_(i, j); }

    SymMatrix operator+(const SymMatrix& other) const;
    SymMatrix operator-(const SymMatrix& other) const;
    SymMatrix operator*(double s) const;

private:
    Eigen::MatrixXd m_;
};

/// Lower-triangular Cholesky factor L (positive diagonal) with L L^T = source.
class SpdFactor {
public:
    explicit SpdFactor(Eigen::MatrixXd lower) : lower_(std::move(lower)) {}

    Index dim() const noexcept { return lower_.rows(); }
    const Eigen::MatrixXd& lower() const noexcept { return lower_; }

    /// X with (L L^T) X = rhs.
    Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;
    /// L^{-1} rhs (forward substitution).
    Eigen::MatrixXd solve_lower(const Eigen::MatrixXd& rhs) const;
    SymMatrix inverse() const;
    SymMatrix reconstruct() const;
    double log_determinant() const;

private:
    Eigen::MatrixXd lower_;
};

/// Throws Error{not_positive_definite} if a pivot is not strictly positive.
SpdFactor cholesky(const SymMatrix& m);

/// Scalar function applied through the spectrum of a symmetric matrix.
struct MatrixFunction {
    enum class Kind { power, exp, log, inverse };
    Kind kind = Kind::exp;
    double exponent = 1.0;

    static MatrixFunction power(double alpha) { return {Kind::power, alpha}; }
    static MatrixFunction exp() { return {Kind::exp, 1.0}; }
    static MatrixFunction log() { return {Kind::log, 1.0}; }
    static MatrixFunction inverse() { return {Kind::inverse, -1.0}; }
};

/// Q f(Lambda) Q^T for m = Q Lambda Q^T. Eigenvalues below
/// positivity_tolerance(m) count as non-positive; functions that need a
/// positive spectrum (log, inverse, negative or fractional powers) throw
/// Error{spectrum_out_of_domain} naming the offending eigenvalue.
SymMatrix sym_matrix_function(const SymMatrix& m, MatrixFunction f);

/// Largest absolute eigenvalue.
double operator_norm(const SymMatrix& m);

/// Ascending eigenvalues.
Eigen::VectorXd eigenvalues(const SymMatrix& m);
double min_eigenvalue(const SymMatrix& m);

/// 1e-13 * operator_norm(m).
double positivity_tolerance(const SymMatrix& m);

/// Block diagonal [[m, 0], [0, m]] = I_2 (x) m.
SymMatrix kron_i2(const SymMatrix& m);

/// a * s * a^T, symmetrized.
SymMatrix congruence(const Eigen::MatrixXd& a, const SymMatrix& s);

/// Relative Frobenius distance ||a - b|| / max(||b||, tiny).
double relative_frobenius(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

} // namespace rkf
