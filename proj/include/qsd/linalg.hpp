#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

namespace qsd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Exact symmetrization, (M + M^T) / 2. Used whenever a quantity is symmetric
/// by construction but accumulates asymmetric rounding.
Matrix symmetrize(const Eigen::Ref<const Matrix>& m);

/// True if max |M - M^T| <= tol * (1 + max |M|).
bool is_symmetric(const Eigen::Ref<const Matrix>& m, double tol = 1e-12);

/// Matrix exponential e^A (scaling-and-squaring, Pade order 13).
/// Throws std::invalid_argument on non-square or non-finite input.
Matrix expm(const Eigen::Ref<const Matrix>& a);

/// Exact zero-order-hold discretization of (A, B) over a step T:
///   A_D = e^{A T},  B_D = \int_0^T e^{A s} B ds,
/// computed from one exponential of the augmented block matrix [[A,B],[0,0]]*T.
std::pair<Matrix, Matrix> discretize(const Eigen::Ref<const Matrix>& a,
                                     const Eigen::Ref<const Matrix>& b, double t);

struct SymEig {
    Vector eigenvalues; // ascending
    Matrix basis;       // orthogonal, S = basis * diag(eigenvalues) * basis^T
};

/// Eigen-decomposition of a symmetric matrix.
SymEig sym_eig(const Eigen::Ref<const Matrix>& s);

/// lambda_max(S) for symmetric S. Callers compare against a negativity margin
/// to decide "< 0" style definiteness tests.
double definiteness_margin(const Eigen::Ref<const Matrix>& s);

/// lambda_min(S) for symmetric S.
double lambda_min(const Eigen::Ref<const Matrix>& s);

/// Numerical rank: number of singular values > tol * sigma_max.
int rank_svd(const Eigen::Ref<const Matrix>& a, double tol = 1e-9);

} // namespace qsd
