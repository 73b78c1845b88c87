#include "qsd/linalg.hpp"

#include <stdexcept>

#include <unsupported/Eigen/MatrixFunctions>

namespace qsd {

Matrix symmetrize(const Eigen::Ref<const Matrix>& m) {
    return 0.5 * (m + m.transpose());
}

bool is_symmetric(const Eigen::Ref<const Matrix>& m, double tol) {
    if (m.rows() != m.cols()) return false;
    const double scale = 1.0 + m.cwiseAbs().maxCoeff();
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

Matrix expm(const Eigen::Ref<const Matrix>& a) {
    if (a.rows() != a.cols())
        throw std::invalid_argument("expm: matrix must be square");
    if (!a.allFinite())
        throw std::invalid_argument("expm: matrix must have finite entries");
    return a.exp();
}

std::pair<Matrix, Matrix> discretize(const Eigen::Ref<const Matrix>& a,
                                     const Eigen::Ref<const Matrix>& b, double t) {
    const Eigen::Index n = a.rows();
    const Eigen::Index m = b.cols();
    if (a.rows() != a.cols())
        throw std::invalid_argument("discretize: A must be square");
    if (b.rows() != n)
        throw std::invalid_argument("discretize: B row count must match A");
    if (!(t > 0.0))
        throw std::invalid_argument("discretize: T must be positive");

    Matrix aug = Matrix::Zero(n + m, n + m);
    aug.topLeftCorner(n, n) = a;
    aug.topRightCorner(n, m) = b;
    const Matrix e = expm(aug * t);
    return {e.topLeftCorner(n, n), e.topRightCorner(n, m)};
}

SymEig sym_eig(const Eigen::Ref<const Matrix>& s) {
    if (s.rows() != s.cols())
        throw std::invalid_argument("sym_eig: matrix must be square");
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(s));
    if (es.info() != Eigen::Success)
        throw std::runtime_error("sym_eig: eigensolver did not converge");
    return {es.eigenvalues(), es.eigenvectors()};
}

double definiteness_margin(const Eigen::Ref<const Matrix>& s) {
    const SymEig e = sym_eig(s);
    return e.eigenvalues(e.eigenvalues.size() - 1);
}

double lambda_min(const Eigen::Ref<const Matrix>& s) {
    return sym_eig(s).eigenvalues(0);
}

int rank_svd(const Eigen::Ref<const Matrix>& a, double tol) {
    if (!(tol > 0.0))
        throw std::invalid_argument("rank_svd: tol must be positive");
    if (a.size() == 0) return 0;
    Eigen::JacobiSVD<Matrix> svd(a);
    const Vector& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) == 0.0) return 0;
    const double threshold = tol * sv(0);
    int r = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > threshold) ++r;
    return r;
}

} // namespace qsd
