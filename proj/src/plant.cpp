#include "qsd/plant.hpp"

#include <stdexcept>

namespace qsd {

void PlantSpec::validate() const {
    if (A_p.rows() != A_p.cols())
        throw std::invalid_argument("PlantSpec: A_p must be square");
    if (B_p.rows() != A_p.rows())
        throw std::invalid_argument("PlantSpec: B_p row count must match A_p");
    if (delta.size() != B_p.cols())
        throw std::invalid_argument("PlantSpec: delta size must match input count");
    for (Eigen::Index i = 0; i < delta.size(); ++i)
        if (!(delta(i) > 0.0))
            throw std::invalid_argument("PlantSpec: quantization steps must be positive");
    if (!(T > 0.0))
        throw std::invalid_argument("PlantSpec: sampling period must be positive");
    if (!A_p.allFinite() || !B_p.allFinite())
        throw std::invalid_argument("PlantSpec: matrices must be finite");
}

ClosedLoopMatrices build_closed_loop(const PlantSpec& plant) {
    plant.validate();
    const int np = plant.n_p();
    const int nu = plant.n_u();
    const int n = np + nu;

    ClosedLoopMatrices cl;
    cl.A_cl = Matrix::Zero(n, n);
    cl.A_cl.topLeftCorner(np, np) = plant.A_p;
    cl.A_cl.topRightCorner(np, nu) = plant.B_p;

    cl.G_cl = Matrix::Zero(n, n);
    cl.G_cl.topLeftCorner(np, np) = Matrix::Identity(np, np);

    cl.J_cl = Matrix::Zero(n, nu);
    cl.J_cl.bottomRows(nu) = Matrix::Identity(nu, nu);
    return cl;
}

bool check_stabilizable(const Eigen::Ref<const Matrix>& a_d, const Eigen::Ref<const Matrix>& b_d,
                        double rank_tol) {
    const Eigen::Index n = a_d.rows();
    if (a_d.rows() != a_d.cols())
        throw std::invalid_argument("check_stabilizable: A_D must be square");
    if (b_d.rows() != n)
        throw std::invalid_argument("check_stabilizable: B_D row count must match A_D");

    Eigen::EigenSolver<Matrix> es(a_d);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("check_stabilizable: eigensolver did not converge");

    const Eigen::Index m = b_d.cols();
    for (Eigen::Index k = 0; k < n; ++k) {
        const std::complex<double> lambda = es.eigenvalues()(k);
        if (std::abs(lambda) < 1.0) continue;

        // Real embedding of [lambda I - A_D, B_D]: a complex matrix X + iY maps
        // to [[X, -Y], [Y, X]] whose rank is twice the complex rank.
        Matrix pencil(2 * n, 2 * (n + m));
        const Matrix re = lambda.real() * Matrix::Identity(n, n) - a_d;
        const Matrix im = lambda.imag() * Matrix::Identity(n, n);
        pencil.setZero();
        pencil.block(0, 0, n, n) = re;
        pencil.block(n, n, n, n) = re;
        pencil.block(0, n, n, n) = -im;
        pencil.block(n, 0, n, n) = im;
        pencil.block(0, 2 * n, n, m) = b_d;
        pencil.block(n, 2 * n + m, n, m) = b_d;
        if (rank_svd(pencil, rank_tol) < 2 * n) return false;
    }
    return true;
}

} // namespace qsd
