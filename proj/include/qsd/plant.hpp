#pragma once

#include "qsd/linalg.hpp"

namespace qsd {

/// Problem instance: continuous-time plant with quantized, sampled actuation.
struct PlantSpec {
    Matrix A_p;   // n_p x n_p
    Matrix B_p;   // n_p x n_u
    Vector delta; // n_u quantization steps, all > 0
    double T = 0; // sampling period, > 0

    int n_p() const { return static_cast<int>(A_p.rows()); }
    int n_u() const { return static_cast<int>(B_p.cols()); }
    /// Throws std::invalid_argument if dimensions or signs are inconsistent.
    void validate() const;
};

/// Flow/jump matrices of the hybrid closed loop in the (x_p, chi) coordinates:
///   A_cl = [[A_p, B_p], [0, 0]],  G_cl = [[I, 0], [0, 0]],  J_cl = [0; I].
struct ClosedLoopMatrices {
    Matrix A_cl; // (n_p+n_u)^2
    Matrix G_cl; // (n_p+n_u)^2
    Matrix J_cl; // (n_p+n_u) x n_u
};

ClosedLoopMatrices build_closed_loop(const PlantSpec& plant);

/// PBH stabilizability test for a discrete-time pair: every eigenvalue lambda of
/// A_D with |lambda| >= 1 must satisfy rank [lambda I - A_D, B_D] = n. Complex
/// eigenvalues are handled through the real 2n x 2n embedding of the pencil.
bool check_stabilizable(const Eigen::Ref<const Matrix>& a_d, const Eigen::Ref<const Matrix>& b_d,
                        double rank_tol = 1e-9);

} // namespace qsd
