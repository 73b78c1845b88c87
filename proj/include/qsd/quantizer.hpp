#pragma once

#include <vector>

#include "qsd/linalg.hpp"

namespace qsd {

/// Per-coordinate value set of the Krasovskii-regularized quantization error.
/// Each coordinate holds one value (continuity point of the quantizer) or the
/// two one-sided limits (at a nonzero lattice point).
struct QuantSetValue {
    std::vector<std::vector<double>> values; // size n_u, each of size 1 or 2

    std::size_t size() const { return values.size(); }
    bool is_singleton() const;
    /// Enumerates the cartesian product of the per-coordinate sets.
    std::vector<Vector> selections() const;
};

/// Uniform quantizer, componentwise delta_i * Sign(u_i) * floor(|u_i| / delta_i).
Vector quantize(const Eigen::Ref<const Vector>& u, const Eigen::Ref<const Vector>& delta);

/// Quantization error psi(u) = quantize(u) - u.
Vector psi(const Eigen::Ref<const Vector>& u, const Eigen::Ref<const Vector>& delta);

/// Krasovskii regularization of psi: singleton {psi(u_i)} at continuity points,
/// both one-sided limits where u_i is a nonzero multiple of delta_i.
/// `lattice_tol` is the relative tolerance for lattice-membership detection.
QuantSetValue psi_kras(const Eigen::Ref<const Vector>& u, const Eigen::Ref<const Vector>& delta,
                       double lattice_tol = 1e-12);

/// Residuals of the two sector inequalities for a candidate error value v:
///   first:  v^T S1 v - Delta^T S1 Delta   (<= 0 expected)
///   second: v^T S2 (v + u)                (<= 0 expected)
struct SectorCheck {
    bool holds1 = false;
    bool holds2 = false;
    double residual1 = 0.0;
    double residual2 = 0.0;
};

/// S1, S2 are the diagonals of the multiplier matrices; all entries must be > 0.
SectorCheck sector_check(const Eigen::Ref<const Vector>& u, const Eigen::Ref<const Vector>& v,
                         const Eigen::Ref<const Vector>& s1, const Eigen::Ref<const Vector>& s2,
                         const Eigen::Ref<const Vector>& delta);

} // namespace qsd
