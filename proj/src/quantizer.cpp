#include "qsd/quantizer.hpp"

#include <cmath>
#include <stdexcept>

namespace qsd {

namespace {

void require_positive_steps(const Eigen::Ref<const Vector>& delta) {
    for (Eigen::Index i = 0; i < delta.size(); ++i)
        if (!(delta(i) > 0.0))
            throw std::invalid_argument("quantizer: all quantization steps must be positive");
}

double sign_of(double x) { return x >= 0.0 ? 1.0 : -1.0; }

} // namespace

bool QuantSetValue::is_singleton() const {
    for (const auto& v : values)
        if (v.size() != 1) return false;
    return true;
}

std::vector<Vector> QuantSetValue::selections() const {
    std::vector<Vector> out;
    const Eigen::Index n = static_cast<Eigen::Index>(values.size());
    std::size_t count = 1;
    for (const auto& v : values) count *= v.size();
    out.reserve(count);
    for (std::size_t idx = 0; idx < count; ++idx) {
        Vector sel(n);
        std::size_t rem = idx;
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto& coord = values[static_cast<std::size_t>(i)];
            sel(i) = coord[rem % coord.size()];
            rem /= coord.size();
        }
        out.push_back(std::move(sel));
    }
    return out;
}

Vector quantize(const Eigen::Ref<const Vector>& u, const Eigen::Ref<const Vector>& delta) {
    if (u.size() != delta.size())
        throw std::invalid_argument("quantize: u and delta must have equal size");
    require_positive_steps(delta);
    Vector q(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i)
        q(i) = delta(i) * sign_of(u(i)) * std::floor(std::abs(u(i)) / delta(i));
    return q;
}

Vector psi(const Eigen::Ref<const Vector>& u, const Eigen::Ref<const Vector>& delta) {
    return quantize(u, delta) - u;
}

QuantSetValue psi_kras(const Eigen::Ref<const Vector>& u, const Eigen::Ref<const Vector>& delta,
                       double lattice_tol) {
    if (u.size() != delta.size())
        throw std::invalid_argument("psi_kras: u and delta must have equal size");
    require_positive_steps(delta);
    QuantSetValue out;
    out.values.resize(static_cast<std::size_t>(u.size()));
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        const double ratio = u(i) / delta(i);
        const bool on_lattice =
            std::abs(ratio - std::round(ratio)) <= lattice_tol * std::max(1.0, std::abs(ratio));
        auto& coord = out.values[static_cast<std::size_t>(i)];
        if (!on_lattice || u(i) == 0.0) {
            const double q = delta(i) * sign_of(u(i)) * std::floor(std::abs(u(i)) / delta(i));
            coord = {q - u(i)};
        } else if (ratio > 0.0) {
            // one-sided limits of psi at u = k*delta, k > 0: from the left -delta, from the right 0
            coord = {-delta(i), 0.0};
        } else {
            // k < 0: from the left 0, from the right +delta
            coord = {0.0, delta(i)};
        }
    }
    return out;
}

SectorCheck sector_check(const Eigen::Ref<const Vector>& u, const Eigen::Ref<const Vector>& v,
                         const Eigen::Ref<const Vector>& s1, const Eigen::Ref<const Vector>& s2,
                         const Eigen::Ref<const Vector>& delta) {
    const Eigen::Index n = u.size();
    if (v.size() != n || s1.size() != n || s2.size() != n || delta.size() != n)
        throw std::invalid_argument("sector_check: inconsistent dimensions");
    require_positive_steps(delta);
    for (Eigen::Index i = 0; i < n; ++i)
        if (!(s1(i) > 0.0) || !(s2(i) > 0.0))
            throw std::invalid_argument("sector_check: multipliers must be diagonal positive definite");

    SectorCheck r;
    r.residual1 = v.cwiseProduct(s1).dot(v) - delta.cwiseProduct(s1).dot(delta);
    r.residual2 = v.cwiseProduct(s2).dot(v + u);
    r.holds1 = r.residual1 <= 0.0;
    r.holds2 = r.residual2 <= 0.0;
    return r;
}

} // namespace qsd
