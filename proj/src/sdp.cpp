#include "qsd/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <stdexcept>

namespace qsd::sdp {

// ---------------------------------------------------------------------------
// VarSpace
// ---------------------------------------------------------------------------

int VarSpace::add_block(VarBlock b) {
    if (index_.count(b.name))
        throw std::invalid_argument("VarSpace: duplicate block name '" + b.name + "'");
    for (std::size_t i = 0; i < b.lower.size(); ++i) {
        if (!(b.lower[i] < b.upper[i]))
            throw std::invalid_argument("VarSpace: bounds must satisfy lower < upper");
    }
    b.offset = total_;
    total_ += b.size;
    index_[b.name] = static_cast<int>(blocks_.size());
    blocks_.push_back(std::move(b));
    return static_cast<int>(blocks_.size()) - 1;
}

int VarSpace::add_scalar(const std::string& name, double lower, double upper) {
    VarBlock b;
    b.name = name;
    b.kind = BlockKind::Scalar;
    b.rows = b.cols = 1;
    b.size = 1;
    b.lower = {lower};
    b.upper = {upper};
    return add_block(std::move(b));
}

int VarSpace::add_symmetric(const std::string& name, int n) {
    if (n < 1) throw std::invalid_argument("VarSpace: symmetric block needs n >= 1");
    VarBlock b;
    b.name = name;
    b.kind = BlockKind::Symmetric;
    b.rows = b.cols = n;
    b.size = n * (n + 1) / 2;
    b.lower.assign(static_cast<std::size_t>(b.size), -kInf);
    b.upper.assign(static_cast<std::size_t>(b.size), kInf);
    return add_block(std::move(b));
}

int VarSpace::add_diagonal(const std::string& name, int n, double lower) {
    if (n < 1) throw std::invalid_argument("VarSpace: diagonal block needs n >= 1");
    VarBlock b;
    b.name = name;
    b.kind = BlockKind::Diagonal;
    b.rows = b.cols = n;
    b.size = n;
    b.lower.assign(static_cast<std::size_t>(n), lower);
    b.upper.assign(static_cast<std::size_t>(n), kInf);
    return add_block(std::move(b));
}

int VarSpace::add_rectangular(const std::string& name, int rows, int cols) {
    if (rows < 1 || cols < 1)
        throw std::invalid_argument("VarSpace: rectangular block needs positive dimensions");
    VarBlock b;
    b.name = name;
    b.kind = BlockKind::Rectangular;
    b.rows = rows;
    b.cols = cols;
    b.size = rows * cols;
    b.lower.assign(static_cast<std::size_t>(b.size), -kInf);
    b.upper.assign(static_cast<std::size_t>(b.size), kInf);
    return add_block(std::move(b));
}

const VarBlock& VarSpace::block(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end())
        throw std::invalid_argument("VarSpace: unknown block '" + name + "'");
    return blocks_[static_cast<std::size_t>(it->second)];
}

MatrixExpr VarSpace::expr(const std::string& name) const {
    const VarBlock& b = block(name);
    MatrixExpr e = MatrixExpr::zero(b.rows, b.cols);
    int p = b.offset;
    switch (b.kind) {
        case BlockKind::Scalar: {
            e.coeff_[p] = Matrix::Ones(1, 1);
            break;
        }
        case BlockKind::Symmetric: {
            for (int j = 0; j < b.cols; ++j) {
                for (int i = j; i < b.rows; ++i) {
                    Matrix basis = Matrix::Zero(b.rows, b.cols);
                    basis(i, j) = 1.0;
                    basis(j, i) = 1.0;
                    e.coeff_[p++] = basis;
                }
            }
            break;
        }
        case BlockKind::Diagonal: {
            for (int i = 0; i < b.rows; ++i) {
                Matrix basis = Matrix::Zero(b.rows, b.cols);
                basis(i, i) = 1.0;
                e.coeff_[p++] = basis;
            }
            break;
        }
        case BlockKind::Rectangular: {
            for (int i = 0; i < b.rows; ++i) {
                for (int j = 0; j < b.cols; ++j) {
                    Matrix basis = Matrix::Zero(b.rows, b.cols);
                    basis(i, j) = 1.0;
                    e.coeff_[p++] = basis;
                }
            }
            break;
        }
    }
    return e;
}

MatrixExpr VarSpace::scalar_times(const std::string& name, const Matrix& coefficient) const {
    const VarBlock& b = block(name);
    if (b.kind != BlockKind::Scalar)
        throw std::invalid_argument("VarSpace: scalar_times needs a scalar block");
    MatrixExpr e = MatrixExpr::zero(static_cast<int>(coefficient.rows()),
                                    static_cast<int>(coefficient.cols()));
    e.coeff_[b.offset] = coefficient;
    return e;
}

Matrix VarSpace::value(const std::string& name, const Eigen::Ref<const Vector>& x) const {
    const VarBlock& b = block(name);
    if (x.size() < b.offset + b.size)
        throw std::invalid_argument("VarSpace: assignment does not cover block '" + name + "'");
    Matrix v = Matrix::Zero(b.rows, b.cols);
    int p = b.offset;
    switch (b.kind) {
        case BlockKind::Scalar:
            v(0, 0) = x(p);
            break;
        case BlockKind::Symmetric:
            for (int j = 0; j < b.cols; ++j)
                for (int i = j; i < b.rows; ++i) {
                    v(i, j) = x(p);
                    v(j, i) = x(p);
                    ++p;
                }
            break;
        case BlockKind::Diagonal:
            for (int i = 0; i < b.rows; ++i) v(i, i) = x(p++);
            break;
        case BlockKind::Rectangular:
            for (int i = 0; i < b.rows; ++i)
                for (int j = 0; j < b.cols; ++j) v(i, j) = x(p++);
            break;
    }
    return v;
}

void VarSpace::set_value(const std::string& name, const Eigen::Ref<const Matrix>& v,
                         Vector& x) const {
    const VarBlock& b = block(name);
    if (v.rows() != b.rows || v.cols() != b.cols)
        throw std::invalid_argument("VarSpace: value shape mismatch for block '" + name + "'");
    if (x.size() < b.offset + b.size)
        throw std::invalid_argument("VarSpace: assignment vector too short");
    int p = b.offset;
    switch (b.kind) {
        case BlockKind::Scalar:
            x(p) = v(0, 0);
            break;
        case BlockKind::Symmetric: {
            const Matrix sym = 0.5 * (v + v.transpose());
            for (int j = 0; j < b.cols; ++j)
                for (int i = j; i < b.rows; ++i) x(p++) = sym(i, j);
            break;
        }
        case BlockKind::Diagonal:
            for (int i = 0; i < b.rows; ++i) x(p++) = v(i, i);
            break;
        case BlockKind::Rectangular:
            for (int i = 0; i < b.rows; ++i)
                for (int j = 0; j < b.cols; ++j) x(p++) = v(i, j);
            break;
    }
}

// ---------------------------------------------------------------------------
// MatrixExpr
// ---------------------------------------------------------------------------

MatrixExpr MatrixExpr::constant(const Matrix& c) {
    MatrixExpr e;
    e.rows_ = static_cast<int>(c.rows());
    e.cols_ = static_cast<int>(c.cols());
    e.constant_ = c;
    return e;
}

MatrixExpr MatrixExpr::zero(int rows, int cols) {
    return constant(Matrix::Zero(rows, cols));
}

Matrix MatrixExpr::evaluate(const Eigen::Ref<const Vector>& x) const {
    Matrix out = constant_;
    for (const auto& [idx, coeff] : coeff_) {
        if (idx >= x.size())
            throw std::invalid_argument("MatrixExpr: assignment does not cover variable index " +
                                        std::to_string(idx));
        out += x(idx) * coeff;
    }
    return out;
}

MatrixExpr MatrixExpr::transpose() const {
    MatrixExpr e;
    e.rows_ = cols_;
    e.cols_ = rows_;
    e.constant_ = constant_.transpose();
    for (const auto& [idx, coeff] : coeff_) e.coeff_[idx] = coeff.transpose();
    return e;
}

MatrixExpr MatrixExpr::operator-() const { return scaled(-1.0); }

MatrixExpr MatrixExpr::scaled(double s) const {
    MatrixExpr e = *this;
    e.constant_ *= s;
    for (auto& [idx, coeff] : e.coeff_) coeff *= s;
    return e;
}

MatrixExpr MatrixExpr::operator+(const MatrixExpr& rhs) const {
    if (rows_ != rhs.rows_ || cols_ != rhs.cols_)
        throw std::invalid_argument("MatrixExpr: shape mismatch in addition");
    MatrixExpr e = *this;
    e.constant_ += rhs.constant_;
    for (const auto& [idx, coeff] : rhs.coeff_) {
        auto it = e.coeff_.find(idx);
        if (it == e.coeff_.end())
            e.coeff_[idx] = coeff;
        else
            it->second += coeff;
    }
    return e;
}

MatrixExpr MatrixExpr::operator-(const MatrixExpr& rhs) const { return *this + rhs.scaled(-1.0); }

MatrixExpr MatrixExpr::he() const {
    if (rows_ != cols_) throw std::invalid_argument("MatrixExpr: He needs a square expression");
    return *this + this->transpose();
}

MatrixExpr operator*(const Matrix& lhs, const MatrixExpr& rhs) {
    if (lhs.cols() != rhs.rows_)
        throw std::invalid_argument("MatrixExpr: shape mismatch in left product");
    MatrixExpr e;
    e.rows_ = static_cast<int>(lhs.rows());
    e.cols_ = rhs.cols_;
    e.constant_ = lhs * rhs.constant_;
    for (const auto& [idx, coeff] : rhs.coeff_) e.coeff_[idx] = lhs * coeff;
    return e;
}

MatrixExpr operator*(const MatrixExpr& lhs, const Matrix& rhs) {
    if (lhs.cols_ != rhs.rows())
        throw std::invalid_argument("MatrixExpr: shape mismatch in right product");
    MatrixExpr e;
    e.rows_ = lhs.rows_;
    e.cols_ = static_cast<int>(rhs.cols());
    e.constant_ = lhs.constant_ * rhs;
    for (const auto& [idx, coeff] : lhs.coeff_) e.coeff_[idx] = coeff * rhs;
    return e;
}

MatrixExpr MatrixExpr::assemble(const std::vector<std::vector<MatrixExpr>>& grid) {
    if (grid.empty() || grid.front().empty())
        throw std::invalid_argument("MatrixExpr: empty block grid");
    int total_rows = 0, total_cols = 0;
    for (const auto& e : grid.front()) total_cols += e.cols();
    for (const auto& row : grid) total_rows += row.front().rows();

    MatrixExpr out = MatrixExpr::zero(total_rows, total_cols);
    int r0 = 0;
    for (const auto& row : grid) {
        const int rh = row.front().rows();
        int c0 = 0;
        for (const auto& e : row) {
            if (e.rows() != rh)
                throw std::invalid_argument("MatrixExpr: inconsistent block heights");
            out.constant_.block(r0, c0, e.rows(), e.cols()) = e.constant_;
            for (const auto& [idx, coeff] : e.coeff_) {
                auto it = out.coeff_.find(idx);
                if (it == out.coeff_.end())
                    it = out.coeff_.emplace(idx, Matrix::Zero(total_rows, total_cols)).first;
                it->second.block(r0, c0, e.rows(), e.cols()) += coeff;
            }
            c0 += e.cols();
        }
        if (c0 != total_cols)
            throw std::invalid_argument("MatrixExpr: inconsistent block row widths");
        r0 += rh;
    }
    return out;
}

bool MatrixExpr::is_symmetric(double tol) const {
    if (rows_ != cols_) return false;
    auto check = [tol](const Matrix& m) {
        const double scale = 1.0 + m.cwiseAbs().maxCoeff();
        return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
    };
    if (!check(constant_)) return false;
    for (const auto& [idx, coeff] : coeff_)
        if (!check(coeff)) return false;
    return true;
}

Matrix evaluate(const MatrixExpr& expr, const Eigen::Ref<const Vector>& assignment) {
    if (expr.rows() != expr.cols())
        throw std::invalid_argument("evaluate: expression must be square");
    return symmetrize(expr.evaluate(assignment));
}

// ---------------------------------------------------------------------------
// SdpProblem
// ---------------------------------------------------------------------------

void SdpProblem::add_constraint(MatrixExpr expr, ConstraintSense sense, double margin,
                                std::string label) {
    if (!expr.is_symmetric(1e-10))
        throw std::invalid_argument("SdpProblem: constraint expression must be symmetric");
    constraints.push_back({std::move(expr), sense, margin, std::move(label)});
}

void SdpProblem::add_inequality(Vector a, double b, std::string label) {
    inequalities.push_back({std::move(a), b, std::move(label)});
}

const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::Infeasible: return "infeasible";
        case SolveStatus::MaxIterations: return "max-iterations";
        case SolveStatus::NumericalFailure: return "numerical-failure";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------
// Interior-point solver
// ---------------------------------------------------------------------------

namespace {

// Standard dual form: maximize g.y subject to S_k = C_k - sum_i y_i A_{k,i} >= 0.
struct StdBlock {
    int dim = 0;
    Matrix C;
    std::vector<std::pair<int, Matrix>> A;
    bool shiftable = true; // participates in the phase-I margin shift
};

struct StdForm {
    int m = 0;
    Vector g;
    std::vector<StdBlock> blocks;
};

Matrix block_slack(const StdBlock& b, const Vector& y) {
    Matrix s = b.C;
    for (const auto& [idx, a] : b.A) s -= y(idx) * a;
    return symmetrize(s);
}

double min_shiftable_margin(const StdForm& f, const Vector& y) {
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& b : f.blocks) {
        if (!b.shiftable) continue;
        worst = std::min(worst, lambda_min(block_slack(b, y)));
    }
    return worst;
}

StdForm build_std_form(const SdpProblem& p) {
    StdForm f;
    f.m = p.vars.num_scalars();
    if (f.m < 1) throw std::invalid_argument("sdp::solve: problem has no variables");
    f.g = Vector::Zero(f.m);
    if (p.objective.size() != 0) {
        if (p.objective.size() != f.m)
            throw std::invalid_argument("sdp::solve: objective size mismatch");
        f.g = (p.sense == Objective::Maximize) ? p.objective : Vector(-p.objective);
    }

    for (const auto& c : p.constraints) {
        if (!c.expr.is_symmetric(1e-10))
            throw std::invalid_argument("sdp::solve: constraint expression must be symmetric");
        StdBlock b;
        b.dim = c.expr.rows();
        const Matrix eye = Matrix::Identity(b.dim, b.dim);
        if (c.sense == ConstraintSense::NegSemidef) {
            b.C = -(symmetrize(c.expr.constant_term()) + c.margin * eye);
            for (const auto& [idx, coeff] : c.expr.coefficients())
                b.A.emplace_back(idx, symmetrize(coeff));
        } else {
            b.C = symmetrize(c.expr.constant_term()) - c.margin * eye;
            for (const auto& [idx, coeff] : c.expr.coefficients())
                b.A.emplace_back(idx, Matrix(-symmetrize(coeff)));
        }
        f.blocks.push_back(std::move(b));
    }

    for (const auto& q : p.inequalities) {
        if (q.a.size() != f.m)
            throw std::invalid_argument("sdp::solve: inequality coefficient size mismatch");
        StdBlock b;
        b.dim = 1;
        b.C = Matrix::Constant(1, 1, -q.b);
        for (Eigen::Index i = 0; i < q.a.size(); ++i)
            if (q.a(i) != 0.0) b.A.emplace_back(static_cast<int>(i), Matrix::Constant(1, 1, q.a(i)));
        f.blocks.push_back(std::move(b));
    }

    for (const auto& vb : p.vars.blocks()) {
        for (int j = 0; j < vb.size; ++j) {
            const double lo = vb.lower[static_cast<std::size_t>(j)];
            const double hi = vb.upper[static_cast<std::size_t>(j)];
            if (std::isfinite(lo)) {
                StdBlock b;
                b.dim = 1;
                b.C = Matrix::Constant(1, 1, -lo);
                b.A.emplace_back(vb.offset + j, Matrix::Constant(1, 1, -1.0));
                b.shiftable = false;
                f.blocks.push_back(std::move(b));
            }
            if (std::isfinite(hi)) {
                StdBlock b;
                b.dim = 1;
                b.C = Matrix::Constant(1, 1, hi);
                b.A.emplace_back(vb.offset + j, Matrix::Constant(1, 1, 1.0));
                b.shiftable = false;
                f.blocks.push_back(std::move(b));
            }
        }
    }

    if (f.blocks.empty()) throw std::invalid_argument("sdp::solve: problem has no constraints");
    return f;
}

// Strictly interior relative to all variable bounds; zero elsewhere.
Vector bounds_interior_point(const SdpProblem& p) {
    Vector y = Vector::Zero(p.vars.num_scalars());
    for (const auto& vb : p.vars.blocks()) {
        for (int j = 0; j < vb.size; ++j) {
            const double lo = vb.lower[static_cast<std::size_t>(j)];
            const double hi = vb.upper[static_cast<std::size_t>(j)];
            double v = 0.0;
            if (std::isfinite(lo) && std::isfinite(hi))
                v = 0.5 * (lo + hi);
            else if (std::isfinite(lo))
                v = lo + std::max(1.0, 0.1 * std::abs(lo));
            else if (std::isfinite(hi))
                v = hi - std::max(1.0, 0.1 * std::abs(hi));
            y(vb.offset + j) = v;
        }
    }
    return y;
}

StdForm with_shift_variable(const StdForm& base, double margin_cap) {
    StdForm f;
    f.m = base.m + 1;
    f.g = Vector::Zero(f.m);
    f.g(base.m) = 1.0; // maximize the shift
    f.blocks = base.blocks;
    for (auto& b : f.blocks) {
        if (b.shiftable) b.A.emplace_back(base.m, Matrix::Identity(b.dim, b.dim));
    }
    StdBlock cap;
    cap.dim = 1;
    cap.C = Matrix::Constant(1, 1, margin_cap);
    cap.A.emplace_back(base.m, Matrix::Constant(1, 1, 1.0));
    cap.shiftable = false;
    f.blocks.push_back(std::move(cap));
    return f;
}

struct IpResult {
    SolveStatus status = SolveStatus::NumericalFailure;
    Vector y;
    double pobj = 0.0;
    double dobj = 0.0;
    double gap_rel = 0.0;
    int iterations = 0;
};

// Infeasible-start primal-dual path following with HKM directions and a
// Mehrotra predictor-corrector. The dual slack starts from the actual block
// slacks at y0 (bumped to be positive definite if needed), the primal matrix
// from a scaled identity.
IpResult ip_solve(const StdForm& f, const Vector& y0, const SolverOptions& opt,
                  const std::function<bool(const Vector&)>& early_stop = nullptr) {
    using LLT = Eigen::LLT<Matrix>;
    const int m = f.m;
    const int nblocks = static_cast<int>(f.blocks.size());
    int total_dim = 0;
    for (const auto& b : f.blocks) total_dim += b.dim;

    const double g_scale = f.g.lpNorm<Eigen::Infinity>();

    IpResult res;
    Vector y = y0;
    std::vector<Matrix> S(static_cast<std::size_t>(nblocks)), X(static_cast<std::size_t>(nblocks));
    for (int k = 0; k < nblocks; ++k) {
        const auto& b = f.blocks[static_cast<std::size_t>(k)];
        Matrix s = block_slack(b, y);
        const double lam = lambda_min(s);
        if (lam < 1e-8) s += (1e-8 - lam + 1.0) * Matrix::Identity(b.dim, b.dim);
        S[static_cast<std::size_t>(k)] = s;
        X[static_cast<std::size_t>(k)] =
            std::max(1.0, g_scale) * Matrix::Identity(b.dim, b.dim);
    }

    std::vector<LLT> llt_S(static_cast<std::size_t>(nblocks)),
        llt_X(static_cast<std::size_t>(nblocks));

    auto alpha_max = [&](const std::vector<LLT>& llt, const std::vector<Matrix>& dZ) -> double {
        double a = std::numeric_limits<double>::infinity();
        for (int k = 0; k < nblocks; ++k) {
            const auto ks = static_cast<std::size_t>(k);
            const Matrix L = llt[ks].matrixL();
            Matrix t = L.triangularView<Eigen::Lower>().solve(dZ[ks]);
            t = L.triangularView<Eigen::Lower>().solve(t.transpose()).transpose();
            Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(t),
                                                     Eigen::EigenvaluesOnly);
            const double lam = es.eigenvalues()(0);
            if (lam < 0.0) a = std::min(a, -1.0 / lam);
        }
        return a;
    };

    int stall = 0;
    for (int iter = 0; iter <= opt.max_iterations; ++iter) {
        // residuals
        std::vector<Matrix> r_d(static_cast<std::size_t>(nblocks));
        Vector r_p = f.g;
        double xs = 0.0, pobj = 0.0;
        double err_d = 0.0;
        for (int k = 0; k < nblocks; ++k) {
            const auto ks = static_cast<std::size_t>(k);
            const auto& b = f.blocks[ks];
            Matrix rd = b.C - S[ks];
            for (const auto& [idx, a] : b.A) {
                rd -= y(idx) * a;
                r_p(idx) -= (a.cwiseProduct(X[ks])).sum();
            }
            r_d[ks] = symmetrize(rd);
            err_d = std::max(err_d, r_d[ks].norm() / (1.0 + b.C.norm()));
            xs += (X[ks].cwiseProduct(S[ks])).sum();
            pobj += (b.C.cwiseProduct(X[ks])).sum();
        }
        const double dobj = f.g.dot(y);
        const double mu = xs / total_dim;
        const double err_p = r_p.lpNorm<Eigen::Infinity>() / (1.0 + g_scale);
        const double obj_scale = 1.0 + std::abs(pobj) + std::abs(dobj);
        const double xs_rel = xs / obj_scale;
        res.y = y;
        res.pobj = pobj;
        res.dobj = dobj;
        res.gap_rel = std::abs(pobj - dobj) / obj_scale;
        res.iterations = iter;

        if (opt.trace)
            std::fprintf(stderr, "  ip %3d  mu %.2e  err_p %.2e  err_d %.2e  gap %.2e  dobj %.8e\n",
                         iter, mu, err_p, err_d, res.gap_rel, dobj);

        if (err_p <= opt.kkt_tol && err_d <= opt.kkt_tol && xs_rel <= opt.gap_tol) {
            res.status = SolveStatus::Optimal;
            return res;
        }
        if (early_stop && err_d <= 1e-6 && early_stop(y)) {
            res.status = SolveStatus::Optimal;
            return res;
        }
        if (iter == opt.max_iterations) {
            res.status = SolveStatus::MaxIterations;
            return res;
        }
        if (!y.allFinite() || !std::isfinite(xs)) {
            res.status = SolveStatus::NumericalFailure;
            return res;
        }

        // factorizations
        bool factor_ok = true;
        for (int k = 0; k < nblocks && factor_ok; ++k) {
            const auto ks = static_cast<std::size_t>(k);
            llt_S[ks].compute(S[ks]);
            if (llt_S[ks].info() != Eigen::Success) {
                S[ks] += (1e-14 * (1.0 + S[ks].trace())) *
                         Matrix::Identity(S[ks].rows(), S[ks].cols());
                llt_S[ks].compute(S[ks]);
            }
            llt_X[ks].compute(X[ks]);
            if (llt_X[ks].info() != Eigen::Success) {
                X[ks] += (1e-14 * (1.0 + X[ks].trace())) *
                         Matrix::Identity(X[ks].rows(), X[ks].cols());
                llt_X[ks].compute(X[ks]);
            }
            factor_ok = llt_S[ks].info() == Eigen::Success && llt_X[ks].info() == Eigen::Success;
        }
        if (!factor_ok) {
            res.status = SolveStatus::NumericalFailure;
            return res;
        }

        // Schur complement  M_ij = sum_k tr(A_i X A_j S^-1)
        Matrix M = Matrix::Zero(m, m);
        std::vector<std::vector<Matrix>> W(static_cast<std::size_t>(nblocks));
        for (int k = 0; k < nblocks; ++k) {
            const auto ks = static_cast<std::size_t>(k);
            const auto& b = f.blocks[ks];
            const std::size_t nv = b.A.size();
            W[ks].resize(nv);
            for (std::size_t j = 0; j < nv; ++j) {
                const Matrix u = llt_S[ks].solve(b.A[j].second); // S^-1 A_j
                W[ks][j] = X[ks] * u.transpose();                // X A_j S^-1
            }
            for (std::size_t i = 0; i < nv; ++i)
                for (std::size_t j = 0; j < nv; ++j) {
                    const int vi = b.A[i].first, vj = b.A[j].first;
                    if (vi > vj) continue;
                    M(vi, vj) += (b.A[i].second.cwiseProduct(W[ks][j].transpose())).sum();
                }
        }
        M = M.selfadjointView<Eigen::Upper>();

        Eigen::LDLT<Matrix> ldlt(M);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
            const double reg = 1e-13 * (1.0 + M.trace() / m);
            ldlt.compute(Matrix(M + reg * Matrix::Identity(m, m)));
            if (ldlt.info() != Eigen::Success) {
                res.status = SolveStatus::NumericalFailure;
                return res;
            }
        }

        auto direction = [&](const std::vector<Matrix>& R, std::vector<Matrix>& dX,
                             std::vector<Matrix>& dS, Vector& dy) {
            Vector h = Vector::Zero(m);
            std::vector<Matrix> V(static_cast<std::size_t>(nblocks));
            for (int k = 0; k < nblocks; ++k) {
                const auto ks = static_cast<std::size_t>(k);
                const auto& b = f.blocks[ks];
                const Matrix rhs = R[ks] - X[ks] * r_d[ks];
                V[ks] = llt_S[ks].solve(rhs.transpose()).transpose(); // (R - X r_d) S^-1
                for (const auto& [idx, a] : b.A)
                    h(idx) += (a.cwiseProduct(V[ks].transpose())).sum();
            }
            dy = ldlt.solve(r_p - h);
            dX.assign(static_cast<std::size_t>(nblocks), Matrix());
            dS.assign(static_cast<std::size_t>(nblocks), Matrix());
            for (int k = 0; k < nblocks; ++k) {
                const auto ks = static_cast<std::size_t>(k);
                const auto& b = f.blocks[ks];
                Matrix ds = r_d[ks];
                for (const auto& [idx, a] : b.A) ds -= dy(idx) * a;
                dS[ks] = symmetrize(ds);
                const Matrix rhs = R[ks] - X[ks] * dS[ks];
                dX[ks] = symmetrize(llt_S[ks].solve(rhs.transpose()).transpose());
            }
        };

        // predictor
        std::vector<Matrix> R(static_cast<std::size_t>(nblocks));
        for (int k = 0; k < nblocks; ++k) {
            const auto ks = static_cast<std::size_t>(k);
            R[ks] = -X[ks] * S[ks];
        }
        std::vector<Matrix> dXa, dSa;
        Vector dya;
        direction(R, dXa, dSa, dya);
        const double apa = std::min(1.0, alpha_max(llt_X, dXa));
        const double ada = std::min(1.0, alpha_max(llt_S, dSa));
        double xs_aff = 0.0;
        for (int k = 0; k < nblocks; ++k) {
            const auto ks = static_cast<std::size_t>(k);
            xs_aff += ((X[ks] + apa * dXa[ks]).cwiseProduct(S[ks] + ada * dSa[ks])).sum();
        }
        xs_aff = std::max(xs_aff, 0.0);
        const double sigma =
            std::clamp(std::pow(xs_aff / std::max(xs, 1e-300), 3.0), 1e-12, 1.0);

        // corrector
        for (int k = 0; k < nblocks; ++k) {
            const auto ks = static_cast<std::size_t>(k);
            R[ks] = sigma * mu * Matrix::Identity(f.blocks[ks].dim, f.blocks[ks].dim) -
                    X[ks] * S[ks] - dXa[ks] * dSa[ks];
        }
        std::vector<Matrix> dX, dS;
        Vector dy;
        direction(R, dX, dS, dy);
        const double ap = std::min(1.0, opt.fraction_to_boundary * alpha_max(llt_X, dX));
        const double ad = std::min(1.0, opt.fraction_to_boundary * alpha_max(llt_S, dS));

        if (std::max(ap, ad) < 1e-10) {
            if (++stall >= 3) {
                res.status = SolveStatus::NumericalFailure;
                return res;
            }
        } else {
            stall = 0;
        }

        y += ad * dy;
        for (int k = 0; k < nblocks; ++k) {
            const auto ks = static_cast<std::size_t>(k);
            S[ks] = symmetrize(S[ks] + ad * dS[ks]);
            X[ks] = symmetrize(X[ks] + ap * dX[ks]);
        }
    }
    res.status = SolveStatus::MaxIterations;
    return res;
}

std::vector<double> constraint_margins_at(const SdpProblem& p, const Vector& x) {
    std::vector<double> margins;
    margins.reserve(p.constraints.size());
    for (const auto& c : p.constraints) {
        const Matrix v = symmetrize(c.expr.evaluate(x));
        if (c.sense == ConstraintSense::NegSemidef)
            margins.push_back(-definiteness_margin(v));
        else
            margins.push_back(lambda_min(v));
    }
    return margins;
}

SdpSolution run_phase1(const SdpProblem& problem, const StdForm& base, const SolverOptions& opt,
                       bool allow_early_exit, Vector* interior_out) {
    const int m = base.m;
    StdForm ph1 = with_shift_variable(base, opt.margin_cap);

    Vector y0 = bounds_interior_point(problem);
    double t0 = min_shiftable_margin(base, y0) - 1.0;
    t0 = std::min(t0, opt.margin_cap - 1.0);
    Vector y0p(m + 1);
    y0p << y0, t0;

    double c_scale = 0.0;
    for (const auto& b : base.blocks)
        if (b.shiftable) c_scale = std::max(c_scale, b.C.norm());
    const double exit_target = std::min(1.0, 0.01 * (1.0 + c_scale));

    std::function<bool(const Vector&)> early;
    if (allow_early_exit)
        early = [&](const Vector& y) {
            return min_shiftable_margin(base, y.head(m)) >= exit_target;
        };

    IpResult r = ip_solve(ph1, y0p, opt, early);

    SdpSolution sol;
    sol.x = r.y.head(m);
    sol.iterations = r.iterations;
    sol.duality_gap = r.gap_rel;
    sol.dual_bound = r.pobj;
    sol.objective = min_shiftable_margin(base, sol.x); // achieved shift, re-evaluated
    sol.constraint_margins = constraint_margins_at(problem, sol.x);
    if (r.status == SolveStatus::Optimal) {
        sol.status = sol.objective >= opt.infeasibility_margin ? SolveStatus::Optimal
                                                               : SolveStatus::Infeasible;
    } else if (sol.objective >= std::max(opt.infeasibility_margin, 0.5 * exit_target)) {
        // Not driven to optimality but the achieved shift already certifies a
        // comfortably interior point.
        sol.status = SolveStatus::Optimal;
    } else {
        sol.status = r.status;
    }
    if (interior_out) *interior_out = sol.x;
    return sol;
}

} // namespace

SdpSolution feasibility(const SdpProblem& problem, const SolverOptions& options) {
    StdForm base = build_std_form(problem);
    return run_phase1(problem, base, options, /*allow_early_exit=*/false, nullptr);
}

SdpSolution solve(const SdpProblem& problem, const SolverOptions& options) {
    StdForm base = build_std_form(problem);

    Vector interior;
    SdpSolution ph1 = run_phase1(problem, base, options, /*allow_early_exit=*/true, &interior);
    if (ph1.status == SolveStatus::Infeasible) return ph1;
    if (ph1.status != SolveStatus::Optimal) return ph1;

    const bool has_objective = base.g.lpNorm<Eigen::Infinity>() > 0.0;
    if (!has_objective) {
        ph1.objective = 0.0;
        ph1.dual_bound = 0.0;
        ph1.duality_gap = 0.0;
        return ph1;
    }

    IpResult r = ip_solve(base, interior, options);
    SdpSolution sol;
    sol.status = r.status;
    sol.x = r.y;
    sol.iterations = ph1.iterations + r.iterations;
    const double sign = (problem.sense == Objective::Maximize) ? 1.0 : -1.0;
    sol.objective = sign * r.dobj;
    sol.dual_bound = sign * r.pobj;
    sol.duality_gap = r.gap_rel;
    sol.constraint_margins = constraint_margins_at(problem, sol.x);
    return sol;
}

} // namespace qsd::sdp
