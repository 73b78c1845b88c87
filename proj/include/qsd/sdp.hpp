#pragma once

#include <limits>
#include <map>
#include <string>
#include <vector>

#include "qsd/linalg.hpp"

namespace qsd::sdp {

enum class BlockKind { Scalar, Symmetric, Diagonal, Rectangular };

struct VarBlock {
    std::string name;
    BlockKind kind = BlockKind::Scalar;
    int rows = 1;
    int cols = 1;
    int offset = 0; // first scalar parameter index
    int size = 1;   // number of scalar parameters
    std::vector<double> lower; // elementwise, size() == size (may be -inf)
    std::vector<double> upper; // elementwise, size() == size (may be +inf)
};

class MatrixExpr; // below

/// Ordered collection of named decision blocks, flattened to scalar parameters.
/// Symmetric blocks store the lower triangle column-major; diagonal blocks the
/// diagonal; rectangular blocks are row-major.
class VarSpace {
  public:
    static constexpr double kInf = std::numeric_limits<double>::infinity();

    int add_scalar(const std::string& name, double lower = -kInf, double upper = kInf);
    int add_symmetric(const std::string& name, int n);
    int add_diagonal(const std::string& name, int n, double lower = -kInf);
    int add_rectangular(const std::string& name, int rows, int cols);

    int num_scalars() const { return total_; }
    const VarBlock& block(const std::string& name) const;
    const std::vector<VarBlock>& blocks() const { return blocks_; }

    /// The named block as an affine matrix expression in its own parameters.
    MatrixExpr expr(const std::string& name) const;
    /// x_name * M for a scalar variable (affine: single coefficient M).
    MatrixExpr scalar_times(const std::string& name, const Matrix& coefficient) const;

    /// Extract the named block's value from a full assignment.
    Matrix value(const std::string& name, const Eigen::Ref<const Vector>& x) const;
    /// Write the named block's value into a full assignment.
    void set_value(const std::string& name, const Eigen::Ref<const Matrix>& v, Vector& x) const;

  private:
    int add_block(VarBlock b);
    std::vector<VarBlock> blocks_;
    std::map<std::string, int> index_;
    int total_ = 0;
};

/// Affine matrix-valued expression constant + sum_i x_i * Coeff_i. Products are
/// only allowed against constant matrices, which keeps every expression affine.
class MatrixExpr {
  public:
    MatrixExpr() = default;
    static MatrixExpr constant(const Matrix& c);
    static MatrixExpr zero(int rows, int cols);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    const Matrix& constant_term() const { return constant_; }
    const std::map<int, Matrix>& coefficients() const { return coeff_; }

    Matrix evaluate(const Eigen::Ref<const Vector>& x) const;

    MatrixExpr transpose() const;
    MatrixExpr operator-() const;
    MatrixExpr operator+(const MatrixExpr& rhs) const;
    MatrixExpr operator-(const MatrixExpr& rhs) const;
    MatrixExpr scaled(double s) const;
    /// He(E) = E + E^T (square expressions only).
    MatrixExpr he() const;
    /// Constant-by-expression products.
    friend MatrixExpr operator*(const Matrix& lhs, const MatrixExpr& rhs);
    friend MatrixExpr operator*(const MatrixExpr& lhs, const Matrix& rhs);

    /// Block assembly from a grid of expressions (rows of blocks).
    static MatrixExpr assemble(const std::vector<std::vector<MatrixExpr>>& grid);

    bool is_symmetric(double tol = 1e-12) const;

  private:
    friend class VarSpace;
    int rows_ = 0, cols_ = 0;
    Matrix constant_; // rows_ x cols_
    std::map<int, Matrix> coeff_;
};

enum class ConstraintSense {
    NegSemidef, // expr <= -margin * I
    PosSemidef  // expr >= +margin * I
};

struct MatrixConstraint {
    MatrixExpr expr; // symmetric
    ConstraintSense sense = ConstraintSense::NegSemidef;
    double margin = 0.0;
    std::string label;
};

/// a^T x + b <= 0
struct LinearInequality {
    Vector a;
    double b = 0.0;
    std::string label;
};

enum class Objective { Minimize, Maximize };

struct SdpProblem {
    VarSpace vars;
    Objective sense = Objective::Maximize;
    Vector objective; // size num_scalars (zero => pure feasibility)
    std::vector<MatrixConstraint> constraints;
    std::vector<LinearInequality> inequalities;

    void add_constraint(MatrixExpr expr, ConstraintSense sense, double margin = 0.0,
                        std::string label = {});
    void add_inequality(Vector a, double b, std::string label = {});
};

enum class SolveStatus { Optimal, Infeasible, MaxIterations, NumericalFailure };

const char* to_string(SolveStatus s);

struct SdpSolution {
    SolveStatus status = SolveStatus::NumericalFailure;
    Vector x;                  // assignment of all scalar parameters
    double objective = 0.0;    // user-sense objective value at x
    double dual_bound = 0.0;   // other-side bound from the interior-point pairing
    double duality_gap = 0.0;  // |objective - dual_bound| / (1 + |..| + |..|)
    int iterations = 0;
    /// Per matrix constraint: -lambda_max(expr) for NegSemidef, lambda_min(expr)
    /// for PosSemidef (so feasible means margin >= constraint.margin).
    std::vector<double> constraint_margins;

    bool ok() const { return status == SolveStatus::Optimal; }
};

struct SolverOptions {
    double kkt_tol = 1e-8;
    double gap_tol = 1e-8;
    int max_iterations = 200;
    double fraction_to_boundary = 0.98;
    double margin_cap = 1e8;          // upper bound on the phase-I shift variable
    double infeasibility_margin = 1e-9; // phase-I optimum below this => infeasible
    bool trace = false;
};

/// Evaluate an affine matrix expression; the result is exactly symmetrized.
/// Throws std::invalid_argument when the assignment does not cover all variables.
Matrix evaluate(const MatrixExpr& expr, const Eigen::Ref<const Vector>& assignment);

/// Primal-dual path-following solve (HKM direction, Mehrotra predictor-corrector).
SdpSolution solve(const SdpProblem& problem, const SolverOptions& options = {});

/// Margin maximization: maximize the auxiliary shift t such that every matrix
/// constraint and inequality holds with slack t beyond its own margin. The
/// reported objective is t*; status is Infeasible when t* falls below
/// options.infeasibility_margin.
SdpSolution feasibility(const SdpProblem& problem, const SolverOptions& options = {});

} // namespace qsd::sdp
