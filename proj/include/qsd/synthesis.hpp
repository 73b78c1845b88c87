#pragma once

#include <optional>
#include <vector>

#include "qsd/plant.hpp"
#include "qsd/sdp.hpp"

namespace qsd {

/// Certificate variables of the jump-contraction condition: P > 0 symmetric,
/// gain K, diagonal sector multipliers S1, S2 (stored as diagonals), rho in (0,1).
struct CertificateVars {
    Matrix P;
    Matrix K;
    Vector S1;
    Vector S2;
    double rho = 0.0;
};

struct TheoremReport {
    bool trace_ok = false;
    bool M_ok = false;
    double trace_residual = 0.0; // Delta^T S1 Delta - rho
    double lambda_max_M = 0.0;
    bool ok() const { return trace_ok && M_ok; }
};

struct SynthesisOptions {
    std::vector<double> rho_grid;      // empty => 0.05, 0.10, ..., 0.95
    double eta_margin_scale = 1e-7;    // strict "< 0" margin: scale * (1 + |constant|)
    double theorem_margin = 1e-8;      // negativity margin used by check_theorem1 callers
    double multiplier_floor = 1e-8;    // lower bound on S1, S2 diagonals
    double rho_bound_gap = 1e-3;       // rho in [gap, 1-gap]
    double p_floor = 1e-9;             // P >= p_floor * I in the subproblem
    double gain_search_p_cap = 1e3;    // ||P|| cap for the gain-only certificate search
    double sigma_safety = 0.9;
    double sigma_cap_over_T = 10.0;
    sdp::SolverOptions sdp;
};

enum class SynthesisStatus { Converged, MaxIterations, SolverFailure };

struct IterationRecord {
    double c = 0.0;              // objective value at this iterate
    double mi2_lambda_max = 0.0; // lambda_max of the bilinear certificate matrix
};

struct SynthesisResult {
    CertificateVars vars;
    double c = 0.0;
    double sigma_star = 0.0;
    int iterations = 0; // completed subproblem solves
    std::vector<IterationRecord> history;
    SynthesisStatus status = SynthesisStatus::SolverFailure;
    bool feasibility_preserved = false; // every iterate kept lambda_max(MI2) <= -eta/2
    double eta_margin = 0.0;            // the strictness margin used by the subproblems
};

/// Raised when the discretized pair fails the PBH test.
struct NotStabilizableError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
/// Raised when a required LMI stage has no solution.
struct InfeasibleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Gamma(P) = exp(A_cl^T T) P exp(A_cl T).
Matrix gamma_of(const Eigen::Ref<const Matrix>& p, const Eigen::Ref<const Matrix>& a_cl, double t);

/// The 2x2-block jump-contraction matrix M of the stability theorem.
Matrix assemble_M(const CertificateVars& vars, const PlantSpec& plant);

/// The equivalent 3x3-block bilinear form (numeric evaluation).
Matrix assemble_MI2(const CertificateVars& vars, const PlantSpec& plant);

/// Evaluates the trace condition Delta^T S1 Delta - rho <= 0 and
/// lambda_max(M) <= -margin.
TheoremReport check_theorem1(const CertificateVars& vars, const PlantSpec& plant,
                             double margin = 1e-8);

/// Largest flow decay rate sigma with (1 - e^{-sigma T}) lambda_max(P) < beta,
/// beta = |lambda_max(M)|, scaled by `safety`; returns cap_over_T/T when the
/// constraint is vacuous. Throws std::invalid_argument unless M < 0.
double sigma_star(const Eigen::Ref<const Matrix>& p, const Eigen::Ref<const Matrix>& m, double t,
                  double safety = 0.9, double cap_over_T = 10.0);

/// Feasibility bootstrap: rho line search over the W/Y LMI (minimizing the top
/// eigenvalue bound l of W), then P = W^-1, K = Y W^-1, then a margin-maximizing
/// solve for S2. Throws NotStabilizableError / InfeasibleError.
CertificateVars initial_design(const PlantSpec& plant, const SynthesisOptions& opts = {});

/// The linear-bilinear split of the certificate matrix: affine expressions
/// L(P,S1,S2), X(rho,K), Y(P,S2) over `vars` (blocks "P","K","S1","S2","rho")
/// with MI2 = L + He(X^T Y).
struct CcpParts {
    sdp::MatrixExpr L;
    sdp::MatrixExpr X;
    sdp::MatrixExpr Y;
};
CcpParts ccp_decompose(const sdp::VarSpace& vars, const PlantSpec& plant);

/// Declares the decision blocks used by the convex-concave subproblem:
/// P (symmetric), K, S1, S2, rho, c.
sdp::VarSpace make_design_space(const PlantSpec& plant, const SynthesisOptions& opts = {});

/// Linear inner approximation of the design problem around eta0 (maximize c).
sdp::SdpProblem linearized_subproblem(const CertificateVars& eta0, const PlantSpec& plant,
                                      const SynthesisOptions& opts = {});

/// Convex-concave iteration: initial_design, then repeated linearized
/// subproblems until |c_{k+1} - c_k| <= epsilon. `k_max` caps the total number
/// of iterates including the initial design (k_max = 1 returns the initial
/// design with MaxIterations status).
SynthesisResult run_algorithm1(const PlantSpec& plant, double epsilon, int k_max,
                               const SynthesisOptions& opts = {});

struct MultiplierResult {
    bool feasible = false;
    Vector S1;
    Vector S2;
    double rho = 0.0;
    double margin = 0.0; // achieved min constraint margin
};

/// With (P, K) fixed the certificate conditions are jointly affine in
/// (S1, S2, rho); margin-maximizing search for multipliers.
MultiplierResult find_multipliers(const Eigen::Ref<const Matrix>& p,
                                  const Eigen::Ref<const Matrix>& k, const PlantSpec& plant,
                                  const SynthesisOptions& opts = {});

/// Certificate search for an externally supplied gain: rho line search with a
/// margin-maximizing solve over (P, S1, S2) at each grid point (P capped at
/// opts.gain_search_p_cap * I to keep the search bounded).
std::optional<CertificateVars> find_certificate_for_gain(const Eigen::Ref<const Matrix>& k,
                                                         const PlantSpec& plant,
                                                         const SynthesisOptions& opts = {});

} // namespace qsd
