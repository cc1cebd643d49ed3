#pragma once

#include "rk/factor.hpp"
#include "rk/solvers.hpp"

#include <functional>
#include <string>

namespace rk {

enum class HybridMethod { rgmres, rlsqr, rcgls, rlsmr };

/// Projected Tikhonov problem in the common framework
///   x_k(lambda) = basis * (P + lambda^2 I)^{-1} c,
/// with the per-method P, c and the (k+1) x k small matrix (H_k or M_k)
/// entering the residual value phi(lambda).
struct ProjectedTikhonov {
  HybridMethod method = HybridMethod::rlsqr;
  Index k = 0;
  Index ambient_m = 0;
  Index ambient_n = 0;
  Matrix basis;  // n x k solution basis (Q_k or V_k)
  Matrix P;      // k x k; non-symmetric for the rcgls row
  Vector c;      // length k
  Matrix small;  // (k+1) x k: H_k or M_k
  double beta = 0.0;
  double t11 = 0.0;  // rGK rows only
};

/// rGMRES row from an Arnoldi factorization advanced to at least k steps.
ProjectedTikhonov build_projected(const ArnoldiFactorization& f, Index k,
                                  Index ambient_m, Index ambient_n);
/// rLSQR / rCGLS / rLSMR rows from an rGK factorization.
ProjectedTikhonov build_projected(const GKFactorization& f, Index k,
                                  HybridMethod method, Index ambient_m,
                                  Index ambient_n);

struct SmallSolve {
  Vector z;
  bool fallback = false;  // minimum-norm LS fallback was taken
};

/// z(lambda) = (P + lambda^2 I)^{-1} c; singular systems fall back to the
/// minimum-norm least-squares solution, flagged.
SmallSolve solve_small(const ProjectedTikhonov& pt, double lambda);

/// Residual value || small * z(lambda) - beta e1 ||.
double phi(const ProjectedTikhonov& pt, double lambda);

/// Effective-degrees-of-freedom trace trace((P + lambda^2 I)^{-1} P),
/// the cyclic-property k x k form shared by all four method rows.
double trace_term(const ProjectedTikhonov& pt, double lambda);

/// G_w(lambda) = n phi^2 / (m - w t)^2 with the ambient dimensions.
double gcv_value(const ProjectedTikhonov& pt, double lambda, double w);

struct LambdaSelection {
  double lambda = 0.0;
  bool undershoot = false;  // dp: residual target not yet reachable
  bool overshoot = false;   // dp: target above the search interval
  bool flat = false;        // gcv: objective flat across the grid
};

/// Regularization rule. lambda_min/lambda_max are relative bounds, scaled by
/// sqrt(||P||) at selection time.
struct RegRule {
  enum class Kind { fixed, optimal, dp, gcv, wgcv };
  Kind kind = Kind::fixed;
  double lambda = 0.0;  // fixed rule
  double tau = 1.01;    // dp safety factor, > 1
  double w = 1.0;       // wgcv weight when no schedule is plugged in
  std::function<double(const ProjectedTikhonov&)> weight_fn;  // wgcv schedule
  double lambda_min = 1e-10;
  double lambda_max = 1e4;
};

const char* to_string(RegRule::Kind kind);
RegRule::Kind rule_kind_from_string(const std::string& s);

/// Zero finder for phi(lambda) = tau * noise_norm; bisection on log10 lambda
/// to 1e-6 relative in the residual.
LambdaSelection select_lambda_dp(const ProjectedTikhonov& pt, double noise_norm,
                                 double tau, double lambda_min = 1e-10,
                                 double lambda_max = 1e4);

/// Minimizes G_w over a 60-point log grid refined by golden section.
LambdaSelection select_lambda_gcv(const ProjectedTikhonov& pt, double w,
                                  double lambda_min = 1e-10,
                                  double lambda_max = 1e4);

/// Oracle rule: minimizes || x_k(lambda) - x_true || (grid + golden section
/// + the lambda = 0 endpoint).
LambdaSelection select_lambda_optimal(const ProjectedTikhonov& pt,
                                      const Vector& x_true,
                                      double lambda_min = 1e-10,
                                      double lambda_max = 1e4);

/// Hybrid driver: same factorizations as solve(), with per-iteration
/// Tikhonov regularization of the projected problem and lambda chosen by
/// the rule. Deterministic methods map onto the corresponding row (gmres ->
/// rgmres row on the classical Arnoldi basis; lsqr -> rlsqr row with
/// identity sketches).
SolveResult hybrid_solve(const InverseProblem& problem,
                         const SolverConfig& config, const RegRule& rule);

/// Damped variant: rLSQR on the stacked operator [A; lambda I] with data
/// [b; 0] and a single sketch on R^{m+n}.
SolveResult rlsqr_damped_solve(const InverseProblem& problem, double lambda,
                               const SolverConfig& config);

} // namespace rk
