#pragma once

#include "rk/factor.hpp"
#include "rk/history.hpp"
#include "rk/linop.hpp"
#include "rk/sketch.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rk {

enum class Method { gmres, rgmres, lsqr, rlsqr, rcgls, rlsmr };

const char* to_string(Method m);
Method method_from_string(const std::string& s);

bool is_randomized(Method m);
/// Square-operator methods (Arnoldi-based) vs rectangular (Golub-Kahan).
bool is_arnoldi_based(Method m);

struct SolverConfig {
  Method method = Method::rlsqr;
  Index max_iters = 50;
  std::optional<Index> ell_n;  // default: embedding_dim_default(n, K)
  std::optional<Index> ell_m;  // default: embedding_dim_default(m, K)
  SketchKind sketch_kind = SketchKind::gaussian;
  std::uint64_t seed = 0;
  double breakdown_tol = 1e-14;
  bool record_true_residuals = false;
  GSOptions gs;
};

/// Result of an un-regularized (or hybrid) solve. Solutions are materialized
/// lazily from the stored projected solutions z_k and the basis.
struct SolveResult {
  Method method = Method::rlsqr;
  std::optional<ArnoldiFactorization> arnoldi;
  std::optional<GKFactorization> gk;
  std::optional<GKBFactorization> gkb;  // deterministic lsqr baseline
  std::vector<Vector> z;                // z_k for k = 1..iterations()
  IterationHistory history;
  std::vector<std::string> warnings;
  bool breakdown = false;

  Index iterations() const { return static_cast<Index>(z.size()); }
  /// x_k = basis_k * z_k, 1-based k; empty z_k (skipped iterate) throws.
  Vector solution_at(Index k) const;
};

/// Resolved sketch dimensions for a solve; warns (not errors) when an
/// explicit ell is below K+1, since undersized embeddings are a legitimate
/// degradation study.
struct SketchDims {
  Index ell_n = 0;
  Index ell_m = 0;
  std::vector<std::string> warnings;
};
SketchDims resolve_sketch_dims(const SolverConfig& config, Index m, Index n);

SolveResult rgmres_solve(const InverseProblem& problem, const SolverConfig& config);
SolveResult gmres_solve(const InverseProblem& problem, const SolverConfig& config);
SolveResult rlsqr_solve(const InverseProblem& problem, const SolverConfig& config);
SolveResult rcgls_solve(const InverseProblem& problem, const SolverConfig& config);
SolveResult rlsmr_solve(const InverseProblem& problem, const SolverConfig& config);
/// Deterministic LSQR on the reorthogonalized Golub-Kahan factorization.
SolveResult lsqr_solve(const InverseProblem& problem, const SolverConfig& config);

/// Dispatch on config.method.
SolveResult solve(const InverseProblem& problem, const SolverConfig& config);

/// One row of the projected-SVD study: panel is "reference" (singular values
/// of A), "rlsqr" (sigma(M_k)), "rcgls" (sqrt sigma(T~_{k+1} M_k)) or
/// "rlsmr" (sqrt sigma(T_{k+1} M_k)); idx is 1-based descending.
struct SvdApproxRow {
  std::string panel;
  Index k = 0;
  Index idx = 0;
  double value = 0.0;
};

/// Projected singular-value table for the requested iteration counts; the
/// reference panel is a dense SVD of A (desk scale only).
std::vector<SvdApproxRow> svd_approx_report(const GKFactorization& f,
                                            const LinearOperator& A,
                                            const std::vector<Index>& ks);

void write_csv(const std::vector<SvdApproxRow>& rows, const std::string& path);

} // namespace rk
