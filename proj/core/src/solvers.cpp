#include "rk/solvers.hpp"
#include "rk/rng.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace rk {

const char* to_string(Method m) {
  switch (m) {
    case Method::gmres: return "gmres";
    case Method::rgmres: return "rgmres";
    case Method::lsqr: return "lsqr";
    case Method::rlsqr: return "rlsqr";
    case Method::rcgls: return "rcgls";
    case Method::rlsmr: return "rlsmr";
  }
  return "?";
}

Method method_from_string(const std::string& s) {
  if (s == "gmres") return Method::gmres;
  if (s == "rgmres") return Method::rgmres;
  if (s == "lsqr") return Method::lsqr;
  if (s == "rlsqr") return Method::rlsqr;
  if (s == "rcgls") return Method::rcgls;
  if (s == "rlsmr") return Method::rlsmr;
  throw std::invalid_argument("unknown method: " + s);
}

bool is_randomized(Method m) {
  return m == Method::rgmres || m == Method::rlsqr || m == Method::rcgls ||
         m == Method::rlsmr;
}

bool is_arnoldi_based(Method m) {
  return m == Method::gmres || m == Method::rgmres;
}

Vector SolveResult::solution_at(Index k) const {
  if (k < 1 || k > iterations())
    throw std::out_of_range("solution_at: iteration out of range");
  const Vector& zk = z[static_cast<std::size_t>(k - 1)];
  if (zk.size() == 0)
    throw std::runtime_error("solution_at: iterate was skipped (singular projected system)");
  if (arnoldi) return arnoldi->Q.leftCols(k) * zk;
  if (gk) return gk->V.leftCols(k) * zk;
  if (gkb) return gkb->V.leftCols(k) * zk;
  throw std::logic_error("solution_at: no factorization stored");
}

SketchDims resolve_sketch_dims(const SolverConfig& config, Index m, Index n) {
  SketchDims d;
  if (config.max_iters < 1)
    throw std::invalid_argument("solver: max_iters must be >= 1");
  if (config.sketch_kind == SketchKind::identity) {
    d.ell_n = n;
    d.ell_m = m;
    return d;
  }
  const Index K = config.max_iters;
  auto resolve_one = [&](std::optional<Index> given, Index ambient,
                         const char* name) {
    Index ell = given ? *given
                      : embedding_dim_default(ambient, std::max<Index>(K, 2));
    if (ell < 1) throw std::invalid_argument("solver: sketch dim must be >= 1");
    if (ell > ambient) {
      d.warnings.push_back(std::string(name) +
                           " exceeds the ambient dimension; clamped");
      ell = ambient;
    }
    if (ell < K + 1)
      d.warnings.push_back(std::string(name) +
                           " below K+1: the sketch cannot embed the full "
                           "Krylov subspace");
    return ell;
  };
  d.ell_n = resolve_one(config.ell_n, n, "ell_n");
  d.ell_m = resolve_one(config.ell_m, m, "ell_m");
  return d;
}

namespace {

struct RowExtras {
  double true_residual = std::numeric_limits<double>::quiet_NaN();
  double rel_error = std::numeric_limits<double>::quiet_NaN();
};

RowExtras compute_extras(const InverseProblem& problem, const Vector& x,
                         bool want_true_residual) {
  RowExtras e;
  if (want_true_residual)
    e.true_residual = (problem.op.apply(x) - problem.b).norm();
  if (problem.x_true && problem.x_true->norm() > 0.0)
    e.rel_error = (x - *problem.x_true).norm() / problem.x_true->norm();
  return e;
}

/// min_z || H z - beta e1 || for an (r+1) x r block, by Householder QR.
Vector small_ls(const Eigen::Ref<const Matrix>& H, double beta, double* obj) {
  Vector rhs = Vector::Zero(H.rows());
  rhs[0] = beta;
  Vector z = H.householderQr().solve(rhs);
  if (obj) *obj = (H * z - rhs).norm();
  return z;
}

SolveResult arnoldi_solve_impl(const InverseProblem& problem,
                               const SolverConfig& config, bool randomized) {
  const LinearOperator& A = problem.op;
  if (A.rows() != A.cols())
    throw std::invalid_argument("gmres: operator must be square");
  const Index K = config.max_iters;

  SolveResult res;
  res.method = randomized ? Method::rgmres : Method::gmres;

  SketchOperator theta = SketchOperator::identity(A.cols());
  if (randomized) {
    const SketchDims dims = resolve_sketch_dims(config, A.rows(), A.cols());
    res.warnings = dims.warnings;
    theta = SketchOperator::make(config.sketch_kind, A.cols(), dims.ell_n,
                                 derive_seed(config.seed, "theta_n"));
  }

  ArnoldiFactorization f =
      randomized
          ? rarnoldi_init(A, problem.b, theta, K, config.breakdown_tol)
          : arnoldi_init(A, problem.b, K, config.breakdown_tol);

  for (Index k = 1; k <= K && !f.breakdown; ++k) {
    if (randomized)
      rarnoldi_step(f, A, theta, config.gs);
    else
      arnoldi_step(f, A);
    // The projected problem at k is well defined even on happy breakdown.
    double obj = 0.0;
    Vector zk = small_ls(f.H.topLeftCorner(k + 1, k), f.beta, &obj);

    IterationRecord row;
    row.k = k;
    row.projected_objective = obj;
    row.sketched_residual = obj;
    if (config.record_true_residuals || problem.x_true) {
      const Vector x = f.Q.leftCols(k) * zk;
      const RowExtras e =
          compute_extras(problem, x, config.record_true_residuals);
      row.true_residual = e.true_residual;
      row.rel_error = e.rel_error;
    }
    res.z.push_back(std::move(zk));
    res.history.rows.push_back(std::move(row));
  }
  res.breakdown = f.breakdown;
  res.arnoldi = std::move(f);
  return res;
}

SolveResult gk_solve_impl(const InverseProblem& problem,
                          const SolverConfig& config, Method method) {
  const LinearOperator& A = problem.op;
  const Index K = config.max_iters;

  SolveResult res;
  res.method = method;
  const SketchDims dims = resolve_sketch_dims(config, A.rows(), A.cols());
  res.warnings = dims.warnings;
  const SketchOperator theta_n =
      SketchOperator::make(config.sketch_kind, A.cols(), dims.ell_n,
                           derive_seed(config.seed, "theta_n"));
  const SketchOperator theta_m =
      SketchOperator::make(config.sketch_kind, A.rows(), dims.ell_m,
                           derive_seed(config.seed, "theta_m"));

  GKFactorization f =
      rgk_init(A, problem.b, theta_n, theta_m, K, config.breakdown_tol);

  for (Index k = 1; k <= K && !f.breakdown; ++k) {
    rgk_step(f, A, theta_n, theta_m, config.gs);
    // On a U-phase breakdown T_{k+1} is incomplete; only rLSQR (which uses
    // M_k alone) can still form iterate k.
    const bool have_T = f.ucols == k + 1;
    const auto Mk = f.M.topLeftCorner(k + 1, k);

    Vector zk;
    double obj = std::numeric_limits<double>::quiet_NaN();
    std::string flags;
    if (method == Method::rlsqr) {
      zk = small_ls(Mk, f.beta, &obj);
    } else if (!have_T) {
      break;  // no iterate at this k
    } else if (method == Method::rcgls) {
      // T~_{k+1} M_k z = beta t11 e1 (square, generally non-symmetric).
      const Matrix B = f.T.topLeftCorner(k, k + 1) * Mk;
      Vector rhs = Vector::Zero(k);
      rhs[0] = f.beta * f.t11;
      Vector cand = B.partialPivLu().solve(rhs);
      if (!cand.allFinite() ||
          (B * cand - rhs).norm() > 1e-8 * std::max(rhs.norm(), 1.0)) {
        flags = "singular";
      } else {
        zk = std::move(cand);
      }
    } else {  // rlsmr
      const Matrix G = f.T.topLeftCorner(k + 1, k + 1) * Mk;
      zk = small_ls(G, f.beta * f.t11, &obj);
    }

    IterationRecord row;
    row.k = k;
    row.flags = flags;
    row.projected_objective = obj;
    if (zk.size() > 0) {
      Vector rhs = Vector::Zero(k + 1);
      rhs[0] = f.beta;
      row.sketched_residual = (Mk * zk - rhs).norm();
      if (config.record_true_residuals || problem.x_true) {
        const Vector x = f.V.leftCols(k) * zk;
        const RowExtras e =
            compute_extras(problem, x, config.record_true_residuals);
        row.true_residual = e.true_residual;
        row.rel_error = e.rel_error;
      }
    }
    res.z.push_back(std::move(zk));
    res.history.rows.push_back(std::move(row));
  }
  res.breakdown = f.breakdown;
  res.gk = std::move(f);
  return res;
}

} // namespace

SolveResult rgmres_solve(const InverseProblem& problem, const SolverConfig& config) {
  return arnoldi_solve_impl(problem, config, true);
}

SolveResult gmres_solve(const InverseProblem& problem, const SolverConfig& config) {
  return arnoldi_solve_impl(problem, config, false);
}

SolveResult rlsqr_solve(const InverseProblem& problem, const SolverConfig& config) {
  return gk_solve_impl(problem, config, Method::rlsqr);
}

SolveResult rcgls_solve(const InverseProblem& problem, const SolverConfig& config) {
  return gk_solve_impl(problem, config, Method::rcgls);
}

SolveResult rlsmr_solve(const InverseProblem& problem, const SolverConfig& config) {
  return gk_solve_impl(problem, config, Method::rlsmr);
}

SolveResult lsqr_solve(const InverseProblem& problem, const SolverConfig& config) {
  const LinearOperator& A = problem.op;
  const Index K = config.max_iters;
  SolveResult res;
  res.method = Method::lsqr;
  GKBFactorization f = gkb_init(A, problem.b, K, /*reorthogonalize=*/true,
                                config.breakdown_tol);
  for (Index k = 1; k <= K && !f.breakdown; ++k) {
    gkb_step(f, A);
    if (f.vcols < k) break;
    double obj = 0.0;
    Vector zk = small_ls(f.B.topLeftCorner(k + 1, k), f.beta, &obj);
    IterationRecord row;
    row.k = k;
    row.projected_objective = obj;
    row.sketched_residual = obj;
    if (config.record_true_residuals || problem.x_true) {
      const Vector x = f.V.leftCols(k) * zk;
      const RowExtras e =
          compute_extras(problem, x, config.record_true_residuals);
      row.true_residual = e.true_residual;
      row.rel_error = e.rel_error;
    }
    res.z.push_back(std::move(zk));
    res.history.rows.push_back(std::move(row));
  }
  res.breakdown = f.breakdown;
  res.gkb = std::move(f);
  return res;
}

SolveResult solve(const InverseProblem& problem, const SolverConfig& config) {
  switch (config.method) {
    case Method::gmres: return gmres_solve(problem, config);
    case Method::rgmres: return rgmres_solve(problem, config);
    case Method::lsqr: return lsqr_solve(problem, config);
    case Method::rlsqr: return rlsqr_solve(problem, config);
    case Method::rcgls: return rcgls_solve(problem, config);
    case Method::rlsmr: return rlsmr_solve(problem, config);
  }
  throw std::invalid_argument("bad method");
}

std::vector<SvdApproxRow> svd_approx_report(const GKFactorization& f,
                                            const LinearOperator& A,
                                            const std::vector<Index>& ks) {
  std::vector<SvdApproxRow> rows;

  const Matrix dense = A.materialize();
  Eigen::JacobiSVD<Matrix> ref(dense);
  const auto& sig = ref.singularValues();
  for (Index i = 0; i < sig.size(); ++i)
    rows.push_back({"reference", 0, i + 1, sig[i]});

  auto emit = [&rows](const std::string& panel, Index k, const Vector& vals,
                      bool take_sqrt) {
    for (Index i = 0; i < vals.size(); ++i)
      rows.push_back({panel, k, i + 1,
                      take_sqrt ? std::sqrt(vals[i]) : vals[i]});
  };

  for (Index k : ks) {
    if (k < 1 || k > f.k)
      throw std::invalid_argument("svd_approx_report: k outside factorization range");
    const Matrix Mk = f.M.topLeftCorner(k + 1, k);
    emit("rlsqr", k, Eigen::JacobiSVD<Matrix>(Mk).singularValues(), false);
    if (f.ucols >= k + 1) {
      const Matrix Bc = f.T.topLeftCorner(k, k + 1) * Mk;
      emit("rcgls", k, Eigen::JacobiSVD<Matrix>(Bc).singularValues(), true);
      const Matrix G = f.T.topLeftCorner(k + 1, k + 1) * Mk;
      emit("rlsmr", k, Eigen::JacobiSVD<Matrix>(G).singularValues(), true);
    }
  }
  return rows;
}

void write_csv(const std::vector<SvdApproxRow>& rows, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << "panel,k,idx,value\n";
  for (const auto& r : rows)
    os << r.panel << ',' << r.k << ',' << r.idx << ','
       << format_double(r.value) << '\n';
  if (!os) throw std::runtime_error("write failed: " + path);
}

} // namespace rk
