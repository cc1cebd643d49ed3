#include "rk/hybrid.hpp"
#include "rk/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace rk {

const char* to_string(RegRule::Kind kind) {
  switch (kind) {
    case RegRule::Kind::fixed: return "fixed";
    case RegRule::Kind::optimal: return "optimal";
    case RegRule::Kind::dp: return "dp";
    case RegRule::Kind::gcv: return "gcv";
    case RegRule::Kind::wgcv: return "wgcv";
  }
  return "?";
}

RegRule::Kind rule_kind_from_string(const std::string& s) {
  if (s == "fixed") return RegRule::Kind::fixed;
  if (s == "optimal") return RegRule::Kind::optimal;
  if (s == "dp") return RegRule::Kind::dp;
  if (s == "gcv") return RegRule::Kind::gcv;
  if (s == "wgcv") return RegRule::Kind::wgcv;
  throw std::invalid_argument("unknown regularization rule: " + s);
}

ProjectedTikhonov build_projected(const ArnoldiFactorization& f, Index k,
                                  Index ambient_m, Index ambient_n) {
  if (k < 1 || k > f.k)
    throw std::invalid_argument("build_projected: k outside factorization range");
  ProjectedTikhonov pt;
  pt.method = HybridMethod::rgmres;
  pt.k = k;
  pt.ambient_m = ambient_m;
  pt.ambient_n = ambient_n;
  pt.basis = f.Q.leftCols(k);
  pt.small = f.H.topLeftCorner(k + 1, k);
  pt.P = pt.small.transpose() * pt.small;
  pt.c = f.beta * pt.small.row(0).transpose();
  pt.beta = f.beta;
  return pt;
}

ProjectedTikhonov build_projected(const GKFactorization& f, Index k,
                                  HybridMethod method, Index ambient_m,
                                  Index ambient_n) {
  if (method == HybridMethod::rgmres)
    throw std::invalid_argument("build_projected: rgmres row needs an Arnoldi factorization");
  if (k < 1 || k > f.k)
    throw std::invalid_argument("build_projected: k outside factorization range");
  const bool needs_T = method != HybridMethod::rlsqr;
  if (needs_T && f.ucols < k + 1)
    throw std::invalid_argument("build_projected: T incomplete at this k (U-phase breakdown)");

  ProjectedTikhonov pt;
  pt.method = method;
  pt.k = k;
  pt.ambient_m = ambient_m;
  pt.ambient_n = ambient_n;
  pt.basis = f.V.leftCols(k);
  pt.small = f.M.topLeftCorner(k + 1, k);
  pt.beta = f.beta;
  pt.t11 = f.t11;
  switch (method) {
    case HybridMethod::rlsqr:
      pt.P = pt.small.transpose() * pt.small;
      pt.c = f.beta * pt.small.row(0).transpose();
      break;
    case HybridMethod::rcgls: {
      // T~_{k+1} drops the last row of T_{k+1}.
      pt.P = f.T.topLeftCorner(k, k + 1) * pt.small;
      pt.c = Vector::Zero(k);
      pt.c[0] = f.beta * f.t11;
      break;
    }
    case HybridMethod::rlsmr: {
      const Matrix G = f.T.topLeftCorner(k + 1, k + 1) * pt.small;
      pt.P = G.transpose() * G;
      pt.c = f.beta * f.t11 * G.row(0).transpose();
      break;
    }
    default: break;
  }
  return pt;
}

SmallSolve solve_small(const ProjectedTikhonov& pt, double lambda) {
  const Index k = pt.k;
  const Matrix W = pt.P + lambda * lambda * Matrix::Identity(k, k);
  SmallSolve out;
  if (pt.method == HybridMethod::rcgls)
    out.z = W.partialPivLu().solve(pt.c);
  else
    out.z = W.ldlt().solve(pt.c);
  const double cn = std::max(pt.c.norm(), 1e-300);
  if (!out.z.allFinite() || (W * out.z - pt.c).norm() > 1e-8 * cn) {
    // Singular (typically lambda = 0 with rank-deficient P): minimum-norm LS.
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(W);
    out.z = cod.solve(pt.c);
    out.fallback = true;
  }
  return out;
}

double phi(const ProjectedTikhonov& pt, double lambda) {
  const Vector z = solve_small(pt, lambda).z;
  Vector rhs = Vector::Zero(pt.small.rows());
  rhs[0] = pt.beta;
  return (pt.small * z - rhs).norm();
}

double trace_term(const ProjectedTikhonov& pt, double lambda) {
  const Index k = pt.k;
  const Matrix W = pt.P + lambda * lambda * Matrix::Identity(k, k);
  Matrix X;
  if (pt.method == HybridMethod::rcgls)
    X = W.partialPivLu().solve(pt.P);
  else
    X = W.ldlt().solve(pt.P);
  if (!X.allFinite())
    X = Eigen::CompleteOrthogonalDecomposition<Matrix>(W).solve(pt.P);
  return X.trace();
}

double gcv_value(const ProjectedTikhonov& pt, double lambda, double w) {
  const double r = phi(pt, lambda);
  const double denom =
      static_cast<double>(pt.ambient_m) - w * trace_term(pt, lambda);
  return static_cast<double>(pt.ambient_n) * r * r / (denom * denom);
}

namespace {

double lambda_scale(const ProjectedTikhonov& pt) {
  const double nrm = pt.P.norm();
  return nrm > 0.0 ? std::sqrt(nrm) : 1.0;
}

/// Golden-section minimization over log lambda, ~1e-4 relative in lambda.
double golden_min_log(double lo, double hi,
                      const std::function<double(double)>& f) {
  double a = std::log(lo), b = std::log(hi);
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = f(std::exp(c)), fd = f(std::exp(d));
  while (b - a > 1e-4) {
    if (fc < fd) {
      b = d; d = c; fd = fc;
      c = b - gr * (b - a); fc = f(std::exp(c));
    } else {
      a = c; c = d; fc = fd;
      d = a + gr * (b - a); fd = f(std::exp(d));
    }
  }
  return std::exp(0.5 * (a + b));
}

struct GridMin {
  std::vector<double> lambdas;
  std::vector<double> values;
  std::size_t argmin = 0;
};

GridMin eval_log_grid(double lo, double hi, int points,
                      const std::function<double(double)>& f) {
  GridMin g;
  const double la = std::log(lo), lb = std::log(hi);
  for (int i = 0; i < points; ++i) {
    const double lam = std::exp(la + (lb - la) * i / (points - 1));
    g.lambdas.push_back(lam);
    g.values.push_back(f(lam));
    if (g.values.back() < g.values[g.argmin]) g.argmin = g.values.size() - 1;
  }
  return g;
}

} // namespace

LambdaSelection select_lambda_dp(const ProjectedTikhonov& pt, double noise_norm,
                                 double tau, double lambda_min,
                                 double lambda_max) {
  if (tau <= 1.0) throw std::invalid_argument("select_lambda_dp: tau must be > 1");
  if (noise_norm < 0.0)
    throw std::invalid_argument("select_lambda_dp: noise_norm must be >= 0");
  const double target = tau * noise_norm;
  const double rel_tol = 1e-6;
  LambdaSelection sel;

  const double phi0 = phi(pt, 0.0);
  if (phi0 >= target) {
    // Residual already above the discrepancy at lambda = 0: the target is
    // not reachable at this k unless we happen to sit exactly on it.
    sel.lambda = 0.0;
    sel.undershoot = std::abs(phi0 - target) > rel_tol * std::max(target, 1e-300);
    return sel;
  }

  const double s = lambda_scale(pt);
  const double lo = lambda_min * s, hi = lambda_max * s;
  const double phihi = phi(pt, hi);
  if (phihi < target) {
    sel.lambda = hi;
    sel.overshoot = true;
    return sel;
  }

  // Bracket validity probe: phi should be non-decreasing in lambda.
  {
    double prev = phi0;
    for (int i = 0; i < 12; ++i) {
      const double lam = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / 11.0);
      const double cur = phi(pt, lam);
      if (cur < prev * (1.0 - 1e-9))
        throw std::runtime_error("select_lambda_dp: phi not monotone on the probe grid");
      prev = cur;
    }
  }

  auto done = [&](double value) {
    return std::abs(value - target) <= rel_tol * std::max(target, 1e-300);
  };

  if (phi(pt, lo) >= target) {
    // Root below the log interval: plain bisection on [0, lo].
    double a = 0.0, b = lo;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (a + b);
      const double value = phi(pt, mid);
      if (done(value)) { sel.lambda = mid; return sel; }
      (value < target ? a : b) = mid;
    }
    sel.lambda = 0.5 * (a + b);
    return sel;
  }

  double a = std::log10(lo), b = std::log10(hi);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (a + b);
    const double lam = std::pow(10.0, mid);
    const double value = phi(pt, lam);
    if (done(value)) { sel.lambda = lam; return sel; }
    (value < target ? a : b) = mid;
  }
  sel.lambda = std::pow(10.0, 0.5 * (a + b));
  return sel;
}

LambdaSelection select_lambda_gcv(const ProjectedTikhonov& pt, double w,
                                  double lambda_min, double lambda_max) {
  if (w <= 0.0) throw std::invalid_argument("select_lambda_gcv: w must be > 0");
  const double s = lambda_scale(pt);
  const double lo = lambda_min * s, hi = lambda_max * s;
  auto f = [&](double lam) { return gcv_value(pt, lam, w); };

  const GridMin g = eval_log_grid(lo, hi, 60, f);
  const double vmin = g.values[g.argmin];
  const double vmax = *std::max_element(g.values.begin(), g.values.end());
  LambdaSelection sel;
  if (vmax - vmin <= 1e-10 * std::max(std::abs(vmax), 1e-300)) {
    sel.lambda = g.lambdas[g.argmin];
    sel.flat = true;
    return sel;
  }
  const std::size_t i = g.argmin;
  const double a = g.lambdas[i > 0 ? i - 1 : i];
  const double b = g.lambdas[i + 1 < g.lambdas.size() ? i + 1 : i];
  sel.lambda = (a < b) ? golden_min_log(a, b, f) : g.lambdas[i];
  if (f(g.lambdas[i]) < f(sel.lambda)) sel.lambda = g.lambdas[i];
  return sel;
}

LambdaSelection select_lambda_optimal(const ProjectedTikhonov& pt,
                                      const Vector& x_true, double lambda_min,
                                      double lambda_max) {
  if (x_true.size() != pt.basis.rows())
    throw std::invalid_argument("select_lambda_optimal: x_true length mismatch");
  auto err = [&](double lam) {
    return (pt.basis * solve_small(pt, lam).z - x_true).norm();
  };
  const double s = lambda_scale(pt);
  const double lo = lambda_min * s, hi = lambda_max * s;
  const GridMin g = eval_log_grid(lo, hi, 60, err);
  const std::size_t i = g.argmin;
  const double a = g.lambdas[i > 0 ? i - 1 : i];
  const double b = g.lambdas[i + 1 < g.lambdas.size() ? i + 1 : i];
  LambdaSelection sel;
  sel.lambda = (a < b) ? golden_min_log(a, b, err) : g.lambdas[i];
  if (err(g.lambdas[i]) < err(sel.lambda)) sel.lambda = g.lambdas[i];
  if (err(0.0) <= err(sel.lambda)) sel.lambda = 0.0;  // unregularized endpoint
  return sel;
}

namespace {

struct Picked {
  LambdaSelection sel;
  std::string tau_or_w;
};

Picked pick_lambda(const ProjectedTikhonov& pt, const RegRule& rule,
                   const InverseProblem& problem) {
  Picked p;
  switch (rule.kind) {
    case RegRule::Kind::fixed:
      p.sel.lambda = rule.lambda;
      break;
    case RegRule::Kind::optimal:
      if (!problem.x_true)
        throw std::invalid_argument("optimal rule requires x_true");
      p.sel = select_lambda_optimal(pt, *problem.x_true, rule.lambda_min,
                                    rule.lambda_max);
      break;
    case RegRule::Kind::dp:
      if (!problem.noise_norm)
        throw std::invalid_argument("dp rule requires noise_norm");
      p.sel = select_lambda_dp(pt, *problem.noise_norm, rule.tau,
                               rule.lambda_min, rule.lambda_max);
      p.tau_or_w = format_double(rule.tau);
      break;
    case RegRule::Kind::gcv:
      p.sel = select_lambda_gcv(pt, 1.0, rule.lambda_min, rule.lambda_max);
      p.tau_or_w = "1";
      break;
    case RegRule::Kind::wgcv: {
      const double w = rule.weight_fn ? rule.weight_fn(pt) : rule.w;
      p.sel = select_lambda_gcv(pt, w, rule.lambda_min, rule.lambda_max);
      p.tau_or_w = format_double(w);
      break;
    }
  }
  return p;
}

std::string join_flags(const LambdaSelection& sel, bool fallback) {
  std::string f;
  auto add = [&f](const char* s) {
    if (!f.empty()) f += ';';
    f += s;
  };
  if (sel.undershoot) add("undershoot");
  if (sel.overshoot) add("overshoot");
  if (sel.flat) add("flat");
  if (fallback) add("fallback");
  return f;
}

IterationRecord make_hybrid_row(const ProjectedTikhonov& pt,
                                const Picked& picked, const RegRule& rule,
                                const SmallSolve& small,
                                const InverseProblem& problem,
                                bool record_true_residuals) {
  IterationRecord row;
  row.k = pt.k;
  row.lambda = picked.sel.lambda;
  row.rule = to_string(rule.kind);
  row.tau_or_w = picked.tau_or_w;
  row.flags = join_flags(picked.sel, small.fallback);
  Vector rhs = Vector::Zero(pt.small.rows());
  rhs[0] = pt.beta;
  const double r = (pt.small * small.z - rhs).norm();
  row.projected_objective = r;
  row.sketched_residual = r;
  if (record_true_residuals || problem.x_true) {
    const Vector x = pt.basis * small.z;
    if (record_true_residuals)
      row.true_residual = (problem.op.apply(x) - problem.b).norm();
    if (problem.x_true && problem.x_true->norm() > 0.0)
      row.rel_error = (x - *problem.x_true).norm() / problem.x_true->norm();
  }
  return row;
}

} // namespace

SolveResult hybrid_solve(const InverseProblem& problem,
                         const SolverConfig& config, const RegRule& rule) {
  const LinearOperator& A = problem.op;
  const Index K = config.max_iters;

  if (is_arnoldi_based(config.method)) {
    if (A.rows() != A.cols())
      throw std::invalid_argument("hybrid gmres: operator must be square");
    SolveResult res;
    res.method = config.method;
    const bool randomized = config.method == Method::rgmres;
    SketchOperator theta = SketchOperator::identity(A.cols());
    if (randomized) {
      const SketchDims dims = resolve_sketch_dims(config, A.rows(), A.cols());
      res.warnings = dims.warnings;
      theta = SketchOperator::make(config.sketch_kind, A.cols(), dims.ell_n,
                                   derive_seed(config.seed, "theta_n"));
    }
    ArnoldiFactorization f =
        randomized ? rarnoldi_init(A, problem.b, theta, K, config.breakdown_tol)
                   : arnoldi_init(A, problem.b, K, config.breakdown_tol);
    for (Index k = 1; k <= K && !f.breakdown; ++k) {
      if (randomized)
        rarnoldi_step(f, A, theta, config.gs);
      else
        arnoldi_step(f, A);
      const ProjectedTikhonov pt = build_projected(f, k, A.rows(), A.cols());
      const Picked picked = pick_lambda(pt, rule, problem);
      const SmallSolve small = solve_small(pt, picked.sel.lambda);
      res.history.rows.push_back(make_hybrid_row(
          pt, picked, rule, small, problem, config.record_true_residuals));
      res.z.push_back(small.z);
    }
    res.breakdown = f.breakdown;
    res.arnoldi = std::move(f);
    return res;
  }

  HybridMethod row_method;
  SolverConfig effective = config;
  switch (config.method) {
    case Method::lsqr:
      row_method = HybridMethod::rlsqr;
      effective.sketch_kind = SketchKind::identity;
      break;
    case Method::rlsqr: row_method = HybridMethod::rlsqr; break;
    case Method::rcgls: row_method = HybridMethod::rcgls; break;
    case Method::rlsmr: row_method = HybridMethod::rlsmr; break;
    default: throw std::invalid_argument("hybrid_solve: unsupported method");
  }

  SolveResult res;
  res.method = config.method;
  const SketchDims dims = resolve_sketch_dims(effective, A.rows(), A.cols());
  res.warnings = dims.warnings;
  const SketchOperator theta_n =
      SketchOperator::make(effective.sketch_kind, A.cols(), dims.ell_n,
                           derive_seed(config.seed, "theta_n"));
  const SketchOperator theta_m =
      SketchOperator::make(effective.sketch_kind, A.rows(), dims.ell_m,
                           derive_seed(config.seed, "theta_m"));
  GKFactorization f =
      rgk_init(A, problem.b, theta_n, theta_m, K, config.breakdown_tol);
  for (Index k = 1; k <= K && !f.breakdown; ++k) {
    rgk_step(f, A, theta_n, theta_m, config.gs);
    if (row_method != HybridMethod::rlsqr && f.ucols < k + 1) break;
    const ProjectedTikhonov pt =
        build_projected(f, k, row_method, A.rows(), A.cols());
    const Picked picked = pick_lambda(pt, rule, problem);
    const SmallSolve small = solve_small(pt, picked.sel.lambda);
    res.history.rows.push_back(make_hybrid_row(
        pt, picked, rule, small, problem, config.record_true_residuals));
    res.z.push_back(small.z);
  }
  res.breakdown = f.breakdown;
  res.gk = std::move(f);
  return res;
}

SolveResult rlsqr_damped_solve(const InverseProblem& problem, double lambda,
                               const SolverConfig& config) {
  if (lambda < 0.0)
    throw std::invalid_argument("rlsqr_damped_solve: lambda must be >= 0");
  InverseProblem stacked;
  stacked.op = make_stacked_operator(problem.op, lambda);
  stacked.b = Vector::Zero(problem.op.rows() + problem.op.cols());
  stacked.b.head(problem.op.rows()) = problem.b;
  stacked.x_true = problem.x_true;
  stacked.noise_norm = problem.noise_norm;
  stacked.noise_level = problem.noise_level;
  SolverConfig effective = config;
  effective.method = Method::rlsqr;
  return rlsqr_solve(stacked, effective);
}

} // namespace rk
