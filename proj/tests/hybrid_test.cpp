#include "rk/hybrid.hpp"
#include "rk/problems.hpp"
#include "rk/rng.hpp"

#include "helpers.hpp"
#include "oracle.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>

using namespace rk;

namespace {

SolverConfig gk_config(Method m, Index K, SketchKind kind, std::uint64_t seed) {
  SolverConfig c;
  c.method = m;
  c.max_iters = K;
  c.sketch_kind = kind;
  c.seed = seed;
  return c;
}

RegRule fixed_rule(double lambda) {
  RegRule r;
  r.kind = RegRule::Kind::fixed;
  r.lambda = lambda;
  return r;
}

GKFactorization run_rgk_on(const InverseProblem& p, const SketchOperator& tn,
                           const SketchOperator& tm, Index k) {
  GKFactorization f = rgk_init(p.op, p.b, tn, tm, k);
  for (Index j = 0; j < k && !f.breakdown; ++j) rgk_step(f, p.op, tn, tm);
  return f;
}

} // namespace

TEST_CASE("rule names round-trip") {
  for (RegRule::Kind k :
       {RegRule::Kind::fixed, RegRule::Kind::optimal, RegRule::Kind::dp,
        RegRule::Kind::gcv, RegRule::Kind::wgcv}) {
    CHECK(rule_kind_from_string(to_string(k)) == k);
  }
  CHECK_THROWS_AS(rule_kind_from_string("lcurve"), std::invalid_argument);
}

TEST_CASE("fixed lambda = 0 reproduces the unregularized rgmres iterates") {
  auto p = rkt::problem_from_dense(
      rkt::random_matrix(20, 20, 1) + 5.0 * Matrix::Identity(20, 20),
      rkt::random_vector(20, 2));
  SolverConfig c = gk_config(Method::rgmres, 8, SketchKind::gaussian, 11);
  c.ell_n = 20;
  const SolveResult plain = rgmres_solve(p, c);
  const SolveResult hyb = hybrid_solve(p, c, fixed_rule(0.0));
  REQUIRE(plain.iterations() == hyb.iterations());
  for (Index k = 1; k <= plain.iterations(); ++k) {
    const Vector a = plain.solution_at(k), b = hyb.solution_at(k);
    CHECK((a - b).norm() <= 1e-10 * std::max(1.0, a.norm()));
  }
}

TEST_CASE("huge lambda shrinks the iterates toward zero") {
  auto p = rkt::problem_from_dense(rkt::random_matrix(15, 10, 3),
                                   rkt::random_vector(15, 4));
  SolverConfig c = gk_config(Method::rlsqr, 5, SketchKind::gaussian, 13);
  const SolveResult base = hybrid_solve(p, c, fixed_rule(0.0));
  const SolveResult big = hybrid_solve(p, c, fixed_rule(1e8));
  REQUIRE(base.iterations() == big.iterations());
  const Vector x0 = base.solution_at(base.iterations());
  const Vector xb = big.solution_at(big.iterations());
  CHECK(xb.norm() <= 1e-6 * x0.norm());
}

TEST_CASE("hybrid rlsqr row matches the dense subspace Tikhonov oracle") {
  const Matrix A = rkt::random_matrix(12, 8, 5);
  auto p = rkt::problem_from_dense(A, rkt::random_vector(12, 6));
  const double lambda = 0.1;
  SolverConfig c = gk_config(Method::rlsqr, 8, SketchKind::identity, 0);
  const SolveResult r = hybrid_solve(p, c, fixed_rule(lambda));
  REQUIRE(r.iterations() == 8);
  const Matrix W =
      rko::dense_krylov_basis(A.transpose() * A, A.transpose() * p.b, 8);
  REQUIRE(W.cols() == 8);  // same subspace, different basis
  const Vector oracle = rko::dense_subspace_tikhonov(A, p.b, lambda, W);
  const Vector x = r.solution_at(8);
  CHECK((x - oracle).norm() <= 1e-8 * std::max(1.0, oracle.norm()));
}

TEST_CASE("common-framework rows equal their direct formulations") {
  const Matrix A = rkt::random_matrix(12, 8, 7);
  auto p = rkt::problem_from_dense(A, rkt::random_vector(12, 8));
  const SketchOperator tn = SketchOperator::gaussian(8, 8, 101);
  const SketchOperator tm = SketchOperator::gaussian(12, 10, 102);
  const GKFactorization f = run_rgk_on(p, tn, tm, 5);
  REQUIRE(f.k == 5);
  const Index k = 5;
  const Matrix Mk = f.Mk();
  const Matrix Tfull = f.T.topLeftCorner(k + 1, k + 1);
  const Matrix Ttrim = f.T.topLeftCorner(k, k + 1);

  for (double lambda : {1e-3, 0.05, 0.3, 2.0, 50.0}) {
    // rlsqr: stacked least squares [M; lambda I] z = [beta e1; 0].
    {
      const ProjectedTikhonov pt =
          build_projected(f, k, HybridMethod::rlsqr, 12, 8);
      Matrix St(k + 1 + k, k);
      St.topRows(k + 1) = Mk;
      St.bottomRows(k) = lambda * Matrix::Identity(k, k);
      Vector rhs = Vector::Zero(k + 1 + k);
      rhs[0] = f.beta;
      const Vector direct = St.householderQr().solve(rhs);
      const Vector z = solve_small(pt, lambda).z;
      CHECK((z - direct).norm() <= 1e-12 * std::max(1.0, direct.norm()));
    }
    // rcgls: (T~ M + lambda^2 I) z = beta t11 e1, solved by QR instead of LU.
    {
      const ProjectedTikhonov pt =
          build_projected(f, k, HybridMethod::rcgls, 12, 8);
      const Matrix B =
          Ttrim * Mk + lambda * lambda * Matrix::Identity(k, k);
      Vector rhs = Vector::Zero(k);
      rhs[0] = f.beta * f.t11;
      const Vector direct = B.colPivHouseholderQr().solve(rhs);
      const Vector z = solve_small(pt, lambda).z;
      CHECK((z - direct).norm() <= 1e-12 * std::max(1.0, direct.norm()));
    }
    // rlsmr: stacked least squares [T M; lambda I] z = [beta t11 e1; 0].
    {
      const ProjectedTikhonov pt =
          build_projected(f, k, HybridMethod::rlsmr, 12, 8);
      const Matrix G = Tfull * Mk;
      Matrix St(k + 1 + k, k);
      St.topRows(k + 1) = G;
      St.bottomRows(k) = lambda * Matrix::Identity(k, k);
      Vector rhs = Vector::Zero(k + 1 + k);
      rhs[0] = f.beta * f.t11;
      const Vector direct = St.householderQr().solve(rhs);
      const Vector z = solve_small(pt, lambda).z;
      CHECK((z - direct).norm() <= 1e-12 * std::max(1.0, direct.norm()));
    }
  }

  // rgmres row against its stacked form on a square operator.
  auto ps = rkt::problem_from_dense(rkt::random_matrix(10, 10, 9),
                                    rkt::random_vector(10, 10));
  const SketchOperator th = SketchOperator::gaussian(10, 10, 103);
  ArnoldiFactorization af = rarnoldi_init(ps.op, ps.b, th, 4);
  for (int j = 0; j < 4; ++j) rarnoldi_step(af, ps.op, th);
  const ProjectedTikhonov pa = build_projected(af, 4, 10, 10);
  for (double lambda : {1e-3, 0.3, 5.0}) {
    Matrix St(5 + 4, 4);
    St.topRows(5) = af.Hk();
    St.bottomRows(4) = lambda * Matrix::Identity(4, 4);
    Vector rhs = Vector::Zero(9);
    rhs[0] = af.beta;
    const Vector direct = St.householderQr().solve(rhs);
    const Vector z = solve_small(pa, lambda).z;
    CHECK((z - direct).norm() <= 1e-12 * std::max(1.0, direct.norm()));
  }
}

TEST_CASE("discrepancy principle: noiseless data selects lambda = 0") {
  const Matrix A = rkt::random_matrix(12, 8, 11);
  const Vector xe = rkt::random_vector(8, 12);
  auto p = rkt::problem_from_dense(A, A * xe);
  p.noise_norm = 0.0;
  SolverConfig c = gk_config(Method::rlsqr, 4, SketchKind::gaussian, 17);
  RegRule rule;
  rule.kind = RegRule::Kind::dp;
  const SolveResult r = hybrid_solve(p, c, rule);
  for (const auto& row : r.history.rows) CHECK(row.lambda == 0.0);
}

TEST_CASE("phi is non-decreasing in lambda") {
  const auto p = make_tomo_problem(8, 128, 0.04, 19);
  const SketchOperator tn = SketchOperator::gaussian(64, 40, 201);
  const SketchOperator tm = SketchOperator::gaussian(128, 40, 202);
  const GKFactorization f = run_rgk_on(p, tn, tm, 10);
  const ProjectedTikhonov pt =
      build_projected(f, 10, HybridMethod::rlsqr, 128, 64);
  double prev = phi(pt, 0.0);
  for (int i = -8; i <= 4; ++i) {
    const double cur = phi(pt, std::pow(10.0, i));
    CHECK(cur >= prev * (1.0 - 1e-12));
    prev = cur;
  }
}

TEST_CASE("dp root agrees with the dense bisection oracle") {
  const auto p = make_tomo_problem(8, 128, 0.05, 23);
  const SketchOperator tn = SketchOperator::gaussian(64, 50, 301);
  const SketchOperator tm = SketchOperator::gaussian(128, 50, 302);
  const GKFactorization f = run_rgk_on(p, tn, tm, 15);
  REQUIRE(f.k == 15);
  const ProjectedTikhonov pt =
      build_projected(f, 15, HybridMethod::rlsqr, 128, 64);
  const double tau = 1.01;
  const double target = tau * *p.noise_norm;
  const LambdaSelection sel = select_lambda_dp(pt, *p.noise_norm, tau);
  REQUIRE_FALSE(sel.undershoot);
  REQUIRE_FALSE(sel.overshoot);
  CHECK(std::abs(phi(pt, sel.lambda) - target) <= 1e-6 * target);

  const Matrix Tn = rko::materialize_sketch(tn);
  const Matrix Tm = rko::materialize_sketch(tm);
  const Matrix A = p.op.materialize();
  const double oracle = rko::dense_dp_lambda(A, p.b, f.Vk(15), &Tm, &Tn,
                                             target, 1e4);
  CHECK(sel.lambda == doctest::Approx(oracle).epsilon(1e-2));

  CHECK_THROWS_AS(select_lambda_dp(pt, *p.noise_norm, 1.0),
                  std::invalid_argument);
}

TEST_CASE("gcv approaches the large-lambda anchor") {
  const Matrix A = rkt::random_matrix(30, 20, 13);
  auto p = rkt::problem_from_dense(A, rkt::random_vector(30, 14));
  const SketchOperator tn = SketchOperator::gaussian(20, 20, 401);
  const SketchOperator tm = SketchOperator::gaussian(30, 25, 402);
  const GKFactorization f = run_rgk_on(p, tn, tm, 6);
  const ProjectedTikhonov pt =
      build_projected(f, 6, HybridMethod::rlsqr, 30, 20);
  const double anchor = 20.0 * f.beta * f.beta / (30.0 * 30.0);
  CHECK(gcv_value(pt, 1e8, 1.0) == doctest::Approx(anchor).epsilon(1e-2));
  CHECK_THROWS_AS(select_lambda_gcv(pt, 0.0), std::invalid_argument);
}

TEST_CASE("trace term matches the dense influence-matrix oracles") {
  // rGMRES row.
  auto ps = rkt::problem_from_dense(rkt::random_matrix(12, 12, 15),
                                    rkt::random_vector(12, 16));
  const SketchOperator th = SketchOperator::gaussian(12, 12, 501);
  ArnoldiFactorization af = rarnoldi_init(ps.op, ps.b, th, 5);
  for (int j = 0; j < 5; ++j) rarnoldi_step(af, ps.op, th);
  const ProjectedTikhonov pa = build_projected(af, 5, 12, 12);
  const Matrix Th = rko::materialize_sketch(th);
  for (double lambda : {1e-3, 1e-2, 0.1, 1.0, 10.0}) {
    const double expect = rko::dense_trace_rgmres(af.Qk(6), af.Hk(), Th, lambda);
    CHECK(trace_term(pa, lambda) == doctest::Approx(expect).epsilon(1e-10));
  }

  // rGK rows.
  const Matrix A = rkt::random_matrix(12, 8, 17);
  auto p = rkt::problem_from_dense(A, rkt::random_vector(12, 18));
  const SketchOperator tn = SketchOperator::gaussian(8, 8, 502);
  const SketchOperator tm = SketchOperator::gaussian(12, 10, 503);
  const GKFactorization f = run_rgk_on(p, tn, tm, 4);
  const Matrix Tm = rko::materialize_sketch(tm);
  for (HybridMethod row :
       {HybridMethod::rlsqr, HybridMethod::rcgls, HybridMethod::rlsmr}) {
    const ProjectedTikhonov pt = build_projected(f, 4, row, 12, 8);
    for (double lambda : {1e-3, 1e-2, 0.1, 1.0, 10.0}) {
      const double expect =
          rko::dense_trace_gk(row, f.Uk(5), f.Mk(), f.Tk(), Tm, lambda);
      CHECK(trace_term(pt, lambda) == doctest::Approx(expect).epsilon(1e-10));
    }
  }
}

TEST_CASE("wgcv with unit weight equals gcv") {
  const auto p = make_tomo_problem(8, 128, 0.04, 27);
  SolverConfig c = gk_config(Method::rlsqr, 10, SketchKind::gaussian, 21);
  RegRule gcv;
  gcv.kind = RegRule::Kind::gcv;
  RegRule wgcv;
  wgcv.kind = RegRule::Kind::wgcv;
  wgcv.w = 1.0;
  const SolveResult a = hybrid_solve(p, c, gcv);
  const SolveResult b = hybrid_solve(p, c, wgcv);
  REQUIRE(a.iterations() == b.iterations());
  for (std::size_t i = 0; i < a.history.rows.size(); ++i) {
    CHECK(a.history.rows[i].lambda == b.history.rows[i].lambda);
    CHECK(a.history.rows[i].rule == "gcv");
    CHECK(b.history.rows[i].rule == "wgcv");
  }

  // A plugged-in weight schedule is honored.
  RegRule sched = wgcv;
  sched.weight_fn = [](const ProjectedTikhonov&) { return 0.5; };
  const SolveResult s = hybrid_solve(p, c, sched);
  CHECK(s.history.rows.back().tau_or_w == "0.5");
}

TEST_CASE("optimal rule hits the unregularized endpoint when it is exact") {
  const Matrix A = rkt::random_matrix(12, 8, 19);
  auto p = rkt::problem_from_dense(A, rkt::random_vector(12, 20));
  const SketchOperator tn = SketchOperator::gaussian(8, 8, 601);
  const SketchOperator tm = SketchOperator::gaussian(12, 10, 602);
  const GKFactorization f = run_rgk_on(p, tn, tm, 4);
  const ProjectedTikhonov pt =
      build_projected(f, 4, HybridMethod::rlsqr, 12, 8);
  const Vector x0 = pt.basis * solve_small(pt, 0.0).z;
  const LambdaSelection sel = select_lambda_optimal(pt, x0);
  CHECK(sel.lambda == 0.0);

  // And it beats both endpoints on a genuinely noisy problem.
  const auto noisy = make_tomo_problem(8, 128, 0.05, 29);
  const SolveResult run = hybrid_solve(
      noisy, gk_config(Method::rlsqr, 12, SketchKind::gaussian, 23), [] {
        RegRule r;
        r.kind = RegRule::Kind::optimal;
        return r;
      }());
  const SolveResult plain = solve(
      noisy, gk_config(Method::rlsqr, 12, SketchKind::gaussian, 23));
  REQUIRE(run.iterations() == plain.iterations());
  for (std::size_t i = 0; i < run.history.rows.size(); ++i)
    CHECK(run.history.rows[i].rel_error <=
          plain.history.rows[i].rel_error + 1e-12);
}

TEST_CASE("hybrid at fixed lambda vs the damped stacked solver") {
  const Matrix A = rkt::random_matrix(12, 8, 21);
  auto p = rkt::problem_from_dense(A, rkt::random_vector(12, 22));
  const double lambda = 0.5;

  // Identity sketches: project-then-regularize and regularize-then-project
  // coincide (shift invariance of the normal-equation Krylov space).
  SolverConfig ci = gk_config(Method::rlsqr, 6, SketchKind::identity, 0);
  const SolveResult hyb = hybrid_solve(p, ci, fixed_rule(lambda));
  const SolveResult dmp = rlsqr_damped_solve(p, lambda, ci);
  REQUIRE(hyb.iterations() >= 6);
  REQUIRE(dmp.iterations() >= 6);
  for (Index k = 1; k <= 6; ++k) {
    const Vector a = hyb.solution_at(k), b = dmp.solution_at(k);
    CHECK((a - b).norm() <= 1e-8 * std::max(1.0, a.norm()));
  }

  // Random sketches: the two orderings genuinely differ.
  SolverConfig cg = gk_config(Method::rlsqr, 6, SketchKind::gaussian, 25);
  cg.ell_n = 8;
  cg.ell_m = 10;
  const SolveResult hg = hybrid_solve(p, cg, fixed_rule(lambda));
  const SolveResult dg = rlsqr_damped_solve(p, lambda, cg);
  const Vector xa = hg.solution_at(6), xb = dg.solution_at(6);
  CHECK((xa - xb).norm() > 1e-8);

  CHECK_THROWS_AS(rlsqr_damped_solve(p, -1.0, cg), std::invalid_argument);
}

TEST_CASE("damped solve at lambda = 0 equals plain rlsqr") {
  const Matrix A = rkt::random_matrix(14, 9, 23);
  auto p = rkt::problem_from_dense(A, rkt::random_vector(14, 24));
  SolverConfig c = gk_config(Method::rlsqr, 5, SketchKind::identity, 0);
  const SolveResult a = rlsqr_solve(p, c);
  const SolveResult b = rlsqr_damped_solve(p, 0.0, c);
  REQUIRE(a.iterations() == b.iterations());
  for (Index k = 1; k <= a.iterations(); ++k)
    CHECK((a.solution_at(k) - b.solution_at(k)).norm() <= 1e-10);
}

TEST_CASE("the subspace does not depend on the selected lambda") {
  const auto p = make_tomo_problem(8, 128, 0.04, 31);
  SolverConfig c = gk_config(Method::rlsqr, 8, SketchKind::gaussian, 27);
  const SolveResult a = hybrid_solve(p, c, fixed_rule(0.0));
  const SolveResult b = hybrid_solve(p, c, fixed_rule(10.0));
  REQUIRE(a.gk.has_value());
  REQUIRE(b.gk.has_value());
  CHECK((a.gk->M - b.gk->M).norm() == 0.0);
  CHECK((a.gk->V - b.gk->V).norm() == 0.0);
}

TEST_CASE("singular projected systems fall back, flagged") {
  ProjectedTikhonov pt;
  pt.method = HybridMethod::rlsqr;
  pt.k = 2;
  pt.ambient_m = 4;
  pt.ambient_n = 2;
  pt.P = Matrix::Zero(2, 2);
  pt.P(0, 0) = 1.0;
  pt.c = Vector::Ones(2);
  pt.small = Matrix::Zero(3, 2);
  pt.small(0, 0) = 1.0;
  pt.beta = 1.0;
  const SmallSolve s = solve_small(pt, 0.0);
  CHECK(s.fallback);
  CHECK(s.z.allFinite());
  CHECK(s.z[0] == doctest::Approx(1.0));
}

TEST_CASE("hybrid lsqr maps onto the identity-sketch rlsqr row") {
  const auto p = make_tomo_problem(8, 128, 0.04, 33);
  SolverConfig cl = gk_config(Method::lsqr, 6, SketchKind::gaussian, 29);
  SolverConfig cr = gk_config(Method::rlsqr, 6, SketchKind::identity, 29);
  const SolveResult a = hybrid_solve(p, cl, fixed_rule(0.3));
  const SolveResult b = hybrid_solve(p, cr, fixed_rule(0.3));
  REQUIRE(a.iterations() == b.iterations());
  for (Index k = 1; k <= a.iterations(); ++k)
    CHECK((a.solution_at(k) - b.solution_at(k)).norm() <= 1e-10);
}

TEST_CASE("build_projected validates its inputs") {
  const Matrix A = rkt::random_matrix(10, 6, 25);
  auto p = rkt::problem_from_dense(A, rkt::random_vector(10, 26));
  const SketchOperator tn = SketchOperator::identity(6);
  const SketchOperator tm = SketchOperator::identity(10);
  const GKFactorization f = run_rgk_on(p, tn, tm, 3);
  CHECK_THROWS_AS(build_projected(f, 0, HybridMethod::rlsqr, 10, 6),
                  std::invalid_argument);
  CHECK_THROWS_AS(build_projected(f, f.k + 1, HybridMethod::rlsqr, 10, 6),
                  std::invalid_argument);
  CHECK_THROWS_AS(build_projected(f, 1, HybridMethod::rgmres, 10, 6),
                  std::invalid_argument);
}
