#include "oracle.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace rko {

Matrix materialize_sketch(const rk::SketchOperator& theta) {
  Matrix M(theta.sketch_dim(), theta.input_dim());
  Vector e = Vector::Zero(theta.input_dim());
  for (Index j = 0; j < theta.input_dim(); ++j) {
    e[j] = 1.0;
    M.col(j) = theta.apply(e);
    e[j] = 0.0;
  }
  return M;
}

Vector dense_tikhonov(const Matrix& A, const Vector& b, double lambda) {
  if (static_cast<double>(A.rows()) * static_cast<double>(A.cols()) > 1e7)
    throw std::invalid_argument("dense_tikhonov: size guard exceeded");
  if (lambda == 0.0) {
    Eigen::JacobiSVD<Matrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return svd.solve(b);  // minimum-norm least squares
  }
  const Index m = A.rows(), n = A.cols();
  Matrix S(m + n, n);
  S.topRows(m) = A;
  S.bottomRows(n) = lambda * Matrix::Identity(n, n);
  Vector rhs = Vector::Zero(m + n);
  rhs.head(m) = b;
  return S.householderQr().solve(rhs);
}

Vector dense_subspace_tikhonov(const Matrix& A, const Vector& b, double lambda,
                               const Matrix& V, const Matrix* theta_m,
                               const Matrix* theta_n) {
  const Matrix AV = theta_m ? Matrix(*theta_m * (A * V)) : Matrix(A * V);
  const Vector bb = theta_m ? Vector(*theta_m * b) : b;
  const Matrix RV = theta_n ? Matrix(*theta_n * V) : V;
  Matrix S(AV.rows() + RV.rows(), V.cols());
  S.topRows(AV.rows()) = AV;
  S.bottomRows(RV.rows()) = lambda * RV;
  Vector rhs = Vector::Zero(S.rows());
  rhs.head(bb.size()) = bb;
  Eigen::ColPivHouseholderQR<Matrix> qr(S);
  Vector z;
  if (qr.rank() < V.cols()) {
    Eigen::JacobiSVD<Matrix> svd(S, Eigen::ComputeThinU | Eigen::ComputeThinV);
    z = svd.solve(rhs);
  } else {
    z = qr.solve(rhs);
  }
  return V * z;
}

Matrix dense_krylov_basis(const Matrix& B, const Vector& v, Index k) {
  const Index n = B.rows();
  Matrix W(n, k);
  Index cols = 0;
  Vector w = v;
  for (Index j = 0; j < k; ++j) {
    if (j > 0) w = B * W.col(cols - 1);
    // Two classical Gram-Schmidt passes for an exactly orthonormal basis.
    for (int pass = 0; pass < 2; ++pass)
      if (cols > 0) w -= W.leftCols(cols) * (W.leftCols(cols).transpose() * w);
    const double nrm = w.norm();
    if (nrm <= 1e-12 * std::max(v.norm(), 1.0)) break;  // degenerate space
    W.col(cols++) = w / nrm;
  }
  return W.leftCols(cols);
}

double dense_sketched_krylov_residual(const Matrix& A, const Vector& b,
                                      const Matrix& theta, const Matrix& W) {
  const Matrix G = theta * (A * W);
  const Vector c = theta * b;
  Eigen::JacobiSVD<Matrix> svd(G, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector y = svd.solve(c);
  return (G * y - c).norm();
}

Vector gkb_ritz_values(const Matrix& A, const Vector& b, Index k) {
  const Index m = A.rows(), n = A.cols();
  Matrix U(m, k + 1), V(n, k + 1), B = Matrix::Zero(k + 1, k);
  U.col(0) = b / b.norm();
  Vector v = A.transpose() * U.col(0);
  double alpha = v.norm();
  V.col(0) = v / alpha;
  Index steps = 0;
  for (Index j = 0; j < k; ++j) {
    B(j, j) = alpha;
    Vector u = A * V.col(j) - alpha * U.col(j);
    for (int pass = 0; pass < 2; ++pass)
      u -= U.leftCols(j + 1) * (U.leftCols(j + 1).transpose() * u);
    const double beta = u.norm();
    if (beta <= 1e-14) { steps = j + 1; break; }
    B(j + 1, j) = beta;
    U.col(j + 1) = u / beta;
    v = A.transpose() * U.col(j + 1) - beta * V.col(j);
    for (int pass = 0; pass < 2; ++pass)
      v -= V.leftCols(j + 1) * (V.leftCols(j + 1).transpose() * v);
    alpha = v.norm();
    if (alpha <= 1e-14) { steps = j + 1; break; }
    V.col(j + 1) = v / alpha;
    steps = j + 1;
  }
  return Eigen::JacobiSVD<Matrix>(B.topLeftCorner(steps + 1, steps))
      .singularValues();
}

double dense_lsmr_objective(const Matrix& A, const Vector& b, Index k) {
  const Matrix B = A.transpose() * A;
  const Vector c = A.transpose() * b;
  const Matrix W = dense_krylov_basis(B, c, k);
  // min over y of || A^T A W y - A^T b ||.
  const Matrix G = B * W;
  Eigen::JacobiSVD<Matrix> svd(G, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector y = svd.solve(c);
  return (G * y - c).norm();
}

namespace {

/// (P + lambda^2 I)^{-1} by SVD, an arithmetic route independent of the
/// main solvers' LDLT/LU path.
Matrix reg_inverse(const Matrix& P, double lambda) {
  const Matrix W =
      P + lambda * lambda * Matrix::Identity(P.rows(), P.cols());
  Eigen::JacobiSVD<Matrix> svd(W, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Vector inv = svd.singularValues();
  for (Index i = 0; i < inv.size(); ++i)
    inv[i] = inv[i] > 1e-300 ? 1.0 / inv[i] : 0.0;
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

} // namespace

double dense_trace_rgmres(const Matrix& Qk1, const Matrix& Hk,
                          const Matrix& theta_n, double lambda) {
  const Matrix P = Hk.transpose() * Hk;
  const Matrix core = Hk * reg_inverse(P, lambda) * Hk.transpose();
  const Matrix full = Qk1 * core * Qk1.transpose() *
                      theta_n.transpose() * theta_n;
  return full.trace();
}

double dense_trace_gk(rk::HybridMethod row, const Matrix& Uk1,
                      const Matrix& Mk, const Matrix& Tk1,
                      const Matrix& theta_m, double lambda) {
  const Index k = Mk.cols();
  Matrix P, core;
  switch (row) {
    case rk::HybridMethod::rlsqr:
      P = Mk.transpose() * Mk;
      core = Mk * reg_inverse(P, lambda) * Mk.transpose();
      break;
    case rk::HybridMethod::rcgls: {
      const Matrix Ttilde = Tk1.topRows(k);  // drop the last row
      P = Ttilde * Mk;
      core = Mk * reg_inverse(P, lambda) * Ttilde;
      break;
    }
    case rk::HybridMethod::rlsmr: {
      const Matrix G = Tk1 * Mk;
      P = G.transpose() * G;
      core = Mk * reg_inverse(P, lambda) * G.transpose() * Tk1;
      break;
    }
    default:
      throw std::invalid_argument("dense_trace_gk: not a rGK row");
  }
  const Matrix full = Uk1 * core * Uk1.transpose() *
                      theta_m.transpose() * theta_m;
  return full.trace();
}

double dense_dp_lambda(const Matrix& A, const Vector& b, const Matrix& V,
                       const Matrix* theta_m, const Matrix* theta_n,
                       double target, double lambda_max) {
  auto residual = [&](double lam) {
    const Vector x = dense_subspace_tikhonov(A, b, lam, V, theta_m, theta_n);
    const Vector r = A * x - b;
    return theta_m ? (*theta_m * r).norm() : r.norm();
  };
  double lo = 0.0, hi = lambda_max;
  if (residual(lo) >= target) return 0.0;
  if (residual(hi) < target) return hi;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (residual(mid) < target)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= 1e-12 * std::max(hi, 1.0)) break;
  }
  return 0.5 * (lo + hi);
}

} // namespace rko
