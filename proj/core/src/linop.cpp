#include "rk/linop.hpp"
#include "rk/rng.hpp"

#include <memory>
#include <stdexcept>
#include <utility>

namespace rk {

LinearOperator::LinearOperator(Index nrows, Index ncols,
                               std::function<Vector(const Vector&)> apply,
                               std::function<Vector(const Vector&)> apply_transpose)
    : nrows_(nrows), ncols_(ncols),
      apply_(std::move(apply)), applyt_(std::move(apply_transpose)) {
  if (nrows_ < 1 || ncols_ < 1)
    throw std::invalid_argument("LinearOperator: dimensions must be positive");
}

Vector LinearOperator::apply(const Vector& x) const {
  if (x.size() != ncols_)
    throw std::invalid_argument("LinearOperator::apply: length mismatch");
  return apply_(x);
}

Vector LinearOperator::apply_transpose(const Vector& y) const {
  if (y.size() != nrows_)
    throw std::invalid_argument("LinearOperator::apply_transpose: length mismatch");
  return applyt_(y);
}

Matrix LinearOperator::materialize() const {
  Matrix A(nrows_, ncols_);
  Vector e = Vector::Zero(ncols_);
  for (Index j = 0; j < ncols_; ++j) {
    e[j] = 1.0;
    A.col(j) = apply(e);
    e[j] = 0.0;
  }
  return A;
}

LinearOperator make_dense_operator(Matrix A) {
  if (A.rows() < 1 || A.cols() < 1)
    throw std::invalid_argument("make_dense_operator: empty matrix");
  auto M = std::make_shared<Matrix>(std::move(A));
  return LinearOperator(
      M->rows(), M->cols(),
      [M](const Vector& x) -> Vector { return (*M) * x; },
      [M](const Vector& y) -> Vector { return M->transpose() * y; });
}

LinearOperator make_sparse_operator(SparseMatrix A) {
  if (A.rows() < 1 || A.cols() < 1)
    throw std::invalid_argument("make_sparse_operator: empty matrix");
  A.makeCompressed();
  auto M = std::make_shared<SparseMatrix>(std::move(A));
  return LinearOperator(
      M->rows(), M->cols(),
      [M](const Vector& x) -> Vector { return (*M) * x; },
      [M](const Vector& y) -> Vector { return M->transpose() * y; });
}

LinearOperator make_stacked_operator(const LinearOperator& A, double lambda) {
  const Index m = A.rows(), n = A.cols();
  return LinearOperator(
      m + n, n,
      [A, lambda, m, n](const Vector& x) -> Vector {
        Vector y(m + n);
        y.head(m) = A.apply(x);
        y.tail(n) = lambda * x;
        return y;
      },
      [A, lambda, m, n](const Vector& y) -> Vector {
        return A.apply_transpose(y.head(m)) + lambda * y.tail(n);
      });
}

double operator_norm_estimate(const LinearOperator& A, int iters,
                              std::uint64_t seed) {
  auto gen = seeded_stream(seed, "norm_est");
  std::normal_distribution<double> dist;
  Vector x(A.cols());
  for (Index i = 0; i < x.size(); ++i) x[i] = dist(gen);
  x.normalize();
  double s = 0.0;
  for (int it = 0; it < iters; ++it) {
    Vector y = A.apply(x);
    s = y.norm();
    if (s == 0.0) return 0.0;
    x = A.apply_transpose(y);
    double nx = x.norm();
    if (nx == 0.0) return s;
    x /= nx;
  }
  return s;
}

double adjoint_consistency_error(const LinearOperator& A, int num_probes,
                                 std::uint64_t seed) {
  const double anorm = operator_norm_estimate(A, 20, seed);
  auto gen = seeded_stream(seed, "adjoint_probe");
  std::normal_distribution<double> dist;
  double worst = 0.0;
  for (int p = 0; p < num_probes; ++p) {
    Vector v(A.cols()), u(A.rows());
    for (Index i = 0; i < v.size(); ++i) v[i] = dist(gen);
    for (Index i = 0; i < u.size(); ++i) u[i] = dist(gen);
    const double lhs = A.apply(v).dot(u);
    const double rhs = v.dot(A.apply_transpose(u));
    const double scale = u.norm() * v.norm() * std::max(anorm, 1e-300);
    worst = std::max(worst, std::abs(lhs - rhs) / scale);
  }
  return worst;
}

} // namespace rk
