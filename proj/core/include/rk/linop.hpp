#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cstdint>
#include <functional>
#include <optional>

namespace rk {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Index = Eigen::Index;

/// Black-box rectangular linear operator: only matvec and transposed matvec
/// are exposed. Immutable after construction; concurrent read-only
/// application is safe.
class LinearOperator {
public:
  LinearOperator() = default;
  LinearOperator(Index nrows, Index ncols,
                 std::function<Vector(const Vector&)> apply,
                 std::function<Vector(const Vector&)> apply_transpose);

  Index rows() const { return nrows_; }
  Index cols() const { return ncols_; }

  /// y = A x, x of length cols().
  Vector apply(const Vector& x) const;
  /// z = A^T y, y of length rows().
  Vector apply_transpose(const Vector& y) const;

  /// Dense materialization by applying A to the canonical basis.
  /// Desk-scale verification only.
  Matrix materialize() const;

private:
  Index nrows_ = 0;
  Index ncols_ = 0;
  std::function<Vector(const Vector&)> apply_;
  std::function<Vector(const Vector&)> applyt_;
};

LinearOperator make_dense_operator(Matrix A);
LinearOperator make_sparse_operator(SparseMatrix A);

/// Stacked operator [A; lambda*I], used by the damped solver variant.
LinearOperator make_stacked_operator(const LinearOperator& A, double lambda);

/// Sampled adjoint-consistency defect:
///   max over probes of |<A v, u> - <v, A^T u>| / (||u|| ||v|| ||A||_est).
double adjoint_consistency_error(const LinearOperator& A, int num_probes,
                                 std::uint64_t seed);

/// Crude 2-norm estimate by power iteration on A^T A.
double operator_norm_estimate(const LinearOperator& A, int iters = 20,
                              std::uint64_t seed = 0);

struct InverseProblem {
  LinearOperator op;
  Vector b;
  std::optional<Vector> x_true;
  std::optional<double> noise_norm;   // ||e||
  std::optional<double> noise_level;  // ||e|| / ||A x_true||
};

} // namespace rk
