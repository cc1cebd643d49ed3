#pragma once

#include "rk/linop.hpp"
#include "rk/rng.hpp"

#include <Eigen/QR>

#include <random>

namespace rkt {

inline rk::Matrix random_matrix(rk::Index m, rk::Index n, std::uint64_t seed) {
  auto gen = rk::seeded_stream(seed, "test_matrix");
  std::normal_distribution<double> dist;
  rk::Matrix A(m, n);
  for (rk::Index j = 0; j < n; ++j)
    for (rk::Index i = 0; i < m; ++i) A(i, j) = dist(gen);
  return A;
}

inline rk::Vector random_vector(rk::Index n, std::uint64_t seed) {
  auto gen = rk::seeded_stream(seed, "test_vector");
  std::normal_distribution<double> dist;
  rk::Vector v(n);
  for (rk::Index i = 0; i < n; ++i) v[i] = dist(gen);
  return v;
}

/// Random matrix with prescribed singular values (descending).
inline rk::Matrix matrix_with_spectrum(rk::Index m, rk::Index n,
                                       const rk::Vector& sigma,
                                       std::uint64_t seed) {
  const rk::Index r = sigma.size();
  Eigen::HouseholderQR<rk::Matrix> qu(random_matrix(m, r, seed));
  Eigen::HouseholderQR<rk::Matrix> qv(random_matrix(n, r, seed + 1));
  const rk::Matrix U = qu.householderQ() * rk::Matrix::Identity(m, r);
  const rk::Matrix V = qv.householderQ() * rk::Matrix::Identity(n, r);
  return U * sigma.asDiagonal() * V.transpose();
}

inline rk::InverseProblem problem_from_dense(rk::Matrix A, rk::Vector b) {
  rk::InverseProblem p;
  p.op = rk::make_dense_operator(std::move(A));
  p.b = std::move(b);
  return p;
}

} // namespace rkt
