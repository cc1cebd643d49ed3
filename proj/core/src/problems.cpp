#include "rk/problems.hpp"
#include "rk/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rk {

namespace {

void check_noise_level(double noise_level) {
  if (noise_level < 0.0 || noise_level >= 1.0)
    throw std::invalid_argument("noise_level must lie in [0, 1)");
}

} // namespace

void add_noise(InverseProblem& problem, const Vector& b_exact,
               double noise_level, std::uint64_t seed) {
  if (noise_level == 0.0) {
    problem.b = b_exact;
    problem.noise_norm = 0.0;
    problem.noise_level = 0.0;
    return;
  }
  auto gen = seeded_stream(seed, "noise");
  std::normal_distribution<double> dist;
  Vector e(b_exact.size());
  for (Index i = 0; i < e.size(); ++i) e[i] = dist(gen);
  const double target = noise_level * b_exact.norm();
  e *= target / e.norm();
  problem.b = b_exact + e;
  problem.noise_norm = target;
  problem.noise_level = noise_level;
}

Vector blur_phantom(int side) {
  Vector x = Vector::Zero(static_cast<Index>(side) * side);
  const double s = side;
  for (int iy = 0; iy < side; ++iy) {
    for (int ix = 0; ix < side; ++ix) {
      const double px = (ix + 0.5) / s;
      const double py = (iy + 0.5) / s;
      double val = 0.0;
      const double dx = px - 0.5, dy = py - 0.45;
      if (dx * dx + dy * dy <= 0.25 * 0.25) val = 1.0;
      if (px >= 0.15 && px <= 0.35 && py >= 0.6 && py <= 0.85) val = 0.7;
      if (px >= 0.6 && px <= 0.9 && py >= 0.1 && py <= 0.3) val = 0.4;
      x[static_cast<Index>(iy) * side + ix] = val;
    }
  }
  return x;
}

Vector tomo_phantom(int side) {
  Vector x(static_cast<Index>(side) * side);
  const double s = side;
  for (int iy = 0; iy < side; ++iy) {
    for (int ix = 0; ix < side; ++ix) {
      const double px = (ix + 0.5) / s;
      const double py = (iy + 0.5) / s;
      const double dx = px - 0.4, dy = py - 0.55;
      double val = 0.6 * std::exp(-(dx * dx + dy * dy) / (2.0 * 0.18 * 0.18));
      if (px >= 0.55 && px <= 0.8 && py >= 0.2 && py <= 0.45) val = 1.0;
      x[static_cast<Index>(iy) * side + ix] = std::clamp(val, 0.0, 1.0);
    }
  }
  return x;
}

InverseProblem make_blur_problem(int side, double psf_width, double noise_level,
                                 std::uint64_t seed) {
  if (side < 8) throw std::invalid_argument("make_blur_problem: side must be >= 8");
  if (psf_width <= 0.0) throw std::invalid_argument("make_blur_problem: psf_width must be > 0");
  check_noise_level(noise_level);

  const Index n = static_cast<Index>(side) * side;
  const int h = std::min(side - 1, std::max(1, static_cast<int>(std::ceil(4.0 * psf_width))));

  // Truncated Gaussian stencil, normalized to unit mass so that interior
  // columns of A sum to exactly 1.
  const int w = 2 * h + 1;
  Matrix stencil(w, w);
  for (int dy = -h; dy <= h; ++dy)
    for (int dx = -h; dx <= h; ++dx)
      stencil(dy + h, dx + h) =
          std::exp(-(dx * dx + dy * dy) / (2.0 * psf_width * psf_width));
  stencil /= stencil.sum();

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(n) * w * w / 2);
  for (int cy = 0; cy < side; ++cy) {
    for (int cx = 0; cx < side; ++cx) {
      const Index col = static_cast<Index>(cy) * side + cx;
      for (int dy = -h; dy <= h; ++dy) {
        const int ry = cy + dy;
        if (ry < 0 || ry >= side) continue; // zero boundary: mass is dropped
        for (int dx = -h; dx <= h; ++dx) {
          const int rx = cx + dx;
          if (rx < 0 || rx >= side) continue;
          trips.emplace_back(static_cast<int>(ry) * side + rx,
                             static_cast<int>(col), stencil(dy + h, dx + h));
        }
      }
    }
  }
  SparseMatrix A(n, n);
  A.setFromTriplets(trips.begin(), trips.end());

  InverseProblem problem;
  problem.op = make_sparse_operator(std::move(A));
  problem.x_true = blur_phantom(side);
  const Vector b_exact = problem.op.apply(*problem.x_true);
  add_noise(problem, b_exact, noise_level, seed);
  return problem;
}

std::vector<std::pair<Index, double>> tomo_ray_row(int side, double x0, double y0,
                                                   double x1, double y1) {
  // Parametric traversal: collect crossings of integer grid lines in t,
  // then accumulate per-cell segment lengths.
  const double dx = x1 - x0, dy = y1 - y0;
  const double len = std::hypot(dx, dy);
  std::vector<double> ts;
  ts.reserve(2 * side + 2);
  ts.push_back(0.0);
  ts.push_back(1.0);
  if (dx != 0.0) {
    for (int gx = 0; gx <= side; ++gx) {
      const double t = (gx - x0) / dx;
      if (t > 0.0 && t < 1.0) ts.push_back(t);
    }
  }
  if (dy != 0.0) {
    for (int gy = 0; gy <= side; ++gy) {
      const double t = (gy - y0) / dy;
      if (t > 0.0 && t < 1.0) ts.push_back(t);
    }
  }
  std::sort(ts.begin(), ts.end());

  std::vector<std::pair<Index, double>> row;
  for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
    const double t0 = ts[i], t1 = ts[i + 1];
    if (t1 - t0 <= 1e-14) continue;
    const double tm = 0.5 * (t0 + t1);
    const double px = x0 + tm * dx, py = y0 + tm * dy;
    const int ix = static_cast<int>(std::floor(px));
    const int iy = static_cast<int>(std::floor(py));
    if (ix < 0 || ix >= side || iy < 0 || iy >= side) continue;
    row.emplace_back(static_cast<Index>(iy) * side + ix, (t1 - t0) * len);
  }
  return row;
}

InverseProblem make_tomo_problem(int side, int num_rays, double noise_level,
                                 std::uint64_t seed) {
  if (side < 8) throw std::invalid_argument("make_tomo_problem: side must be >= 8");
  if (num_rays < 1) throw std::invalid_argument("make_tomo_problem: num_rays must be >= 1");
  check_noise_level(noise_level);

  const Index n = static_cast<Index>(side) * side;
  auto gen = seeded_stream(seed, "tomo_rays");
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(num_rays) * 2 * side);
  for (int i = 0; i < num_rays; ++i) {
    // Source on the left or bottom boundary, receiver on the right or top.
    const bool src_left = unif(gen) < 0.5;
    const double sp = unif(gen) * side;
    const double x0 = src_left ? 0.0 : sp;
    const double y0 = src_left ? sp : 0.0;
    const bool rec_right = unif(gen) < 0.5;
    const double rp = unif(gen) * side;
    const double x1 = rec_right ? static_cast<double>(side) : rp;
    const double y1 = rec_right ? rp : static_cast<double>(side);
    for (const auto& [col, length] : tomo_ray_row(side, x0, y0, x1, y1))
      trips.emplace_back(i, static_cast<int>(col), length);
  }
  SparseMatrix A(num_rays, n);
  A.setFromTriplets(trips.begin(), trips.end());

  InverseProblem problem;
  problem.op = make_sparse_operator(std::move(A));
  problem.x_true = tomo_phantom(side);
  const Vector b_exact = problem.op.apply(*problem.x_true);
  add_noise(problem, b_exact, noise_level, seed);
  return problem;
}

} // namespace rk
