#include "rk/sketch.hpp"
#include "rk/rng.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace rk {

const char* to_string(SketchKind kind) {
  switch (kind) {
    case SketchKind::identity: return "identity";
    case SketchKind::gaussian: return "gaussian";
    case SketchKind::srht: return "srht";
  }
  return "?";
}

SketchKind sketch_kind_from_string(const std::string& s) {
  if (s == "identity") return SketchKind::identity;
  if (s == "gaussian") return SketchKind::gaussian;
  if (s == "srht") return SketchKind::srht;
  throw std::invalid_argument("unknown sketch kind: " + s);
}

void fwht_normalized(Eigen::Ref<Vector> x) {
  const Index p = x.size();
  if (p & (p - 1))
    throw std::invalid_argument("fwht: size must be a power of two");
  for (Index h = 1; h < p; h <<= 1) {
    for (Index i = 0; i < p; i += h << 1) {
      for (Index j = i; j < i + h; ++j) {
        const double a = x[j], b = x[j + h];
        x[j] = a + b;
        x[j + h] = a - b;
      }
    }
  }
  x /= std::sqrt(static_cast<double>(p));
}

namespace {

Index next_pow2(Index n) {
  Index p = 1;
  while (p < n) p <<= 1;
  return p;
}

} // namespace

SketchOperator SketchOperator::identity(Index dim) {
  if (dim < 1) throw std::invalid_argument("sketch: dim must be positive");
  SketchOperator t;
  t.kind_ = SketchKind::identity;
  t.input_dim_ = t.sketch_dim_ = dim;
  return t;
}

SketchOperator SketchOperator::scaled_identity(Index dim, double scale) {
  SketchOperator t = identity(dim);
  t.scale_ = scale;
  return t;
}

SketchOperator SketchOperator::gaussian(Index input_dim, Index sketch_dim,
                                        std::uint64_t seed) {
  if (input_dim < 1 || sketch_dim < 1)
    throw std::invalid_argument("sketch: dims must be positive");
  SketchOperator t;
  t.kind_ = SketchKind::gaussian;
  t.input_dim_ = input_dim;
  t.sketch_dim_ = sketch_dim;
  t.seed_ = seed;
  auto gen = seeded_stream(seed, "gaussian_entries");
  std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(sketch_dim)));
  t.gauss_.resize(sketch_dim, input_dim);
  for (Index j = 0; j < input_dim; ++j)
    for (Index i = 0; i < sketch_dim; ++i)
      t.gauss_(i, j) = dist(gen);
  return t;
}

SketchOperator SketchOperator::srht(Index input_dim, Index sketch_dim,
                                    std::uint64_t seed) {
  if (input_dim < 1 || sketch_dim < 1)
    throw std::invalid_argument("sketch: dims must be positive");
  const Index p = next_pow2(input_dim);
  if (sketch_dim > p)
    throw std::invalid_argument("srht: sketch_dim exceeds padded dimension");
  SketchOperator t;
  t.kind_ = SketchKind::srht;
  t.input_dim_ = input_dim;
  t.sketch_dim_ = sketch_dim;
  t.seed_ = seed;
  t.padded_ = p;

  auto sign_gen = seeded_stream(seed, "srht_signs");
  t.signs_.resize(p);
  for (Index i = 0; i < p; ++i)
    t.signs_[i] = (sign_gen() & 1u) ? 1.0 : -1.0;

  // Row sampling without replacement (partial Fisher-Yates).
  auto row_gen = seeded_stream(seed, "srht_rows");
  std::vector<Index> pool(p);
  std::iota(pool.begin(), pool.end(), Index{0});
  t.rows_.resize(sketch_dim);
  for (Index i = 0; i < sketch_dim; ++i) {
    std::uniform_int_distribution<Index> pick(i, p - 1);
    std::swap(pool[i], pool[pick(row_gen)]);
    t.rows_[i] = pool[i];
  }
  return t;
}

SketchOperator SketchOperator::srht_explicit(Index input_dim,
                                             std::vector<double> signs,
                                             std::vector<Index> rows) {
  const Index p = next_pow2(input_dim);
  if (static_cast<Index>(signs.size()) != p)
    throw std::invalid_argument("srht_explicit: signs must have padded length");
  SketchOperator t;
  t.kind_ = SketchKind::srht;
  t.input_dim_ = input_dim;
  t.sketch_dim_ = static_cast<Index>(rows.size());
  t.padded_ = p;
  t.signs_ = std::move(signs);
  t.rows_ = std::move(rows);
  return t;
}

SketchOperator SketchOperator::make(SketchKind kind, Index input_dim,
                                    Index sketch_dim, std::uint64_t seed) {
  switch (kind) {
    case SketchKind::identity: return identity(input_dim);
    case SketchKind::gaussian: return gaussian(input_dim, sketch_dim, seed);
    case SketchKind::srht: return srht(input_dim, sketch_dim, seed);
  }
  throw std::invalid_argument("bad sketch kind");
}

Vector SketchOperator::apply(const Vector& x) const {
  if (x.size() != input_dim_)
    throw std::invalid_argument("sketch_apply: dimension mismatch");
  switch (kind_) {
    case SketchKind::identity:
      return scale_ == 1.0 ? x : Vector(scale_ * x);
    case SketchKind::gaussian:
      return gauss_ * x;
    case SketchKind::srht: {
      Vector w = Vector::Zero(padded_);
      for (Index i = 0; i < input_dim_; ++i) w[i] = signs_[i] * x[i];
      fwht_normalized(w);
      const double scale = std::sqrt(static_cast<double>(padded_) /
                                     static_cast<double>(sketch_dim_));
      Vector y(sketch_dim_);
      for (Index i = 0; i < sketch_dim_; ++i) y[i] = scale * w[rows_[i]];
      return y;
    }
  }
  throw std::logic_error("unreachable");
}

EmbeddingDim embedding_dim_theory(const EmbeddingSpec& spec) {
  if (spec.eps <= 0.0 || spec.eps >= 1.0 || spec.delta <= 0.0 || spec.delta >= 1.0)
    throw std::invalid_argument("embedding_dim_theory: eps, delta must lie in (0,1)");
  if (spec.max_dim < 1 || spec.ambient_dim < 1)
    throw std::invalid_argument("embedding_dim_theory: dims must be positive");
  const double eps = spec.eps, delta = spec.delta;
  const double kp1 = static_cast<double>(spec.max_dim);
  const double n = static_cast<double>(spec.ambient_dim);
  const double root = std::sqrt(kp1) + std::sqrt(8.0 * std::log(6.0 * n / delta));
  const double val = 2.0 / (eps * eps - eps * eps * eps / 3.0) * root * root *
                     std::log(3.0 * kp1 / delta);
  EmbeddingDim out;
  out.ell = static_cast<Index>(std::ceil(val));
  out.exceeds_ambient = out.ell > spec.ambient_dim;
  return out;
}

Index embedding_dim_default(Index ambient_dim, Index max_iters,
                            bool literal_k_plus_one) {
  if (ambient_dim < 2 || max_iters < 2)
    throw std::invalid_argument("embedding_dim_default: need n >= 2, K >= 2");
  const double n = static_cast<double>(ambient_dim);
  const double k = static_cast<double>(max_iters) + (literal_k_plus_one ? 1.0 : 0.0);
  return static_cast<Index>(std::ceil(2.0 * k * std::log(n) / std::log(k)));
}

double measure_epsilon(const SketchOperator& theta, const Matrix& basis) {
  if (basis.rows() != theta.input_dim())
    throw std::invalid_argument("measure_epsilon: basis dimension mismatch");
  const Matrix gram = basis.transpose() * basis;
  const Matrix eye = Matrix::Identity(basis.cols(), basis.cols());
  if ((gram - eye).cwiseAbs().maxCoeff() > 1e-8)
    throw std::invalid_argument("measure_epsilon: basis not orthonormal");
  Matrix sketched(theta.sketch_dim(), basis.cols());
  for (Index j = 0; j < basis.cols(); ++j)
    sketched.col(j) = theta.apply(basis.col(j));
  Eigen::JacobiSVD<Matrix> svd(sketched);
  const auto& sv = svd.singularValues();
  const double smax = sv(0);
  const double smin = sv(sv.size() - 1);
  return std::max(smax * smax - 1.0, 1.0 - smin * smin);
}

} // namespace rk
