#pragma once

#include "rk/linop.hpp"

#include <cstdint>
#include <vector>

namespace rk {

enum class SketchKind { identity, gaussian, srht };

const char* to_string(SketchKind kind);
SketchKind sketch_kind_from_string(const std::string& s);

/// Oblivious subspace-embedding operator Theta mapping length-d vectors to
/// length-ell vectors. Immutable after construction; deterministic given
/// (kind, dims, seed).
class SketchOperator {
public:
  static SketchOperator identity(Index dim);
  /// scale * I; testing utility with an analytically known distortion.
  static SketchOperator scaled_identity(Index dim, double scale);
  static SketchOperator gaussian(Index input_dim, Index sketch_dim,
                                 std::uint64_t seed);
  /// SRHT: x is zero-padded to the next power of two p, then
  /// sqrt(p/ell) * R * H * D with a seeded +-1 diagonal D, the orthonormal
  /// Walsh-Hadamard transform H on p points, and R selecting ell rows
  /// sampled without replacement. Applied in O(p log p), never materialized.
  static SketchOperator srht(Index input_dim, Index sketch_dim,
                             std::uint64_t seed);
  /// SRHT with explicit signs (length p) and selected rows; test hook.
  static SketchOperator srht_explicit(Index input_dim, std::vector<double> signs,
                                      std::vector<Index> rows);

  static SketchOperator make(SketchKind kind, Index input_dim, Index sketch_dim,
                             std::uint64_t seed);

  Vector apply(const Vector& x) const;

  Index input_dim() const { return input_dim_; }
  Index sketch_dim() const { return sketch_dim_; }
  SketchKind kind() const { return kind_; }
  std::uint64_t seed() const { return seed_; }
  Index padded_dim() const { return padded_; }

private:
  SketchOperator() = default;

  SketchKind kind_ = SketchKind::identity;
  Index input_dim_ = 0;
  Index sketch_dim_ = 0;
  std::uint64_t seed_ = 0;
  double scale_ = 1.0;         // identity only
  Matrix gauss_;               // gaussian only
  Index padded_ = 0;           // srht only
  std::vector<double> signs_;  // srht only
  std::vector<Index> rows_;    // srht only
};

/// In-place orthonormal Walsh-Hadamard transform; x.size() must be a power
/// of two.
void fwht_normalized(Eigen::Ref<Vector> x);

struct EmbeddingSpec {
  double eps = 0.5;    // in (0,1)
  double delta = 0.5;  // in (0,1)
  Index max_dim = 1;   // subspace dimension K+1
  Index ambient_dim = 1;
};

struct EmbeddingDim {
  Index ell = 0;
  bool exceeds_ambient = false;  // sketching pointless when ell > ambient
};

/// Sufficient SRHT embedding dimension
///   ceil( 2 (eps^2 - eps^3/3)^{-1} (sqrt(K+1) + sqrt(8 log(6n/delta)))^2
///         log(3(K+1)/delta) ),
/// natural logarithms.
EmbeddingDim embedding_dim_theory(const EmbeddingSpec& spec);

/// Heuristic default ceil(2 K ln(n) / ln(K)). With literal_k_plus_one the
/// variant ceil(2 (K+1) ln(n) / ln(K+1)) is used instead.
Index embedding_dim_default(Index ambient_dim, Index max_iters,
                            bool literal_k_plus_one = false);

/// Measured embedding constant max(sigma_max^2 - 1, 1 - sigma_min^2) of
/// Theta * basis, for an orthonormal d x k basis.
double measure_epsilon(const SketchOperator& theta, const Matrix& basis);

} // namespace rk
