#include "rk/factor.hpp"

#include <Eigen/QR>

#include <cstdint>
#include <fstream>
#include <stdexcept>

namespace rk {

namespace {

void check_finite(const Vector& v, const char* what) {
  if (!v.allFinite())
    throw std::runtime_error(std::string("non-finite values in ") + what);
}

// Sketched Gram-Schmidt projection of (w, s) against the first `cols`
// columns of (B, SB). Returns the accumulated coefficients.
Vector rgs_project(const Matrix& B, const Matrix& SB, Index cols, Vector& w,
                   Vector& s, const SketchOperator& theta,
                   const GSOptions& opts) {
  const auto Bk = B.leftCols(cols);
  const auto Sk = SB.leftCols(cols);
  auto coeffs_of = [&](const Vector& sv) -> Vector {
    if (opts.ls_coefficients)
      return Matrix(Sk).householderQr().solve(sv);
    return Sk.transpose() * sv;
  };
  Vector r = coeffs_of(s);
  w.noalias() -= Bk * r;
  if (opts.resketch)
    s = theta.apply(w);
  else
    s.noalias() -= Sk * r;
  if (opts.second_pass) {
    const Vector r2 = coeffs_of(s);
    w.noalias() -= Bk * r2;
    if (opts.resketch)
      s = theta.apply(w);
    else
      s.noalias() -= Sk * r2;
    r += r2;
  }
  return r;
}

} // namespace

ArnoldiFactorization rarnoldi_init(const LinearOperator& A, const Vector& b,
                                   const SketchOperator& theta_n, Index capacity,
                                   double breakdown_tol) {
  if (A.rows() != A.cols())
    throw std::invalid_argument("rarnoldi: operator must be square");
  if (b.size() != A.cols())
    throw std::invalid_argument("rarnoldi: rhs length mismatch");
  if (theta_n.input_dim() != A.cols())
    throw std::invalid_argument("rarnoldi: sketch dimension mismatch");
  ArnoldiFactorization f;
  f.breakdown_tol = breakdown_tol;
  f.Q.resize(A.cols(), capacity + 1);
  f.S.resize(theta_n.sketch_dim(), capacity + 1);
  f.H.setZero(capacity + 1, capacity);
  Vector s = theta_n.apply(b);
  f.beta = s.norm();
  if (f.beta == 0.0) {
    f.breakdown = true;
    return f;
  }
  f.Q.col(0) = b / f.beta;
  f.S.col(0) = s / f.beta;
  f.basis_cols = 1;
  return f;
}

bool rarnoldi_step(ArnoldiFactorization& state, const LinearOperator& A,
                   const SketchOperator& theta_n, const GSOptions& opts) {
  if (state.breakdown) throw std::logic_error("rarnoldi_step after breakdown");
  const Index j = state.k;
  if (j + 1 > state.H.cols())
    throw std::logic_error("rarnoldi_step: capacity exhausted");
  Vector w = A.apply(state.Q.col(j));
  check_finite(w, "operator output");
  Vector s = theta_n.apply(w);
  const double pre = s.norm();
  const Vector r = rgs_project(state.Q, state.S, j + 1, w, s, theta_n, opts);
  state.H.col(j).head(j + 1) = r;
  const double nrm = s.norm();
  state.k = j + 1;
  if (nrm <= state.breakdown_tol * pre) {
    state.H(j + 1, j) = 0.0;
    state.breakdown = true;
    return false;
  }
  state.H(j + 1, j) = nrm;
  state.Q.col(j + 1) = w / nrm;
  state.S.col(j + 1) = s / nrm;
  state.basis_cols = j + 2;
  return true;
}

ArnoldiFactorization arnoldi_init(const LinearOperator& A, const Vector& b,
                                  Index capacity, double breakdown_tol) {
  if (A.rows() != A.cols())
    throw std::invalid_argument("arnoldi: operator must be square");
  ArnoldiFactorization f;
  f.breakdown_tol = breakdown_tol;
  f.Q.resize(A.cols(), capacity + 1);
  f.H.setZero(capacity + 1, capacity);
  f.beta = b.norm();
  if (f.beta == 0.0) {
    f.breakdown = true;
    return f;
  }
  f.Q.col(0) = b / f.beta;
  f.basis_cols = 1;
  return f;
}

bool arnoldi_step(ArnoldiFactorization& state, const LinearOperator& A) {
  if (state.breakdown) throw std::logic_error("arnoldi_step after breakdown");
  const Index j = state.k;
  if (j + 1 > state.H.cols())
    throw std::logic_error("arnoldi_step: capacity exhausted");
  Vector w = A.apply(state.Q.col(j));
  check_finite(w, "operator output");
  const double pre = w.norm();
  const Vector r = state.Q.leftCols(j + 1).transpose() * w;
  state.H.col(j).head(j + 1) = r;
  w.noalias() -= state.Q.leftCols(j + 1) * r;
  const double nrm = w.norm();
  state.k = j + 1;
  if (nrm <= state.breakdown_tol * pre) {
    state.H(j + 1, j) = 0.0;
    state.breakdown = true;
    return false;
  }
  state.H(j + 1, j) = nrm;
  state.Q.col(j + 1) = w / nrm;
  state.basis_cols = j + 2;
  return true;
}

GKFactorization rgk_init(const LinearOperator& A, const Vector& b,
                         const SketchOperator& theta_n,
                         const SketchOperator& theta_m, Index capacity,
                         double breakdown_tol) {
  if (b.size() != A.rows())
    throw std::invalid_argument("rgk: rhs length mismatch");
  if (theta_n.input_dim() != A.cols() || theta_m.input_dim() != A.rows())
    throw std::invalid_argument("rgk: sketch dimension mismatch");
  GKFactorization f;
  f.breakdown_tol = breakdown_tol;
  f.V.resize(A.cols(), capacity + 1);
  f.U.resize(A.rows(), capacity + 1);
  f.P.resize(theta_n.sketch_dim(), capacity + 1);
  f.S.resize(theta_m.sketch_dim(), capacity + 1);
  f.M.setZero(capacity + 1, capacity);
  f.T.setZero(capacity + 1, capacity + 1);

  Vector s = theta_m.apply(b);
  f.beta = s.norm();
  if (f.beta == 0.0) {
    f.breakdown = true;
    return f;
  }
  f.U.col(0) = b / f.beta;
  f.S.col(0) = s / f.beta;
  f.ucols = 1;

  Vector v = A.apply_transpose(f.U.col(0));
  check_finite(v, "operator output");
  Vector p = theta_n.apply(v);
  f.t11 = p.norm();
  f.T(0, 0) = f.t11;
  if (f.t11 == 0.0) {
    f.breakdown = true;
    return f;
  }
  f.V.col(0) = v / f.t11;
  f.P.col(0) = p / f.t11;
  f.vcols = 1;
  return f;
}

bool rgk_step(GKFactorization& state, const LinearOperator& A,
              const SketchOperator& theta_n, const SketchOperator& theta_m,
              const GSOptions& opts) {
  if (state.breakdown) throw std::logic_error("rgk_step after breakdown");
  const Index j = state.k;  // completing column j, appending column j+1
  if (j + 1 > state.M.cols())
    throw std::logic_error("rgk_step: capacity exhausted");

  // Randomized Gram-Schmidt of A v_j against U.
  Vector u = A.apply(state.V.col(j));
  check_finite(u, "operator output");
  Vector s = theta_m.apply(u);
  const double pre_u = s.norm();
  const Vector mcol = rgs_project(state.U, state.S, j + 1, u, s, theta_m, opts);
  state.M.col(j).head(j + 1) = mcol;
  const double mnorm = s.norm();
  state.k = j + 1;
  if (mnorm <= state.breakdown_tol * pre_u) {
    state.M(j + 1, j) = 0.0;
    state.breakdown = true;
    return false;
  }
  state.M(j + 1, j) = mnorm;
  state.U.col(j + 1) = u / mnorm;
  state.S.col(j + 1) = s / mnorm;
  state.ucols = j + 2;

  // Randomized Gram-Schmidt of A^T u_{j+1} against V.
  Vector v = A.apply_transpose(state.U.col(j + 1));
  check_finite(v, "operator output");
  Vector p = theta_n.apply(v);
  const double pre_v = p.norm();
  const Vector tcol = rgs_project(state.V, state.P, j + 1, v, p, theta_n, opts);
  state.T.col(j + 1).head(j + 1) = tcol;
  const double tnorm = p.norm();
  if (tnorm <= state.breakdown_tol * pre_v) {
    state.T(j + 1, j + 1) = 0.0;
    state.breakdown = true;
    return false;
  }
  state.T(j + 1, j + 1) = tnorm;
  state.V.col(j + 1) = v / tnorm;
  state.P.col(j + 1) = p / tnorm;
  state.vcols = j + 2;
  return true;
}

GKBFactorization gkb_init(const LinearOperator& A, const Vector& b,
                          Index capacity, bool reorthogonalize,
                          double breakdown_tol) {
  if (b.size() != A.rows())
    throw std::invalid_argument("gkb: rhs length mismatch");
  GKBFactorization f;
  f.reorthogonalize = reorthogonalize;
  f.breakdown_tol = breakdown_tol;
  f.V.resize(A.cols(), capacity + 1);
  f.U.resize(A.rows(), capacity + 1);
  f.B.setZero(capacity + 1, capacity + 1);
  f.beta = b.norm();
  if (f.beta == 0.0) {
    f.breakdown = true;
    return f;
  }
  f.U.col(0) = b / f.beta;
  f.ucols = 1;
  Vector v = A.apply_transpose(f.U.col(0));
  check_finite(v, "operator output");
  const double alpha = v.norm();
  f.B(0, 0) = alpha;
  if (alpha == 0.0) {
    f.breakdown = true;
    return f;
  }
  f.V.col(0) = v / alpha;
  f.vcols = 1;
  return f;
}

bool gkb_step(GKBFactorization& state, const LinearOperator& A) {
  if (state.breakdown) throw std::logic_error("gkb_step after breakdown");
  const Index j = state.k;
  if (j + 2 > state.B.cols())
    throw std::logic_error("gkb_step: capacity exhausted");

  Vector u = A.apply(state.V.col(j));
  check_finite(u, "operator output");
  const double pre_u = u.norm();
  u.noalias() -= state.B(j, j) * state.U.col(j);
  if (state.reorthogonalize) {
    const Vector c = state.U.leftCols(j + 1).transpose() * u;
    u.noalias() -= state.U.leftCols(j + 1) * c;
  }
  const double betaj = u.norm();
  state.k = j + 1;
  if (betaj <= state.breakdown_tol * pre_u) {
    state.B(j + 1, j) = 0.0;
    state.breakdown = true;
    return false;
  }
  state.B(j + 1, j) = betaj;
  state.U.col(j + 1) = u / betaj;
  state.ucols = j + 2;

  Vector v = A.apply_transpose(state.U.col(j + 1));
  check_finite(v, "operator output");
  const double pre_v = v.norm();
  v.noalias() -= betaj * state.V.col(j);
  if (state.reorthogonalize) {
    const Vector c = state.V.leftCols(j + 1).transpose() * v;
    v.noalias() -= state.V.leftCols(j + 1) * c;
  }
  const double alphaj = v.norm();
  if (alphaj <= state.breakdown_tol * pre_v) {
    state.B(j + 1, j + 1) = 0.0;
    state.breakdown = true;
    return false;
  }
  state.B(j + 1, j + 1) = alphaj;
  state.V.col(j + 1) = v / alphaj;
  state.vcols = j + 2;
  return true;
}

namespace {

void write_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
std::uint64_t read_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
void write_f64(std::ostream& os, double v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
double read_f64(std::istream& is) {
  double v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
void write_mat(std::ostream& os, const Matrix& m) {
  write_u64(os, static_cast<std::uint64_t>(m.rows()));
  write_u64(os, static_cast<std::uint64_t>(m.cols()));
  os.write(reinterpret_cast<const char*>(m.data()),
           static_cast<std::streamsize>(sizeof(double) * m.size()));
}
Matrix read_mat(std::istream& is) {
  const auto r = static_cast<Index>(read_u64(is));
  const auto c = static_cast<Index>(read_u64(is));
  Matrix m(r, c);
  is.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(sizeof(double) * m.size()));
  return m;
}

constexpr std::uint64_t kGkMagic = 0x524b474b31000000ULL;      // "RKGK1"
constexpr std::uint64_t kArnoldiMagic = 0x524b415231000000ULL; // "RKAR1"

} // namespace

void save_snapshot(const GKFactorization& f, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open snapshot file: " + path);
  write_u64(os, kGkMagic);
  write_mat(os, f.V);
  write_mat(os, f.U);
  write_mat(os, f.P);
  write_mat(os, f.S);
  write_mat(os, f.M);
  write_mat(os, f.T);
  write_f64(os, f.beta);
  write_f64(os, f.t11);
  write_u64(os, static_cast<std::uint64_t>(f.k));
  write_u64(os, static_cast<std::uint64_t>(f.vcols));
  write_u64(os, static_cast<std::uint64_t>(f.ucols));
  write_u64(os, f.breakdown ? 1 : 0);
  write_f64(os, f.breakdown_tol);
  if (!os) throw std::runtime_error("snapshot write failed: " + path);
}

GKFactorization load_gk_snapshot(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open snapshot file: " + path);
  if (read_u64(is) != kGkMagic)
    throw std::runtime_error("bad snapshot magic: " + path);
  GKFactorization f;
  f.V = read_mat(is);
  f.U = read_mat(is);
  f.P = read_mat(is);
  f.S = read_mat(is);
  f.M = read_mat(is);
  f.T = read_mat(is);
  f.beta = read_f64(is);
  f.t11 = read_f64(is);
  f.k = static_cast<Index>(read_u64(is));
  f.vcols = static_cast<Index>(read_u64(is));
  f.ucols = static_cast<Index>(read_u64(is));
  f.breakdown = read_u64(is) != 0;
  f.breakdown_tol = read_f64(is);
  if (!is) throw std::runtime_error("snapshot read failed: " + path);
  return f;
}

void save_snapshot(const ArnoldiFactorization& f, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open snapshot file: " + path);
  write_u64(os, kArnoldiMagic);
  write_mat(os, f.Q);
  write_mat(os, f.S);
  write_mat(os, f.H);
  write_f64(os, f.beta);
  write_u64(os, static_cast<std::uint64_t>(f.k));
  write_u64(os, static_cast<std::uint64_t>(f.basis_cols));
  write_u64(os, f.breakdown ? 1 : 0);
  write_f64(os, f.breakdown_tol);
  if (!os) throw std::runtime_error("snapshot write failed: " + path);
}

ArnoldiFactorization load_arnoldi_snapshot(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open snapshot file: " + path);
  if (read_u64(is) != kArnoldiMagic)
    throw std::runtime_error("bad snapshot magic: " + path);
  ArnoldiFactorization f;
  f.Q = read_mat(is);
  f.S = read_mat(is);
  f.H = read_mat(is);
  f.beta = read_f64(is);
  f.k = static_cast<Index>(read_u64(is));
  f.basis_cols = static_cast<Index>(read_u64(is));
  f.breakdown = read_u64(is) != 0;
  f.breakdown_tol = read_f64(is);
  if (!is) throw std::runtime_error("snapshot read failed: " + path);
  return f;
}

} // namespace rk
