#pragma once

#include "rk/linop.hpp"
#include "rk/sketch.hpp"

#include <string>

namespace rk {

/// Knobs for the randomized Gram-Schmidt steps. Defaults follow the plain
/// sketched classical Gram-Schmidt recurrences.
struct GSOptions {
  bool resketch = false;         // re-sketch the projected vector instead of the recursive update
  bool ls_coefficients = false;  // least-squares projection coefficients instead of S^T s
  bool second_pass = false;      // one extra Gram-Schmidt pass (ill-conditioned studies)
};

/// Randomized (or classical) Arnoldi state. After k completed steps the
/// logical shapes are Q: n x (k+1), S: ell x (k+1), H: (k+1) x k, and
/// A Q_k = Q_{k+1} H_k holds in exact arithmetic. Storage is preallocated
/// at capacity K+1 columns.
struct ArnoldiFactorization {
  Matrix Q;  // n x (K+1)
  Matrix S;  // ell x (K+1); empty for the classical variant
  Matrix H;  // (K+1) x K
  double beta = 0.0;  // ||Theta b|| (or ||b|| classically)
  Index k = 0;
  Index basis_cols = 0;  // columns of Q currently valid
  bool breakdown = false;
  double breakdown_tol = 1e-14;

  Eigen::Block<const Matrix> Qk(Index cols) const { return Q.topLeftCorner(Q.rows(), cols); }
  Eigen::Block<const Matrix> Hk() const { return H.topLeftCorner(k + 1, k); }
  Eigen::Block<const Matrix> Sk(Index cols) const { return S.topLeftCorner(S.rows(), cols); }
};

ArnoldiFactorization rarnoldi_init(const LinearOperator& A, const Vector& b,
                                   const SketchOperator& theta_n, Index capacity,
                                   double breakdown_tol = 1e-14);
/// One randomized Arnoldi step (sketched classical Gram-Schmidt).
/// Returns false on breakdown; the current H column is kept with a zero
/// subdiagonal entry and no new basis vector is appended.
bool rarnoldi_step(ArnoldiFactorization& state, const LinearOperator& A,
                   const SketchOperator& theta_n, const GSOptions& opts = {});

/// Classical Arnoldi with exact inner products (deterministic baseline).
ArnoldiFactorization arnoldi_init(const LinearOperator& A, const Vector& b,
                                  Index capacity, double breakdown_tol = 1e-14);
bool arnoldi_step(ArnoldiFactorization& state, const LinearOperator& A);

/// Randomized Golub-Kahan state, for rectangular A. After k completed steps:
/// V: n x (k+1), U: m x (k+1), P = Theta_n V, S = Theta_m U,
/// M: (k+1) x k upper Hessenberg, T: (k+1) x (k+1) upper triangular, with
/// A V_k = U_{k+1} M_k and A^T U_{k+1} = V_{k+1} T_{k+1} in exact arithmetic.
struct GKFactorization {
  Matrix V;  // n x (K+1)
  Matrix U;  // m x (K+1)
  Matrix P;  // ell_n x (K+1)
  Matrix S;  // ell_m x (K+1)
  Matrix M;  // (K+1) x K
  Matrix T;  // (K+1) x (K+1)
  double beta = 0.0;  // ||Theta_m b||
  double t11 = 0.0;   // T(0,0)
  Index k = 0;
  Index vcols = 0;  // valid columns of V / P
  Index ucols = 0;  // valid columns of U / S
  bool breakdown = false;
  double breakdown_tol = 1e-14;

  Eigen::Block<const Matrix> Vk(Index cols) const { return V.topLeftCorner(V.rows(), cols); }
  Eigen::Block<const Matrix> Uk(Index cols) const { return U.topLeftCorner(U.rows(), cols); }
  Eigen::Block<const Matrix> Mk() const { return M.topLeftCorner(k + 1, k); }
  Eigen::Block<const Matrix> Tk() const { return T.topLeftCorner(k + 1, k + 1); }
};

GKFactorization rgk_init(const LinearOperator& A, const Vector& b,
                         const SketchOperator& theta_n,
                         const SketchOperator& theta_m, Index capacity,
                         double breakdown_tol = 1e-14);
/// One full rGK outer iteration (randomized Gram-Schmidt against U, then
/// against V). Returns false on breakdown; outputs are truncated
/// consistently.
bool rgk_step(GKFactorization& state, const LinearOperator& A,
              const SketchOperator& theta_n, const SketchOperator& theta_m,
              const GSOptions& opts = {});

/// Golub-Kahan bidiagonalization state (deterministic baseline).
/// B is lower bidiagonal, (k+1) x k; A V_k = U_{k+1} B_k.
struct GKBFactorization {
  Matrix V;  // n x (K+1)
  Matrix U;  // m x (K+1)
  Matrix B;  // (K+1) x K
  double beta = 0.0;  // ||b||
  Index k = 0;
  Index vcols = 0;
  Index ucols = 0;
  bool breakdown = false;
  double breakdown_tol = 1e-14;
  bool reorthogonalize = false;

  Eigen::Block<const Matrix> Bk() const { return B.topLeftCorner(k + 1, k); }
};

GKBFactorization gkb_init(const LinearOperator& A, const Vector& b,
                          Index capacity, bool reorthogonalize = false,
                          double breakdown_tol = 1e-14);
/// One GKB outer iteration (short two-term recurrence); with
/// reorthogonalize set, each new vector gets one classical Gram-Schmidt
/// pass against the full stored basis (ro-GKB).
bool gkb_step(GKBFactorization& state, const LinearOperator& A);

/// Snapshot container (dims, arrays, flags) for resume / svdapprox.
void save_snapshot(const GKFactorization& f, const std::string& path);
GKFactorization load_gk_snapshot(const std::string& path);
void save_snapshot(const ArnoldiFactorization& f, const std::string& path);
ArnoldiFactorization load_arnoldi_snapshot(const std::string& path);

} // namespace rk
