#pragma once

#include "mixkry/covariance.hpp"
#include "mixkry/linear_operator.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mixkry {

/// Thin QR factor Y R of the Q2 branch.
///
/// Y holds r orthonormal columns and R is r x k in echelon form: row i starts
/// at column pivots[i]. r < k only when some Q2 columns were numerically
/// dependent and dropped; dropped columns still get their entries in R.
struct SkinnyQR {
  Matrix Y;
  Matrix R;
  std::vector<Index> pivots;

  Index rank() const { return Y.cols(); }
  Index cols() const { return R.cols(); }
  static SkinnyQR empty(Index m);
};

struct QrUpdateResult {
  bool appended = false;
  /// Deflation left the triangular factor numerically singular; the caller
  /// must recompute the factorization from scratch.
  bool needs_recompute = false;
  std::uint64_t flops = 0;
};

/// Rank-one deflation followed by a Gram-Schmidt append.
///
/// Replaces Y R by the QR factorization of Y R - u (R^T Y^T u)^T using Givens
/// rotations (O(m r) work), then appends the column `v_hat` with two passes
/// of classical Gram-Schmidt against Y and `guard`. The new column is
/// dropped (only its R entries kept) when its orthogonal remainder falls to
/// rank_tol * input_norm or below.
QrUpdateResult qr_append_update(SkinnyQR& qr, const Vector& u_new,
                                const Vector& v_hat, double input_norm,
                                double rank_tol,
                                const Eigen::Ref<const Matrix>& guard);

/// From-scratch QR of (I - G G^T) M with the same dropping rule. O(m k^2).
SkinnyQR skinny_qr_recompute(const Eigen::Ref<const Matrix>& guard,
                             const Eigen::Ref<const Matrix>& columns,
                             double rank_tol, std::uint64_t* flops = nullptr);

enum class MixGKStatus {
  Active,
  /// A^T R^-1 b = 0: no search direction exists.
  ImmediateBreakdown,
  /// beta_{k+1} vanished; u_{k+1} is stored as zero.
  BetaBreakdown,
  /// alpha_{k+1} vanished; the subspace is invariant.
  AlphaBreakdown,
};

struct MixGKOptions {
  bool reorthogonalize = true;
  /// When false the Q2 branch is skipped and the process is plain genGK.
  bool track_q2 = true;
  /// When false the skinny QR is recomputed from scratch every step.
  bool incremental_qr = true;
  double breakdown_tol = 1e-12;
  double rank_tol = 1e-12;
};

/// Operators consumed by the mixed Golub-Kahan process.
struct MixGKOperators {
  LinearOperator A;
  LinearOperator r_inv;
  LinearOperator l_r;
  LinearOperator q1;
  LinearOperator q2;
};

/// Complete factorization state after k steps of the mixed Golub-Kahan
/// process: A Q1 V_k = U_{k+1} B_k, A^T R^-1 U_{k+1} = V_k B_k^T +
/// alpha_{k+1} v_{k+1} e_{k+1}^T, and (I - Ut Ut^T) L_R A Q2 V_k = Y R with
/// Ut = L_R U_{k+1}.
class MixGKState {
 public:
  MixGKState(MixGKOperators ops, const Vector& b, MixGKOptions options = {});

  /// Advances k by one. Requires can_step().
  void step();
  bool can_step() const { return status_ == MixGKStatus::Active; }

  Index k() const { return k_; }
  Index m() const { return ops_.A.rows(); }
  Index n() const { return ops_.A.cols(); }
  MixGKStatus status() const { return status_; }
  const MixGKOptions& options() const { return options_; }
  const MixGKOperators& operators() const { return ops_; }

  double beta1() const { return beta_[0]; }
  /// alpha_i and beta_i with the 1-based indexing of the recurrences.
  double alpha(Index i) const { return alpha_.at(static_cast<std::size_t>(i - 1)); }
  double beta(Index i) const { return beta_.at(static_cast<std::size_t>(i - 1)); }

  auto U() const { return U_.leftCols(k_ + 1); }
  auto Ut() const { return Ut_.leftCols(k_ + 1); }
  auto V() const { return V_.leftCols(k_); }
  auto Q1V() const { return Q1V_.leftCols(k_); }
  /// Q2 V_k.
  auto W() const { return W_.leftCols(k_); }
  /// L_R A Q2 V_k.
  auto LAQ2V() const { return LAQ2V_.leftCols(k_); }
  /// Ut^T L_R A Q2 V_k, (k+1) x k.
  auto C() const { return C_.topLeftCorner(k_ + 1, k_); }
  const SkinnyQR& qr() const { return qr_; }
  /// (k+1) x k lower bidiagonal.
  Matrix B() const;
  /// The pending basis vector v_{k+1} (zero after a breakdown).
  Vector next_v() const { return V_.col(k_); }

  std::uint64_t last_qr_flops() const { return last_qr_flops_; }
  Index recompute_count() const { return recomputes_; }
  const std::vector<std::string>& diagnostics() const { return log_; }

 private:
  void ensure_capacity(Index cols);
  void update_q2_branch();

  MixGKOperators ops_;
  MixGKOptions options_;
  MixGKStatus status_ = MixGKStatus::Active;
  Index k_ = 0;
  Index capacity_ = 0;

  Matrix U_;
  Matrix Ut_;
  Matrix V_;
  Matrix Q1V_;
  Matrix W_;
  Matrix LAQ2V_;
  Matrix C_;
  SkinnyQR qr_;
  std::vector<double> alpha_;
  std::vector<double> beta_;

  std::uint64_t last_qr_flops_ = 0;
  Index recomputes_ = 0;
  std::vector<std::string> log_;
};

MixGKState mixgk_init(const MixGKOperators& ops, const Vector& b,
                      MixGKOptions options = {});
void mixgk_step(MixGKState& state);

}  // namespace mixkry
