#include "mixkry/mixgk.hpp"

#include "mixkry/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace mixkry {

namespace {

// Rotation [c s; -s c] that maps (a, b) to (hypot(a, b), 0).
struct Givens {
  double c = 1.0;
  double s = 0.0;
  double r = 0.0;

  static Givens zeroing(double a, double b) {
    Givens g;
    g.r = std::hypot(a, b);
    if (g.r > 0.0) {
      g.c = a / g.r;
      g.s = b / g.r;
    }
    return g;
  }
};

template <typename Rows>
void rotate_rows(Rows&& mat, Index i, Index j, const Givens& g, Index from = 0) {
  for (Index col = from; col < mat.cols(); ++col) {
    const double a = mat(i, col);
    const double b = mat(j, col);
    mat(i, col) = g.c * a + g.s * b;
    mat(j, col) = -g.s * a + g.c * b;
  }
}

void rotate_cols(Matrix& mat, Index i, Index j, const Givens& g) {
  for (Index row = 0; row < mat.rows(); ++row) {
    const double a = mat(row, i);
    const double b = mat(row, j);
    mat(row, i) = g.c * a + g.s * b;
    mat(row, j) = -g.s * a + g.c * b;
  }
}

// Two passes of classical Gram-Schmidt of v against the columns of `first`
// and `second`. Returns the coefficients against `second`.
Vector orthogonalize(Vector& v, const Eigen::Ref<const Matrix>& first,
                     const Eigen::Ref<const Matrix>& second,
                     std::uint64_t& flops) {
  const auto m = static_cast<std::uint64_t>(v.size());
  Vector coeffs = Vector::Zero(second.cols());
  for (int pass = 0; pass < 2; ++pass) {
    if (first.cols() > 0) {
      const Vector h = first.transpose() * v;
      v.noalias() -= first * h;
      flops += 4 * m * static_cast<std::uint64_t>(first.cols());
    }
    if (second.cols() > 0) {
      const Vector h = second.transpose() * v;
      v.noalias() -= second * h;
      coeffs += h;
      flops += 4 * m * static_cast<std::uint64_t>(second.cols());
    }
  }
  return coeffs;
}

// Appends a column to an echelon factor; returns true if Y grew.
bool append_column(SkinnyQR& qr, Vector v, double input_norm, double rank_tol,
                   const Eigen::Ref<const Matrix>& guard, std::uint64_t& flops) {
  const Index r = qr.rank();
  const Index k = qr.cols();
  const Vector coeffs = orthogonalize(v, guard, qr.Y, flops);
  const double rho = v.norm();
  flops += 2 * static_cast<std::uint64_t>(v.size());
  const bool dependent = input_norm == 0.0 || rho <= rank_tol * input_norm;

  Matrix R = Matrix::Zero(dependent ? r : r + 1, k + 1);
  R.topLeftCorner(r, k) = qr.R;
  R.col(k).head(r) = coeffs;
  if (!dependent) {
    R(r, k) = rho;
    qr.Y.conservativeResize(Eigen::NoChange, r + 1);
    qr.Y.col(r) = v / rho;
    qr.pivots.push_back(k);
  }
  qr.R = std::move(R);
  return !dependent;
}

}  // namespace

SkinnyQR SkinnyQR::empty(Index m) {
  SkinnyQR qr;
  qr.Y = Matrix(m, 0);
  qr.R = Matrix(0, 0);
  return qr;
}

QrUpdateResult qr_append_update(SkinnyQR& qr, const Vector& u_new,
                                const Vector& v_hat, double input_norm,
                                double rank_tol,
                                const Eigen::Ref<const Matrix>& guard) {
  QrUpdateResult result;
  const Index m = qr.Y.rows();
  const Index r = qr.rank();
  if (u_new.size() != m || v_hat.size() != m) {
    throw ArgumentError("qr_append_update: vector length does not match Y");
  }
  const auto um = static_cast<std::uint64_t>(m);
  const auto ur = static_cast<std::uint64_t>(r);

  SkinnyQR updated = qr;
  if (r > 0 && u_new.squaredNorm() > 0.0) {
    // Y R - u (u^T Y R) = (Y + a w^T) R with a = -u, w = Y^T u.
    const Vector w = qr.Y.transpose() * u_new;
    Vector a_perp = -u_new + qr.Y * w;
    const double rho = a_perp.norm();
    result.flops += 4 * um * ur + 3 * um;

    Matrix yx(m, r + 1);
    yx.leftCols(r) = qr.Y;
    if (rho > 0.0) {
      yx.col(r) = a_perp / rho;
    } else {
      yx.col(r).setZero();
    }
    Matrix t = Matrix::Zero(r + 1, r);
    t.topRows(r).setIdentity();
    Matrix rx = Matrix::Zero(r + 1, qr.cols());
    rx.topRows(r) = qr.R;
    Vector z(r + 1);
    z.head(r) = -w;
    z[r] = rho;

    // Rotate z onto e_0; t becomes upper Hessenberg.
    for (Index i = r - 1; i >= 0; --i) {
      const Givens g = Givens::zeroing(z[i], z[i + 1]);
      z[i] = g.r;
      z[i + 1] = 0.0;
      rotate_rows(t, i, i + 1, g);
      rotate_rows(rx, i, i + 1, g);
      rotate_cols(yx, i, i + 1, g);
    }
    result.flops += 6 * um * ur;
    t.row(0) += z[0] * w.transpose();
    rx.row(0) += z[0] * (w.transpose() * qr.R);

    // Restore triangular form; the last row of t and rx becomes zero.
    for (Index i = 0; i < r; ++i) {
      const Givens g = Givens::zeroing(t(i, i), t(i + 1, i));
      rotate_rows(t, i, i + 1, g, i);
      t(i + 1, i) = 0.0;
      rotate_rows(rx, i, i + 1, g);
      rotate_cols(yx, i, i + 1, g);
    }
    result.flops += 6 * um * ur;

    const double tmin = t.topRows(r).diagonal().cwiseAbs().minCoeff();
    if (!(tmin > 1e-8)) {
      result.needs_recompute = true;
      return result;
    }
    updated.Y = yx.leftCols(r);
    updated.R = rx.topRows(r);
  }

  result.appended = append_column(updated, v_hat, input_norm, rank_tol, guard,
                                  result.flops);
  qr = std::move(updated);
  return result;
}

SkinnyQR skinny_qr_recompute(const Eigen::Ref<const Matrix>& guard,
                             const Eigen::Ref<const Matrix>& columns,
                             double rank_tol, std::uint64_t* flops) {
  SkinnyQR qr = SkinnyQR::empty(columns.rows());
  std::uint64_t count = 0;
  for (Index j = 0; j < columns.cols(); ++j) {
    Vector v = columns.col(j);
    const double input_norm = v.norm();
    append_column(qr, std::move(v), input_norm, rank_tol, guard, count);
  }
  if (flops != nullptr) *flops = count;
  return qr;
}

MixGKState::MixGKState(MixGKOperators ops, const Vector& b,
                       MixGKOptions options)
    : ops_(std::move(ops)), options_(options) {
  const Index m = ops_.A.rows();
  const Index n = ops_.A.cols();
  if (!ops_.A.has_transpose()) {
    throw ArgumentError("mixgk: forward operator needs a transpose map");
  }
  if (b.size() != m || ops_.r_inv.rows() != m || ops_.l_r.rows() != m ||
      ops_.l_r.cols() != m || ops_.q1.rows() != n || ops_.q2.rows() != n) {
    throw ArgumentError("mixgk: operator dimensions are inconsistent");
  }
  if (ops_.q2.is_zero()) {
    options_.track_q2 = false;
  }
  qr_ = SkinnyQR::empty(m);
  ensure_capacity(8);

  const Vector lb = ops_.l_r.apply(b);
  const double beta1 = lb.norm();
  if (!(beta1 > 0.0) || !std::isfinite(beta1)) {
    throw DegenerateDataError("mixgk: right-hand side has zero R^-1 norm");
  }
  beta_.push_back(beta1);
  U_.col(0) = b / beta1;
  Ut_.col(0) = lb / beta1;

  Vector z = ops_.A.apply_transpose(ops_.r_inv.apply(U_.col(0)));
  Vector qz = ops_.q1.apply(z);
  const double alpha1 = std::sqrt(std::max(0.0, z.dot(qz)));
  if (!(alpha1 > 0.0) || !std::isfinite(alpha1)) {
    alpha_.push_back(0.0);
    status_ = MixGKStatus::ImmediateBreakdown;
    log_.emplace_back("init: alpha_1 = 0, immediate breakdown");
    return;
  }
  alpha_.push_back(alpha1);
  V_.col(0) = z / alpha1;
  Q1V_.col(0) = qz / alpha1;
}

void MixGKState::ensure_capacity(Index cols) {
  if (cols <= capacity_) return;
  const Index cap = std::max(cols, 2 * capacity_);
  const Index m = ops_.A.rows();
  const Index n = ops_.A.cols();
  auto grow = [](Matrix& mat, Index rows, Index new_cols) {
    const Index old = mat.cols();
    mat.conservativeResize(rows, new_cols);
    if (new_cols > old) mat.rightCols(new_cols - old).setZero();
  };
  grow(U_, m, cap + 1);
  grow(Ut_, m, cap + 1);
  grow(V_, n, cap + 1);
  grow(Q1V_, n, cap + 1);
  grow(W_, n, cap);
  grow(LAQ2V_, m, cap);
  const Index old_rows = C_.rows();
  const Index old_cols = C_.cols();
  C_.conservativeResize(cap + 1, cap);
  C_.bottomRows(cap + 1 - old_rows).setZero();
  C_.rightCols(cap - old_cols).setZero();
  capacity_ = cap;
}

void MixGKState::step() {
  if (!can_step()) {
    throw ArgumentError("mixgk_step: process has broken down");
  }
  ensure_capacity(k_ + 1);
  const Index k = k_;  // 0-based column of v_{k+1} becomes part of V
  k_ += 1;
  const double alpha_k = alpha_.back();

  // beta_{k+1} u_{k+1} = A Q1 v_k - alpha_k u_k
  Vector w = ops_.A.apply(Vector(Q1V_.col(k)));
  w -= alpha_k * U_.col(k);
  Vector h_total = Vector::Zero(k + 1);
  h_total[k] = alpha_k;
  if (options_.reorthogonalize) {
    for (int pass = 0; pass < 2; ++pass) {
      const Vector lw = ops_.l_r.apply(w);
      const Vector h = Ut_.leftCols(k + 1).transpose() * lw;
      w.noalias() -= U_.leftCols(k + 1) * h;
      h_total += h;
    }
  }
  Vector lw = ops_.l_r.apply(w);
  const double beta_next = lw.norm();
  const double beta_ref = std::sqrt(beta_next * beta_next + h_total.squaredNorm());
  const bool beta_broke = !(beta_next > options_.breakdown_tol * beta_ref);
  if (beta_broke) {
    beta_.push_back(0.0);
    U_.col(k + 1).setZero();
    Ut_.col(k + 1).setZero();
    status_ = MixGKStatus::BetaBreakdown;
    log_.emplace_back("step " + std::to_string(k_) + ": beta breakdown");
  } else {
    beta_.push_back(beta_next);
    U_.col(k + 1) = w / beta_next;
    Ut_.col(k + 1) = lw / beta_next;
  }

  update_q2_branch();

  if (beta_broke) {
    alpha_.push_back(0.0);
    V_.col(k + 1).setZero();
    Q1V_.col(k + 1).setZero();
    return;
  }

  // alpha_{k+1} v_{k+1} = A^T R^-1 u_{k+1} - beta_{k+1} v_k
  Vector z = ops_.A.apply_transpose(ops_.r_inv.apply(Vector(U_.col(k + 1))));
  z -= beta_next * V_.col(k);
  Vector g_total = Vector::Zero(k + 1);
  g_total[k] = beta_next;
  if (options_.reorthogonalize) {
    for (int pass = 0; pass < 2; ++pass) {
      const Vector g = Q1V_.leftCols(k + 1).transpose() * z;
      z.noalias() -= V_.leftCols(k + 1) * g;
      g_total += g;
    }
  }
  Vector qz = ops_.q1.apply(z);
  const double alpha_next = std::sqrt(std::max(0.0, z.dot(qz)));
  const double alpha_ref =
      std::sqrt(alpha_next * alpha_next + g_total.squaredNorm());
  if (!(alpha_next > options_.breakdown_tol * alpha_ref)) {
    alpha_.push_back(0.0);
    V_.col(k + 1).setZero();
    Q1V_.col(k + 1).setZero();
    status_ = MixGKStatus::AlphaBreakdown;
    log_.emplace_back("step " + std::to_string(k_) + ": alpha breakdown");
    return;
  }
  alpha_.push_back(alpha_next);
  V_.col(k + 1) = z / alpha_next;
  Q1V_.col(k + 1) = qz / alpha_next;
}

void MixGKState::update_q2_branch() {
  const Index k = k_;  // new column index is k - 1
  const Index col = k - 1;
  const Index m = ops_.A.rows();
  last_qr_flops_ = 0;
  if (!options_.track_q2) {
    W_.col(col).setZero();
    LAQ2V_.col(col).setZero();
    Matrix R = Matrix::Zero(0, k);
    qr_.R = std::move(R);
    return;
  }
  const Vector wq = ops_.q2.apply(Vector(V_.col(col)));
  W_.col(col) = wq;
  const Vector t = ops_.l_r.apply(ops_.A.apply(wq));
  LAQ2V_.col(col) = t;

  const auto ut = Ut_.leftCols(k + 1);
  C_.row(k).head(col) = ut.col(k).transpose() * LAQ2V_.leftCols(col);
  C_.col(col).head(k + 1) = ut.transpose() * t;

  if (!options_.incremental_qr) {
    qr_ = skinny_qr_recompute(ut, LAQ2V_.leftCols(k), options_.rank_tol,
                              &last_qr_flops_);
    return;
  }
  Vector v_hat = t - ut * C_.col(col).head(k + 1);
  const Vector u_new = Ut_.col(k);
  QrUpdateResult res =
      qr_append_update(qr_, u_new, v_hat, t.norm(), options_.rank_tol, ut);
  last_qr_flops_ = res.flops + 4 * static_cast<std::uint64_t>(m * (k + 1));
  if (res.needs_recompute) {
    std::uint64_t flops = 0;
    qr_ = skinny_qr_recompute(ut, LAQ2V_.leftCols(k), options_.rank_tol, &flops);
    last_qr_flops_ += flops;
    ++recomputes_;
    log_.emplace_back("step " + std::to_string(k) +
                      ": ill-conditioned deflation, QR recomputed");
    return;
  }
  if (!res.appended) {
    log_.emplace_back("step " + std::to_string(k) +
                      ": Q2 column numerically dependent, dropped");
  }
}

Matrix MixGKState::B() const {
  Matrix b = Matrix::Zero(k_ + 1, k_);
  for (Index i = 0; i < k_; ++i) {
    b(i, i) = alpha_[static_cast<std::size_t>(i)];
    b(i + 1, i) = beta_[static_cast<std::size_t>(i + 1)];
  }
  return b;
}

MixGKState mixgk_init(const MixGKOperators& ops, const Vector& b,
                      MixGKOptions options) {
  return MixGKState(ops, b, options);
}

void mixgk_step(MixGKState& state) { state.step(); }

}  // namespace mixkry
