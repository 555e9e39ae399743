#include "mixkry/projected.hpp"

#include "mixkry/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <cmath>
#include <string>

namespace mixkry {

Matrix ProjectedSystem::penalty() const {
  Matrix p = (1.0 - gamma) * G;
  p.diagonal().array() += gamma;
  return p;
}

ProjectedSystem build_projected(const MixGKState& state, double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw ParameterDomainError("build_projected: gamma must lie in (0, 1]");
  }
  const Index k = state.k();
  if (k < 1) {
    throw ArgumentError("build_projected: need at least one mixGK step");
  }
  ProjectedSystem sys;
  sys.gamma = gamma;
  sys.k = k;
  sys.m = state.m();
  sys.D = Matrix::Zero(2 * k + 1, k);
  sys.D.topRows(k + 1) = gamma * state.B() + (1.0 - gamma) * state.C();
  const SkinnyQR& qr = state.qr();
  if (qr.rank() > 0) {
    sys.D.middleRows(k + 1, qr.rank()) = (1.0 - gamma) * qr.R;
  }
  const Matrix g = state.V().transpose() * state.W();
  sys.G = 0.5 * (g + g.transpose());
  sys.rhs = Vector::Zero(2 * k + 1);
  sys.rhs[0] = state.beta1();
  return sys;
}

Vector solve_projected(const ProjectedSystem& sys, double lambda) {
  if (lambda < 0.0 || !std::isfinite(lambda)) {
    throw ParameterDomainError("solve_projected: lambda must be nonnegative");
  }
  if (lambda == 0.0) {
    Eigen::ColPivHouseholderQR<Matrix> qr(sys.D);
    if (qr.rank() < sys.D.cols()) {
      throw RankError("solve_projected: D is rank deficient at lambda = 0");
    }
    return qr.solve(sys.rhs);
  }
  const Matrix normal =
      sys.D.transpose() * sys.D + lambda * lambda * sys.penalty();
  Eigen::LLT<Matrix> llt(normal);
  if (llt.info() != Eigen::Success) {
    throw ConditioningError("solve_projected: regularized system not SPD");
  }
  return llt.solve(sys.D.transpose() * sys.rhs);
}

Vector projected_residual(const ProjectedSystem& sys, const Vector& y) {
  if (y.size() != sys.D.cols()) {
    throw ArgumentError("projected_residual: y has the wrong length");
  }
  return sys.D * y - sys.rhs;
}

double trace_term(const ProjectedSystem& sys, double lambda) {
  if (!(lambda > 0.0)) {
    throw ParameterDomainError("trace_term: lambda must be positive");
  }
  const Matrix dtd = sys.D.transpose() * sys.D;
  const Matrix normal = dtd + lambda * lambda * sys.penalty();
  Eigen::LLT<Matrix> llt(normal);
  if (llt.info() != Eigen::Success) {
    throw ConditioningError("trace_term: regularized system not SPD");
  }
  return llt.solve(dtd).trace();
}

Vector recover_iterate(const MixGKState& state, const PriorSpec& prior,
                       double gamma, const Vector& y) {
  if (y.size() != state.k()) {
    throw ArgumentError("recover_iterate: y must have length k");
  }
  if (prior.mean.size() != state.n()) {
    throw ArgumentError("recover_iterate: prior mean has the wrong length");
  }
  Vector s = prior.mean + gamma * (state.Q1V() * y);
  if (gamma < 1.0) {
    s.noalias() += (1.0 - gamma) * (state.W() * y);
  }
  return s;
}

Vector solve_map_dense(const Matrix& A, const Matrix& r_inv, const Matrix& Q,
                       const Vector& b, const Vector& mu, double lambda) {
  const Index n = A.cols();
  if (n > 2000) {
    throw CapacityError("solve_map_dense: oracle path limited to n <= 2000");
  }
  if (Q.rows() != n || Q.cols() != n || r_inv.rows() != A.rows() ||
      b.size() != A.rows() || mu.size() != n) {
    throw ArgumentError("solve_map_dense: dimension mismatch");
  }
  const Matrix atr = A.transpose() * r_inv;
  Matrix system = atr * A * Q;
  system.diagonal().array() += lambda * lambda;
  Eigen::PartialPivLU<Matrix> lu(system);
  const double det_scale = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
  if (!(det_scale > 1e-14 * system.norm())) {
    throw ConditioningError("solve_map_dense: system is numerically singular");
  }
  return mu + Q * lu.solve(atr * b);
}

ProjectedEvaluator::ProjectedEvaluator(const ProjectedSystem& sys) : sys_(&sys) {
  const Index k = sys.D.cols();
  Eigen::LLT<Matrix> llt(sys.penalty());
  if (llt.info() != Eigen::Success) {
    throw ConditioningError("ProjectedEvaluator: penalty matrix not SPD");
  }
  const Matrix dtd = sys.D.transpose() * sys.D;
  // K = L^-1 D^T D L^-T
  Matrix tmp = llt.matrixL().solve(dtd);
  Matrix kmat = llt.matrixL().solve(tmp.transpose());
  kmat = 0.5 * (kmat + kmat.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(kmat);
  if (eig.info() != Eigen::Success) {
    throw ConditioningError("ProjectedEvaluator: eigensolver failed");
  }
  theta_ = eig.eigenvalues().cwiseMax(0.0);
  F_ = llt.matrixU().solve(eig.eigenvectors());
  DF_ = sys.D * F_;
  g_ = F_.transpose() * (sys.D.transpose() * sys.rhs);
  (void)k;
}

Vector ProjectedEvaluator::weights(double lambda) const {
  const double l2 = lambda * lambda;
  return g_.array() / (theta_.array() + l2);
}

Vector ProjectedEvaluator::solve(double lambda) const {
  return F_ * weights(lambda);
}

double ProjectedEvaluator::residual_norm_squared(double lambda) const {
  return (DF_ * weights(lambda) - sys_->rhs).squaredNorm();
}

double ProjectedEvaluator::trace(double lambda) const {
  const double l2 = lambda * lambda;
  return (theta_.array() / (theta_.array() + l2)).sum();
}

}  // namespace mixkry
