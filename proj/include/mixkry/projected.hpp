#pragma once

#include "mixkry/covariance.hpp"
#include "mixkry/mixgk.hpp"

namespace mixkry {

/// The (2k+1)-row projected problem for one mixing weight gamma:
///   min_y ||D y - rhs||^2 + lambda^2 y^T (gamma I + (1 - gamma) G) y
/// with D = [gamma B + (1 - gamma) C; (1 - gamma) R; 0], G = V^T Q2 V and
/// rhs = beta_1 e_1.
struct ProjectedSystem {
  Matrix D;
  Matrix G;
  Vector rhs;
  double gamma = 1.0;
  Index k = 0;
  /// Observation count m of the full problem.
  Index m = 0;

  Index rows() const { return D.rows(); }
  /// gamma I + (1 - gamma) G, the penalty matrix.
  Matrix penalty() const;
};

ProjectedSystem build_projected(const MixGKState& state, double gamma);

/// Solves the regularized normal equations by dense Cholesky. lambda = 0 is
/// accepted only when D has full column rank.
Vector solve_projected(const ProjectedSystem& sys, double lambda);

/// D y - rhs.
Vector projected_residual(const ProjectedSystem& sys, const Vector& y);

/// tr((D^T D + lambda^2 P)^-1 D^T D), P the penalty matrix.
double trace_term(const ProjectedSystem& sys, double lambda);

/// s_k = mu + gamma Q1 V y + (1 - gamma) Q2 V y from the cached products.
Vector recover_iterate(const MixGKState& state, const PriorSpec& prior,
                       double gamma, const Vector& y);

/// Dense MAP estimate mu + Q (A^T R^-1 A Q + lambda^2 I)^-1 A^T R^-1 b,
/// where b = d - A mu. Oracle path for n <= 2000.
Vector solve_map_dense(const Matrix& A, const Matrix& r_inv, const Matrix& Q,
                       const Vector& b, const Vector& mu, double lambda);

/// Fast evaluation of one ProjectedSystem across many lambda values.
///
/// With P = L L^T and L^-1 D^T D L^-T = Z diag(theta) Z^T, every quantity
/// is a diagonal rational function of lambda^2: O(k^3) once, then O(k^2)
/// per lambda.
class ProjectedEvaluator {
 public:
  explicit ProjectedEvaluator(const ProjectedSystem& sys);

  Vector solve(double lambda) const;
  double residual_norm_squared(double lambda) const;
  double trace(double lambda) const;
  const ProjectedSystem& system() const { return *sys_; }

 private:
  Vector weights(double lambda) const;

  const ProjectedSystem* sys_;
  Matrix F_;   // L^-T Z
  Matrix DF_;  // D F
  Vector g_;   // Z^T L^-1 D^T rhs
  Vector theta_;
};

}  // namespace mixkry
