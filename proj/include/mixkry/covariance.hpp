#pragma once

#include "mixkry/kernels.hpp"
#include "mixkry/linear_operator.hpp"

#include <optional>
#include <span>

namespace mixkry {

/// Regular 2D grid of cell centres, vectorized row-major (x fastest).
///
/// The default spacing maps the grid onto the unit square, so kernel length
/// scales are relative to the domain and portable across resolutions.
struct Grid {
  Index nx = 1;
  Index ny = 1;
  double hx = 1.0;
  double hy = 1.0;

  static Grid unit_square(Index nx, Index ny);
  static Grid unit_square(Index n) { return unit_square(n, n); }

  Index size() const { return nx * ny; }
  Eigen::Vector2d point(Index i) const;
  /// Diameter of the rectangular domain covered by the grid.
  double diameter() const;
  void validate() const;
};

inline constexpr Index kDefaultDenseCap = 16384;

/// Dense kernel matrix Q_ij = kappa(|z_i - z_j|).
Matrix kernel_matrix(const KernelSpec& spec, const Grid& grid,
                     Index cap = kDefaultDenseCap);

/// Symmetric operator backed by the dense kernel matrix.
LinearOperator build_kernel_operator(const KernelSpec& spec, const Grid& grid,
                                     Index cap = kDefaultDenseCap);

/// Factor of the sample covariance, Q_hat = S S^T.
///
/// Column j of S is (s_j - mean) / sqrt(N). Q_hat is never formed; products
/// are evaluated as S (S^T x).
struct SampleFactor {
  Matrix S;
  Vector mean;
  Index count = 0;

  Index dim() const { return S.rows(); }
  Vector apply(const Vector& x) const;
  LinearOperator as_operator() const;
  /// tr(Q_hat) and tr(Q_hat^2) through the N x N Gram matrix.
  double trace() const;
  double trace_of_square() const;
};

/// Mean and 1/N-normalized covariance factor of the given samples.
SampleFactor sample_covariance(std::span<const Vector> samples);
/// Same, with samples stored as the columns of `columns`.
SampleFactor sample_covariance(const Matrix& columns);

/// Gaussian prior N(mean, lambda^-2 (gamma Q1 + (1 - gamma) Q2)).
struct PriorSpec {
  Vector mean;
  LinearOperator q1;
  LinearOperator q2;
  /// Fixed mixing weight; empty when gamma is to be estimated.
  std::optional<double> fixed_gamma;

  Index dim() const { return q1.rows(); }
  void validate() const;
};

/// gamma Q1 x + (1 - gamma) Q2 x.
Vector mixed_apply(const PriorSpec& prior, double gamma, const Vector& x);
/// The mixed covariance as an operator for a fixed gamma.
LinearOperator mixed_operator(const PriorSpec& prior, double gamma);

/// Noise precision R^-1 and its square root L_R (R^-1 = L_R^T L_R) for a
/// diagonal noise covariance R.
struct NoiseWhitener {
  LinearOperator r_inv;
  LinearOperator l_r;
  Vector variances;
};

NoiseWhitener noise_whitener(const Vector& variances);
NoiseWhitener noise_whitener(Index m, double sigma2);

}  // namespace mixkry
