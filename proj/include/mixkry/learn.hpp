#pragma once

#include "mixkry/covariance.hpp"

#include <cstdint>
#include <optional>

namespace mixkry {

/// n x M matrix of independent +-1 entries. Column j depends only on the
/// seed and j, so a larger M extends a smaller one.
Matrix rademacher_probes(Index n, Index M, std::uint64_t seed);

/// Counts of matrix-vector products spent inside the estimator.
struct HutchinsonStats {
  std::uint64_t factor_matvecs = 0;  // products with S or S^T
  std::uint64_t model_matvecs = 0;   // products with Q(nu, ell)
};

struct HutchinsonEstimate {
  double mean = 0.0;
  /// Standard error of the mean over the M probe terms.
  double std_error = 0.0;
};

/// (1/M) sum_i ||(Q - S S^T) xi_i||^2 with Q given as an operator.
HutchinsonEstimate hutchinson_estimate(const LinearOperator& Q,
                                       const SampleFactor& S,
                                       const Matrix& probes,
                                       HutchinsonStats* stats = nullptr);

double hutchinson_objective(const LinearOperator& Q, const SampleFactor& S,
                            const Matrix& probes,
                            HutchinsonStats* stats = nullptr);
double hutchinson_objective(const Matrix& Q, const SampleFactor& S,
                            const Matrix& probes,
                            HutchinsonStats* stats = nullptr);
/// Q is the kernel matrix of `spec` on `grid`.
double hutchinson_objective(const KernelSpec& spec, const Grid& grid,
                            const SampleFactor& S, const Matrix& probes,
                            HutchinsonStats* stats = nullptr);

struct FitResult {
  double nu = 0.5;
  double ell = 0.1;
  double objective = 0.0;
  Index probes = 0;
  std::uint64_t seed = 0;
  Index evaluations = 0;
  bool converged = false;
  /// Variance scale tau divided out of Q_hat (1 when not normalized).
  double scale = 1.0;
};

struct LearnConfig {
  Index probes = 20;
  std::uint64_t seed = 0;
  double nu_min = 0.1;
  double nu_max = 10.0;
  double ell_min = 1e-3;
  /// Upper length-scale bound; the grid diameter when empty.
  std::optional<double> ell_max;
  /// Points per axis of the log-spaced starting grid.
  Index start_grid = 5;
  Index max_evaluations = 200;
  /// Fit against Q_hat / tau with tau = tr(Q_hat) / n, so the unit-variance
  /// kernel is compared with a unit-variance target.
  bool normalize = true;
};

/// Fits the Matern (nu, ell) to the sample covariance by minimizing the
/// Hutchinson objective with a fixed probe set.
FitResult learn_matern(const SampleFactor& S, const Grid& grid,
                       const LearnConfig& config = {});

/// Rao-Blackwellized Ledoit-Wolf shrinkage intensity toward a scaled
/// identity, clipped to (0, 1].
double rblw_gamma(const SampleFactor& S);

}  // namespace mixkry
