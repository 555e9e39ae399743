#include "mixkry/learn.hpp"

#include "detail/nelder_mead.hpp"
#include "mixkry/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace mixkry {

namespace {

void check_probes(const Matrix& probes, Index n) {
  if (probes.rows() != n) {
    throw ArgumentError("probe length does not match the covariance dimension");
  }
  if (probes.cols() < 1) throw ArgumentError("at least one probe is required");
  if (!(probes.array().abs() == 1.0).all()) {
    throw ArgumentError("probe entries must be +1 or -1");
  }
}

// S (S^T Xi), two factor products per probe.
Matrix apply_sample(const SampleFactor& S, const Matrix& probes,
                    HutchinsonStats* stats) {
  if (stats) stats->factor_matvecs += 2 * static_cast<std::uint64_t>(probes.cols());
  if (S.S.cols() == 0) return Matrix::Zero(probes.rows(), probes.cols());
  return S.S * (S.S.transpose() * probes);
}

HutchinsonEstimate summarize(const Matrix& diff) {
  const Vector terms = diff.colwise().squaredNorm().transpose();
  const auto M = static_cast<double>(terms.size());
  HutchinsonEstimate est;
  est.mean = terms.mean();
  if (terms.size() > 1) {
    const double var = (terms.array() - est.mean).square().sum() / (M - 1.0);
    est.std_error = std::sqrt(var / M);
  }
  return est;
}

}  // namespace

Matrix rademacher_probes(Index n, Index M, std::uint64_t seed) {
  if (n < 1 || M < 1) throw ArgumentError("rademacher_probes: empty request");
  Matrix out(n, M);
  std::mt19937_64 rng(seed);
  for (Index j = 0; j < M; ++j) {
    for (Index i = 0; i < n; ++i) out(i, j) = (rng() >> 63) != 0 ? 1.0 : -1.0;
  }
  return out;
}

HutchinsonEstimate hutchinson_estimate(const LinearOperator& Q,
                                       const SampleFactor& S,
                                       const Matrix& probes,
                                       HutchinsonStats* stats) {
  if (Q.rows() != S.dim() || Q.cols() != S.dim()) {
    throw ArgumentError("hutchinson: Q and S dimensions differ");
  }
  check_probes(probes, S.dim());
  Matrix diff = -apply_sample(S, probes, stats);
  Vector q(S.dim());
  for (Index j = 0; j < probes.cols(); ++j) {
    Q.apply(probes.col(j), q);
    diff.col(j) += q;
  }
  if (stats) stats->model_matvecs += static_cast<std::uint64_t>(probes.cols());
  return summarize(diff);
}

double hutchinson_objective(const LinearOperator& Q, const SampleFactor& S,
                            const Matrix& probes, HutchinsonStats* stats) {
  return hutchinson_estimate(Q, S, probes, stats).mean;
}

double hutchinson_objective(const Matrix& Q, const SampleFactor& S,
                            const Matrix& probes, HutchinsonStats* stats) {
  if (Q.rows() != S.dim() || Q.cols() != S.dim()) {
    throw ArgumentError("hutchinson: Q and S dimensions differ");
  }
  check_probes(probes, S.dim());
  const Matrix diff = Q * probes - apply_sample(S, probes, stats);
  if (stats) stats->model_matvecs += static_cast<std::uint64_t>(probes.cols());
  return summarize(diff).mean;
}

double hutchinson_objective(const KernelSpec& spec, const Grid& grid,
                            const SampleFactor& S, const Matrix& probes,
                            HutchinsonStats* stats) {
  if (grid.size() != S.dim()) {
    throw ArgumentError("hutchinson: grid size does not match the samples");
  }
  return hutchinson_objective(kernel_matrix(spec, grid), S, probes, stats);
}

FitResult learn_matern(const SampleFactor& S, const Grid& grid,
                       const LearnConfig& config) {
  grid.validate();
  if (grid.size() != S.dim()) {
    throw ArgumentError("learn_matern: grid size does not match the samples");
  }
  if (config.probes < 1) throw ConfigError("fit.probes must be at least 1");
  const double ell_max = config.ell_max.value_or(grid.diameter());
  if (!(config.nu_min > 0.0 && config.nu_min < config.nu_max) ||
      !(config.ell_min > 0.0 && config.ell_min < ell_max)) {
    throw ConfigError("learn_matern: invalid search box");
  }

  const Matrix probes = rademacher_probes(S.dim(), config.probes, config.seed);
  Matrix sample_part = apply_sample(S, probes, nullptr);
  double scale = 1.0;
  if (config.normalize && S.trace() > 0.0) {
    scale = S.trace() / static_cast<double>(S.dim());
    sample_part /= scale;
  }
  Index evaluations = 0;
  // x = (log nu, log ell).
  auto objective = [&](const Vector& x) {
    ++evaluations;
    KernelSpec spec{KernelFamily::Matern, std::exp(x[1]), std::exp(x[0])};
    const Matrix diff = kernel_matrix(spec, grid) * probes - sample_part;
    return diff.colwise().squaredNorm().mean();
  };

  Vector lo(2), hi(2);
  lo << std::log(config.nu_min), std::log(config.ell_min);
  hi << std::log(config.nu_max), std::log(ell_max);
  const Index g = std::max<Index>(config.start_grid, 2);
  Vector best_x = lo;
  double best_f = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < g; ++i) {
    for (Index j = 0; j < g; ++j) {
      Vector x(2);
      x << lo[0] + (hi[0] - lo[0]) * static_cast<double>(i) / static_cast<double>(g - 1),
          lo[1] + (hi[1] - lo[1]) * static_cast<double>(j) / static_cast<double>(g - 1);
      const double f = objective(x);
      if (std::isfinite(f) && f < best_f) {
        best_f = f;
        best_x = x;
      }
    }
  }
  if (!std::isfinite(best_f)) {
    throw FitFailure("learn_matern: objective nonfinite on the starting grid");
  }
  const Vector step = (hi - lo) / static_cast<double>(g - 1);
  const auto nm = detail::nelder_mead(objective, best_x, best_f, step, lo, hi,
                                      config.max_evaluations, 1e-6, 1e-10);
  if (!std::isfinite(nm.f)) throw FitFailure("learn_matern: optimizer failed");

  FitResult out;
  out.nu = std::exp(nm.x[0]);
  out.ell = std::exp(nm.x[1]);
  out.objective = nm.f;
  out.probes = config.probes;
  out.seed = config.seed;
  out.evaluations = evaluations;
  out.converged = nm.converged;
  out.scale = scale;
  return out;
}

double rblw_gamma(const SampleFactor& S) {
  if (S.count < 2) throw ArgumentError("rblw_gamma: need at least two samples");
  const double tr = S.trace();
  const double tr2 = S.trace_of_square();
  const auto N = static_cast<double>(S.count);
  const auto p = static_cast<double>(S.dim());
  if (tr == 0.0) return 1.0;
  const double denom = (N + 2.0) * (tr2 - tr * tr / p);
  if (!(denom > 0.0)) return 1.0;
  const double rho = ((N - 2.0) / N * tr2 + tr * tr) / denom;
  return std::clamp(rho, std::numeric_limits<double>::min(), 1.0);
}

}  // namespace mixkry
