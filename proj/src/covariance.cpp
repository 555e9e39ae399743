#include "mixkry/covariance.hpp"

#include "mixkry/errors.hpp"

#include <cmath>
#include <string>

namespace mixkry {

Grid Grid::unit_square(Index nx, Index ny) {
  Grid g{nx, ny, 1.0 / static_cast<double>(nx), 1.0 / static_cast<double>(ny)};
  g.validate();
  return g;
}

Eigen::Vector2d Grid::point(Index i) const {
  const Index ix = i % nx;
  const Index iy = i / nx;
  return {(static_cast<double>(ix) + 0.5) * hx,
          (static_cast<double>(iy) + 0.5) * hy};
}

double Grid::diameter() const {
  return std::hypot(static_cast<double>(nx) * hx, static_cast<double>(ny) * hy);
}

void Grid::validate() const {
  if (nx <= 0 || ny <= 0) {
    throw ArgumentError("Grid: shape must be positive");
  }
  if (!(hx > 0.0) || !(hy > 0.0)) {
    throw ArgumentError("Grid: spacing must be positive");
  }
}

Matrix kernel_matrix(const KernelSpec& spec, const Grid& grid, Index cap) {
  spec.validate();
  grid.validate();
  const Index n = grid.size();
  if (n > cap) {
    throw CapacityError("kernel matrix with n = " + std::to_string(n) +
                        " exceeds the dense cap " + std::to_string(cap) +
                        "; supply a matrix-free operator (e.g. FFT embedding)");
  }
  // Stationary kernel on a regular grid: entries depend only on the index
  // offset, so kappa is evaluated once per offset.
  Matrix table(grid.ny, grid.nx);
  for (Index dy = 0; dy < grid.ny; ++dy) {
    for (Index dx = 0; dx < grid.nx; ++dx) {
      const double r = std::hypot(static_cast<double>(dx) * grid.hx,
                                  static_cast<double>(dy) * grid.hy);
      table(dy, dx) = kernel_eval(spec, r);
    }
  }
  Matrix q(n, n);
  for (Index j = 0; j < n; ++j) {
    const Index jx = j % grid.nx;
    const Index jy = j / grid.nx;
    for (Index i = 0; i < n; ++i) {
      const Index ix = i % grid.nx;
      const Index iy = i / grid.nx;
      q(i, j) = table(std::abs(iy - jy), std::abs(ix - jx));
    }
  }
  return q;
}

LinearOperator build_kernel_operator(const KernelSpec& spec, const Grid& grid,
                                     Index cap) {
  return make_symmetric_operator(
      std::make_shared<const Matrix>(kernel_matrix(spec, grid, cap)));
}

Vector SampleFactor::apply(const Vector& x) const {
  if (x.size() != S.rows()) {
    throw ArgumentError("SampleFactor::apply: dimension mismatch");
  }
  const Vector t = S.transpose() * x;
  return S * t;
}

LinearOperator SampleFactor::as_operator() const {
  auto factor = std::make_shared<const Matrix>(S);
  auto map = [factor](const Vector& x, Vector& y) {
    const Vector t = factor->transpose() * x;
    y.noalias() = *factor * t;
  };
  return LinearOperator(S.rows(), S.rows(), map, map);
}

double SampleFactor::trace() const { return S.squaredNorm(); }

double SampleFactor::trace_of_square() const {
  const Matrix gram = S.transpose() * S;
  return gram.squaredNorm();
}

SampleFactor sample_covariance(const Matrix& columns) {
  if (columns.cols() == 0 || columns.rows() == 0) {
    throw ArgumentError("sample_covariance: need at least one sample");
  }
  const double count = static_cast<double>(columns.cols());
  SampleFactor f;
  f.count = columns.cols();
  f.mean = columns.rowwise().mean();
  f.S = (columns.colwise() - f.mean) / std::sqrt(count);
  return f;
}

SampleFactor sample_covariance(std::span<const Vector> samples) {
  if (samples.empty()) {
    throw ArgumentError("sample_covariance: need at least one sample");
  }
  const Index n = samples.front().size();
  Matrix columns(n, static_cast<Index>(samples.size()));
  for (std::size_t j = 0; j < samples.size(); ++j) {
    if (samples[j].size() != n) {
      throw ArgumentError("sample_covariance: samples differ in length");
    }
    columns.col(static_cast<Index>(j)) = samples[j];
  }
  return sample_covariance(columns);
}

void PriorSpec::validate() const {
  if (q1.rows() != q1.cols() || q2.rows() != q2.cols()) {
    throw ArgumentError("PriorSpec: covariance operators must be square");
  }
  if (q1.rows() != q2.rows()) {
    throw ArgumentError("PriorSpec: Q1 and Q2 dimensions differ");
  }
  if (mean.size() != q1.rows()) {
    throw ArgumentError("PriorSpec: mean length does not match Q1");
  }
  if (fixed_gamma && !(*fixed_gamma > 0.0 && *fixed_gamma <= 1.0)) {
    throw ParameterDomainError("PriorSpec: mixing parameter must lie in (0, 1]");
  }
}

Vector mixed_apply(const PriorSpec& prior, double gamma, const Vector& x) {
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw ParameterDomainError("mixed_apply: gamma must lie in (0, 1]");
  }
  if (x.size() != prior.q1.cols() || x.size() != prior.q2.cols()) {
    throw ArgumentError("mixed_apply: dimension mismatch");
  }
  Vector y = gamma * prior.q1.apply(x);
  if (gamma < 1.0 && !prior.q2.is_zero()) {
    y += (1.0 - gamma) * prior.q2.apply(x);
  }
  return y;
}

LinearOperator mixed_operator(const PriorSpec& prior, double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw ParameterDomainError("mixed_operator: gamma must lie in (0, 1]");
  }
  return make_combination(gamma, prior.q1, 1.0 - gamma, prior.q2);
}

NoiseWhitener noise_whitener(const Vector& variances) {
  if (variances.size() == 0) {
    throw ArgumentError("noise_whitener: empty variance vector");
  }
  for (Index i = 0; i < variances.size(); ++i) {
    if (!(variances[i] > 0.0) || !std::isfinite(variances[i])) {
      throw DefinitenessError("noise_whitener: variance " + std::to_string(i) +
                              " is not positive");
    }
  }
  NoiseWhitener w;
  w.variances = variances;
  w.r_inv = make_diagonal_operator(variances.cwiseInverse());
  w.l_r = make_diagonal_operator(variances.cwiseSqrt().cwiseInverse());
  return w;
}

NoiseWhitener noise_whitener(Index m, double sigma2) {
  return noise_whitener(Vector::Constant(m, sigma2));
}

}  // namespace mixkry
