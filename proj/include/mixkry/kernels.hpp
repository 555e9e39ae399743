#pragma once

#include <string>
#include <string_view>

namespace mixkry {

enum class KernelFamily {
  SquaredExponential,
  Matern,
  GammaExponential,
  RationalQuadratic,
  Sinc,
};

/// Parameters of a stationary isotropic covariance function kappa(r).
///
/// `ell` is the length scale, `nu` the shape (Matern smoothness, rational
/// quadratic exponent, sinc frequency) and `gamma_exp` the exponent of the
/// gamma-exponential family. Unused fields are ignored by `validate`.
struct KernelSpec {
  KernelFamily family = KernelFamily::Matern;
  double ell = 1.0;
  double nu = 0.5;
  double gamma_exp = 1.0;

  /// Throws ParameterDomainError when a used field is out of range.
  void validate() const;
};

/// kappa(r) for r >= 0, normalized so that kappa(0) = 1.
double kernel_eval(const KernelSpec& spec, double r);

std::string_view to_string(KernelFamily family);
/// Accepts "squared-exponential"/"se", "matern", "gamma-exponential"/"gexp",
/// "rational-quadratic"/"rq" and "sinc".
KernelFamily parse_kernel_family(std::string_view name);

namespace detail {
/// Matern correlation through the Bessel-function form, any nu > 0.
double matern_bessel(double nu, double ell, double r);
/// Closed forms for nu in {1/2, 3/2, 5/2}.
double matern_half_integer(double nu, double ell, double r);
bool is_half_integer_matern(double nu);
}  // namespace detail

}  // namespace mixkry
