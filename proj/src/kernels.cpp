#include "mixkry/kernels.hpp"

#include "mixkry/errors.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace mixkry {

void KernelSpec::validate() const {
  if (!(ell > 0.0) || !std::isfinite(ell)) {
    throw ParameterDomainError("kernel length scale must be positive, got " +
                               std::to_string(ell));
  }
  switch (family) {
    case KernelFamily::Matern:
    case KernelFamily::RationalQuadratic:
    case KernelFamily::Sinc:
      if (!(nu > 0.0) || !std::isfinite(nu)) {
        throw ParameterDomainError("kernel shape nu must be positive, got " +
                                   std::to_string(nu));
      }
      break;
    case KernelFamily::GammaExponential:
      if (!(gamma_exp > 0.0 && gamma_exp <= 2.0)) {
        throw ParameterDomainError(
            "gamma-exponential exponent must lie in (0, 2], got " +
            std::to_string(gamma_exp));
      }
      break;
    case KernelFamily::SquaredExponential:
      break;
  }
}

namespace detail {

bool is_half_integer_matern(double nu) {
  return std::abs(nu - 0.5) < 1e-12 || std::abs(nu - 1.5) < 1e-12 ||
         std::abs(nu - 2.5) < 1e-12;
}

double matern_half_integer(double nu, double ell, double r) {
  if (std::abs(nu - 0.5) < 1e-12) {
    return std::exp(-r / ell);
  }
  if (std::abs(nu - 1.5) < 1e-12) {
    const double x = std::sqrt(3.0) * r / ell;
    return (1.0 + x) * std::exp(-x);
  }
  if (std::abs(nu - 2.5) < 1e-12) {
    const double x = std::sqrt(5.0) * r / ell;
    return (1.0 + x + x * x / 3.0) * std::exp(-x);
  }
  throw ParameterDomainError("matern_half_integer: nu must be 1/2, 3/2 or 5/2");
}

double matern_bessel(double nu, double ell, double r) {
  const double x = std::sqrt(2.0 * nu) * r / ell;
  if (x == 0.0) {
    return 1.0;
  }
  // Past ~745 the exponential decay of K_nu underflows double precision.
  if (x > 700.0 + nu) {
    return 0.0;
  }
  const double k = std::cyl_bessel_k(nu, x);
  if (!std::isfinite(k)) {
    // K_nu overflows only for x << nu; use the small-argument expansion.
    if (nu > 1.0) {
      return std::max(0.0, 1.0 - x * x / (4.0 * (nu - 1.0)));
    }
    return 1.0;
  }
  if (k == 0.0) {
    return 0.0;
  }
  const double log_value = (1.0 - nu) * std::numbers::ln2 - std::lgamma(nu) +
                           nu * std::log(x) + std::log(k);
  return std::min(1.0, std::exp(log_value));
}

}  // namespace detail

double kernel_eval(const KernelSpec& spec, double r) {
  spec.validate();
  if (!(r >= 0.0)) {
    throw ParameterDomainError("kernel_eval: distance must be nonnegative");
  }
  switch (spec.family) {
    case KernelFamily::SquaredExponential:
      return std::exp(-r * r / (2.0 * spec.ell * spec.ell));
    case KernelFamily::Matern:
      if (detail::is_half_integer_matern(spec.nu)) {
        return detail::matern_half_integer(spec.nu, spec.ell, r);
      }
      return detail::matern_bessel(spec.nu, spec.ell, r);
    case KernelFamily::GammaExponential:
      return std::exp(-std::pow(r / spec.ell, spec.gamma_exp));
    case KernelFamily::RationalQuadratic:
      return std::pow(1.0 + r * r / (2.0 * spec.nu * spec.ell * spec.ell),
                      -spec.nu);
    case KernelFamily::Sinc: {
      const double x = spec.nu * r;
      if (std::abs(x) < 1e-8) {
        return 1.0 - x * x / 6.0;
      }
      return std::sin(x) / x;
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

std::string_view to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::SquaredExponential:
      return "squared-exponential";
    case KernelFamily::Matern:
      return "matern";
    case KernelFamily::GammaExponential:
      return "gamma-exponential";
    case KernelFamily::RationalQuadratic:
      return "rational-quadratic";
    case KernelFamily::Sinc:
      return "sinc";
  }
  return "unknown";
}

KernelFamily parse_kernel_family(std::string_view name) {
  if (name == "squared-exponential" || name == "se") {
    return KernelFamily::SquaredExponential;
  }
  if (name == "matern") return KernelFamily::Matern;
  if (name == "gamma-exponential" || name == "gexp") {
    return KernelFamily::GammaExponential;
  }
  if (name == "rational-quadratic" || name == "rq") {
    return KernelFamily::RationalQuadratic;
  }
  if (name == "sinc") return KernelFamily::Sinc;
  throw ParameterDomainError("unknown kernel family '" + std::string(name) + "'");
}

}  // namespace mixkry
