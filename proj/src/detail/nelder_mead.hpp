#pragma once

#include "mixkry/linear_operator.hpp"

#include <functional>

namespace mixkry::detail {

struct NelderMeadResult {
  Vector x;
  double f = 0.0;
  Index evaluations = 0;
  bool converged = false;
};

/// Strict ordering of (x, f) pairs; the default compares f only.
using VertexLess =
    std::function<bool(const Vector& xa, double fa, const Vector& xb, double fb)>;

/// Box-projected Nelder-Mead started from x0 (with known value f0) and the
/// axis simplex x0 + step_i e_i. Stops when the simplex shrinks below xtol
/// in every coordinate, when the value spread drops below ftol |f_best|, or
/// after max_evals new evaluations (converged = false).
NelderMeadResult nelder_mead(const std::function<double(const Vector&)>& f,
                             const Vector& x0, double f0, const Vector& step,
                             const Vector& lo, const Vector& hi,
                             Index max_evals, double xtol, double ftol,
                             const VertexLess& less = {});

}  // namespace mixkry::detail
