#include "detail/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace mixkry::detail {

NelderMeadResult nelder_mead(const std::function<double(const Vector&)>& f,
                             const Vector& x0, double f0, const Vector& step,
                             const Vector& lo, const Vector& hi,
                             Index max_evals, double xtol, double ftol,
                             const VertexLess& less) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  const Index dim = x0.size();
  Index used = 0;
  auto project = [&](const Vector& x) -> Vector { return x.cwiseMax(lo).cwiseMin(hi); };
  auto eval = [&](const Vector& x) {
    ++used;
    const double v = f(x);
    return std::isfinite(v) ? v : inf;
  };
  auto lt = [&](const Vector& xa, double fa, const Vector& xb, double fb) {
    return less ? less(xa, fa, xb, fb) : fa < fb;
  };

  std::vector<Vector> xs{x0};
  std::vector<double> fs{std::isfinite(f0) ? f0 : inf};
  for (Index i = 0; i < dim; ++i) {
    Vector x = x0;
    x[i] += step[i];
    if (x[i] > hi[i]) x[i] = x0[i] - step[i];
    x = project(x);
    xs.push_back(x);
    fs.push_back(eval(x));
  }

  bool converged = false;
  while (true) {
    std::vector<std::size_t> idx(xs.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return lt(xs[a], fs[a], xs[b], fs[b]);
    });
    std::vector<Vector> sx;
    std::vector<double> sf;
    for (std::size_t i : idx) {
      sx.push_back(xs[i]);
      sf.push_back(fs[i]);
    }
    xs = std::move(sx);
    fs = std::move(sf);

    double size = 0.0;
    for (std::size_t i = 1; i < xs.size(); ++i) {
      size = std::max(size, (xs[i] - xs[0]).cwiseAbs().maxCoeff());
    }
    const double spread = fs.back() - fs.front();
    if (size <= xtol || (std::isfinite(spread) && spread <= ftol * std::abs(fs.front()))) {
      converged = true;
      break;
    }
    if (used >= max_evals) break;

    Vector centroid = Vector::Zero(dim);
    for (Index i = 0; i < dim; ++i) centroid += xs[static_cast<std::size_t>(i)];
    centroid /= static_cast<double>(dim);
    const Vector worst = xs.back();
    const Vector xr = project(centroid + (centroid - worst));
    const double fr = eval(xr);
    if (fr < fs.front()) {
      const Vector xe = project(centroid + 2.0 * (centroid - worst));
      const double fe = eval(xe);
      if (fe < fr) {
        xs.back() = xe;
        fs.back() = fe;
      } else {
        xs.back() = xr;
        fs.back() = fr;
      }
      continue;
    }
    if (fr < fs[fs.size() - 2]) {
      xs.back() = xr;
      fs.back() = fr;
      continue;
    }
    const Vector xc = fr < fs.back() ? project(centroid + 0.5 * (xr - centroid))
                                     : project(centroid + 0.5 * (worst - centroid));
    const double fc = eval(xc);
    if (fc < std::min(fr, fs.back())) {
      xs.back() = xc;
      fs.back() = fc;
      continue;
    }
    for (std::size_t i = 1; i < xs.size(); ++i) {
      xs[i] = project(xs[0] + 0.5 * (xs[i] - xs[0]));
      fs[i] = eval(xs[i]);
    }
  }
  return {xs.front(), fs.front(), used, converged};
}

}  // namespace mixkry::detail
