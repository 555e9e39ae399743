#include "mixkry/params.hpp"

#include "detail/nelder_mead.hpp"
#include "mixkry/errors.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>
#include <thread>
#include <tuple>

namespace mixkry {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Terms {
  Vector y;
  double res2 = 0.0;
  double trace = 0.0;
  bool ok = false;
};

// Solves (D^T D + lambda^2 P) y = D^T rhs and evaluates the residual and,
// when asked, tr((D^T D + lambda^2 P)^-1 D^T D).
Terms compute_terms(const Matrix& D, const Matrix& DtD, const Matrix& P,
                    const Vector& rhs, double lambda, bool need_trace) {
  Terms t;
  const Matrix M = DtD + (lambda * lambda) * P;
  Eigen::LLT<Matrix> llt(M);
  if (llt.info() != Eigen::Success) return t;
  t.y = llt.solve(D.transpose() * rhs);
  t.res2 = (D * t.y - rhs).squaredNorm();
  if (need_trace) {
    const Matrix inv = llt.solve(Matrix::Identity(M.rows(), M.cols()));
    t.trace = inv.cwiseProduct(DtD).sum();
  }
  t.ok = t.y.allFinite() && std::isfinite(t.res2) && std::isfinite(t.trace);
  return t;
}

Terms system_terms(const ProjectedSystem& sys, double lambda, bool need_trace) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw ParameterDomainError("lambda must be positive and finite");
  }
  const Matrix DtD = sys.D.transpose() * sys.D;
  Terms t = compute_terms(sys.D, DtD, sys.penalty(), sys.rhs, lambda, need_trace);
  if (!t.ok) {
    throw ConditioningError("regularized projected system is not SPD");
  }
  return t;
}

double upre_value(double res2, double trace, double sigma2, Index rows) {
  const auto r = static_cast<double>(rows);
  return (res2 + 2.0 * sigma2 * trace) / r - sigma2;
}

double gcv_value(double res2, double trace, double omega, Index rows) {
  const double denom = static_cast<double>(rows) - omega * trace;
  if (!(denom > 0.0)) {
    throw DegenerateDataError("GCV denominator is not positive");
  }
  return res2 / (denom * denom);
}

bool better(double f, double lambda, double gamma, double bf, double bl,
            double bg) {
  return std::tie(f, lambda, gamma) < std::tie(bf, bl, bg);
}

std::vector<double> linspace(double lo, double hi, Index count) {
  std::vector<double> out(static_cast<std::size_t>(count));
  for (Index i = 0; i < count; ++i) {
    out[static_cast<std::size_t>(i)] =
        count == 1 ? hi : lo + (hi - lo) * static_cast<double>(i) /
                                   static_cast<double>(count - 1);
  }
  return out;
}

void validate(const SelectionConfig& c) {
  if (!(c.gamma_min > 0.0 && c.gamma_min <= 1.0)) {
    throw ConfigError("select.gamma_min must lie in (0, 1]");
  }
  if (c.grid_gamma < 1 || c.grid_lambda < 1) {
    throw ConfigError("selection grid must have at least one cell per axis");
  }
  if (!(c.log_lambda_min <= c.log_lambda_max) ||
      !(c.log_lambda_lo <= c.log_lambda_min) ||
      !(c.log_lambda_max <= c.log_lambda_hi)) {
    throw ConfigError("inconsistent log10 lambda bounds");
  }
  if (c.fixed_gamma && !(*c.fixed_gamma > 0.0 && *c.fixed_gamma <= 1.0)) {
    throw ParameterDomainError("fixed gamma must lie in (0, 1]");
  }
  if (c.max_evaluations < 0) {
    throw ConfigError("select.max_evaluations must be nonnegative");
  }
}

}  // namespace

std::string_view to_string(SelectionMethod method) {
  switch (method) {
    case SelectionMethod::Optimal: return "optimal";
    case SelectionMethod::Upre: return "upre";
    case SelectionMethod::Gcv: return "gcv";
    case SelectionMethod::Wgcv: return "wgcv";
  }
  return "unknown";
}

SelectionMethod parse_selection_method(std::string_view name) {
  if (name == "optimal" || name == "opt") return SelectionMethod::Optimal;
  if (name == "upre") return SelectionMethod::Upre;
  if (name == "gcv") return SelectionMethod::Gcv;
  if (name == "wgcv") return SelectionMethod::Wgcv;
  throw ConfigError("unknown selection method '" + std::string(name) + "'");
}

double upre_objective(const ProjectedSystem& sys, double lambda, double sigma2) {
  if (!(sigma2 > 0.0)) throw ConfigError("UPRE needs sigma2 > 0");
  const Terms t = system_terms(sys, lambda, true);
  return upre_value(t.res2, t.trace, sigma2, sys.rows());
}

double gcv_objective(const ProjectedSystem& sys, double lambda) {
  const Terms t = system_terms(sys, lambda, true);
  return gcv_value(t.res2, t.trace, 1.0, sys.rows());
}

double wgcv_objective(const ProjectedSystem& sys, double lambda, double omega) {
  if (!(omega > 0.0)) throw ParameterDomainError("WGCV omega must be positive");
  const Terms t = system_terms(sys, lambda, true);
  return gcv_value(t.res2, t.trace, omega, sys.rows());
}

double default_wgcv_omega(Index k, Index m) {
  return static_cast<double>(2 * k + 1) / static_cast<double>(m);
}

double optimal_objective(const MixGKState& state, const PriorSpec& prior,
                         double gamma, double lambda, const Vector& s_true) {
  const ProjectedSystem sys = build_projected(state, gamma);
  const Terms t = system_terms(sys, lambda, false);
  return (recover_iterate(state, prior, gamma, t.y) - s_true).squaredNorm();
}

RuleEvaluator::RuleEvaluator(const MixGKState& state, const PriorSpec& prior,
                             const SelectionConfig& config,
                             const Vector* s_true)
    : state_(&state), method_(config.method), k_(state.k()) {
  if (k_ < 1) throw ArgumentError("parameter selection needs k >= 1");
  switch (method_) {
    case SelectionMethod::Upre:
      if (!config.sigma2) throw ConfigError("select.sigma2 is required for upre");
      if (!(*config.sigma2 > 0.0)) throw ConfigError("select.sigma2 must be positive");
      sigma2_ = *config.sigma2;
      break;
    case SelectionMethod::Wgcv:
      omega_ = config.omega ? *config.omega : default_wgcv_omega(k_, state.m());
      if (!(omega_ > 0.0)) throw ConfigError("select.omega must be positive");
      break;
    case SelectionMethod::Optimal:
      if (s_true == nullptr) {
        throw ConfigError("optimal selection needs the true solution (problem.truth)");
      }
      if (s_true->size() != state.n()) {
        throw ArgumentError("true solution has the wrong length");
      }
      offset_ = prior.mean - *s_true;
      break;
    case SelectionMethod::Gcv:
      break;
  }
  DB_ = Matrix::Zero(2 * k_ + 1, k_);
  DB_.topRows(k_ + 1) = state.B();
  DC_ = Matrix::Zero(2 * k_ + 1, k_);
  DC_.topRows(k_ + 1) = state.C();
  const SkinnyQR& qr = state.qr();
  if (qr.rank() > 0) DC_.middleRows(k_ + 1, qr.rank()) = qr.R;
  BB_ = DB_.transpose() * DB_;
  const Matrix bc = DB_.transpose() * DC_;
  BC_ = bc + bc.transpose();
  CC_ = DC_.transpose() * DC_;
  const Matrix g = state.V().transpose() * state.W();
  G_ = 0.5 * (g + g.transpose());
}

Vector RuleEvaluator::solve(double gamma, double lambda) const {
  const double c = 1.0 - gamma;
  const Matrix D = gamma * DB_ + c * DC_;
  const Matrix DtD = (gamma * gamma) * BB_ + (gamma * c) * BC_ + (c * c) * CC_;
  Matrix P = c * G_;
  P.diagonal().array() += gamma;
  Vector rhs = Vector::Zero(2 * k_ + 1);
  rhs[0] = state_->beta1();
  Terms t = compute_terms(D, DtD, P, rhs, lambda, false);
  if (!t.ok) throw ConditioningError("regularized projected system is not SPD");
  return t.y;
}

double RuleEvaluator::operator()(double gamma, double lambda) const {
  if (!(gamma > 0.0 && gamma <= 1.0) || !(lambda > 0.0)) return kInf;
  const double c = 1.0 - gamma;
  const Matrix D = gamma * DB_ + c * DC_;
  const Matrix DtD = (gamma * gamma) * BB_ + (gamma * c) * BC_ + (c * c) * CC_;
  Matrix P = c * G_;
  P.diagonal().array() += gamma;
  Vector rhs = Vector::Zero(2 * k_ + 1);
  rhs[0] = state_->beta1();
  const bool need_trace = method_ != SelectionMethod::Optimal;
  const Terms t = compute_terms(D, DtD, P, rhs, lambda, need_trace);
  if (!t.ok) return kInf;
  const Index rows = 2 * k_ + 1;
  switch (method_) {
    case SelectionMethod::Upre:
      return upre_value(t.res2, t.trace, sigma2_, rows);
    case SelectionMethod::Gcv:
    case SelectionMethod::Wgcv: {
      const double omega = method_ == SelectionMethod::Gcv ? 1.0 : omega_;
      const double denom = static_cast<double>(rows) - omega * t.trace;
      if (!(denom > 0.0)) return kInf;
      return t.res2 / (denom * denom);
    }
    case SelectionMethod::Optimal: {
      Vector e = offset_;
      e.noalias() += gamma * (state_->Q1V() * t.y);
      if (c != 0.0) e.noalias() += c * (state_->W() * t.y);
      return e.squaredNorm();
    }
  }
  return kInf;
}

int search_threads(const SelectionConfig& config) {
  int threads = std::max(1, config.threads);
  if (const char* env = std::getenv("MIXKRY_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) threads = std::min(threads, cap);
  }
  return threads;
}

SelectionResult search_parameters(const Objective2D& objective,
                                  const SelectionConfig& config) {
  validate(config);
  const bool fixed = config.fixed_gamma.has_value();
  const std::vector<double> gammas =
      fixed ? std::vector<double>{*config.fixed_gamma}
            : linspace(config.gamma_min, 1.0, config.grid_gamma);
  const std::vector<double> logs =
      linspace(config.log_lambda_min, config.log_lambda_max, config.grid_lambda);

  auto eval = [&](double gamma, double log_lambda) {
    const double f = objective(gamma, std::pow(10.0, log_lambda));
    return std::isfinite(f) ? f : kInf;
  };

  // Grid stage.
  const std::size_t cells = gammas.size() * logs.size();
  std::vector<double> values(cells, kInf);
  const int threads =
      std::min<int>(search_threads(config), static_cast<int>(cells));
  auto work = [&](std::size_t first) {
    for (std::size_t c = first; c < cells; c += static_cast<std::size_t>(threads)) {
      values[c] = eval(gammas[c / logs.size()], logs[c % logs.size()]);
    }
  };
  if (threads <= 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(work, static_cast<std::size_t>(t));
    for (auto& th : pool) th.join();
  }

  SelectionResult out;
  out.method = config.method;
  out.evaluations = static_cast<Index>(cells);
  double best_f = kInf;
  double best_g = kInf;
  double best_t = kInf;
  double worst_f = -kInf;
  for (std::size_t c = 0; c < cells; ++c) {
    const double g = gammas[c / logs.size()];
    const double t = logs[c % logs.size()];
    if (values[c] == kInf) continue;
    worst_f = std::max(worst_f, values[c]);
    if (better(values[c], t, g, best_f, best_t, best_g)) {
      best_f = values[c];
      best_g = g;
      best_t = t;
    }
  }
  if (best_f == kInf) {
    throw SearchFailure("parameter search: objective is nonfinite on the whole grid");
  }
  out.gamma = best_g;
  out.lambda = std::pow(10.0, best_t);
  out.objective = best_f;

  const double scale = std::max(std::abs(best_f), std::abs(worst_f));
  if (worst_f - best_f <= 1e-12 * scale) {
    // Flat objective: the tie-break already picked the lower-left corner.
    out.converged = false;
    return out;
  }
  if (config.max_evaluations == 0) {
    out.converged = true;
    return out;
  }

  // Nelder-Mead refinement in (gamma, log10 lambda), or log10 lambda alone.
  const Index dim = fixed ? 1 : 2;
  Vector lo(dim), hi(dim), step(dim), x0(dim);
  const double dt = logs.size() > 1 ? logs[1] - logs[0] : 1.0;
  if (fixed) {
    lo << config.log_lambda_lo;
    hi << config.log_lambda_hi;
    step << dt;
    x0 << best_t;
  } else {
    const double dg = gammas.size() > 1 ? gammas[1] - gammas[0] : 0.1;
    lo << config.gamma_min, config.log_lambda_lo;
    hi << 1.0, config.log_lambda_hi;
    step << dg, dt;
    x0 << best_g, best_t;
  }
  auto point = [&](const Vector& x) {
    return fixed ? std::pair{*config.fixed_gamma, x[0]} : std::pair{x[0], x[1]};
  };
  const auto nm = detail::nelder_mead(
      [&](const Vector& x) {
        const auto [g, t] = point(x);
        return eval(g, t);
      },
      x0, best_f, step, lo, hi, config.max_evaluations, 1e-6, 1e-10,
      [&](const Vector& xa, double fa, const Vector& xb, double fb) {
        const auto [ga, ta] = point(xa);
        const auto [gb, tb] = point(xb);
        return better(fa, ta, ga, fb, tb, gb);
      });

  const auto [g, t] = point(nm.x);
  out.gamma = g;
  out.lambda = std::pow(10.0, t);
  out.objective = nm.f;
  out.evaluations += nm.evaluations;
  out.converged = nm.converged;
  return out;
}

SelectionResult select_params(const MixGKState& state, const PriorSpec& prior,
                              const SelectionConfig& config,
                              const Vector* s_true) {
  SelectionConfig cfg = config;
  if (!cfg.fixed_gamma && prior.fixed_gamma) cfg.fixed_gamma = prior.fixed_gamma;
  const RuleEvaluator rule(state, prior, cfg, s_true);
  SelectionResult res = search_parameters(
      [&rule](double gamma, double lambda) { return rule(gamma, lambda); }, cfg);
  res.method = cfg.method;
  return res;
}

double evaluate_rule(const MixGKState& state, const PriorSpec& prior,
                     const SelectionConfig& config, double gamma,
                     double lambda, const Vector* s_true) {
  return RuleEvaluator(state, prior, config, s_true)(gamma, lambda);
}

double monitor_value(SelectionMethod method, double res2, double trace,
                     Index m, double sigma2) {
  const auto mm = static_cast<double>(m);
  switch (method) {
    case SelectionMethod::Upre:
      return (res2 + 2.0 * sigma2 * trace) / mm - sigma2;
    case SelectionMethod::Gcv:
    case SelectionMethod::Wgcv: {
      const double denom = mm - trace;
      return denom > 0.0 ? mm * res2 / (denom * denom)
                         : std::numeric_limits<double>::infinity();
    }
    case SelectionMethod::Optimal:
      break;
  }
  throw ArgumentError("monitor_value: not defined for the optimal rule");
}

void StoppingPolicy::validate() const {
  if (max_iter < 1) throw ConfigError("stop.max_iter must be at least 1");
  if (!(flat_tol > 0.0)) throw ConfigError("stop.flat_tol must be positive");
  if (!(residual_tol > 0.0)) throw ConfigError("stop.residual_tol must be positive");
  if (window < 2) throw ConfigError("stop.window must be at least 2");
}

std::string_view to_string(StopDecision decision) {
  switch (decision) {
    case StopDecision::Continue: return "continue";
    case StopDecision::MaxIterations: return "max-iterations";
    case StopDecision::ObjectiveFlat: return "objective-flat";
    case StopDecision::Residual: return "residual";
  }
  return "unknown";
}

StopDecision stopping_check(std::span<const RunRecord> history,
                            const StoppingPolicy& policy) {
  if (history.empty()) throw ArgumentError("stopping_check: empty history");
  const RunRecord& last = history.back();
  if (last.rel_residual <= policy.residual_tol) return StopDecision::Residual;
  const auto w = static_cast<std::size_t>(policy.window);
  if (history.size() >= w) {
    const auto tail = history.last(w);
    const double first = tail.front().objective;
    bool increased = true;
    for (std::size_t i = 1; i < w; ++i) {
      if (tail[i].objective < first) increased = false;
    }
    if (increased && tail.back().objective > first) {
      return StopDecision::ObjectiveFlat;
    }
    if (std::abs(tail.back().objective - first) <=
        policy.flat_tol * std::abs(first)) {
      return StopDecision::ObjectiveFlat;
    }
  }
  if (last.k >= policy.max_iter) return StopDecision::MaxIterations;
  return StopDecision::Continue;
}

}  // namespace mixkry
