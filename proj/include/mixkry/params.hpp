#pragma once

#include "mixkry/covariance.hpp"
#include "mixkry/mixgk.hpp"
#include "mixkry/projected.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string_view>

namespace mixkry {

enum class SelectionMethod { Optimal, Upre, Gcv, Wgcv };

std::string_view to_string(SelectionMethod method);
SelectionMethod parse_selection_method(std::string_view name);

struct SelectionResult {
  double gamma = 1.0;
  double lambda = 1.0;
  double objective = 0.0;
  SelectionMethod method = SelectionMethod::Wgcv;
  Index evaluations = 0;
  bool converged = false;
};

/// Search region and rule inputs for select_params.
///
/// The coarse stage scans a grid_gamma x grid_lambda grid (gamma uniform on
/// [gamma_min, 1], log10 lambda uniform on [log_lambda_min, log_lambda_max]);
/// Nelder-Mead then refines from the best cell inside the box
/// [gamma_min, 1] x [log_lambda_lo, log_lambda_hi].
struct SelectionConfig {
  SelectionMethod method = SelectionMethod::Wgcv;
  /// Whitened noise variance; required for UPRE.
  std::optional<double> sigma2;
  /// WGCV weight; (2k+1)/m when empty.
  std::optional<double> omega;
  /// Pins gamma and reduces the search to lambda only.
  std::optional<double> fixed_gamma;
  double gamma_min = 0.01;
  Index grid_gamma = 15;
  Index grid_lambda = 15;
  double log_lambda_min = -6.0;
  double log_lambda_max = 2.0;
  double log_lambda_lo = -8.0;
  double log_lambda_hi = 8.0;
  Index max_evaluations = 200;
  /// Worker threads for the grid stage.
  int threads = 1;
};

/// ||r||^2/(2k+1) + 2 sigma^2 tr/(2k+1) - sigma^2.
double upre_objective(const ProjectedSystem& sys, double lambda, double sigma2);
/// ||r||^2 / (2k+1 - tr)^2.
double gcv_objective(const ProjectedSystem& sys, double lambda);
/// ||r||^2 / (2k+1 - omega tr)^2.
double wgcv_objective(const ProjectedSystem& sys, double lambda, double omega);
double default_wgcv_omega(Index k, Index m);
/// ||s_k(gamma, lambda) - s_true||^2.
double optimal_objective(const MixGKState& state, const PriorSpec& prior,
                         double gamma, double lambda, const Vector& s_true);

/// Objective f(gamma, lambda) minimized by the generic search.
using Objective2D = std::function<double(double gamma, double lambda)>;

/// Grid scan plus Nelder-Mead refinement of an arbitrary objective. Ties
/// go to the smallest lambda, then the smallest gamma.
SelectionResult search_parameters(const Objective2D& objective,
                                  const SelectionConfig& config);

/// The configured rule as a function of (gamma, lambda) for one state.
///
/// Gamma-independent pieces of D^T D are cached, so each evaluation costs
/// O(k^3) for the k x k solves plus O(nk) for the optimal rule. Calls are
/// const and may run concurrently.
class RuleEvaluator {
 public:
  RuleEvaluator(const MixGKState& state, const PriorSpec& prior,
                const SelectionConfig& config, const Vector* s_true = nullptr);

  double operator()(double gamma, double lambda) const;
  /// Projected solution y_k(gamma, lambda).
  Vector solve(double gamma, double lambda) const;
  SelectionMethod method() const { return method_; }
  double omega() const { return omega_; }

 private:
  const MixGKState* state_;
  SelectionMethod method_;
  double sigma2_ = 0.0;
  double omega_ = 1.0;
  Vector offset_;  // mu - s_true for the optimal rule
  Matrix DB_;      // [B; 0]
  Matrix DC_;      // [C; R]
  Matrix BB_, BC_, CC_;
  Matrix G_;
  Index k_ = 0;
};

/// Selects (gamma, lambda) for the current projected problem.
SelectionResult select_params(const MixGKState& state, const PriorSpec& prior,
                              const SelectionConfig& config,
                              const Vector* s_true = nullptr);

/// Evaluates the configured rule at one point through RuleEvaluator, the
/// same path the search uses.
double evaluate_rule(const MixGKState& state, const PriorSpec& prior,
                     const SelectionConfig& config, double gamma,
                     double lambda, const Vector* s_true = nullptr);

/// Number of grid-stage worker threads: config.threads capped by the
/// MIXKRY_THREADS environment variable when set.
int search_threads(const SelectionConfig& config);

struct StoppingPolicy {
  Index max_iter = 100;
  /// Relative objective change over the window that counts as flat.
  double flat_tol = 1e-4;
  /// Relative projected residual ||r_k|| / beta_1.
  double residual_tol = 1e-6;
  Index window = 3;

  void validate() const;
};

/// One row of run.csv.
struct RunRecord {
  Index k = 0;
  double lambda = 0.0;
  double gamma = 1.0;
  double objective = 0.0;
  double rel_residual = 0.0;
  std::optional<double> rel_error;
  double ms = 0.0;
};

/// Value of a rule rescaled to the m-row normalization of the full problem,
/// so that it can be compared across iterations:
///   UPRE: (res2 + 2 sigma2 tr) / m - sigma2
///   GCV, WGCV: m res2 / (m - tr)^2
/// The optimal rule is already comparable and is not handled here.
double monitor_value(SelectionMethod method, double res2, double trace,
                     Index m, double sigma2 = 0.0);

enum class StopDecision { Continue, MaxIterations, ObjectiveFlat, Residual };

std::string_view to_string(StopDecision decision);

/// Applies the three stopping tests to the run history.
StopDecision stopping_check(std::span<const RunRecord> history,
                            const StoppingPolicy& policy);

}  // namespace mixkry
