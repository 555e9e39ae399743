#include "mixkry/hybrid.hpp"

#include "mixkry/errors.hpp"
#include "mixkry/projected.hpp"

#include <chrono>
#include <cmath>
#include <deque>

namespace mixkry {

std::string_view to_string(StopReason reason) {
  switch (reason) {
    case StopReason::MaxIterations: return "max-iterations";
    case StopReason::ObjectiveFlat: return "objective-flat";
    case StopReason::Residual: return "residual";
    case StopReason::Breakdown: return "breakdown";
  }
  return "unknown";
}

HybridResult run_hybrid(const LinearOperator& A, const NoiseWhitener& noise,
                        const PriorSpec& prior, const Vector& d,
                        const HybridConfig& config, const Vector* s_true) {
  prior.validate();
  config.stop.validate();
  if (A.cols() != prior.dim() || A.rows() != d.size()) {
    throw ArgumentError("run_hybrid: dimensions of A, prior and data differ");
  }
  if (s_true && s_true->size() != prior.dim()) {
    throw ArgumentError("run_hybrid: true solution has the wrong length");
  }
  const Vector b = d - A.apply(prior.mean);
  MixGKState state({A, noise.r_inv, noise.l_r, prior.q1, prior.q2}, b, config.mixgk);
  if (state.status() == MixGKStatus::ImmediateBreakdown) {
    throw BreakdownError("mixGK broke down before the first iterate (A^T R^-1 b = 0)");
  }

  HybridResult out;
  double true_norm = 0.0;
  if (s_true) {
    true_norm = s_true->norm();
    if (true_norm > 0.0) out.initial_error = (prior.mean - *s_true).norm() / true_norm;
  }
  SelectionConfig select = config.select;
  if (!select.fixed_gamma && prior.fixed_gamma) select.fixed_gamma = prior.fixed_gamma;
  const double sigma2 = select.sigma2.value_or(0.0);

  std::deque<Vector> window;
  using Clock = std::chrono::steady_clock;
  while (true) {
    const auto t0 = Clock::now();
    state.step();
    const SelectionResult sel = select_params(state, prior, select, s_true);
    const ProjectedSystem sys = build_projected(state, sel.gamma);
    const Vector y = solve_projected(sys, sel.lambda);
    const double res2 = projected_residual(sys, y).squaredNorm();
    Vector s = recover_iterate(state, prior, sel.gamma, y);

    RunRecord rec;
    rec.k = state.k();
    rec.lambda = sel.lambda;
    rec.gamma = sel.gamma;
    rec.rel_residual = std::sqrt(res2) / state.beta1();
    if (s_true && true_norm > 0.0) rec.rel_error = (s - *s_true).norm() / true_norm;
    if (select.method == SelectionMethod::Optimal) {
      rec.objective = sel.objective;
    } else {
      rec.objective = monitor_value(select.method, res2, trace_term(sys, sel.lambda),
                                    state.m(), sigma2);
    }
    if (config.timing) {
      rec.ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    }
    out.records.push_back(rec);
    out.selections.push_back(sel);
    window.push_back(std::move(s));
    while (static_cast<Index>(window.size()) > config.stop.window) window.pop_front();

    const StopDecision decision = stopping_check(out.records, config.stop);
    if (decision != StopDecision::Continue) {
      out.reason = decision == StopDecision::Residual        ? StopReason::Residual
                   : decision == StopDecision::ObjectiveFlat ? StopReason::ObjectiveFlat
                                                             : StopReason::MaxIterations;
      break;
    }
    if (!state.can_step()) {
      out.reason = StopReason::Breakdown;
      break;
    }
  }

  // Best iterate of the trailing window when the objective stopped
  // improving, otherwise the last one.
  std::size_t pick = window.size() - 1;
  if (out.reason == StopReason::ObjectiveFlat) {
    const std::size_t first = out.records.size() - window.size();
    for (std::size_t i = 0; i < window.size(); ++i) {
      if (out.records[first + i].objective < out.records[first + pick].objective) pick = i;
    }
  }
  out.best_k = out.records[out.records.size() - window.size() + pick].k;
  out.solution = std::move(window[pick]);
  out.status = state.status();
  out.diagnostics = state.diagnostics();
  return out;
}

}  // namespace mixkry
