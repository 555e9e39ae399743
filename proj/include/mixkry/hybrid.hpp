#pragma once

#include "mixkry/covariance.hpp"
#include "mixkry/mixgk.hpp"
#include "mixkry/params.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mixkry {

struct HybridConfig {
  SelectionConfig select;
  StoppingPolicy stop;
  MixGKOptions mixgk;
  /// Fill RunRecord::ms with wall time. Off by default so that outputs are
  /// reproducible byte for byte.
  bool timing = false;
};

enum class StopReason { MaxIterations, ObjectiveFlat, Residual, Breakdown };

std::string_view to_string(StopReason reason);

struct HybridResult {
  std::vector<RunRecord> records;
  std::vector<SelectionResult> selections;
  /// The returned reconstruction s_k at k = best_k.
  Vector solution;
  Index best_k = 0;
  StopReason reason = StopReason::MaxIterations;
  MixGKStatus status = MixGKStatus::Active;
  /// ||mu - s_true|| / ||s_true|| when the truth is known.
  std::optional<double> initial_error;
  std::vector<std::string> diagnostics;
};

/// Hybrid mixGK solve of d = A s + noise with prior N(mu, lambda^-2 Q) and
/// noise covariance R (through r_inv and l_r).
///
/// Each iteration runs one mixGK step, selects (gamma, lambda), forms s_k
/// and applies the stopping rule to the monitored objective. When the
/// objective stops improving the best iterate of the trailing window is
/// returned. Throws BreakdownError if no first iterate exists.
HybridResult run_hybrid(const LinearOperator& A, const NoiseWhitener& noise,
                        const PriorSpec& prior, const Vector& d,
                        const HybridConfig& config,
                        const Vector* s_true = nullptr);

}  // namespace mixkry
