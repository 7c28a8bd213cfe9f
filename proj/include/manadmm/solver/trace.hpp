#pragma once

#include <manadmm/core.hpp>
#include <manadmm/diagnostics.hpp>
#include <manadmm/manifold.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace manadmm {

/// One row of a solver trace. Row k describes (x_k, y_k, lambda_k) and the
/// schedule values rho_k, gamma_k, tau_k that the next iteration uses.
struct IterateRecord {
  long k = 0;
  Scalar objective = 0;
  Scalar stat_res = 0;
  Scalar dual_res = 0;
  Scalar primal_res = 0;
  Scalar lambda_norm = 0;
  Scalar rho = 0;
  Scalar gamma = 0;
  Scalar tau = 0;
  Scalar elapsed_seconds = 0;
  // not part of the CSV trace
  Scalar grad_phi_norm = 0; ///< ||grad Phi|| of the step that produced x_k
  Scalar step_norm = 0;     ///< ||x_k - x_{k-1}||
  bool non_finite = false;
};

struct OracleCounters {
  long grad_f_evals = 0;
  long prox_calls = 0;
  long retraction_calls = 0;
};

class StopRuleError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Termination: whichever enabled criterion fires first. A value of 0
/// disables a criterion.
struct StopRule {
  long max_iters = 500;
  Scalar obj_change_tol = 1e-8; ///< |F(x_{k+1}) - F(x_k)|
  Scalar kkt_tol = 0;           ///< max of the three residuals
  long max_grad_evals = 0;      ///< oracle budget across the run

  void validate() const {
    if (max_iters < 0 || max_grad_evals < 0 || !(obj_change_tol >= 0) ||
        !(kkt_tol >= 0)) {
      throw StopRuleError("stop rule values must be nonnegative");
    }
    if (max_iters == 0 && obj_change_tol == 0 && kkt_tol == 0 &&
        max_grad_evals == 0) {
      throw StopRuleError("stop rule has no criterion enabled");
    }
  }
};

enum class StopReason {
  MaxIters,
  ObjectiveStalled,
  KktTolerance,
  GradBudget,
  NonFinite
};

inline std::string to_string(StopReason r) {
  switch (r) {
  case StopReason::MaxIters:
    return "max_iters";
  case StopReason::ObjectiveStalled:
    return "objective_change";
  case StopReason::KktTolerance:
    return "kkt_tolerance";
  case StopReason::GradBudget:
    return "grad_budget";
  case StopReason::NonFinite:
    break;
  }
  return "non_finite";
}

/// Full view of an iterate handed to trace sinks. References are valid only
/// for the duration of the callback.
struct IterateView {
  const IterateRecord &record;
  const Matrix &x;
  const Matrix &y;
  const Matrix &lambda;
  const Matrix &bar_lambda; ///< multiplier used for the residuals
  const Matrix &ax;
  const Matrix &x_prev;
  const Matrix &ax_prev;
  const Matrix &lambda_prev;
  Scalar rho_prev;
};

using TraceSink = std::function<void(const IterateView &)>;

struct SolverState {
  ManifoldPoint x;
  Matrix y;
  Matrix lambda;
  long k = 0;
  Scalar rho = 0;
  Scalar gamma = 0;
  Scalar tau = 0;
  Scalar residual = 0;
  OracleCounters counters;
};

struct SolverResult {
  SolverState state;
  std::vector<IterateRecord> trace;
  StopReason reason = StopReason::MaxIters;
  Matrix bar_lambda;       ///< multiplier certified with the final iterate
  KktResiduals kkt;        ///< residuals with bar_lambda
  KktResiduals kkt_running; ///< residuals with the running multiplier
  Scalar r0 = 0;
  Scalar lambda_max = 0;

  bool diverged() const { return reason == StopReason::NonFinite; }
  Scalar final_objective() const { return trace.back().objective; }
};

/// How y0 is chosen when the caller does not supply it.
enum class SplitInit {
  AX,   ///< y0 = A x0
  Prox, ///< y0 = prox_{h / rho0}(A x0 - lambda0 / rho0)
  Zero  ///< y0 = 0
};

struct InitialPoint {
  ManifoldPoint x;
  std::optional<Matrix> y = std::nullopt;
  std::optional<Matrix> lambda = std::nullopt;
  SplitInit split = SplitInit::AX;
};

namespace detail {

class Stopwatch {
public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  Scalar seconds() const {
    return std::chrono::duration<Scalar>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

private:
  std::chrono::steady_clock::time_point start_;
};

inline bool record_finite(const IterateRecord &r) {
  return std::isfinite(r.objective) && std::isfinite(r.stat_res) &&
         std::isfinite(r.dual_res) && std::isfinite(r.primal_res) &&
         std::isfinite(r.lambda_norm);
}

/// Applies the stop rule after row `rec` was appended; returns the reason or
/// nullopt to continue. The objective-change test starts at k = 2 because a
/// first step from y0 = A x0 can leave x unchanged.
inline std::optional<StopReason> check_stop(const StopRule &stop,
                                            const IterateRecord &rec,
                                            Scalar prev_objective,
                                            const OracleCounters &counters) {
  if (stop.kkt_tol > 0 &&
      std::max({rec.stat_res, rec.dual_res, rec.primal_res}) <= stop.kkt_tol) {
    return StopReason::KktTolerance;
  }
  if (stop.obj_change_tol > 0 && rec.k >= 2 &&
      std::abs(rec.objective - prev_objective) <= stop.obj_change_tol) {
    return StopReason::ObjectiveStalled;
  }
  if (stop.max_grad_evals > 0 && counters.grad_f_evals >= stop.max_grad_evals) {
    return StopReason::GradBudget;
  }
  if (stop.max_iters > 0 && rec.k >= stop.max_iters) {
    return StopReason::MaxIters;
  }
  return std::nullopt;
}

} // namespace detail

} // namespace manadmm
