#pragma once

#include <manadmm/core.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace manadmm {

enum class LogBase { Natural, Two, Ten };

/// Parameters of the adaptive penalty / step / dual-step schedules.
struct ScheduleConfig {
  Scalar gamma0 = 50;
  Scalar rho0 = 5;
  Scalar c_rho = 1;
  Scalar c_gamma = 50;
  Scalar c_tau = 0.2;
  /// ||A x0 - y0||, frozen by the solver at start.
  Scalar r0 = 0;
  LogBase log_base = LogBase::Natural;

  void validate() const {
    if (!(gamma0 > 0 && rho0 > 0 && c_rho > 0 && c_gamma > 0 && c_tau > 0)) {
      throw ParameterError(
          "schedule parameters gamma0, rho0, c_rho, c_gamma, c_tau must be "
          "positive");
    }
    if (!(r0 >= 0) || !std::isfinite(r0)) {
      throw ParameterError("schedule r0 must be finite and nonnegative");
    }
  }
};

inline Scalar schedule_log(Scalar v, LogBase base) {
  switch (base) {
  case LogBase::Two:
    return std::log2(v);
  case LogBase::Ten:
    return std::log10(v);
  case LogBase::Natural:
    break;
  }
  return std::log(v);
}

/// rho_k = max(rho0, c_rho k^{1/3}).
inline Scalar rho_at(long k, const ScheduleConfig &cfg) {
  return std::max(cfg.rho0, cfg.c_rho * std::cbrt(static_cast<Scalar>(k)));
}

/// tau_k = c_tau (k + 1)^{-1/3}.
inline Scalar tau_at(long k, const ScheduleConfig &cfg) {
  return cfg.c_tau / std::cbrt(static_cast<Scalar>(k + 1));
}

/// lambda_max = gamma0 pi^2 / 6 * r0.
inline Scalar lambda_max(const ScheduleConfig &cfg) {
  return cfg.gamma0 * std::numbers::pi * std::numbers::pi / 6.0 * cfg.r0;
}

/// Right-hand side of the per-step cap
///   gamma_{k+1} ||A x_{k+1} - y_{k+1}|| <= gamma0 r0 log^2 2 / ((k+1)^2 log(k+2)).
inline Scalar gamma_series_cap(long k, const ScheduleConfig &cfg) {
  const Scalar l2 = schedule_log(2.0, cfg.log_base);
  const Scalar kk = static_cast<Scalar>(k + 1);
  return cfg.gamma0 * cfg.r0 * l2 * l2 /
         (kk * kk * schedule_log(static_cast<Scalar>(k + 2), cfg.log_base));
}

/// Dual step size gamma_{k+1} = min(T1, T2) with
///   T1 = gamma0 r0 log^2 2 / (r_next (k+1)^2 log(k+2)),
///   T2 = c_gamma / (k^{1/3} log^2(k+1)).
/// T1 is +inf when r_next = 0 and T2 is +inf at k = 0; when both are
/// infinite the previous step size is kept.
inline Scalar gamma_update(long k, Scalar r_next, Scalar gamma_prev,
                           const ScheduleConfig &cfg) {
  if (k < 0 || !(r_next >= 0)) {
    throw ParameterError("gamma_update requires k >= 0 and r_next >= 0");
  }
  constexpr Scalar inf = std::numeric_limits<Scalar>::infinity();
  const Scalar t1 = r_next == 0 ? inf : gamma_series_cap(k, cfg) / r_next;
  Scalar t2 = inf;
  if (k > 0) {
    const Scalar lk = schedule_log(static_cast<Scalar>(k + 1), cfg.log_base);
    t2 = cfg.c_gamma / (std::cbrt(static_cast<Scalar>(k)) * lk * lk);
  }
  const Scalar g = std::min(t1, t2);
  return std::isinf(g) ? gamma_prev : g;
}

} // namespace manadmm
