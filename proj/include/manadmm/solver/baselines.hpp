#pragma once

#include <manadmm/diagnostics.hpp>
#include <manadmm/problems.hpp>
#include <manadmm/solver/aradmm.hpp>
#include <manadmm/solver/trace.hpp>

#include <cmath>
#include <limits>
#include <vector>

namespace manadmm {

/// Fixed-penalty manifold ADMM. The x-subproblem
///   min_x f(x) - <lambda, A x - y> + rho/2 ||A x - y||^2
/// is solved approximately by `inner_iters` Riemannian gradient steps of
/// fixed size `eta`; y is the exact prox; the dual step equals rho.
struct MadmmConfig {
  Scalar rho = 10;
  Scalar eta = 1e-3;
  int inner_iters = 10;

  void validate() const {
    if (!(rho > 0) || !(eta > 0) || inner_iters < 1) {
      throw ParameterError(
          "madmm requires rho > 0, eta > 0 and inner_iters >= 1");
    }
  }
};

struct InnerSolveResult {
  ManifoldPoint x;
  Matrix grad_f; ///< Euclidean gradient of f at the returned x
  std::vector<Scalar> phi_values; ///< Phi before the first and after each step
};

/// Inner Riemannian gradient loop of MADMM. `grad_f` is the gradient of f
/// at `x` on entry.
inline InnerSolveResult madmm_x_subproblem(const ProblemInstance &pb,
                                           ManifoldPoint x, Matrix grad_f,
                                           const Matrix &y,
                                           const Matrix &lambda,
                                           const MadmmConfig &cfg,
                                           OracleCounters &counters,
                                           bool record_phi = false) {
  std::vector<Scalar> phi;
  Matrix ax = pb.A.apply(x.matrix());
  auto phi_at = [&](const Matrix &xm, const Matrix &axm) {
    const Matrix r = axm - y;
    return pb.f.value(xm) - inner(lambda, r) + 0.5 * cfg.rho * r.squaredNorm();
  };
  if (record_phi) {
    phi.push_back(phi_at(x.matrix(), ax));
  }
  for (int i = 0; i < cfg.inner_iters; ++i) {
    if (i > 0) {
      grad_f = pb.f.gradient(x.matrix());
    }
    const TangentVector g = pb.manifold.project_tangent(
        x, euclidean_grad_phi(pb, grad_f, ax, y, lambda, cfg.rho));
    ++counters.grad_f_evals;
    x = x_update(x, g, cfg.eta);
    ++counters.retraction_calls;
    ax = pb.A.apply(x.matrix());
    if (record_phi) {
      phi.push_back(phi_at(x.matrix(), ax));
    }
  }
  Matrix g_out = pb.f.gradient(x.matrix());
  return {std::move(x), std::move(g_out), std::move(phi)};
}

inline SolverResult madmm_run(const ProblemInstance &pb, const MadmmConfig &cfg,
                              const StopRule &stop, const InitialPoint &init,
                              const TraceSink &sink = {}) {
  cfg.validate();
  stop.validate();
  if (!(init.x.manifold() == pb.manifold)) {
    throw DimensionError("madmm_run: initial point is on a different manifold");
  }
  auto [y, lambda] = initial_split(pb, init, cfg.rho);
  ManifoldPoint x = init.x;
  Matrix ax = pb.A.apply(x.matrix());
  Matrix grad_f = pb.f.gradient(x.matrix());

  detail::Stopwatch clock;
  SolverResult res{
      .state = {.x = x, .y = y, .lambda = lambda, .counters = {}},
      .trace = {},
      .reason = StopReason::MaxIters,
      .bar_lambda = lambda,
      .kkt = {},
      .kkt_running = {},
      .r0 = (ax - y).norm(),
      .lambda_max = 0,
  };
  OracleCounters counters;
  {
    IterateRecord rec;
    rec.objective = pb.f.value(x.matrix()) + pb.h->eval(ax);
    const KktResiduals r =
        kkt_residuals_with_gradient(pb, x.matrix(), grad_f, y, lambda, &ax);
    rec.stat_res = r.stationarity;
    rec.dual_res = r.dual;
    rec.primal_res = r.primal;
    rec.lambda_norm = lambda.norm();
    rec.rho = rec.gamma = cfg.rho;
    rec.tau = cfg.eta;
    rec.elapsed_seconds = clock.seconds();
    res.trace.push_back(rec);
    res.kkt = res.kkt_running = r;
    if (sink) {
      sink({rec, x.matrix(), y, lambda, lambda, ax, x.matrix(), ax, lambda,
            cfg.rho});
    }
  }

  for (long k = 0;; ++k) {
    InnerSolveResult sub =
        madmm_x_subproblem(pb, x, grad_f, y, lambda, cfg, counters);
    Matrix ax_next = pb.A.apply(sub.x.matrix());
    Matrix y_next = y_update_from_ax(pb, ax_next, lambda, cfg.rho);
    ++counters.prox_calls;
    Matrix lambda_next = lambda - cfg.rho * (ax_next - y_next);

    IterateRecord rec;
    rec.k = k + 1;
    rec.rho = rec.gamma = cfg.rho;
    rec.tau = cfg.eta;
    rec.step_norm = (sub.x.matrix() - x.matrix()).norm();
    const bool finite = all_finite(sub.x.matrix()) && all_finite(y_next) &&
                        all_finite(lambda_next) && all_finite(sub.grad_f);
    KktResiduals r;
    if (finite) {
      rec.objective = pb.f.value(sub.x.matrix()) + pb.h->eval(ax_next);
      r = kkt_residuals_with_gradient(pb, sub.x.matrix(), sub.grad_f, y_next,
                                      lambda_next, &ax_next);
      rec.stat_res = r.stationarity;
      rec.dual_res = r.dual;
      rec.primal_res = r.primal;
      rec.lambda_norm = lambda_next.norm();
    } else {
      rec.objective = std::numeric_limits<Scalar>::quiet_NaN();
    }
    rec.non_finite = !finite || !detail::record_finite(rec);
    rec.elapsed_seconds = clock.seconds();
    const Scalar prev_objective = res.trace.back().objective;
    res.trace.push_back(rec);
    if (rec.non_finite) {
      res.reason = StopReason::NonFinite;
      res.state.k = k + 1;
      res.state.counters = counters;
      return res;
    }
    if (sink) {
      sink({rec, sub.x.matrix(), y_next, lambda_next, lambda_next, ax_next,
            x.matrix(), ax, lambda, cfg.rho});
    }
    x = std::move(sub.x);
    grad_f = std::move(sub.grad_f);
    ax = std::move(ax_next);
    y = std::move(y_next);
    lambda = std::move(lambda_next);
    res.bar_lambda = lambda;
    res.kkt = res.kkt_running = r;
    if (auto why = detail::check_stop(stop, rec, prev_objective, counters)) {
      res.reason = *why;
      break;
    }
  }
  res.state = SolverState{
      .x = x,
      .y = y,
      .lambda = lambda,
      .k = res.trace.back().k,
      .rho = cfg.rho,
      .gamma = cfg.rho,
      .tau = cfg.eta,
      .residual = (ax - y).norm(),
      .counters = counters,
  };
  return res;
}

struct RsgConfig {
  Scalar eta = 0.005;

  void validate() const {
    if (!(eta >= 0)) {
      throw ParameterError("rsg requires eta >= 0");
    }
  }
};

/// Riemannian subgradient method on f + h (A must be the identity):
///   x_{k+1} = R_{x_k}(-eta P_{T_{x_k} M}(grad f(x_k) + g_k)),
/// with g_k = subgradient of h at x_k (sign(0) = 0 for l1).
///
/// Trace residuals use y = x and lambda = -g_k, so only the stationarity
/// entry is informative.
inline SolverResult rsg_run(const ProblemInstance &pb, const RsgConfig &cfg,
                            const StopRule &stop, const ManifoldPoint &x0,
                            const TraceSink &sink = {}) {
  cfg.validate();
  stop.validate();
  if (pb.A.kind() != LinearMapKind::Identity) {
    throw ParameterError("rsg_run requires the identity linear map");
  }
  if (!(x0.manifold() == pb.manifold)) {
    throw DimensionError("rsg_run: initial point is on a different manifold");
  }
  detail::Stopwatch clock;
  ManifoldPoint x = x0;
  Matrix grad_f = pb.f.gradient(x.matrix());
  Matrix sub = pb.h->subgradient(x.matrix());
  OracleCounters counters;

  auto make_record = [&](long k, const Matrix &xm, const Matrix &gf,
                         const Matrix &sg) {
    IterateRecord rec;
    rec.k = k;
    rec.objective = pb.f.value(xm) + pb.h->eval(xm);
    rec.stat_res = pb.manifold.project_tangent_raw(xm, gf + sg).norm();
    rec.dual_res = 0;
    rec.primal_res = 0;
    rec.lambda_norm = sg.norm();
    rec.tau = cfg.eta;
    rec.elapsed_seconds = clock.seconds();
    return rec;
  };

  SolverResult res{
      .state = {.x = x, .y = x.matrix(), .lambda = -sub, .counters = {}},
      .trace = {},
      .reason = StopReason::MaxIters,
      .bar_lambda = -sub,
      .kkt = {},
      .kkt_running = {},
      .r0 = 0,
      .lambda_max = 0,
  };
  {
    const IterateRecord rec = make_record(0, x.matrix(), grad_f, sub);
    res.trace.push_back(rec);
    res.kkt = res.kkt_running = {rec.stat_res, 0, 0};
    if (sink) {
      const Matrix lam = -sub;
      sink({rec, x.matrix(), x.matrix(), lam, lam, x.matrix(), x.matrix(),
            x.matrix(), lam, 0});
    }
  }
  for (long k = 0;; ++k) {
    const TangentVector g = pb.manifold.project_tangent(x, grad_f + sub);
    ++counters.grad_f_evals;
    ManifoldPoint x_next = x_update(x, g, cfg.eta);
    ++counters.retraction_calls;
    Matrix grad_next = pb.f.gradient(x_next.matrix());
    Matrix sub_next = pb.h->subgradient(x_next.matrix());

    IterateRecord rec;
    const bool finite = all_finite(x_next.matrix()) && all_finite(grad_next);
    if (finite) {
      rec = make_record(k + 1, x_next.matrix(), grad_next, sub_next);
    } else {
      rec.k = k + 1;
      rec.objective = std::numeric_limits<Scalar>::quiet_NaN();
    }
    rec.grad_phi_norm = g.norm();
    rec.step_norm = finite ? (x_next.matrix() - x.matrix()).norm() : 0;
    rec.non_finite = !finite || !detail::record_finite(rec);
    const Scalar prev_objective = res.trace.back().objective;
    res.trace.push_back(rec);
    if (rec.non_finite) {
      res.reason = StopReason::NonFinite;
      res.state.k = k + 1;
      res.state.counters = counters;
      return res;
    }
    if (sink) {
      const Matrix lam = -sub_next;
      const Matrix lam_prev = -sub;
      sink({rec, x_next.matrix(), x_next.matrix(), lam, lam, x_next.matrix(),
            x.matrix(), x.matrix(), lam_prev, 0});
    }
    x = std::move(x_next);
    grad_f = std::move(grad_next);
    sub = std::move(sub_next);
    res.kkt = res.kkt_running = {rec.stat_res, 0, 0};
    if (auto why = detail::check_stop(stop, rec, prev_objective, counters)) {
      res.reason = *why;
      break;
    }
  }
  res.bar_lambda = -sub;
  res.state = SolverState{
      .x = x,
      .y = x.matrix(),
      .lambda = -sub,
      .k = res.trace.back().k,
      .rho = 0,
      .gamma = 0,
      .tau = cfg.eta,
      .residual = 0,
      .counters = counters,
  };
  return res;
}

} // namespace manadmm
