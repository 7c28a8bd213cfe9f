#pragma once

#include <manadmm/diagnostics.hpp>
#include <manadmm/problems.hpp>
#include <manadmm/solver/schedule.hpp>
#include <manadmm/solver/trace.hpp>

#include <cmath>
#include <limits>
#include <optional>
#include <utility>

namespace manadmm {

/// L_rho(x, y, lambda) = f(x) + h(y) - <lambda, A x - y> + rho/2 ||A x - y||^2.
inline Scalar augmented_lagrangian(const ProblemInstance &pb, const Matrix &x,
                                   const Matrix &y, const Matrix &lambda,
                                   Scalar rho) {
  if (!(rho > 0)) {
    throw ParameterError("augmented_lagrangian: rho must be positive");
  }
  check_shape("augmented_lagrangian", pb.A.output_shape(), shape_of(y));
  check_shape("augmented_lagrangian", pb.A.output_shape(), shape_of(lambda));
  const Matrix r = pb.A.apply(x) - y;
  return pb.f.value(x) + pb.h->eval(y) - inner(lambda, r) +
         0.5 * rho * r.squaredNorm();
}

/// argmin_y L_rho(x, y, lambda) = prox_{h/rho}(A x - lambda / rho), given A x.
inline Matrix y_update_from_ax(const ProblemInstance &pb, const Matrix &ax,
                               const Matrix &lambda, Scalar rho) {
  if (!(rho > 0)) {
    throw ParameterError("y_update: rho must be positive");
  }
  return pb.h->prox(1.0 / rho, ax - lambda / rho);
}

inline Matrix y_update(const ProblemInstance &pb, const Matrix &x,
                       const Matrix &lambda, Scalar rho) {
  return y_update_from_ax(pb, pb.A.apply(x), lambda, rho);
}

/// Euclidean gradient of Phi(x) = L_rho(x, y_next, lambda):
///   grad f(x) + rho A*(A x - y_next - lambda / rho).
inline Matrix euclidean_grad_phi(const ProblemInstance &pb,
                                 const Matrix &euclid_grad_f, const Matrix &ax,
                                 const Matrix &y_next, const Matrix &lambda,
                                 Scalar rho) {
  return euclid_grad_f + pb.A.adjoint_apply(rho * (ax - y_next) - lambda);
}

/// Riemannian gradient of Phi at x.
inline TangentVector grad_phi(const ProblemInstance &pb, const ManifoldPoint &x,
                              const Matrix &y_next, const Matrix &lambda,
                              Scalar rho) {
  if (!(rho > 0)) {
    throw ParameterError("grad_phi: rho must be positive");
  }
  const Matrix &xm = x.matrix();
  return pb.manifold.project_tangent(
      x, euclidean_grad_phi(pb, pb.f.gradient(xm), pb.A.apply(xm), y_next,
                            lambda, rho));
}

/// x_{k+1} = R_{x_k}(-tau grad).
inline ManifoldPoint x_update(const ManifoldPoint &x, const TangentVector &grad,
                              Scalar tau) {
  return x.manifold().retract(x, grad.scaled(-tau));
}

/// lambda_{k+1} = lambda_k - gamma_{k+1} (A x_{k+1} - y_{k+1}).
inline Matrix lambda_update(const Matrix &lambda, Scalar gamma,
                            const Matrix &ax_next, const Matrix &y_next) {
  return lambda - gamma * (ax_next - y_next);
}

/// Resolves y0 and lambda0 for an initial point.
inline std::pair<Matrix, Matrix> initial_split(const ProblemInstance &pb,
                                               const InitialPoint &init,
                                               Scalar rho0) {
  const Shape out = pb.A.output_shape();
  Matrix lambda = init.lambda ? *init.lambda : Matrix::Zero(out.rows, out.cols);
  check_shape("initial lambda", out, shape_of(lambda));
  if (init.y) {
    check_shape("initial y", out, shape_of(*init.y));
    return {*init.y, std::move(lambda)};
  }
  const Matrix ax = pb.A.apply(init.x.matrix());
  switch (init.split) {
  case SplitInit::Prox:
    return {y_update_from_ax(pb, ax, lambda, rho0), std::move(lambda)};
  case SplitInit::Zero:
    return {Matrix::Zero(out.rows, out.cols), std::move(lambda)};
  case SplitInit::AX:
    break;
  }
  return {ax, std::move(lambda)};
}

/// Adaptive Riemannian ADMM. Each iteration performs, in order,
///   y_{k+1} = prox_{h/rho_k}(A x_k - lambda_k / rho_k)
///   x_{k+1} = R_{x_k}(-tau_k grad Phi_k(x_k))
///   gamma_{k+1} from the capped schedule
///   lambda_{k+1} = lambda_k - gamma_{k+1} (A x_{k+1} - y_{k+1})
/// using one gradient of f, one prox and one retraction.
///
/// Trace row 0 is the initial iterate; residuals of row k >= 1 use
/// lambda-bar_k = lambda_{k-1} - rho_{k-1} (A x_k - y_k).
inline SolverResult aradmm_run(const ProblemInstance &pb, ScheduleConfig cfg,
                               const StopRule &stop, const InitialPoint &init,
                               const TraceSink &sink = {}) {
  stop.validate();
  if (!(init.x.manifold() == pb.manifold)) {
    throw DimensionError("aradmm_run: initial point is on a different manifold");
  }
  if (!(pb.manifold.feasibility_residual(init.x) <= 1e-8)) {
    throw ParameterError("aradmm_run: initial point is infeasible");
  }
  auto [y, lambda] = initial_split(pb, init, cfg.rho0);
  ManifoldPoint x = init.x;
  Matrix ax = pb.A.apply(x.matrix());
  cfg.r0 = (ax - y).norm();
  cfg.validate();

  detail::Stopwatch clock;
  SolverResult res{
      .state = {.x = x, .y = y, .lambda = lambda, .counters = {}},
      .trace = {},
      .reason = StopReason::MaxIters,
      .bar_lambda = lambda,
      .kkt = {},
      .kkt_running = {},
      .r0 = cfg.r0,
      .lambda_max = lambda_max(cfg),
  };
  OracleCounters counters;

  Matrix grad_f = pb.f.gradient(x.matrix());
  Scalar gamma = cfg.gamma0;
  {
    IterateRecord rec;
    rec.k = 0;
    rec.objective = pb.f.value(x.matrix()) + pb.h->eval(ax);
    const KktResiduals r =
        kkt_residuals_with_gradient(pb, x.matrix(), grad_f, y, lambda, &ax);
    rec.stat_res = r.stationarity;
    rec.dual_res = r.dual;
    rec.primal_res = r.primal;
    rec.lambda_norm = lambda.norm();
    rec.rho = rho_at(0, cfg);
    rec.gamma = gamma;
    rec.tau = tau_at(0, cfg);
    rec.elapsed_seconds = clock.seconds();
    res.trace.push_back(rec);
    res.kkt = res.kkt_running = r;
    if (sink) {
      sink({rec, x.matrix(), y, lambda, lambda, ax, x.matrix(), ax, lambda,
            rec.rho});
    }
  }

  for (long k = 0;; ++k) {
    const Scalar rho = rho_at(k, cfg);
    const Scalar tau = tau_at(k, cfg);

    Matrix y_next = y_update_from_ax(pb, ax, lambda, rho);
    ++counters.prox_calls;

    const TangentVector g = pb.manifold.project_tangent(
        x, euclidean_grad_phi(pb, grad_f, ax, y_next, lambda, rho));
    ++counters.grad_f_evals;

    ManifoldPoint x_next = x_update(x, g, tau);
    ++counters.retraction_calls;

    Matrix ax_next = pb.A.apply(x_next.matrix());
    const Scalar r_next = (ax_next - y_next).norm();
    const Scalar gamma_next =
        std::isfinite(r_next) ? gamma_update(k, r_next, gamma, cfg) : gamma;
    Matrix lambda_next = lambda_update(lambda, gamma_next, ax_next, y_next);

    Matrix grad_next = pb.f.gradient(x_next.matrix());
    Matrix bar = lambda - rho * (ax_next - y_next);

    IterateRecord rec;
    rec.k = k + 1;
    rec.lambda_norm = lambda_next.norm();
    rec.rho = rho_at(k + 1, cfg);
    rec.gamma = gamma_next;
    rec.tau = tau_at(k + 1, cfg);
    rec.grad_phi_norm = g.norm();
    rec.step_norm = (x_next.matrix() - x.matrix()).norm();
    rec.primal_res = r_next;

    const bool finite = all_finite(x_next.matrix()) && all_finite(y_next) &&
                        all_finite(lambda_next) && all_finite(grad_next);
    KktResiduals r_bar, r_run;
    if (finite) {
      rec.objective = pb.f.value(x_next.matrix()) + pb.h->eval(ax_next);
      r_bar = kkt_residuals_with_gradient(pb, x_next.matrix(), grad_next,
                                          y_next, bar, &ax_next);
      r_run = kkt_residuals_with_gradient(pb, x_next.matrix(), grad_next,
                                          y_next, lambda_next, &ax_next);
      rec.stat_res = r_bar.stationarity;
      rec.dual_res = r_bar.dual;
      rec.primal_res = r_bar.primal;
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
      sink({rec, x_next.matrix(), y_next, lambda_next, bar, ax_next,
            x.matrix(), ax, lambda, rho});
    }

    x = std::move(x_next);
    y = std::move(y_next);
    lambda = std::move(lambda_next);
    ax = std::move(ax_next);
    grad_f = std::move(grad_next);
    gamma = gamma_next;
    res.bar_lambda = std::move(bar);
    res.kkt = r_bar;
    res.kkt_running = r_run;

    if (auto why = detail::check_stop(stop, rec, prev_objective, counters)) {
      res.reason = *why;
      break;
    }
  }

  const long k_final = res.trace.back().k;
  res.state = SolverState{
      .x = x,
      .y = y,
      .lambda = lambda,
      .k = k_final,
      .rho = rho_at(k_final, cfg),
      .gamma = gamma,
      .tau = tau_at(k_final, cfg),
      .residual = (ax - y).norm(),
      .counters = counters,
  };
  return res;
}

} // namespace manadmm
