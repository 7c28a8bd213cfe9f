#include "test_util.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace manadmm;
using test_util::gaussian;
using test_util::random_tangent;

namespace {

/// f(x) = 1/2 ||x - c||^2 on the sphere with h = 0 and A = I.
ProblemInstance sphere_projection(const Matrix &c) {
  const Eigen::Index m = c.rows();
  auto cp = std::make_shared<const Matrix>(c);
  ProblemInstance pb{
      .name = "sphere_projection",
      .family = ProblemFamily::Custom,
      .params = {},
      .manifold = Manifold::sphere(m),
      .f = {[cp](const Matrix &x) { return 0.5 * (x - *cp).squaredNorm(); },
            [cp](const Matrix &x) -> Matrix { return x - *cp; }},
      .h = make_zero({m, 1}),
      .A = LinearMap::identity({m, 1}),
      .ground_truth = std::nullopt,
      .data = {},
  };
  return pb;
}

/// Stiefel problem with a general linear map: f(X) = 1/2 <X, S X> + <B, X>,
/// h = w ||.||_1, A = left multiplication by G.
ProblemInstance quadratic_split(std::uint64_t seed) {
  const Eigen::Index n = 5, p = 2, q = 7;
  const Matrix s0 = gaussian(n, n, seed);
  auto s = std::make_shared<const Matrix>(s0 + s0.transpose());
  auto b = std::make_shared<const Matrix>(gaussian(n, p, seed + 1));
  ProblemInstance pb{
      .name = "quadratic_split",
      .family = ProblemFamily::Custom,
      .params = {},
      .manifold = Manifold::stiefel(n, p),
      .f = {[s, b](const Matrix &x) {
              return 0.5 * inner(x, *s * x) + inner(*b, x);
            },
            [s, b](const Matrix &x) -> Matrix { return *s * x + *b; }},
      .h = make_l1({q, p}, 0.3),
      .A = LinearMap::left_multiply(gaussian(q, n, seed + 2), p),
      .ground_truth = std::nullopt,
      .data = {},
  };
  return pb;
}

StopRule iters(long k) {
  StopRule s;
  s.max_iters = k;
  s.obj_change_tol = 0;
  return s;
}

InitialPoint start(const ProblemInstance &pb, Seed seed,
                   SplitInit split = SplitInit::AX) {
  return {pb.manifold.random_point(seed), std::nullopt, std::nullopt, split};
}

} // namespace

// ---------------------------------------------------------------- schedules

TEST(Schedule, RhoAndTauExamples) {
  ScheduleConfig cfg;
  EXPECT_EQ(rho_at(8, cfg), 5.0);
  EXPECT_NEAR(rho_at(1000, cfg), 10.0, 1e-12);
  EXPECT_EQ(tau_at(0, cfg), 0.2);
  EXPECT_NEAR(tau_at(7, cfg), 0.1, 1e-15);
}

TEST(Schedule, Monotonicity) {
  ScheduleConfig cfg;
  cfg.c_rho = 2;
  for (long k = 0; k < 5000; ++k) {
    EXPECT_LE(rho_at(k, cfg), rho_at(k + 1, cfg));
    EXPECT_GE(tau_at(k, cfg), tau_at(k + 1, cfg));
  }
}

TEST(Schedule, GammaFirstStepNaturalLog) {
  ScheduleConfig cfg;
  cfg.r0 = 2;
  // T2 is infinite at k = 0; T1 = 50 * 2 * ln^2 2 / (1 * 1 * ln 2)
  EXPECT_NEAR(gamma_update(0, 1.0, 50, cfg), 100 * std::log(2.0), 1e-12);
  EXPECT_NEAR(gamma_update(0, 1.0, 50, cfg), 69.3147, 1e-4);
}

TEST(Schedule, GammaOtherLogBases) {
  ScheduleConfig cfg;
  cfg.r0 = 2;
  cfg.log_base = LogBase::Two;
  EXPECT_NEAR(gamma_update(0, 1.0, 50, cfg), 100.0, 1e-12);
  cfg.log_base = LogBase::Ten;
  const Scalar l2 = std::log10(2.0);
  EXPECT_NEAR(gamma_update(0, 1.0, 50, cfg), 100 * l2 * l2 / l2, 1e-12);
}

TEST(Schedule, GammaDegenerateBranches) {
  ScheduleConfig cfg;
  cfg.r0 = 2;
  for (long k = 1; k < 50; ++k) {
    const Scalar lk = std::log(k + 1.0);
    EXPECT_NEAR(gamma_update(k, 0.0, 1.0, cfg),
                cfg.c_gamma / (std::cbrt(Scalar(k)) * lk * lk), 1e-12);
  }
  EXPECT_EQ(gamma_update(0, 0.0, 7.5, cfg), 7.5);
  EXPECT_THROW(gamma_update(-1, 1.0, 1.0, cfg), ParameterError);
  EXPECT_THROW(gamma_update(1, -1.0, 1.0, cfg), ParameterError);
}

TEST(Schedule, GammaSeriesCap) {
  ScheduleConfig cfg;
  cfg.r0 = 3.7;
  for (long k = 0; k < 2000; k += 7) {
    for (Scalar r : {1e-9, 1e-3, 0.5, 2.0, 1e4}) {
      const Scalar cap = cfg.gamma0 * cfg.r0 * std::log(2.0) * std::log(2.0) /
                         ((k + 1.0) * (k + 1.0) * std::log(k + 2.0));
      EXPECT_LE(gamma_update(k, r, 1.0, cfg) * r, cap * (1 + 1e-14));
    }
  }
}

TEST(Schedule, LambdaMaxAndValidation) {
  ScheduleConfig cfg;
  cfg.r0 = 2;
  EXPECT_NEAR(lambda_max(cfg), 164.493, 1e-3);
  EXPECT_NEAR(lambda_max(cfg), 50 * std::numbers::pi * std::numbers::pi / 3,
              1e-12);
  cfg.c_tau = 0;
  EXPECT_THROW(cfg.validate(), ParameterError);
  cfg.c_tau = 0.2;
  cfg.r0 = -1;
  EXPECT_THROW(cfg.validate(), ParameterError);
}

// ------------------------------------------------------- single-step pieces

TEST(Steps, AugmentedLagrangianExamples) {
  const ProblemInstance pb = quadratic_split(1);
  const Matrix x = pb.manifold.random_point(2).matrix();
  const Matrix ax = pb.A.apply(x);
  const Matrix lam = gaussian(7, 2, 3);
  EXPECT_NEAR(augmented_lagrangian(pb, x, ax, lam, 4.0),
              pb.f.value(x) + pb.h->eval(ax), 1e-12);

  // independent term-by-term evaluation
  const Matrix y = gaussian(7, 2, 4);
  const Matrix g = pb.A.matrix();
  Scalar coupling = 0, quad = 0, l1 = 0;
  for (Eigen::Index j = 0; j < 2; ++j) {
    for (Eigen::Index i = 0; i < 7; ++i) {
      const Scalar r = g.row(i).dot(x.col(j)) - y(i, j);
      coupling += lam(i, j) * r;
      quad += r * r;
      l1 += std::abs(y(i, j));
    }
  }
  EXPECT_NEAR(augmented_lagrangian(pb, x, y, lam, 4.0),
              pb.f.value(x) + 0.3 * l1 - coupling + 2.0 * quad, 1e-10);
  EXPECT_THROW(augmented_lagrangian(pb, x, y, lam, 0.0), ParameterError);
}

TEST(Steps, AugmentedLagrangianZeroRegularizer) {
  const Matrix c = gaussian(3, 1, 5);
  const ProblemInstance pb = sphere_projection(c);
  const Matrix x = pb.manifold.random_point(6).matrix();
  const Matrix y = gaussian(3, 1, 7);
  EXPECT_NEAR(augmented_lagrangian(pb, x, y, Matrix::Zero(3, 1), 2.0),
              pb.f.value(x) + (x - y).squaredNorm(), 1e-14);
}

TEST(Steps, YUpdateExamples) {
  const Matrix c = gaussian(3, 1, 8);
  const ProblemInstance pz = sphere_projection(c);
  const Matrix x = pz.manifold.random_point(9).matrix();
  const Matrix lam = gaussian(3, 1, 10);
  EXPECT_LE((y_update(pz, x, lam, 2.5) - (x - lam / 2.5)).norm(), 1e-15);

  ProblemInstance pl = pz;
  pl.manifold = Manifold::sphere(2);
  pl.h = make_l1({2, 1}, 1.0);
  pl.A = LinearMap::identity({2, 1});
  Matrix ax(2, 1);
  ax << 2, -0.5;
  const Matrix y = y_update_from_ax(pl, ax, Matrix::Zero(2, 1), 1.0);
  EXPECT_EQ(y(0, 0), 1.0);
  EXPECT_EQ(y(1, 0), 0.0);
}

TEST(Steps, YUpdateMinimizesAugmentedLagrangian) {
  const ProblemInstance pb = quadratic_split(11);
  const Matrix x = pb.manifold.random_point(12).matrix();
  const Matrix lam = gaussian(7, 2, 13);
  const Scalar rho = 3.0;
  const Matrix y = y_update(pb, x, lam, rho);
  const Scalar best = augmented_lagrangian(pb, x, y, lam, rho);
  for (std::uint64_t s = 0; s < 100; ++s) {
    const Matrix dy = (1e-3 * (1 + s % 10)) * gaussian(7, 2, 500 + s);
    EXPECT_LE(best, augmented_lagrangian(pb, x, y + dy, lam, rho) + 1e-14);
  }
}

TEST(Steps, GradPhiReducesToRiemannianGradient) {
  const ProblemInstance pb = quadratic_split(14);
  const ManifoldPoint x = pb.manifold.random_point(15);
  const Matrix y = gaussian(7, 2, 16);
  const Scalar rho = 2.0;
  const Matrix lam = rho * (pb.A.apply(x.matrix()) - y);
  const Matrix expected =
      pb.manifold.riemannian_gradient(x, pb.f.gradient(x.matrix())).matrix();
  EXPECT_LE((grad_phi(pb, x, y, lam, rho).matrix() - expected).norm(), 1e-12);
}

TEST(Steps, GradPhiHandExpandedOnSphere) {
  // f = 1/2 ||x - c||^2, A = I: grad Phi = (x - c) + rho (x - y) - lambda,
  // then projected onto x-perp
  Matrix c(3, 1), y(3, 1), lam(3, 1), xv(3, 1);
  c << 1, 2, -1;
  y << 0.5, -0.5, 0.25;
  lam << 0.1, 0.2, -0.3;
  xv << 2, -1, 2;
  xv /= 3.0;
  const ProblemInstance pb = sphere_projection(c);
  const ManifoldPoint x = pb.manifold.point(xv);
  const Scalar rho = 4.0;
  Matrix g(3, 1);
  for (int i = 0; i < 3; ++i) {
    g(i, 0) = (xv(i, 0) - c(i, 0)) + rho * (xv(i, 0) - y(i, 0)) - lam(i, 0);
  }
  const Scalar radial = xv(0, 0) * g(0, 0) + xv(1, 0) * g(1, 0) + xv(2, 0) * g(2, 0);
  g -= radial * xv;
  EXPECT_LE((grad_phi(pb, x, y, lam, rho).matrix() - g).norm(), 1e-14);
}

TEST(Steps, GradPhiFiniteDifference) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const ProblemInstance pb = quadratic_split(20 + s);
    const ManifoldPoint x = pb.manifold.random_point(30 + s);
    const Matrix y = gaussian(7, 2, 40 + s);
    const Matrix lam = gaussian(7, 2, 50 + s);
    const Scalar rho = 1.5;
    auto phi = [&](const Matrix &z) {
      return augmented_lagrangian(pb, z, y, lam, rho);
    };
    const Matrix g = grad_phi(pb, x, y, lam, rho).matrix();
    const Matrix d = random_tangent(pb.manifold, x.matrix(), 60 + s);
    const Scalar fd = test_util::directional_fd(phi, pb.manifold, x.matrix(), d);
    EXPECT_LE(test_util::rel_err(fd, inner(g, d)), 1e-5);
  }
}

TEST(Steps, XUpdateExamples) {
  const ProblemInstance pb = sphere_projection(gaussian(2, 1, 1));
  Matrix xv(2, 1), gv(2, 1);
  xv << 1, 0;
  gv << 0, 1;
  const ManifoldPoint x = pb.manifold.point(xv);
  const TangentVector g = pb.manifold.project_tangent(x, gv);
  const Matrix out = x_update(x, g, 1.0).matrix();
  EXPECT_NEAR(out(0, 0), 1 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(out(1, 0), -1 / std::sqrt(2.0), 1e-15);
  EXPECT_LE((x_update(x, g, 0.0).matrix() - xv).norm(), 1e-15);
  const TangentVector zero = pb.manifold.project_tangent(x, Matrix::Zero(2, 1));
  EXPECT_LE((x_update(x, zero, 0.3).matrix() - xv).norm(), 1e-15);
}

TEST(Steps, LambdaUpdateExamples) {
  const Matrix lam = gaussian(4, 2, 1);
  const Matrix ax = gaussian(4, 2, 2);
  EXPECT_EQ(lambda_update(lam, 3.0, ax, ax), lam);
  EXPECT_EQ(lambda_update(lam, 0.0, ax, gaussian(4, 2, 3)), lam);
  const Matrix y = gaussian(4, 2, 4);
  EXPECT_LE((lambda_update(lam, 2.0, ax, y) - (lam - 2.0 * (ax - y))).norm(),
            1e-15);
}

// ------------------------------------------------------------------ ARADMM

TEST(Aradmm, ConvergesToProjectionOntoSphere) {
  Matrix c(4, 1);
  c << 1, -2, 0.5, 3;
  const ProblemInstance pb = sphere_projection(c);
  StopRule stop = iters(2000);
  const SolverResult res = aradmm_run(pb, ScheduleConfig{}, stop, start(pb, 3));
  EXPECT_LE((res.state.x.matrix() - c / c.norm()).norm(), 1e-4);
}

TEST(Aradmm, SmallSpcaMatchesGridSearch) {
  // global minimum over S^3 by a 100^3 Hopf-coordinate grid (10^6 points)
  const ProblemInstance pb = spca_instance(4, 6, 1, 0.01, 21);
  int steps = 100;
  Scalar best = std::numeric_limits<Scalar>::infinity();
  const Scalar pi = std::numbers::pi;
  Matrix x(4, 1);
  for (int a = 0; a < steps; ++a) {
    const Scalar eta = 0.5 * pi * (a + 0.5) / steps;
    for (int b = 0; b < steps; ++b) {
      const Scalar xi1 = 2 * pi * b / steps;
      for (int c = 0; c < steps; ++c) {
        const Scalar xi2 = 2 * pi * c / steps;
        x << std::cos(eta) * std::cos(xi1), std::cos(eta) * std::sin(xi1),
            std::sin(eta) * std::cos(xi2), std::sin(eta) * std::sin(xi2);
        best = std::min(best, objective(pb, x));
      }
    }
  }
  const SolverResult res =
      aradmm_run(pb, ScheduleConfig{}, iters(3000), start(pb, 22));
  EXPECT_LE(std::abs(res.final_objective() - best), 1e-2);
  EXPECT_LE(res.final_objective(), best + 1e-2);
}

TEST(Aradmm, OracleCountsAndFeasibility) {
  const ProblemInstance pb = quadratic_split(70);
  long rows = 0;
  auto sink = [&](const IterateView &v) {
    ++rows;
    EXPECT_LE(pb.manifold.feasibility_residual_raw(v.x), 1e-10);
  };
  const SolverResult res =
      aradmm_run(pb, ScheduleConfig{}, iters(137), start(pb, 71), sink);
  EXPECT_EQ(res.state.counters.grad_f_evals, 137);
  EXPECT_EQ(res.state.counters.prox_calls, 137);
  EXPECT_EQ(res.state.counters.retraction_calls, 137);
  EXPECT_EQ(res.trace.size(), 138u);
  EXPECT_EQ(rows, 138);
  EXPECT_EQ(res.state.k, 137);
}

TEST(Aradmm, MultiplierBoundAndSeriesCap) {
  for (SplitInit split : {SplitInit::Zero, SplitInit::Prox}) {
    const ProblemInstance pb = quadratic_split(80);
    ScheduleConfig cfg;
    Scalar rmax = 0;
    std::vector<Scalar> gammas, residuals;
    auto sink = [&](const IterateView &v) {
      if (v.record.k > 0) {
        gammas.push_back(v.record.gamma);
        residuals.push_back((v.ax - v.y).norm());
      }
      rmax = std::max(rmax, v.lambda.norm());
    };
    const SolverResult res = aradmm_run(pb, cfg, iters(800), start(pb, 81, split), sink);
    ASSERT_GT(res.r0, 0);
    cfg.r0 = res.r0;
    EXPECT_NEAR(res.lambda_max, lambda_max(cfg), 1e-12);
    EXPECT_LE(rmax, res.lambda_max + 1e-9);
    for (std::size_t k = 0; k < gammas.size(); ++k) {
      EXPECT_LE(gammas[k] * residuals[k],
                gamma_series_cap(static_cast<long>(k), cfg) * (1 + 1e-12) + 1e-300);
    }
  }
}

TEST(Aradmm, YUpdateOptimalityEveryIteration) {
  const ProblemInstance pb = quadratic_split(90);
  Scalar worst = 0;
  auto sink = [&](const IterateView &v) {
    if (v.record.k == 0) {
      return;
    }
    const Scalar rho = v.rho_prev;
    const Matrix g = -rho * (v.y - v.ax_prev + v.lambda_prev / rho);
    worst = std::max(worst, pb.h->subdiff_distance(v.y, g));
  };
  aradmm_run(pb, ScheduleConfig{}, iters(300), start(pb, 91, SplitInit::Zero),
             sink);
  EXPECT_LE(worst, 1e-8);
}

TEST(Aradmm, TraceUsesBarLambdaResiduals) {
  const ProblemInstance pb = quadratic_split(95);
  bool checked = false;
  auto sink = [&](const IterateView &v) {
    if (v.record.k == 0) {
      EXPECT_EQ(v.record.primal_res, (v.ax - v.y).norm());
      return;
    }
    const Matrix bar = bar_lambda(v.lambda_prev, v.rho_prev, v.ax, v.y);
    EXPECT_LE((bar - v.bar_lambda).norm(), 1e-12 * (1 + bar.norm()));
    const KktResiduals r = kkt_residuals(pb, v.x, v.y, bar);
    EXPECT_NEAR(r.stationarity, v.record.stat_res, 1e-10 * (1 + r.stationarity));
    EXPECT_NEAR(r.dual, v.record.dual_res, 1e-10 * (1 + r.dual));
    EXPECT_NEAR(r.primal, v.record.primal_res, 1e-12);
    checked = true;
  };
  const SolverResult res = aradmm_run(pb, ScheduleConfig{}, iters(50),
                                      start(pb, 96, SplitInit::Prox), sink);
  EXPECT_TRUE(checked);
  EXPECT_NEAR(res.trace.front().primal_res, res.r0, 0);
}

TEST(Aradmm, Deterministic) {
  const ProblemInstance pb = spca_instance(20, 15, 3, 0.1, 5);
  const SolverResult a = aradmm_run(pb, ScheduleConfig{}, iters(100), start(pb, 6));
  const SolverResult b = aradmm_run(pb, ScheduleConfig{}, iters(100), start(pb, 6));
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    EXPECT_EQ(a.trace[i].objective, b.trace[i].objective);
    EXPECT_EQ(a.trace[i].stat_res, b.trace[i].stat_res);
    EXPECT_EQ(a.trace[i].lambda_norm, b.trace[i].lambda_norm);
  }
  EXPECT_EQ(a.state.x.matrix(), b.state.x.matrix());
}

TEST(Aradmm, StopRules) {
  const ProblemInstance pb = spca_instance(20, 15, 3, 0.1, 5);
  StopRule obj;
  obj.max_iters = 100000;
  obj.obj_change_tol = 1e-6;
  const SolverResult r1 = aradmm_run(pb, ScheduleConfig{}, obj, start(pb, 1));
  EXPECT_EQ(r1.reason, StopReason::ObjectiveStalled);
  const auto &t = r1.trace;
  EXPECT_LE(std::abs(t[t.size() - 1].objective - t[t.size() - 2].objective), 1e-6);

  StopRule kkt;
  kkt.max_iters = 100000;
  kkt.obj_change_tol = 0;
  kkt.kkt_tol = 5e-2;
  const SolverResult r2 = aradmm_run(pb, ScheduleConfig{}, kkt, start(pb, 1));
  EXPECT_EQ(r2.reason, StopReason::KktTolerance);
  EXPECT_LE(r2.kkt.max(), 5e-2);

  StopRule budget;
  budget.max_iters = 0;
  budget.obj_change_tol = 0;
  budget.max_grad_evals = 42;
  const SolverResult r3 = aradmm_run(pb, ScheduleConfig{}, budget, start(pb, 1));
  EXPECT_EQ(r3.reason, StopReason::GradBudget);
  EXPECT_EQ(r3.state.counters.grad_f_evals, 42);

  StopRule none;
  none.max_iters = 0;
  none.obj_change_tol = 0;
  EXPECT_THROW(aradmm_run(pb, ScheduleConfig{}, none, start(pb, 1)), StopRuleError);
  StopRule negative;
  negative.max_iters = -1;
  EXPECT_THROW(negative.validate(), StopRuleError);
}

TEST(Aradmm, NonFiniteAbort) {
  const ProblemInstance pb = spca_instance(20, 15, 3, 0.1, 5);
  ScheduleConfig cfg;
  cfg.rho0 = 1e308;
  const SolverResult res = aradmm_run(pb, cfg, iters(100), start(pb, 1, SplitInit::Zero));
  EXPECT_TRUE(res.diverged());
  EXPECT_EQ(res.reason, StopReason::NonFinite);
  EXPECT_TRUE(res.trace.back().non_finite);
  EXPECT_LT(res.trace.size(), 101u);
}

TEST(Aradmm, RejectsBadInitialPoints) {
  const ProblemInstance pb = spca_instance(20, 15, 3, 0.1, 5);
  const Manifold other = Manifold::stiefel(20, 2);
  const InitialPoint wrong{other.random_point(1), std::nullopt, std::nullopt,
                           SplitInit::AX};
  EXPECT_THROW(aradmm_run(pb, ScheduleConfig{}, iters(5), wrong), DimensionError);
  InitialPoint bad_y = start(pb, 1);
  bad_y.y = Matrix::Zero(3, 3);
  EXPECT_THROW(aradmm_run(pb, ScheduleConfig{}, iters(5), bad_y), DimensionError);
}

TEST(Aradmm, InitialSplitPolicies) {
  const ProblemInstance pb = quadratic_split(100);
  const InitialPoint ax = start(pb, 1, SplitInit::AX);
  const Matrix a = pb.A.apply(ax.x.matrix());
  EXPECT_EQ(initial_split(pb, ax, 5).first, a);
  EXPECT_EQ(initial_split(pb, start(pb, 1, SplitInit::Zero), 5).first,
            Matrix::Zero(7, 2));
  EXPECT_EQ(initial_split(pb, start(pb, 1, SplitInit::Prox), 5).first,
            pb.h->prox(0.2, a));
}

// ------------------------------------------------------------------- MADMM

TEST(Madmm, SingleInnerStepMatchesHandLoop) {
  const ProblemInstance pb = quadratic_split(110);
  MadmmConfig cfg;
  cfg.rho = 3;
  cfg.eta = 0.01;
  cfg.inner_iters = 1;
  const InitialPoint init = start(pb, 111, SplitInit::Zero);
  const SolverResult res = madmm_run(pb, cfg, iters(25), init);

  Matrix x = init.x.matrix();
  Matrix y = Matrix::Zero(7, 2);
  Matrix lam = Matrix::Zero(7, 2);
  for (int k = 0; k < 25; ++k) {
    const Matrix g = pb.f.gradient(x) +
                     pb.A.matrix().transpose() *
                         (cfg.rho * (pb.A.matrix() * x - y) - lam);
    x = pb.manifold.retract_raw(x, -cfg.eta * pb.manifold.project_tangent_raw(x, g));
    const Matrix ax = pb.A.matrix() * x;
    y = pb.h->prox(1 / cfg.rho, ax - lam / cfg.rho);
    lam -= cfg.rho * (ax - y);
  }
  EXPECT_LE((res.state.x.matrix() - x).norm(), 1e-12);
  EXPECT_LE((res.state.lambda - lam).norm(), 1e-10);
  EXPECT_EQ(res.state.counters.grad_f_evals, 25);
}

TEST(Madmm, CountersAndInnerDescent) {
  const ProblemInstance pb = quadratic_split(120);
  MadmmConfig cfg;
  const SolverResult res = madmm_run(pb, cfg, iters(30), start(pb, 121));
  EXPECT_EQ(res.state.counters.grad_f_evals, 300);
  EXPECT_EQ(res.state.counters.prox_calls, 30);
  EXPECT_EQ(res.state.counters.retraction_calls, 300);

  // Phi is L-smooth with L <= ||S|| + rho ||G||^2 (+ curvature terms); use a
  // small step well below 1/L
  const ManifoldPoint x = pb.manifold.random_point(122);
  OracleCounters c;
  MadmmConfig small = cfg;
  small.eta = 1e-3;
  small.inner_iters = 50;
  const InnerSolveResult inner_res =
      madmm_x_subproblem(pb, x, pb.f.gradient(x.matrix()), gaussian(7, 2, 123),
                         gaussian(7, 2, 124), small, c, true);
  ASSERT_EQ(inner_res.phi_values.size(), 51u);
  for (std::size_t i = 1; i < inner_res.phi_values.size(); ++i) {
    EXPECT_LE(inner_res.phi_values[i], inner_res.phi_values[i - 1] + 1e-12);
  }
}

TEST(Madmm, BothSolversReachFeasibility) {
  const ProblemInstance pb = spca_instance(30, 30, 3, 0.05, 7);
  // the primal residual of the penalty-dominated iteration decays like 1 / rho_k
  ScheduleConfig cfg;
  cfg.c_rho = 5;
  const SolverResult a = aradmm_run(pb, cfg, iters(1000), start(pb, 8));
  const SolverResult m = madmm_run(pb, MadmmConfig{}, iters(500), start(pb, 8));
  EXPECT_LE(a.trace.back().primal_res, 1e-2);
  EXPECT_LE(m.trace.back().primal_res, 1e-2);
}

TEST(Madmm, Validation) {
  MadmmConfig cfg;
  cfg.inner_iters = 0;
  EXPECT_THROW(cfg.validate(), ParameterError);
  cfg.inner_iters = 1;
  cfg.rho = 0;
  EXPECT_THROW(cfg.validate(), ParameterError);
}

// --------------------------------------------------------------------- RSG

TEST(Rsg, ZeroRegularizerIsRiemannianGradientDescent) {
  Matrix c(5, 1);
  c << 1, 0, -1, 2, 0.5;
  const ProblemInstance pb = sphere_projection(c);
  const ManifoldPoint x0 = pb.manifold.random_point(1);
  RsgConfig cfg;
  cfg.eta = 0.05;
  const SolverResult res = rsg_run(pb, cfg, iters(40), x0);
  Matrix x = x0.matrix();
  for (int k = 0; k < 40; ++k) {
    x = pb.manifold.retract_raw(
        x, -cfg.eta * pb.manifold.project_tangent_raw(x, x - c));
  }
  EXPECT_LE((res.state.x.matrix() - x).norm(), 1e-14);
  EXPECT_EQ(res.state.counters.grad_f_evals, 40);
}

TEST(Rsg, ZeroStepIsStationary) {
  const ProblemInstance pb = spca_instance(10, 12, 2, 0.1, 2);
  const ManifoldPoint x0 = pb.manifold.random_point(3);
  RsgConfig cfg;
  cfg.eta = 0;
  const SolverResult res = rsg_run(pb, cfg, iters(10), x0);
  EXPECT_EQ(res.state.x.matrix(), x0.matrix());
}

TEST(Rsg, RejectsNonIdentityMap) {
  const ProblemInstance pb = dpcp_instance(10, 2, 20, 10, 1);
  EXPECT_THROW(rsg_run(pb, RsgConfig{}, iters(5), pb.manifold.random_point(1)),
               ParameterError);
}

TEST(Rsg, TrailsAradmmOnSmallSpca) {
  const ProblemInstance pb = spca_instance(30, 30, 3, 0.05, 9);
  const ManifoldPoint x0 = pb.manifold.random_point(10);
  const SolverResult r = rsg_run(pb, RsgConfig{}, iters(2000), x0);
  const SolverResult a = aradmm_run(pb, ScheduleConfig{}, iters(2000), start(pb, 10));
  EXPECT_GT(r.final_objective(), a.final_objective());
  EXPECT_LE(std::abs(r.final_objective() - a.final_objective()),
            0.05 * std::abs(a.final_objective()));
}
