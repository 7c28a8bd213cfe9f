#pragma once

// Experiment execution: instance construction, solver dispatch, repeat
// scheduling and summaries.

#include <manadmm/harness/config.hpp>
#include <manadmm/harness/trace_io.hpp>
#include <manadmm/manadmm.hpp>

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <thread>
#include <vector>

namespace manadmm::harness {

inline ProblemInstance build_problem(const ProblemSpec &q) {
  if (!q.instance_dir.empty()) {
    return read_instance(q.instance_dir);
  }
  switch (q.family) {
  case ProblemFamily::SPCA:
    return spca_instance(q.n, q.m, q.p, q.mu, q.data_seed, q.scaling,
                         q.retraction);
  case ProblemFamily::Classifier:
    return classifier_instance(q.m, q.N, q.sigma2, q.mu, q.data_seed);
  case ProblemFamily::DPCP:
    return dpcp_instance(q.n, q.p, q.p1, q.p2, q.data_seed,
                         q.normalize_columns, q.retraction);
  case ProblemFamily::Custom:
    break;
  }
  throw ConfigError("custom problems cannot be built from a config");
}

/// Gradient evaluations consumed by the first k iterations of a solver.
inline long grad_evals_at(const SolverSpec &s, long k) {
  return s.kind == SolverKind::MADMM ? k * s.madmm.inner_iters : k;
}

struct RunOutput {
  Seed init_seed;
  SolverResult result;
  IterateState initial;
  IterateState final_state;
};

/// Runs one solver from the point drawn with `init_seed`.
inline RunOutput run_solver(const ProblemInstance &pb, const SolverSpec &s,
                            const StopRule &stop, Seed init_seed,
                            bool no_wallclock = false) {
  const std::string name = to_string(s.kind);
  const ManifoldPoint x0 = pb.manifold.random_point(init_seed);
  IterateState initial;
  auto sink = [&](const IterateView &v) {
    if (v.record.k == 0) {
      initial = {0, name, v.x, v.y, v.lambda, v.bar_lambda};
    }
  };
  const InitialPoint init{.x = x0, .y = {}, .lambda = {}, .split = s.split};
  SolverResult res = [&]() {
    switch (s.kind) {
    case SolverKind::MADMM:
      return madmm_run(pb, s.madmm, stop, init, sink);
    case SolverKind::RSG:
      return rsg_run(pb, s.rsg, stop, x0, sink);
    case SolverKind::ARADMM:
      break;
    }
    return aradmm_run(pb, s.schedule, stop, init, sink);
  }();
  if (no_wallclock) {
    for (IterateRecord &r : res.trace) {
      r.elapsed_seconds = 0;
    }
  }
  IterateState final_state{res.trace.back().k, name, res.state.x.matrix(),
                           res.state.y, res.state.lambda, res.bar_lambda};
  return {init_seed, std::move(res), std::move(initial),
          std::move(final_state)};
}

/// Runs `jobs` independent tasks on up to hardware_concurrency workers, or
/// in order when `sequential`. The first exception is rethrown.
inline void run_parallel(std::size_t jobs, bool sequential,
                         const std::function<void(std::size_t)> &task) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t workers =
      sequential ? 1 : std::min<std::size_t>(hw, jobs);
  if (workers <= 1) {
    for (std::size_t i = 0; i < jobs; ++i) {
      task(i);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (std::size_t i = next++; i < jobs; i = next++) {
        try {
          task(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) {
            error = std::current_exception();
          }
        }
      }
    });
  }
  for (std::thread &t : pool) {
    t.join();
  }
  if (error) {
    std::rethrow_exception(error);
  }
}

/// Per-run numbers reported in summaries; all taken from the final trace row
/// and the final state.
struct RunMetrics {
  Scalar final_objective = 0;
  Scalar stat_res = 0;
  Scalar dual_res = 0;
  Scalar primal_res = 0;
  long iterations = 0;
  Scalar wall_clock_seconds = 0;
  long grad_f_evals = 0;
  long prox_calls = 0;
  long retraction_calls = 0;
  std::optional<Scalar> sparsity;   ///< percentage of near-zero entries of y
  std::optional<Scalar> sparsity_x; ///< same for x
  std::optional<Scalar> subspace_alignment;
  std::string stop_reason;
  bool diverged = false;
};

inline RunMetrics metrics_of(const ProblemInstance &pb, const RunOutput &run) {
  const SolverResult &res = run.result;
  const IterateRecord &last = res.trace.back();
  RunMetrics m;
  m.final_objective = last.objective;
  m.stat_res = last.stat_res;
  m.dual_res = last.dual_res;
  m.primal_res = last.primal_res;
  m.iterations = last.k;
  m.wall_clock_seconds = last.elapsed_seconds;
  m.grad_f_evals = res.state.counters.grad_f_evals;
  m.prox_calls = res.state.counters.prox_calls;
  m.retraction_calls = res.state.counters.retraction_calls;
  m.stop_reason = to_string(res.reason);
  m.diverged = res.diverged();
  if (!m.diverged) {
    if (pb.family == ProblemFamily::SPCA ||
        pb.family == ProblemFamily::Classifier) {
      m.sparsity = sparsity(run.final_state.y);
      m.sparsity_x = sparsity(run.final_state.x);
    }
    if (pb.family == ProblemFamily::DPCP && pb.ground_truth) {
      m.subspace_alignment =
          subspace_alignment(run.final_state.x, *pb.ground_truth);
    }
  }
  return m;
}

namespace detail {

inline ordered_json number_or_null(Scalar v) {
  return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr);
}

inline void put_optional(ordered_json &j, const char *key,
                         const std::optional<Scalar> &v) {
  if (v) {
    j[key] = number_or_null(*v);
  }
}

inline ordered_json stats_json(const std::vector<Scalar> &v) {
  Scalar sum = 0;
  Scalar lo = std::numeric_limits<Scalar>::infinity();
  Scalar hi = -lo;
  for (Scalar x : v) {
    sum += x;
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  return ordered_json{{"mean", number_or_null(sum / Scalar(v.size()))},
                      {"min", number_or_null(lo)},
                      {"max", number_or_null(hi)}};
}

} // namespace detail

inline ordered_json metrics_json(const RunMetrics &m) {
  using detail::number_or_null;
  ordered_json j;
  j["final_objective"] = number_or_null(m.final_objective);
  j["stat_res"] = number_or_null(m.stat_res);
  j["dual_res"] = number_or_null(m.dual_res);
  j["primal_res"] = number_or_null(m.primal_res);
  j["iterations"] = m.iterations;
  j["wall_clock_seconds"] = m.wall_clock_seconds;
  j["grad_f_evals"] = m.grad_f_evals;
  j["prox_calls"] = m.prox_calls;
  j["retraction_calls"] = m.retraction_calls;
  detail::put_optional(j, "sparsity", m.sparsity);
  detail::put_optional(j, "sparsity_x", m.sparsity_x);
  detail::put_optional(j, "subspace_alignment", m.subspace_alignment);
  j["stop_reason"] = m.stop_reason;
  j["diverged"] = m.diverged;
  return j;
}

/// Mean, min and max of every numeric metric over non-diverged runs.
inline ordered_json aggregate_json(const std::vector<RunMetrics> &runs) {
  std::vector<const RunMetrics *> ok;
  for (const RunMetrics &m : runs) {
    if (!m.diverged) {
      ok.push_back(&m);
    }
  }
  ordered_json j;
  j["runs"] = runs.size();
  j["diverged_runs"] = runs.size() - ok.size();
  if (ok.empty()) {
    return j;
  }
  auto collect = [&](auto get) {
    std::vector<Scalar> v;
    for (const RunMetrics *m : ok) {
      v.push_back(static_cast<Scalar>(get(*m)));
    }
    return detail::stats_json(v);
  };
  j["final_objective"] = collect([](const RunMetrics &m) { return m.final_objective; });
  j["stat_res"] = collect([](const RunMetrics &m) { return m.stat_res; });
  j["dual_res"] = collect([](const RunMetrics &m) { return m.dual_res; });
  j["primal_res"] = collect([](const RunMetrics &m) { return m.primal_res; });
  j["iterations"] = collect([](const RunMetrics &m) { return m.iterations; });
  j["wall_clock_seconds"] =
      collect([](const RunMetrics &m) { return m.wall_clock_seconds; });
  j["grad_f_evals"] = collect([](const RunMetrics &m) { return m.grad_f_evals; });
  if (ok.front()->sparsity) {
    j["sparsity"] = collect([](const RunMetrics &m) { return *m.sparsity; });
    j["sparsity_x"] = collect([](const RunMetrics &m) { return *m.sparsity_x; });
  }
  if (ok.front()->subspace_alignment) {
    j["subspace_alignment"] =
        collect([](const RunMetrics &m) { return *m.subspace_alignment; });
  }
  return j;
}

inline ordered_json instance_json(const ProblemInstance &pb) {
  const Shape s = pb.manifold.shape();
  return ordered_json{{"family", to_string(pb.family)},
                      {"name", pb.name},
                      {"rows", s.rows},
                      {"cols", s.cols},
                      {"params", params_json(pb)}};
}

inline std::string run_label(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "run_%03zu", i);
  return buf;
}

/// Writes the trace and the initial and final states of one run into
/// `dir`; `instance_dir` is the serialized instance the states refer to.
inline void persist_run(const fs::path &dir, const RunOutput &run,
                        const fs::path &instance_dir) {
  fs::create_directories(dir);
  write_trace_csv(dir / "trace.csv", run.result.trace);
  write_state(dir, "initial", run.initial, instance_dir);
  write_state(dir, "final", run.final_state, instance_dir);
}

struct ExperimentResult {
  ProblemInstance problem;
  std::vector<RunOutput> runs;
  std::vector<RunMetrics> metrics;
  ordered_json summary;
  bool diverged() const {
    return std::any_of(metrics.begin(), metrics.end(),
                       [](const RunMetrics &m) { return m.diverged; });
  }
};

/// The `run` pipeline: builds the instance, runs `repeats` solves with init
/// seeds init_seed, init_seed + 1, ..., and writes
///   <out>/instance/, <out>/run_NNN/{trace.csv, initial.json, final.json},
///   <out>/summary.json.
inline ExperimentResult run_experiment(const RunConfig &cfg,
                                       bool write_files = true) {
  cfg.validate();
  ExperimentResult ex{build_problem(cfg.problem), {}, {}, {}};
  const auto repeats = static_cast<std::size_t>(cfg.output.repeats);
  std::vector<std::optional<RunOutput>> slots(repeats);
  run_parallel(repeats, cfg.output.sequential, [&](std::size_t i) {
    slots[i] = run_solver(ex.problem, cfg.solver, cfg.stop, cfg.init_seed + i,
                          cfg.output.no_wallclock);
  });
  for (auto &slot : slots) {
    ex.runs.push_back(std::move(*slot));
  }

  const fs::path out = cfg.output.dir;
  ordered_json per_run = ordered_json::array();
  for (std::size_t i = 0; i < repeats; ++i) {
    ex.metrics.push_back(metrics_of(ex.problem, ex.runs[i]));
    ordered_json j;
    j["index"] = i;
    j["init_seed"] = ex.runs[i].init_seed;
    j["trace"] = run_label(i) + "/trace.csv";
    const ordered_json mj = metrics_json(ex.metrics.back());
    for (const auto &[key, value] : mj.items()) {
      j[key] = value;
    }
    per_run.push_back(j);
  }
  ex.summary["format"] = "manadmm-summary";
  ex.summary["version"] = 1;
  ex.summary["config"] = to_json(cfg);
  ex.summary["instance"] = instance_json(ex.problem);
  ex.summary["diverged"] = ex.diverged();
  ex.summary["runs"] = per_run;
  ex.summary["aggregate"] = aggregate_json(ex.metrics);

  if (write_files) {
    fs::create_directories(out);
    write_instance(out / "instance", ex.problem);
    for (std::size_t i = 0; i < repeats; ++i) {
      persist_run(out / run_label(i), ex.runs[i], out / "instance");
    }
    std::ofstream f(out / "summary.json", std::ios::binary | std::ios::trunc);
    f << ex.summary.dump(2) << '\n';
    if (!f) {
      throw FormatError("cannot write " + (out / "summary.json").string());
    }
  }
  return ex;
}

struct CompareResult {
  ProblemInstance problem;
  std::vector<SolverKind> solvers;
  /// runs[s][i]: solver s, repeat i
  std::vector<std::vector<RunOutput>> runs;
  std::vector<std::vector<RunMetrics>> metrics;
  ordered_json summary;
  bool diverged() const {
    for (const auto &row : metrics) {
      for (const RunMetrics &m : row) {
        if (m.diverged) {
          return true;
        }
      }
    }
    return false;
  }
};

inline constexpr const char *compare_header =
    "solver,runs,diverged_runs,final_objective,iterations,grad_f_evals,"
    "wall_clock_seconds,stat_res,dual_res,primal_res,sparsity,"
    "subspace_alignment";

inline constexpr const char *compare_long_header =
    "solver,run,k,grad_f_evals,elapsed_seconds,objective";

/// Mean of a metric over non-diverged runs (NaN when every run diverged).
inline Scalar mean_metric(const std::vector<RunMetrics> &runs,
                          const std::function<Scalar(const RunMetrics &)> &get) {
  Scalar sum = 0;
  long n = 0;
  for (const RunMetrics &m : runs) {
    if (!m.diverged) {
      sum += get(m);
      ++n;
    }
  }
  return n > 0 ? sum / Scalar(n) : std::numeric_limits<Scalar>::quiet_NaN();
}

/// The `compare` pipeline: every solver runs on the same instance from the
/// same initial points. `grad_budget > 0` overrides the stop rule's
/// gradient-evaluation budget for all solvers. Writes
///   <out>/instance/, <out>/<solver>/run_NNN/..., <out>/compare.csv,
///   <out>/compare_long.csv, <out>/compare.json.
inline CompareResult compare_experiment(const RunConfig &base,
                                        const std::vector<SolverKind> &solvers,
                                        long grad_budget = 0,
                                        bool write_files = true) {
  if (solvers.empty()) {
    throw ConfigError("compare needs at least one solver");
  }
  RunConfig cfg = base;
  if (grad_budget > 0) {
    cfg.stop.max_grad_evals = grad_budget;
  }
  cfg.validate();
  CompareResult cr{build_problem(cfg.problem), solvers, {}, {}, {}};
  const auto repeats = static_cast<std::size_t>(cfg.output.repeats);
  const std::size_t jobs = solvers.size() * repeats;
  std::vector<std::optional<RunOutput>> slots(jobs);
  run_parallel(jobs, cfg.output.sequential, [&](std::size_t j) {
    SolverSpec spec = cfg.solver;
    spec.kind = solvers[j / repeats];
    slots[j] = run_solver(cr.problem, spec, cfg.stop,
                          cfg.init_seed + j % repeats, cfg.output.no_wallclock);
  });
  cr.runs.resize(solvers.size());
  cr.metrics.resize(solvers.size());
  for (std::size_t j = 0; j < jobs; ++j) {
    cr.runs[j / repeats].push_back(std::move(*slots[j]));
    cr.metrics[j / repeats].push_back(
        metrics_of(cr.problem, cr.runs[j / repeats].back()));
  }

  ordered_json table = ordered_json::array();
  for (std::size_t s = 0; s < solvers.size(); ++s) {
    ordered_json row;
    row["solver"] = to_string(solvers[s]);
    ordered_json per_run = ordered_json::array();
    for (std::size_t i = 0; i < repeats; ++i) {
      ordered_json j = metrics_json(cr.metrics[s][i]);
      j["init_seed"] = cr.runs[s][i].init_seed;
      per_run.push_back(j);
    }
    row["runs"] = per_run;
    row["aggregate"] = aggregate_json(cr.metrics[s]);
    table.push_back(row);
  }
  ordered_json config = to_json(cfg);
  ordered_json names = ordered_json::array();
  for (SolverKind k : solvers) {
    names.push_back(to_string(k));
  }
  config["compare"] = {{"solvers", names}, {"grad_budget", grad_budget}};
  cr.summary["format"] = "manadmm-compare";
  cr.summary["version"] = 1;
  cr.summary["config"] = config;
  cr.summary["instance"] = instance_json(cr.problem);
  cr.summary["diverged"] = cr.diverged();
  cr.summary["solvers"] = table;

  if (!write_files) {
    return cr;
  }
  const fs::path out = cfg.output.dir;
  fs::create_directories(out);
  write_instance(out / "instance", cr.problem);
  std::ofstream csv(out / "compare.csv", std::ios::binary | std::ios::trunc);
  std::ofstream lng(out / "compare_long.csv",
                    std::ios::binary | std::ios::trunc);
  csv << compare_header << '\n';
  lng << compare_long_header << '\n';
  for (std::size_t s = 0; s < solvers.size(); ++s) {
    const std::string name = to_string(solvers[s]);
    SolverSpec spec = cfg.solver;
    spec.kind = solvers[s];
    const auto &ms = cr.metrics[s];
    const long diverged = std::count_if(
        ms.begin(), ms.end(), [](const RunMetrics &m) { return m.diverged; });
    auto opt = [](const std::optional<Scalar> &v) {
      return v ? *v : std::numeric_limits<Scalar>::quiet_NaN();
    };
    csv << name << ',' << ms.size() << ',' << diverged;
    for (Scalar v :
         {mean_metric(ms, [](const RunMetrics &m) { return m.final_objective; }),
          mean_metric(ms, [](const RunMetrics &m) { return Scalar(m.iterations); }),
          mean_metric(ms, [](const RunMetrics &m) { return Scalar(m.grad_f_evals); }),
          mean_metric(ms, [](const RunMetrics &m) { return m.wall_clock_seconds; }),
          mean_metric(ms, [](const RunMetrics &m) { return m.stat_res; }),
          mean_metric(ms, [](const RunMetrics &m) { return m.dual_res; }),
          mean_metric(ms, [](const RunMetrics &m) { return m.primal_res; }),
          mean_metric(ms, [&](const RunMetrics &m) { return opt(m.sparsity); }),
          mean_metric(ms, [&](const RunMetrics &m) {
            return opt(m.subspace_alignment);
          })}) {
      csv << ',' << format_double(v);
    }
    csv << '\n';
    for (std::size_t i = 0; i < repeats; ++i) {
      const RunOutput &run = cr.runs[s][i];
      for (const IterateRecord &r : run.result.trace) {
        lng << name << ',' << i << ',' << r.k << ','
            << grad_evals_at(spec, r.k) << ','
            << format_double(r.elapsed_seconds) << ','
            << format_double(r.objective) << '\n';
      }
      persist_run(out / name / run_label(i), run, out / "instance");
    }
  }
  std::ofstream js(out / "compare.json", std::ios::binary | std::ios::trunc);
  js << cr.summary.dump(2) << '\n';
  if (!csv || !lng || !js) {
    throw FormatError("cannot write comparison outputs in " + out.string());
  }
  return cr;
}

/// Aligned plain-text table of per-solver means.
inline std::string compare_table(const CompareResult &cr) {
  std::string s;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-8s %22s %10s %12s %12s %12s\n", "solver",
                "objective", "iters", "grad_evals", "cpu_s", "max_kkt");
  s += buf;
  for (std::size_t i = 0; i < cr.solvers.size(); ++i) {
    const auto &ms = cr.metrics[i];
    std::snprintf(
        buf, sizeof buf, "%-8s %22.15g %10.1f %12.1f %12.4g %12.4g\n",
        to_string(cr.solvers[i]).c_str(),
        mean_metric(ms, [](const RunMetrics &m) { return m.final_objective; }),
        mean_metric(ms, [](const RunMetrics &m) { return Scalar(m.iterations); }),
        mean_metric(ms, [](const RunMetrics &m) { return Scalar(m.grad_f_evals); }),
        mean_metric(ms, [](const RunMetrics &m) { return m.wall_clock_seconds; }),
        mean_metric(ms, [](const RunMetrics &m) {
          return std::max({m.stat_res, m.dual_res, m.primal_res});
        }));
    s += buf;
  }
  return s;
}

} // namespace manadmm::harness
