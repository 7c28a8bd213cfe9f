// manadmm: instance generation, experiment runs, solver comparisons and KKT
// reports.
//
//   manadmm gen spca --n 400 --m 400 --p 50 --mu 0.01 --seed 7 --out inst
//   manadmm run --config exp.toml --repeats 10 --out results
//   manadmm compare --solvers aradmm,madmm,rsg --out cmp
//   manadmm kkt results/run_000/final.json
//
// Exit codes: 0 success, 1 usage or configuration error, 2 solver
// divergence or malformed kkt input.

#include <manadmm/harness/runner.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace manadmm;
using namespace manadmm::harness;

struct Overrides {
  std::optional<std::string> out;
  std::optional<Seed> seed_data;
  std::optional<Seed> seed_init;
  bool sequential = false;
  bool no_wallclock = false;
  std::optional<int> repeats;

  std::optional<std::string> family;
  std::optional<long> n, m, p, N, p1, p2;
  std::optional<double> mu, sigma2;
  std::optional<std::string> scaling, retraction, instance;
  bool no_normalize = false;

  std::optional<std::string> solver, log_base, y0;
  std::optional<double> gamma0, rho0, c_rho, c_gamma, c_tau, rho, eta, rsg_eta;
  std::optional<int> inner_iters;

  std::optional<long> max_iters, max_grad_evals;
  std::optional<double> obj_tol, kkt_tol;
};

template <typename T> void set_if(const std::optional<T> &v, T &dst) {
  if (v) {
    dst = *v;
  }
}

void apply_overrides(const Overrides &o, RunConfig &cfg) {
  set_if(o.out, cfg.output.dir);
  set_if(o.seed_data, cfg.problem.data_seed);
  set_if(o.seed_init, cfg.init_seed);
  set_if(o.repeats, cfg.output.repeats);
  if (o.sequential) {
    cfg.output.sequential = true;
  }
  if (o.no_wallclock) {
    cfg.output.no_wallclock = true;
  }

  ProblemSpec &q = cfg.problem;
  if (o.family) {
    q.family = parse_family(*o.family);
  }
  set_if(o.n, q.n);
  set_if(o.m, q.m);
  set_if(o.p, q.p);
  set_if(o.N, q.N);
  set_if(o.p1, q.p1);
  set_if(o.p2, q.p2);
  set_if(o.mu, q.mu);
  set_if(o.sigma2, q.sigma2);
  if (o.scaling) {
    q.scaling = parse_scaling(*o.scaling);
  }
  if (o.retraction) {
    q.retraction = parse_retraction(*o.retraction);
  }
  set_if(o.instance, q.instance_dir);
  if (o.no_normalize) {
    q.normalize_columns = false;
  }

  SolverSpec &s = cfg.solver;
  if (o.solver) {
    s.kind = parse_solver(*o.solver);
  }
  if (o.log_base) {
    s.schedule.log_base = parse_log_base(*o.log_base);
  }
  if (o.y0) {
    s.split = parse_split(*o.y0);
  }
  set_if(o.gamma0, s.schedule.gamma0);
  set_if(o.rho0, s.schedule.rho0);
  set_if(o.c_rho, s.schedule.c_rho);
  set_if(o.c_gamma, s.schedule.c_gamma);
  set_if(o.c_tau, s.schedule.c_tau);
  set_if(o.rho, s.madmm.rho);
  set_if(o.eta, s.madmm.eta);
  set_if(o.inner_iters, s.madmm.inner_iters);
  set_if(o.rsg_eta, s.rsg.eta);

  set_if(o.max_iters, cfg.stop.max_iters);
  set_if(o.max_grad_evals, cfg.stop.max_grad_evals);
  set_if(o.obj_tol, cfg.stop.obj_change_tol);
  set_if(o.kkt_tol, cfg.stop.kkt_tol);
}

void add_global_options(CLI::App &app, Overrides &o, std::string &config) {
  app.add_option("--config", config, "TOML config file")->check(CLI::ExistingFile);
  app.add_option("--out", o.out, "output directory");
  app.add_option("--seed-data", o.seed_data, "data seed");
  app.add_option("--seed-init", o.seed_init, "initial-point seed of the first run");
  app.add_flag("--sequential", o.sequential, "run repeats one at a time");
  app.add_option("--repeats", o.repeats, "number of runs with consecutive init seeds");
  app.add_flag("--no-wallclock", o.no_wallclock,
               "write elapsed_seconds as 0 for byte-reproducible traces");

  app.add_option("--family", o.family, "spca, rlc or dpcp");
  app.add_option("--n", o.n, "ambient rows (spca, dpcp)");
  app.add_option("--m", o.m, "data rows (spca) or dimension (rlc)");
  app.add_option("--p", o.p, "columns of the Stiefel variable");
  app.add_option("--N", o.N, "samples (rlc)");
  app.add_option("--p1", o.p1, "inliers (dpcp)");
  app.add_option("--p2", o.p2, "outliers (dpcp)");
  app.add_option("--mu", o.mu, "l1 weight");
  app.add_option("--sigma2", o.sigma2, "label noise variance (rlc)");
  app.add_option("--scaling", o.scaling, "spca data scaling: unit_rows or none");
  app.add_option("--retraction", o.retraction, "qr or polar");
  app.add_option("--instance", o.instance, "load a serialized instance directory");
  app.add_flag("--no-normalize", o.no_normalize, "keep dpcp columns unnormalized");

  app.add_option("--solver", o.solver, "aradmm, madmm or rsg");
  app.add_option("--gamma0", o.gamma0, "aradmm dual step scale");
  app.add_option("--rho0", o.rho0, "aradmm penalty floor");
  app.add_option("--c-rho", o.c_rho, "aradmm penalty growth: rho_k = max(rho0, c_rho k^(1/3))");
  app.add_option("--c-gamma", o.c_gamma, "aradmm dual step decay scale");
  app.add_option("--c-tau", o.c_tau, "aradmm primal step: tau_k = c_tau (k+1)^(-1/3)");
  app.add_option("--log-base", o.log_base, "logarithm in the dual step cap: e, 2, 10");
  app.add_option("--y0", o.y0, "initial split variable: ax, prox or zero");
  app.add_option("--rho", o.rho, "madmm penalty");
  app.add_option("--eta", o.eta, "madmm inner step");
  app.add_option("--inner-iters", o.inner_iters, "madmm inner steps");
  app.add_option("--rsg-eta", o.rsg_eta, "rsg step");

  app.add_option("--max-iters", o.max_iters, "iteration cap (0 disables)");
  app.add_option("--max-grad-evals", o.max_grad_evals, "gradient budget (0 disables)");
  app.add_option("--obj-tol", o.obj_tol, "objective-change tolerance (0 disables)");
  app.add_option("--kkt-tol", o.kkt_tol, "max KKT residual tolerance (0 disables)");
}

RunConfig resolve_config(const std::string &config, const Overrides &o) {
  RunConfig cfg;
  if (!config.empty()) {
    load_toml_file(cfg, config);
  }
  apply_overrides(o, cfg);
  cfg.validate();
  return cfg;
}

std::vector<SolverKind> parse_solver_list(const std::vector<std::string> &names) {
  std::vector<SolverKind> out;
  for (const std::string &n : names) {
    out.push_back(parse_solver(n));
  }
  return out;
}

int cmd_gen(RunConfig cfg) {
  const ProblemInstance pb = build_problem(cfg.problem);
  write_instance(cfg.output.dir, pb);
  const Shape s = pb.manifold.shape();
  std::cout << to_string(pb.family) << " instance written to "
            << cfg.output.dir << '\n'
            << "  variable " << s.rows << " x " << s.cols;
  for (const auto &[key, mat] : pb.data) {
    std::cout << ", " << key << " " << mat->rows() << " x " << mat->cols();
  }
  std::cout << "\n  data seed " << cfg.problem.data_seed << '\n';
  return 0;
}

int cmd_run(const RunConfig &cfg) {
  const ExperimentResult ex = run_experiment(cfg);
  for (std::size_t i = 0; i < ex.metrics.size(); ++i) {
    const RunMetrics &m = ex.metrics[i];
    std::printf("%s seed %llu: objective %.10g, iters %ld, max kkt %.3g, %s\n",
                run_label(i).c_str(),
                static_cast<unsigned long long>(ex.runs[i].init_seed),
                m.final_objective, m.iterations,
                std::max({m.stat_res, m.dual_res, m.primal_res}),
                m.stop_reason.c_str());
  }
  std::cout << "summary written to " << cfg.output.dir << "/summary.json\n";
  if (ex.diverged()) {
    std::cerr << "error: solver diverged (non-finite iterate)\n";
    return 2;
  }
  return 0;
}

int cmd_compare(const RunConfig &cfg, const std::vector<std::string> &solvers,
                long budget) {
  const CompareResult cr = compare_experiment(cfg, parse_solver_list(solvers), budget);
  std::cout << compare_table(cr);
  std::cout << "tables written to " << cfg.output.dir << "/compare.csv and "
            << cfg.output.dir << "/compare_long.csv\n";
  return cr.diverged() ? 2 : 0;
}

int cmd_kkt(const std::string &state_path, const std::string &instance_dir,
            double tol) {
  LoadedState ls;
  ProblemInstance pb = [&]() {
    ls = read_state(state_path);
    return read_instance(instance_dir.empty() ? ls.instance_dir
                                              : fs::path(instance_dir));
  }();
  const IterateState &s = ls.state;
  for (const Matrix *m : {&s.y, &s.lambda, &s.bar_lambda}) {
    if (shape_of(*m) != pb.A.output_shape()) {
      throw FormatError(state_path + ": iterate shapes do not match the instance");
    }
  }
  if (shape_of(s.x) != pb.manifold.shape()) {
    throw FormatError(state_path + ": x does not match the instance");
  }
  const KktResiduals run = kkt_residuals(pb, s.x, s.y, s.lambda);
  const KktResiduals bar = kkt_residuals(pb, s.x, s.y, s.bar_lambda);
  std::printf("state %s (solver %s, k = %ld)\n", state_path.c_str(),
              s.solver.c_str(), s.k);
  std::printf("objective %s\n", format_double(objective(pb, s.x)).c_str());
  std::printf("%-10s %24s %24s %24s\n", "multiplier", "stationarity", "dual",
              "primal");
  std::printf("%-10s %24s %24s %24s\n", "lambda",
              format_double(run.stationarity).c_str(),
              format_double(run.dual).c_str(), format_double(run.primal).c_str());
  std::printf("%-10s %24s %24s %24s\n", "lambda_bar",
              format_double(bar.stationarity).c_str(),
              format_double(bar.dual).c_str(), format_double(bar.primal).c_str());
  if (tol > 0) {
    const bool ok = bar.max() <= tol;
    std::printf("max residual (lambda_bar) %s %s tol %s\n",
                format_double(bar.max()).c_str(), ok ? "<=" : ">",
                format_double(tol).c_str());
    return ok ? 0 : 1;
  }
  return 0;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Adaptive Riemannian ADMM experiments"};
  app.require_subcommand(1);
  Overrides o;
  std::string config;
  add_global_options(app, o, config);

  CLI::App *gen = app.add_subcommand("gen", "generate and serialize an instance");
  std::string gen_family;
  std::optional<Seed> gen_seed;
  gen->add_option("family", gen_family, "spca, rlc or dpcp")->required();
  gen->add_option("--seed", gen_seed, "data seed");

  CLI::App *run = app.add_subcommand("run", "run the configured solver");

  CLI::App *compare = app.add_subcommand("compare", "run several solvers on one instance");
  std::vector<std::string> solvers{"aradmm", "madmm", "rsg"};
  long budget = 0;
  compare->add_option("--solvers", solvers, "comma-separated solver list")
      ->delimiter(',');
  compare->add_option("--budget", budget, "shared gradient-evaluation budget");

  CLI::App *kkt = app.add_subcommand("kkt", "report KKT residuals of a saved iterate");
  std::string state_path;
  double kkt_tol = 0;
  kkt->add_option("state", state_path, "state file (initial.json or final.json)")
      ->required();
  kkt->add_option("--tol", kkt_tol, "exit 1 unless the max lambda_bar residual is <= tol");

  for (CLI::App *sub : {gen, run, compare, kkt}) {
    sub->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (kkt->parsed()) {
    try {
      return cmd_kkt(state_path, o.instance.value_or(""), kkt_tol);
    } catch (const std::exception &e) {
      std::cerr << "error: " << e.what() << '\n';
      return 2;
    }
  }

  try {
    if (gen->parsed()) {
      o.family = gen_family;
      if (gen_seed) {
        o.seed_data = gen_seed;
      }
    }
    const RunConfig cfg = resolve_config(config, o);
    if (gen->parsed()) {
      return cmd_gen(cfg);
    }
    if (run->parsed()) {
      return cmd_run(cfg);
    }
    return cmd_compare(cfg, solvers, budget);
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
