#pragma once

// Experiment configuration: built-in defaults, TOML config files and
// validation. Requires toml++.

#include <manadmm/instance_io.hpp>
#include <manadmm/solver/baselines.hpp>
#include <manadmm/solver/schedule.hpp>
#include <manadmm/solver/trace.hpp>

#include <toml.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace manadmm::harness {

class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

struct ProblemSpec {
  ProblemFamily family = ProblemFamily::SPCA;
  long n = 100;
  long m = 100;
  long p = 5;
  long N = 1000;
  long p1 = 100;
  long p2 = 500;
  Scalar mu = 0.01;
  Scalar sigma2 = 1.0;
  Seed data_seed = 1;
  SpcaScaling scaling = SpcaScaling::UnitRows;
  bool normalize_columns = true;
  Retraction retraction = Retraction::QR;
  /// When set, the instance is loaded from this directory instead of
  /// being generated.
  std::string instance_dir;
};

enum class SolverKind { ARADMM, MADMM, RSG };

inline std::string to_string(SolverKind s) {
  switch (s) {
  case SolverKind::MADMM:
    return "madmm";
  case SolverKind::RSG:
    return "rsg";
  case SolverKind::ARADMM:
    break;
  }
  return "aradmm";
}

inline SolverKind parse_solver(const std::string &s) {
  if (s == "aradmm") {
    return SolverKind::ARADMM;
  }
  if (s == "madmm") {
    return SolverKind::MADMM;
  }
  if (s == "rsg") {
    return SolverKind::RSG;
  }
  throw ConfigError("unknown solver '" + s + "' (expected aradmm, madmm, rsg)");
}

inline std::string to_string(SplitInit s) {
  switch (s) {
  case SplitInit::Prox:
    return "prox";
  case SplitInit::Zero:
    return "zero";
  case SplitInit::AX:
    break;
  }
  return "ax";
}

inline SplitInit parse_split(const std::string &s) {
  if (s == "ax") {
    return SplitInit::AX;
  }
  if (s == "prox") {
    return SplitInit::Prox;
  }
  if (s == "zero") {
    return SplitInit::Zero;
  }
  throw ConfigError("unknown y0 policy '" + s + "' (expected ax, prox, zero)");
}

inline std::string to_string(LogBase b) {
  switch (b) {
  case LogBase::Two:
    return "2";
  case LogBase::Ten:
    return "10";
  case LogBase::Natural:
    break;
  }
  return "e";
}

inline LogBase parse_log_base(const std::string &s) {
  if (s == "e" || s == "natural") {
    return LogBase::Natural;
  }
  if (s == "2") {
    return LogBase::Two;
  }
  if (s == "10") {
    return LogBase::Ten;
  }
  throw ConfigError("unknown log base '" + s + "' (expected e, 2, 10)");
}

struct SolverSpec {
  SolverKind kind = SolverKind::ARADMM;
  ScheduleConfig schedule; ///< defaults: gamma0 = c_gamma = 50, rho0 = 5, c_rho = 1, c_tau = 0.2
  MadmmConfig madmm;
  RsgConfig rsg;
  SplitInit split = SplitInit::AX;
};

struct OutputSpec {
  std::string dir = "out";
  int repeats = 1;
  bool sequential = false;
  /// Write elapsed_seconds as 0 so trace files are byte-reproducible.
  bool no_wallclock = false;
};

struct RunConfig {
  ProblemSpec problem;
  SolverSpec solver;
  StopRule stop;
  Seed init_seed = 1;
  OutputSpec output;

  void validate() const {
    const ProblemSpec &q = problem;
    if (q.instance_dir.empty()) {
      switch (q.family) {
      case ProblemFamily::SPCA:
        if (q.n < 1 || q.m < 1 || q.p < 1 || q.p >= std::min(q.n, q.m)) {
          throw ConfigError("spca requires 1 <= p < min(m, n)");
        }
        if (!(q.mu >= 0)) {
          throw ConfigError("spca requires mu >= 0");
        }
        break;
      case ProblemFamily::Classifier:
        if (q.m < 1 || q.N < 1) {
          throw ConfigError("rlc requires m >= 1 and N >= 1");
        }
        if (!(q.mu >= 0) || !(q.sigma2 >= 0)) {
          throw ConfigError("rlc requires mu >= 0 and sigma2 >= 0");
        }
        break;
      case ProblemFamily::DPCP:
        if (q.p < 1 || q.p >= q.n || q.p1 < 1 || q.p2 < 0) {
          throw ConfigError("dpcp requires 1 <= p < n, p1 >= 1, p2 >= 0");
        }
        break;
      case ProblemFamily::Custom:
        throw ConfigError("custom problems cannot be configured");
      }
    }
    try {
      ScheduleConfig s = solver.schedule;
      s.r0 = 0;
      s.validate();
      solver.madmm.validate();
      solver.rsg.validate();
      stop.validate();
    } catch (const std::invalid_argument &e) {
      throw ConfigError(e.what());
    }
    if (output.repeats < 1) {
      throw ConfigError("repeats must be >= 1");
    }
  }
};

namespace detail {

template <typename T>
void read_value(const toml::table &tbl, const char *key, T &dst,
                const std::string &section) {
  const toml::node *node = tbl.get(key);
  if (!node) {
    return;
  }
  if constexpr (std::is_same_v<T, bool>) {
    if (auto v = node->value<bool>()) {
      dst = *v;
      return;
    }
  } else if constexpr (std::is_integral_v<T>) {
    if (auto v = node->value<std::int64_t>()) {
      dst = static_cast<T>(*v);
      return;
    }
  } else if constexpr (std::is_floating_point_v<T>) {
    if (auto v = node->value<double>()) {
      dst = *v;
      return;
    }
  } else {
    if (auto v = node->value<std::string>()) {
      dst = *v;
      return;
    }
  }
  throw ConfigError("[" + section + "] " + key + " has the wrong type");
}

inline const toml::table *section(const toml::table &root, const char *name) {
  const toml::node *n = root.get(name);
  if (!n) {
    return nullptr;
  }
  if (!n->is_table()) {
    throw ConfigError(std::string("[") + name + "] must be a table");
  }
  return n->as_table();
}

} // namespace detail

/// Overlays values from a TOML file with sections [problem], [solver],
/// [stop] and [output] onto `cfg`. Unknown keys are rejected.
inline void apply_toml(RunConfig &cfg, const toml::table &root) {
  static const std::map<std::string, std::vector<std::string>> known = {
      {"problem",
       {"family", "n", "m", "p", "N", "p1", "p2", "mu", "sigma2", "seed",
        "scaling", "normalize_columns", "retraction", "instance"}},
      {"solver",
       {"name", "gamma0", "rho0", "c_rho", "c_gamma", "c_tau", "log_base",
        "y0", "rho", "eta", "inner_iters", "rsg_eta"}},
      {"stop", {"max_iters", "obj_change_tol", "kkt_tol", "max_grad_evals"}},
      {"output", {"dir", "repeats", "sequential", "init_seed", "no_wallclock"}},
  };
  for (const auto &[key, node] : root) {
    const std::string k(key.str());
    auto it = known.find(k);
    if (it == known.end()) {
      throw ConfigError("unknown config section [" + k + "]");
    }
    if (!node.is_table()) {
      throw ConfigError("[" + k + "] must be a table");
    }
    for (const auto &[sub, _] : *node.as_table()) {
      const std::string s(sub.str());
      if (std::find(it->second.begin(), it->second.end(), s) ==
          it->second.end()) {
        throw ConfigError("unknown key '" + s + "' in [" + k + "]");
      }
    }
  }

  using detail::read_value;
  if (const toml::table *t = detail::section(root, "problem")) {
    ProblemSpec &q = cfg.problem;
    std::string family = to_string(q.family);
    std::string scaling = to_string(q.scaling);
    std::string retraction = to_string(q.retraction);
    read_value(*t, "family", family, "problem");
    read_value(*t, "n", q.n, "problem");
    read_value(*t, "m", q.m, "problem");
    read_value(*t, "p", q.p, "problem");
    read_value(*t, "N", q.N, "problem");
    read_value(*t, "p1", q.p1, "problem");
    read_value(*t, "p2", q.p2, "problem");
    read_value(*t, "mu", q.mu, "problem");
    read_value(*t, "sigma2", q.sigma2, "problem");
    read_value(*t, "seed", q.data_seed, "problem");
    read_value(*t, "scaling", scaling, "problem");
    read_value(*t, "normalize_columns", q.normalize_columns, "problem");
    read_value(*t, "retraction", retraction, "problem");
    read_value(*t, "instance", q.instance_dir, "problem");
    try {
      q.family = parse_family(family);
      q.scaling = parse_scaling(scaling);
      q.retraction = parse_retraction(retraction);
    } catch (const ParameterError &e) {
      throw ConfigError(e.what());
    }
  }
  if (const toml::table *t = detail::section(root, "solver")) {
    SolverSpec &s = cfg.solver;
    std::string name = to_string(s.kind);
    std::string log_base = to_string(s.schedule.log_base);
    std::string y0 = to_string(s.split);
    read_value(*t, "name", name, "solver");
    read_value(*t, "gamma0", s.schedule.gamma0, "solver");
    read_value(*t, "rho0", s.schedule.rho0, "solver");
    read_value(*t, "c_rho", s.schedule.c_rho, "solver");
    read_value(*t, "c_gamma", s.schedule.c_gamma, "solver");
    read_value(*t, "c_tau", s.schedule.c_tau, "solver");
    read_value(*t, "log_base", log_base, "solver");
    read_value(*t, "y0", y0, "solver");
    read_value(*t, "rho", s.madmm.rho, "solver");
    read_value(*t, "eta", s.madmm.eta, "solver");
    read_value(*t, "inner_iters", s.madmm.inner_iters, "solver");
    read_value(*t, "rsg_eta", s.rsg.eta, "solver");
    s.kind = parse_solver(name);
    s.schedule.log_base = parse_log_base(log_base);
    s.split = parse_split(y0);
  }
  if (const toml::table *t = detail::section(root, "stop")) {
    read_value(*t, "max_iters", cfg.stop.max_iters, "stop");
    read_value(*t, "obj_change_tol", cfg.stop.obj_change_tol, "stop");
    read_value(*t, "kkt_tol", cfg.stop.kkt_tol, "stop");
    read_value(*t, "max_grad_evals", cfg.stop.max_grad_evals, "stop");
  }
  if (const toml::table *t = detail::section(root, "output")) {
    read_value(*t, "dir", cfg.output.dir, "output");
    read_value(*t, "repeats", cfg.output.repeats, "output");
    read_value(*t, "sequential", cfg.output.sequential, "output");
    read_value(*t, "init_seed", cfg.init_seed, "output");
    read_value(*t, "no_wallclock", cfg.output.no_wallclock, "output");
  }
}

inline void load_toml_file(RunConfig &cfg, const std::filesystem::path &path) {
  try {
    const toml::table root = toml::parse_file(path.string());
    apply_toml(cfg, root);
  } catch (const toml::parse_error &e) {
    throw ConfigError(path.string() + ": " + std::string(e.description()));
  }
}

inline ordered_json to_json(const RunConfig &cfg) {
  const ProblemSpec &q = cfg.problem;
  ordered_json problem = {{"family", to_string(q.family)},
                          {"n", q.n},
                          {"m", q.m},
                          {"p", q.p},
                          {"N", q.N},
                          {"p1", q.p1},
                          {"p2", q.p2},
                          {"mu", q.mu},
                          {"sigma2", q.sigma2},
                          {"seed", q.data_seed},
                          {"scaling", to_string(q.scaling)},
                          {"normalize_columns", q.normalize_columns},
                          {"retraction", to_string(q.retraction)},
                          {"instance", q.instance_dir}};
  const SolverSpec &s = cfg.solver;
  ordered_json solver = {{"name", to_string(s.kind)},
                         {"gamma0", s.schedule.gamma0},
                         {"rho0", s.schedule.rho0},
                         {"c_rho", s.schedule.c_rho},
                         {"c_gamma", s.schedule.c_gamma},
                         {"c_tau", s.schedule.c_tau},
                         {"log_base", to_string(s.schedule.log_base)},
                         {"y0", to_string(s.split)},
                         {"rho", s.madmm.rho},
                         {"eta", s.madmm.eta},
                         {"inner_iters", s.madmm.inner_iters},
                         {"rsg_eta", s.rsg.eta}};
  ordered_json stop = {{"max_iters", cfg.stop.max_iters},
                       {"obj_change_tol", cfg.stop.obj_change_tol},
                       {"kkt_tol", cfg.stop.kkt_tol},
                       {"max_grad_evals", cfg.stop.max_grad_evals}};
  ordered_json output = {{"dir", cfg.output.dir},
                         {"repeats", cfg.output.repeats},
                         {"sequential", cfg.output.sequential},
                         {"init_seed", cfg.init_seed},
                         {"no_wallclock", cfg.output.no_wallclock}};
  return ordered_json{{"problem", problem},
                      {"solver", solver},
                      {"stop", stop},
                      {"output", output}};
}

} // namespace manadmm::harness
