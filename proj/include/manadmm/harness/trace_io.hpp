#pragma once

// Trace CSV and iterate state files.

#include <manadmm/instance_io.hpp>
#include <manadmm/solver/trace.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace manadmm::harness {

inline constexpr const char *trace_header =
    "k,objective,stat_res,dual_res,primal_res,lambda_norm,rho,gamma,tau,"
    "elapsed_seconds";

/// Formats a double with 17 significant digits.
inline std::string format_double(Scalar v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string trace_row(const IterateRecord &r) {
  std::string s = std::to_string(r.k);
  for (Scalar v : {r.objective, r.stat_res, r.dual_res, r.primal_res,
                   r.lambda_norm, r.rho, r.gamma, r.tau, r.elapsed_seconds}) {
    s += ',';
    s += format_double(v);
  }
  return s;
}

inline void write_trace_csv(const fs::path &path,
                            const std::vector<IterateRecord> &trace) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw FormatError("cannot open " + path.string() + " for writing");
  }
  out << trace_header << '\n';
  for (const IterateRecord &r : trace) {
    out << trace_row(r) << '\n';
  }
  if (!out) {
    throw FormatError("cannot write " + path.string());
  }
}

/// Parses a trace CSV written by write_trace_csv.
inline std::vector<IterateRecord> read_trace_csv(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw FormatError("cannot open " + path.string());
  }
  std::string line;
  if (!std::getline(in, line) || line != trace_header) {
    throw FormatError(path.string() + ": unexpected trace header");
  }
  std::vector<IterateRecord> rows;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      cells.push_back(cell);
    }
    if (cells.size() != 10) {
      throw FormatError(path.string() + ": malformed trace row");
    }
    IterateRecord r;
    try {
      r.k = std::stol(cells[0]);
      Scalar *dst[] = {&r.objective, &r.stat_res, &r.dual_res,
                       &r.primal_res, &r.lambda_norm, &r.rho,
                       &r.gamma, &r.tau, &r.elapsed_seconds};
      for (int i = 0; i < 9; ++i) {
        *dst[i] = std::stod(cells[i + 1]);
      }
    } catch (const std::exception &) {
      throw FormatError(path.string() + ": malformed trace row");
    }
    rows.push_back(r);
  }
  return rows;
}

/// Iterate (x, y, lambda) together with the multiplier lambda-bar used for
/// the reported residuals.
struct IterateState {
  long k = 0;
  std::string solver;
  Matrix x;
  Matrix y;
  Matrix lambda;
  Matrix bar_lambda;
};

/// Writes `<dir>/<stem>.json` plus blobs `<stem>_{x,y,lambda,bar_lambda}.f64`.
/// `instance` is stored relative to `dir`.
inline void write_state(const fs::path &dir, const std::string &stem,
                        const IterateState &s, const fs::path &instance) {
  fs::create_directories(dir);
  ordered_json j;
  j["format"] = "manadmm-state";
  j["version"] = 1;
  j["solver"] = s.solver;
  j["k"] = s.k;
  j["instance"] = fs::relative(instance, dir).generic_string();
  ordered_json blobs = ordered_json::object();
  const std::pair<const char *, const Matrix *> parts[] = {
      {"x", &s.x}, {"y", &s.y}, {"lambda", &s.lambda},
      {"bar_lambda", &s.bar_lambda}};
  for (const auto &[key, mat] : parts) {
    const std::string file = stem + "_" + key + ".f64";
    write_blob(dir / file, *mat);
    blobs[key] = blob_entry(file, *mat);
  }
  j["blobs"] = blobs;
  std::ofstream out(dir / (stem + ".json"), std::ios::trunc);
  out << j.dump(2) << '\n';
  if (!out) {
    throw FormatError("cannot write " + (dir / (stem + ".json")).string());
  }
}

struct LoadedState {
  IterateState state;
  fs::path instance_dir;
};

inline LoadedState read_state(const fs::path &path) {
  const ordered_json j = read_json_file(path);
  const fs::path dir = path.parent_path();
  try {
    if (j.at("format") != "manadmm-state" || j.at("version") != 1) {
      throw FormatError(path.string() + ": not a version-1 state file");
    }
    LoadedState out;
    out.state.k = j.at("k").get<long>();
    out.state.solver = j.at("solver").get<std::string>();
    const ordered_json &b = j.at("blobs");
    out.state.x = read_blob_entry(dir, b.at("x"));
    out.state.y = read_blob_entry(dir, b.at("y"));
    out.state.lambda = read_blob_entry(dir, b.at("lambda"));
    out.state.bar_lambda = read_blob_entry(dir, b.at("bar_lambda"));
    out.instance_dir = dir / j.at("instance").get<std::string>();
    return out;
  } catch (const nlohmann::json::exception &e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

} // namespace manadmm::harness
