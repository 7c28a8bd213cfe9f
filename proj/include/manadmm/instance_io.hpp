#pragma once

// On-disk format for problem instances and iterates:
//   <dir>/instance.json   metadata (family, generation parameters, blobs)
//   <dir>/<blob>.f64      raw little-endian IEEE-754 doubles, column-major
//
// Requires nlohmann/json.

#include <manadmm/problems.hpp>

#include <nlohmann/json.hpp>

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>

namespace manadmm {

class FormatError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

/// Writes `m` as raw little-endian doubles in column-major order.
inline void write_blob(const fs::path &path, const Matrix &m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw FormatError("cannot open " + path.string() + " for writing");
  }
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(m.data()[i]);
    if constexpr (std::endian::native == std::endian::big) {
      bits = __builtin_bswap64(bits);
    }
    char buf[8];
    std::memcpy(buf, &bits, 8);
    out.write(buf, 8);
  }
  if (!out) {
    throw FormatError("write failed for " + path.string());
  }
}

inline Matrix read_blob(const fs::path &path, Eigen::Index rows,
                        Eigen::Index cols) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw FormatError("cannot open " + path.string());
  }
  const auto expected = static_cast<std::uintmax_t>(rows * cols) * 8u;
  std::error_code ec;
  const auto actual = fs::file_size(path, ec);
  if (ec || actual != expected) {
    throw FormatError(path.string() + ": expected " + std::to_string(expected) +
                      " bytes for a " + std::to_string(rows) + "x" +
                      std::to_string(cols) + " matrix");
  }
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    char buf[8];
    in.read(buf, 8);
    std::uint64_t bits;
    std::memcpy(&bits, buf, 8);
    if constexpr (std::endian::native == std::endian::big) {
      bits = __builtin_bswap64(bits);
    }
    m.data()[i] = std::bit_cast<double>(bits);
  }
  return m;
}

inline ordered_json blob_entry(const std::string &file, const Matrix &m) {
  return ordered_json{{"file", file},
                      {"rows", m.rows()},
                      {"cols", m.cols()},
                      {"dtype", "f64le"},
                      {"order", "column-major"}};
}

inline Matrix read_blob_entry(const fs::path &dir, const ordered_json &entry) {
  try {
    return read_blob(dir / entry.at("file").get<std::string>(),
                     entry.at("rows").get<Eigen::Index>(),
                     entry.at("cols").get<Eigen::Index>());
  } catch (const nlohmann::json::exception &e) {
    throw FormatError(std::string("malformed blob entry: ") + e.what());
  }
}

inline std::string to_string(SpcaScaling s) {
  return s == SpcaScaling::None ? "none" : "unit_rows";
}

inline SpcaScaling parse_scaling(const std::string &s) {
  if (s == "none") {
    return SpcaScaling::None;
  }
  if (s == "unit_rows") {
    return SpcaScaling::UnitRows;
  }
  throw ParameterError("unknown spca scaling '" + s + "'");
}

inline std::string to_string(Retraction r) {
  return r == Retraction::QR ? "qr" : "polar";
}

inline Retraction parse_retraction(const std::string &s) {
  if (s == "qr") {
    return Retraction::QR;
  }
  if (s == "polar") {
    return Retraction::Polar;
  }
  throw ParameterError("unknown retraction '" + s + "'");
}

inline ProblemFamily parse_family(const std::string &s) {
  if (s == "spca") {
    return ProblemFamily::SPCA;
  }
  if (s == "rlc" || s == "classifier") {
    return ProblemFamily::Classifier;
  }
  if (s == "dpcp") {
    return ProblemFamily::DPCP;
  }
  throw ParameterError("unknown problem family '" + s + "'");
}

inline ordered_json params_json(const ProblemInstance &pb) {
  const ProblemParams &q = pb.params;
  ordered_json j;
  switch (pb.family) {
  case ProblemFamily::SPCA:
    j = {{"n", q.n}, {"m", q.m}, {"p", q.p}, {"mu", q.mu},
         {"scaling", to_string(q.scaling)}};
    break;
  case ProblemFamily::Classifier:
    j = {{"m", q.m}, {"N", q.N}, {"sigma2", q.sigma2}, {"mu", q.mu}};
    break;
  case ProblemFamily::DPCP:
    j = {{"n", q.n}, {"p", q.p}, {"p1", q.p1}, {"p2", q.p2},
         {"normalize_columns", q.normalize_columns}};
    break;
  case ProblemFamily::Custom:
    break;
  }
  j["seed"] = q.seed;
  j["retraction"] = to_string(q.retraction);
  return j;
}

/// Serializes an instance built by one of the family builders.
inline void write_instance(const fs::path &dir, const ProblemInstance &pb) {
  if (pb.family == ProblemFamily::Custom) {
    throw FormatError("custom problem instances cannot be serialized");
  }
  fs::create_directories(dir);
  ordered_json manifest;
  manifest["format"] = "manadmm-instance";
  manifest["version"] = 1;
  manifest["family"] = to_string(pb.family);
  manifest["name"] = pb.name;
  manifest["params"] = params_json(pb);
  ordered_json blobs = ordered_json::object();
  for (const auto &[key, mat] : pb.data) {
    const std::string file = key + ".f64";
    write_blob(dir / file, *mat);
    blobs[key] = blob_entry(file, *mat);
  }
  if (pb.ground_truth) {
    write_blob(dir / "ground_truth.f64", *pb.ground_truth);
    blobs["ground_truth"] = blob_entry("ground_truth.f64", *pb.ground_truth);
  }
  manifest["blobs"] = blobs;
  std::ofstream out(dir / "instance.json", std::ios::trunc);
  out << manifest.dump(2) << '\n';
  if (!out) {
    throw FormatError("cannot write " + (dir / "instance.json").string());
  }
}

inline ordered_json read_json_file(const fs::path &path) {
  std::ifstream in(path);
  if (!in) {
    throw FormatError("cannot open " + path.string());
  }
  try {
    return ordered_json::parse(in);
  } catch (const nlohmann::json::exception &e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

inline ProblemInstance read_instance(const fs::path &dir) {
  const ordered_json manifest = read_json_file(dir / "instance.json");
  try {
    if (manifest.at("format") != "manadmm-instance" ||
        manifest.at("version") != 1) {
      throw FormatError(dir.string() + ": not a version-1 instance");
    }
    const ProblemFamily family =
        parse_family(manifest.at("family").get<std::string>());
    const ordered_json &q = manifest.at("params");
    const ordered_json &blobs = manifest.at("blobs");
    const Retraction retraction =
        parse_retraction(q.at("retraction").get<std::string>());
    std::optional<Matrix> truth;
    if (blobs.contains("ground_truth")) {
      truth = read_blob_entry(dir, blobs.at("ground_truth"));
    }
    ProblemInstance pb = [&]() {
      switch (family) {
      case ProblemFamily::SPCA: {
        ProblemInstance out = spca_from_data(
            read_blob_entry(dir, blobs.at("A")), q.at("p").get<Eigen::Index>(),
            q.at("mu").get<Scalar>(), retraction);
        out.params.scaling = parse_scaling(q.at("scaling").get<std::string>());
        return out;
      }
      case ProblemFamily::Classifier: {
        ProblemInstance out = classifier_from_data(
            read_blob_entry(dir, blobs.at("features")),
            read_blob_entry(dir, blobs.at("labels")), q.at("mu").get<Scalar>());
        out.params.sigma2 = q.at("sigma2").get<Scalar>();
        return out;
      }
      case ProblemFamily::DPCP:
      case ProblemFamily::Custom:
        break;
      }
      ProblemInstance out = dpcp_from_data(read_blob_entry(dir, blobs.at("Y")),
                                           q.at("p").get<Eigen::Index>(),
                                           retraction);
      out.params.p1 = q.at("p1").get<Eigen::Index>();
      out.params.p2 = q.at("p2").get<Eigen::Index>();
      out.params.normalize_columns = q.at("normalize_columns").get<bool>();
      return out;
    }();
    pb.params.seed = q.at("seed").get<Seed>();
    pb.ground_truth = std::move(truth);
    return pb;
  } catch (const nlohmann::json::exception &e) {
    throw FormatError(dir.string() + "/instance.json: " + e.what());
  } catch (const std::invalid_argument &e) {
    throw FormatError(dir.string() + "/instance.json: " + e.what());
  }
}

} // namespace manadmm
