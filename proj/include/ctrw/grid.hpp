#pragma once

// Values on a tensor (t, y) grid, stored t-major, plus CSV / sidecar I/O.
// Numbers are written with %.17g so a write/read cycle is lossless and two
// identical runs produce identical bytes.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ctrw/error.hpp"

namespace ctrw {

/// Treatment of the space window edges by nonlocal operators. Outside the
/// time range the value is zero in every case.
enum class SpaceRule { constant, linear };

inline const char* to_string(SpaceRule rule) { return rule == SpaceRule::constant ? "constant" : "linear"; }

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct GridFunction {
  std::vector<double> t_nodes;
  std::vector<double> y_nodes;
  std::vector<double> values;
  SpaceRule space_rule = SpaceRule::constant;
  std::map<std::string, std::string> metadata;

  GridFunction() = default;
  GridFunction(std::vector<double> t, std::vector<double> y, SpaceRule rule = SpaceRule::constant)
      : t_nodes(std::move(t)), y_nodes(std::move(y)), values(t_nodes.size() * y_nodes.size(), 0.0),
        space_rule(rule) {}

  std::size_t nt() const noexcept { return t_nodes.size(); }
  std::size_t ny() const noexcept { return y_nodes.size(); }
  double& at(std::size_t i, std::size_t j) { return values[i * y_nodes.size() + j]; }
  double at(std::size_t i, std::size_t j) const { return values[i * y_nodes.size() + j]; }
  const double* slice(std::size_t i) const { return values.data() + i * y_nodes.size(); }
  double* slice(std::size_t i) { return values.data() + i * y_nodes.size(); }

  void validate() const {
    auto increasing = [](const std::vector<double>& v, const char* name) {
      if (v.empty()) throw ConfigError(std::string(name) + " nodes must be non-empty");
      for (std::size_t i = 1; i < v.size(); ++i) {
        if (!(v[i] > v[i - 1])) throw ConfigError(std::string(name) + " nodes must be strictly increasing");
      }
    };
    increasing(t_nodes, "time");
    increasing(y_nodes, "space");
    if (values.size() != t_nodes.size() * y_nodes.size()) throw ConfigError("grid value count mismatch");
    for (double v : values) {
      if (!std::isfinite(v)) throw ResolutionError("grid holds a non-finite value");
    }
  }

  /// Uniform spacing of y_nodes, or 0 when the spacing is not uniform.
  double y_step() const {
    if (y_nodes.size() < 2) return 0.0;
    const double h = (y_nodes.back() - y_nodes.front()) / static_cast<double>(y_nodes.size() - 1);
    for (std::size_t j = 1; j < y_nodes.size(); ++j) {
      if (std::abs(y_nodes[j] - y_nodes[j - 1] - h) > 1e-9 * h) return 0.0;
    }
    return h;
  }
};

inline std::vector<double> uniform_nodes(double lo, double hi, std::size_t count) {
  if (count < 2 || !(hi > lo)) throw ConfigError("uniform grid needs count >= 2 and hi > lo");
  std::vector<double> v(count);
  for (std::size_t i = 0; i < count; ++i) {
    v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  }
  v.back() = hi;
  return v;
}

/// t_j = T (j/N)^q rounded to multiples of `snap` (0 disables), duplicates removed.
inline std::vector<double> graded_nodes(double horizon, std::size_t intervals, double grading, double snap) {
  if (intervals < 1 || !(horizon > 0.0) || !(grading >= 1.0)) {
    throw ConfigError("graded grid needs intervals >= 1, horizon > 0, grading >= 1");
  }
  std::vector<double> v;
  v.reserve(intervals + 1);
  for (std::size_t j = 0; j <= intervals; ++j) {
    double t = horizon * std::pow(static_cast<double>(j) / static_cast<double>(intervals), grading);
    if (snap > 0.0) t = std::round(t / snap) * snap;
    if (j == intervals) t = horizon;
    if (v.empty() || t > v.back() + 1e-12) v.push_back(t);
  }
  return v;
}

/// FNV-1a 64-bit digest, used as a content checksum in sidecars.
inline std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << content;
  out.flush();
  if (!out) throw IoError("write failed for " + path);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path + " for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// key = value lines in key order, closed by the checksum of `payload`.
inline std::string sidecar_text(const std::map<std::string, std::string>& meta, const std::string& payload) {
  std::string out;
  for (const auto& [k, v] : meta) out += k + " = " + v + "\n";
  out += "checksum_fnv1a64 = " + hex64(fnv1a64(payload)) + "\n";
  return out;
}

inline std::map<std::string, std::string> parse_sidecar(const std::string& text) {
  std::map<std::string, std::string> meta;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) continue;
    meta[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return meta;
}

inline std::string grid_csv(const GridFunction& g) {
  std::string out = "t,y,value\n";
  for (std::size_t i = 0; i < g.nt(); ++i) {
    for (std::size_t j = 0; j < g.ny(); ++j) {
      out += format_number(g.t_nodes[i]);
      out += ',';
      out += format_number(g.y_nodes[j]);
      out += ',';
      out += format_number(g.at(i, j));
      out += '\n';
    }
  }
  return out;
}

/// Writes `path` and `path`.meta.
inline void write_grid(const GridFunction& g, const std::string& path) {
  const std::string csv = grid_csv(g);
  auto meta = g.metadata;
  meta["space_rule"] = to_string(g.space_rule);
  meta["t_count"] = std::to_string(g.nt());
  meta["y_count"] = std::to_string(g.ny());
  write_text_file(path, csv);
  write_text_file(path + ".meta", sidecar_text(meta, csv));
}

inline GridFunction read_grid(const std::string& path) {
  const std::string text = read_text_file(path);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "t,y,value") throw IoError(path + ": missing t,y,value header");
  std::vector<double> ts, ys, vs;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    double t, y, v;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &t, &y, &v) != 3) throw IoError(path + ": malformed row '" + line + "'");
    ts.push_back(t);
    ys.push_back(y);
    vs.push_back(v);
  }
  GridFunction g;
  for (double t : ts) {
    if (g.t_nodes.empty() || t != g.t_nodes.back()) g.t_nodes.push_back(t);
  }
  if (g.t_nodes.empty()) throw IoError(path + ": no data rows");
  const std::size_t ny = vs.size() / g.t_nodes.size();
  if (ny * g.t_nodes.size() != vs.size()) throw IoError(path + ": rows do not form a tensor grid");
  g.y_nodes.assign(ys.begin(), ys.begin() + static_cast<std::ptrdiff_t>(ny));
  g.values = std::move(vs);
  // The sidecar is optional; when present its checksum must match.
  if (std::ifstream(path + ".meta")) {
    g.metadata = parse_sidecar(read_text_file(path + ".meta"));
    const auto sum = g.metadata.find("checksum_fnv1a64");
    if (sum != g.metadata.end() && sum->second != hex64(fnv1a64(text))) {
      throw IoError(path + ": checksum does not match its sidecar");
    }
    if (sum != g.metadata.end()) g.metadata.erase(sum);
    const auto rule = g.metadata.find("space_rule");
    if (rule != g.metadata.end()) {
      g.space_rule = rule->second == "linear" ? SpaceRule::linear : SpaceRule::constant;
      g.metadata.erase(rule);
    }
    g.metadata.erase("t_count");
    g.metadata.erase("y_count");
  }
  return g;
}

}  // namespace ctrw
