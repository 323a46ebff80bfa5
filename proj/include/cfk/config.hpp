#pragma once

// Run configuration: a flat text file of `section.key = value` lines.
//
//   # comment                       blank lines and '#' comments are ignored
//   domain.kind = complex-ellipsoid
//   domain.params = 2               lists are comma separated
//   decay.base_point = 1, 0, 0, 0   a point is re_1, im_1, ..., re_n, im_n
//   levi.points = 1,0,0,0; 0,0,1,0  several points are separated by ';'
//
// Every key has a default; an unknown key, a repeated key or an unparsable
// value is a ConfigError.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "cfk/errors.hpp"
#include "cfk/geometry.hpp"
#include "cfk/support.hpp"
#include "json.hpp"

namespace cfk {

struct EstimatesBlock {
  long samples = 10000;
  bool calibrate = true;
  std::vector<std::string> checks{"theorem3", "remark", "prop4", "lemma8", "prop2", "symmetry", "corollary6"};
  int probeCount = 8;
  std::vector<ComplexPoint> points;  // extra base points for prop2 / prop4 / corollary6
};

struct ReproduceBlock {
  int maxDegree = 3;
  int levels = 2;
  std::vector<ComplexPoint> points;  // empty: domain defaults
};

struct DecayBlock {
  double delta = 0.5;
  std::vector<double> distances{0.1, 0.05, 0.025, 0.0125};
  int maxRefinements = 2;
  int panelNodes = 24;
  std::string function = "re_z1";
  std::vector<ComplexPoint> basePoint;  // empty: boundary point on the zeta_1 axis
  bool bmControl = true;
};

struct AlphaBlock {
  std::vector<double> alphas{0.5};
  int levels = 4;
  int baseResolution = 12;
  std::vector<ComplexPoint> basePoint;
  bool bmControl = true;
};

struct LeviBlock {
  std::vector<ComplexPoint> points;
};

struct RunConfig {
  DomainSpec domain = DomainSpec::ball();
  KernelConfig kernel;
  std::uint64_t seed = 1;
  int threads = 0;
  std::string out = "out";
  EstimatesBlock estimates;
  ReproduceBlock reproduce;
  DecayBlock decay;
  AlphaBlock alpha;
  LeviBlock levi;
  /// Point lists as written, parsed by finalize() once domain.dim is known.
  std::map<std::string, std::string> pointText;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.push_back("");
  return out;
}

inline double parseDouble(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  double x = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), x);
  if (t.empty() || res.ec != std::errc{} || res.ptr != t.data() + t.size())
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  return x;
}

inline long parseLong(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  long x = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), x);
  if (t.empty() || res.ec != std::errc{} || res.ptr != t.data() + t.size())
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return x;
}

inline bool parseBool(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

inline std::vector<double> parseList(const std::string& key, const std::string& v) {
  std::vector<double> out;
  if (trim(v).empty()) return out;
  for (const auto& part : split(v, ',')) out.push_back(parseDouble(key, part));
  return out;
}

inline std::vector<std::string> parseWords(const std::string& v) {
  std::vector<std::string> out;
  if (trim(v).empty()) return out;
  for (const auto& part : split(v, ',')) out.push_back(part);
  return out;
}

/// Points are parsed lazily against the domain dimension, so keep raw text.
inline std::vector<ComplexPoint> parsePoints(const std::string& key, const std::string& v, int n) {
  std::vector<ComplexPoint> out;
  if (trim(v).empty()) return out;
  for (const auto& chunk : split(v, ';')) {
    const auto xs = parseList(key, chunk);
    if (xs.size() != static_cast<size_t>(2 * n))
      throw ConfigError(key + ": a point needs " + std::to_string(2 * n) + " reals");
    ComplexPoint p(n);
    for (int j = 0; j < n; ++j) p[j] = cplx(xs[2 * j], xs[2 * j + 1]);
    out.push_back(p);
  }
  return out;
}

/// Shortest decimal that reads back to the same double.
inline std::string fmt(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline std::string fmtList(const std::vector<double>& xs) {
  std::string s;
  for (size_t i = 0; i < xs.size(); ++i) s += (i ? ", " : "") + fmt(xs[i]);
  return s;
}

inline std::string fmtWords(const std::vector<std::string>& xs) {
  std::string s;
  for (size_t i = 0; i < xs.size(); ++i) s += (i ? ", " : "") + xs[i];
  return s;
}

inline std::string fmtPoints(const std::vector<ComplexPoint>& ps) {
  std::string s;
  for (size_t i = 0; i < ps.size(); ++i) {
    if (i) s += "; ";
    for (Eigen::Index j = 0; j < ps[i].size(); ++j)
      s += (j ? ", " : "") + fmt(ps[i][j].real()) + ", " + fmt(ps[i][j].imag());
  }
  return s;
}

}  // namespace detail

/// Key table binding each configuration key to its field.
class ConfigSchema {
 public:
  struct Entry {
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
  };

  static const ConfigSchema& instance() {
    static const ConfigSchema s;
    return s;
  }

  const std::map<std::string, Entry>& entries() const { return entries_; }

  void set(RunConfig& c, const std::string& key, const std::string& value) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError("unknown key '" + key + "'");
    it->second.set(c, value);
  }

 private:
  ConfigSchema() {
    using namespace detail;
    auto num = [this](const std::string& k, auto field) {
      entries_[k] = {[k, field](RunConfig& c, const std::string& v) { field(c) = parseDouble(k, v); },
                     [field](const RunConfig& c) { return fmt(field(const_cast<RunConfig&>(c))); }};
    };
    auto integer = [this](const std::string& k, auto field) {
      entries_[k] = {[k, field](RunConfig& c, const std::string& v) {
                       field(c) = static_cast<std::remove_reference_t<decltype(field(c))>>(parseLong(k, v));
                     },
                     [field](const RunConfig& c) { return std::to_string(field(const_cast<RunConfig&>(c))); }};
    };
    auto boolean = [this](const std::string& k, auto field) {
      entries_[k] = {[k, field](RunConfig& c, const std::string& v) { field(c) = parseBool(k, v); },
                     [field](const RunConfig& c) {
                       return std::string(field(const_cast<RunConfig&>(c)) ? "true" : "false");
                     }};
    };
    auto list = [this](const std::string& k, auto field) {
      entries_[k] = {[k, field](RunConfig& c, const std::string& v) { field(c) = parseList(k, v); },
                     [field](const RunConfig& c) { return fmtList(field(const_cast<RunConfig&>(c))); }};
    };
    auto points = [this](const std::string& k) {
      entries_[k] = {[k](RunConfig& c, const std::string& v) { c.pointText[k] = v; },
                     [k](const RunConfig& c) { return fmtPoints(pointField(const_cast<RunConfig&>(c), k)); }};
    };

    entries_["domain.kind"] = {
        [](RunConfig& c, const std::string& v) { c.domain.kind = domainKindFromString(trim(v)); },
        [](const RunConfig& c) { return toString(c.domain.kind); }};
    integer("domain.dim", [](RunConfig& c) -> int& { return c.domain.dim; });
    list("domain.params", [](RunConfig& c) -> std::vector<double>& { return c.domain.params; });
    num("domain.C", [](RunConfig& c) -> double& { return c.domain.C; });
    num("domain.band_width", [](RunConfig& c) -> double& { return c.domain.bandWidth; });
    num("domain.sampling_radius", [](RunConfig& c) -> double& { return c.domain.samplingRadius; });

    num("kernel.K", [](RunConfig& c) -> double& { return c.kernel.K; });
    num("kernel.eps", [](RunConfig& c) -> double& { return c.kernel.eps; });
    entries_["kernel.chi_shape"] = {[](RunConfig& c, const std::string& v) { c.kernel.chiShape = trim(v); },
                                    [](const RunConfig& c) { return c.kernel.chiShape; }};
    num("kernel.c_min", [](RunConfig& c) -> double& { return c.kernel.cMin; });
    num("kernel.prop4_delta", [](RunConfig& c) -> double& { return c.kernel.prop4Delta; });
    num("kernel.strict_levi_floor", [](RunConfig& c) -> double& { return c.kernel.strictLeviFloor; });
    num("kernel.coincidence", [](RunConfig& c) -> double& { return c.kernel.coincidence; });
    num("kernel.boundary_tol", [](RunConfig& c) -> double& { return c.kernel.boundaryTol; });
    num("kernel.dist_floor", [](RunConfig& c) -> double& { return c.kernel.distFloor; });
    num("kernel.ratio_tol", [](RunConfig& c) -> double& { return c.kernel.ratioTol; });
    num("kernel.slope_slack", [](RunConfig& c) -> double& { return c.kernel.slopeSlack; });

    num("tolerances.psd", [](RunConfig& c) -> double& { return c.kernel.tol.psd; });
    num("tolerances.sym", [](RunConfig& c) -> double& { return c.kernel.tol.sym; });
    num("tolerances.tan", [](RunConfig& c) -> double& { return c.kernel.tol.tan; });
    num("tolerances.grad", [](RunConfig& c) -> double& { return c.kernel.tol.grad; });

    integer("quadrature.resolution", [](RunConfig& c) -> int& { return c.kernel.resolution; });
    num("quadrature.grading", [](RunConfig& c) -> double& { return c.kernel.gradingExponent; });

    entries_["run.seed"] = {[](RunConfig& c, const std::string& v) {
                              const long s = parseLong("run.seed", v);
                              if (s < 0) throw ConfigError("run.seed must be nonnegative");
                              c.seed = static_cast<std::uint64_t>(s);
                            },
                            [](const RunConfig& c) { return std::to_string(c.seed); }};
    integer("run.threads", [](RunConfig& c) -> int& { return c.threads; });
    entries_["run.out"] = {[](RunConfig& c, const std::string& v) { c.out = trim(v); },
                           [](const RunConfig& c) { return c.out; }};

    integer("estimates.samples", [](RunConfig& c) -> long& { return c.estimates.samples; });
    boolean("estimates.calibrate", [](RunConfig& c) -> bool& { return c.estimates.calibrate; });
    entries_["estimates.checks"] = {[](RunConfig& c, const std::string& v) { c.estimates.checks = parseWords(v); },
                                    [](const RunConfig& c) { return fmtWords(c.estimates.checks); }};
    integer("estimates.probe_count", [](RunConfig& c) -> int& { return c.estimates.probeCount; });
    points("estimates.points");

    integer("reproduce.max_degree", [](RunConfig& c) -> int& { return c.reproduce.maxDegree; });
    integer("reproduce.levels", [](RunConfig& c) -> int& { return c.reproduce.levels; });
    points("reproduce.points");

    num("decay.delta", [](RunConfig& c) -> double& { return c.decay.delta; });
    list("decay.distances", [](RunConfig& c) -> std::vector<double>& { return c.decay.distances; });
    integer("decay.max_refinements", [](RunConfig& c) -> int& { return c.decay.maxRefinements; });
    integer("decay.panel_nodes", [](RunConfig& c) -> int& { return c.decay.panelNodes; });
    entries_["decay.function"] = {[](RunConfig& c, const std::string& v) { c.decay.function = trim(v); },
                                  [](const RunConfig& c) { return c.decay.function; }};
    points("decay.base_point");
    boolean("decay.bm_control", [](RunConfig& c) -> bool& { return c.decay.bmControl; });

    list("alpha.alphas", [](RunConfig& c) -> std::vector<double>& { return c.alpha.alphas; });
    integer("alpha.levels", [](RunConfig& c) -> int& { return c.alpha.levels; });
    integer("alpha.base_resolution", [](RunConfig& c) -> int& { return c.alpha.baseResolution; });
    points("alpha.base_point");
    boolean("alpha.bm_control", [](RunConfig& c) -> bool& { return c.alpha.bmControl; });

    points("levi.points");
  }

  static std::vector<ComplexPoint>& pointField(RunConfig& c, const std::string& k) {
    if (k == "estimates.points") return c.estimates.points;
    if (k == "reproduce.points") return c.reproduce.points;
    if (k == "decay.base_point") return c.decay.basePoint;
    if (k == "alpha.base_point") return c.alpha.basePoint;
    return c.levi.points;
  }

 public:
  /// Parses pending point lists and validates the whole configuration.
  void finalize(RunConfig& c) const {
    for (const auto& [k, v] : c.pointText) pointField(c, k) = detail::parsePoints(k, v, c.domain.dim);
    c.pointText.clear();
    validate(c.domain);
    validate(c.kernel, c.domain.band());
    if (c.threads < 0) throw ConfigError("run.threads must be nonnegative");
    if (c.estimates.samples < 1) throw ConfigError("estimates.samples must be positive");
    if (c.reproduce.levels < 1) throw ConfigError("reproduce.levels must be positive");
    if (c.decay.maxRefinements < 1) throw ConfigError("decay.max_refinements must be positive");
    if (c.decay.panelNodes < 2) throw ConfigError("decay.panel_nodes must be at least 2");
    if (c.alpha.levels < 2) throw ConfigError("alpha.levels must be at least 2");
    if (c.alpha.baseResolution < 2) throw ConfigError("alpha.base_resolution must be at least 2");
    if (c.decay.function != "re_z1" && c.decay.function != "z1" && c.decay.function != "abs_z1")
      throw ConfigError("decay.function must be re_z1, z1 or abs_z1");
    if (c.decay.basePoint.size() > 1 || c.alpha.basePoint.size() > 1)
      throw ConfigError("base_point takes a single point");
    for (const auto& name : c.estimates.checks) {
      static const std::vector<std::string> known{"theorem3", "remark", "prop4", "lemma8",
                                                  "prop2", "symmetry", "corollary6"};
      if (std::find(known.begin(), known.end(), name) == known.end())
        throw ConfigError("estimates.checks: unknown check '" + name + "'");
    }
  }

 private:
  std::map<std::string, Entry> entries_;
};

/// Applies the lines of a configuration text to `c` (no validation).
inline void applyConfigText(RunConfig& c, const std::string& text) {
  std::istringstream is(text);
  std::string line;
  int lineNo = 0;
  std::map<std::string, int> seen;
  while (std::getline(is, line)) {
    ++lineNo;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineNo) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (seen.count(key))
      throw ConfigError("line " + std::to_string(lineNo) + ": key '" + key + "' repeated (first on line " +
                        std::to_string(seen[key]) + ")");
    seen[key] = lineNo;
    try {
      ConfigSchema::instance().set(c, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineNo) + ": " + e.message());
    }
  }
}

inline std::string readFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

/// Resolved configuration as an ordered key -> value object.
inline nlohmann::json toJson(const RunConfig& c) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [key, entry] : ConfigSchema::instance().entries()) j[key] = entry.get(c);
  return j;
}

}  // namespace cfk
