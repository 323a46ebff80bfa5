#pragma once

// Experiment commands behind the cfk executable. Each command takes a
// resolved RunConfig, writes <out>/<command>.json (plus <out>/<command>.csv
// for tabular experiments) and returns a process exit code.

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "cfk/config.hpp"
#include "cfk/errors.hpp"
#include "cfk/estimates.hpp"
#include "cfk/geometry.hpp"
#include "cfk/kernel.hpp"
#include "cfk/parallel.hpp"
#include "cfk/probes.hpp"
#include "cfk/quadrature.hpp"
#include "cfk/report.hpp"
#include "json.hpp"

namespace cfk::cli {

enum ExitCode : int {
  kPass = 0,
  kConfigFailure = 1,
  kCalibrationFailure = 2,
  kEstimateFailure = 3,
  kNonConvergence = 4,
};

inline const std::vector<std::string>& commandNames() {
  static const std::vector<std::string> names{"calibrate", "verify-estimates", "reproduce",
                                              "decay",     "alpha",            "levi-spectrum"};
  return names;
}

/// Command-line and environment overrides applied on top of the config file.
struct Overrides {
  std::optional<std::string> config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> resolution;
  std::optional<int> threads;
};

inline RunConfig resolveConfig(const Overrides& o) {
  RunConfig c;
  if (o.config) applyConfigText(c, readFile(*o.config));
  if (o.out) c.out = *o.out;
  if (o.seed) c.seed = *o.seed;
  if (o.resolution) c.kernel.resolution = *o.resolution;
  if (o.threads) c.threads = *o.threads;
  ConfigSchema::instance().finalize(c);
  return c;
}

// ---------------------------------------------------------------------------
// Report files

inline std::string num(double x) { return cfk::detail::fmt(x); }

class Csv {
 public:
  explicit Csv(std::vector<std::string> header) : columns_(header.size()) { line(header); }

  template <class... T>
  void row(const T&... cells) {
    std::vector<std::string> v{cell(cells)...};
    if (v.size() != columns_) throw InvariantViolation("CSV row width differs from header");
    line(v);
  }
  void row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_) throw InvariantViolation("CSV row width differs from header");
    line(cells);
  }
  std::string str() const { return os_.str(); }

 private:
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  static std::string cell(double x) { return num(x); }
  static std::string cell(bool b) { return b ? "1" : "0"; }
  template <class I>
    requires std::is_integral_v<I>
  static std::string cell(I i) {
    return std::to_string(i);
  }

  void line(const std::vector<std::string>& v) {
    for (size_t i = 0; i < v.size(); ++i) os_ << (i ? "," : "") << v[i];
    os_ << "\n";
  }
  size_t columns_;
  std::ostringstream os_;
};

/// Collects one command's report and writes it on finish().
class Report {
 public:
  Report(const RunConfig& c, std::string command) : out_(c.out), command_(std::move(command)) {
    doc_["command"] = command_;
    doc_["config"] = toJson(c);
    doc_["result"] = nlohmann::json::object();
  }

  nlohmann::json& result() { return doc_["result"]; }
  void table(Csv csv) { csv_ = std::move(csv); }

  int finish(int code, const std::string& status, const std::string& message = "") {
    doc_["exitCode"] = code;
    doc_["status"] = status;
    if (!message.empty()) doc_["message"] = message;
    std::filesystem::create_directories(out_);
    write(out_ / (command_ + ".json"), doc_.dump(2) + "\n");
    if (csv_) write(out_ / (command_ + ".csv"), csv_->str());
    return code;
  }

 private:
  static void write(const std::filesystem::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigError("cannot write report '" + p.string() + "'");
    f << text;
  }

  std::filesystem::path out_;
  std::string command_;
  nlohmann::json doc_;
  std::optional<Csv> csv_;
};

// ---------------------------------------------------------------------------
// Commands

namespace detail {

inline SampleOptions sampleOptions(const RunConfig& c) { return SampleOptions{c.estimates.samples, c.seed}; }

inline nlohmann::json calibrationJson(const CalibrationResult& cal) {
  nlohmann::json j;
  j["eps"] = cal.config.eps;
  j["K"] = cal.config.K;
  j["attempts"] = cal.attempts;
  j["theorem3"] = toJson(cal.theorem3);
  j["lemma8"] = toJson(cal.lemma8);
  nlohmann::json p4 = nlohmann::json::array();
  double minP4 = std::numeric_limits<double>::infinity();
  for (const auto& rep : cal.prop4) {
    p4.push_back(toJson(rep));
    minP4 = std::min(minP4, rep.minRatio.value_or(0.0));
  }
  j["prop4"] = p4;
  j["minima"] = {{"theorem3", cal.theorem3.minRatio.value_or(0.0)},
                 {"lemma8", cal.lemma8.minRatio.value_or(0.0)},
                 {"prop4", minP4}};
  return j;
}

inline Csv calibrationCsv(const CalibrationResult& cal) {
  Csv csv({"check", "point", "samples", "min_ratio", "sup_ratio", "pass", "skipped"});
  auto add = [&](const EstimateReport& rep, int point) {
    csv.row(rep.name, point, rep.samples, rep.minRatio ? num(*rep.minRatio) : std::string(),
            rep.supRatio ? num(*rep.supRatio) : std::string(), rep.pass, rep.skipped);
  };
  add(cal.theorem3, -1);
  add(cal.lemma8, -1);
  for (size_t k = 0; k < cal.prop4.size(); ++k) add(cal.prop4[k], static_cast<int>(k));
  return csv;
}

inline BoundaryFunction decayFunction(const std::string& name) {
  if (name == "z1") return [](const ComplexPoint& p) { return p[0]; };
  if (name == "abs_z1") return [](const ComplexPoint& p) { return cplx(std::abs(p[0])); };
  return [](const ComplexPoint& p) { return cplx(p[0].real()); };
}

}  // namespace detail

inline int cmdCalibrate(const RunConfig& c) {
  Report rep(c, "calibrate");
  const DefiningPtr r = makeDefiningFunction(c.domain);
  try {
    const CalibrationResult cal = calibrateConstants(*r, c.domain, c.kernel, detail::sampleOptions(c));
    rep.result() = detail::calibrationJson(cal);
    rep.table(detail::calibrationCsv(cal));
    return rep.finish(kPass, "pass");
  } catch (const CalibrationFailed& e) {
    rep.result()["failure"] = e.detail();
    return rep.finish(kCalibrationFailure, "calibration-failed", e.what());
  }
}

inline int cmdVerifyEstimates(const RunConfig& c) {
  Report rep(c, "verify-estimates");
  const DefiningPtr r = makeDefiningFunction(c.domain);
  KernelConfig cfg = c.kernel;
  if (c.estimates.calibrate) {
    try {
      const CalibrationResult cal = calibrateConstants(*r, c.domain, c.kernel, detail::sampleOptions(c));
      cfg = cal.config;
      rep.result()["calibration"] = detail::calibrationJson(cal);
    } catch (const CalibrationFailed& e) {
      rep.result()["calibration"] = {{"failure", e.detail()}};
      return rep.finish(kCalibrationFailure, "calibration-failed", e.what());
    }
  }
  rep.result()["eps"] = cfg.eps;
  rep.result()["K"] = cfg.K;

  std::vector<ComplexPoint> probes = probePoints(*r, c.domain, c.estimates.probeCount, c.seed);
  probes.insert(probes.end(), c.estimates.points.begin(), c.estimates.points.end());
  const SampleOptions all = detail::sampleOptions(c);
  auto perProbe = [&](size_t k) {
    SampleOptions o = all;
    o.samples = std::max<long>(1, all.samples / static_cast<long>(probes.size()));
    o.seed = all.seed + 17 * (k + 1);
    return o;
  };

  struct Entry {
    std::string check;
    int point = -1;
    EstimateReport report;
  };
  std::vector<Entry> entries;
  for (const std::string& check : c.estimates.checks) {
    if (check == "theorem3") {
      entries.push_back({check, -1, checkTheorem3(*r, cfg, c.domain, all)});
    } else if (check == "lemma8") {
      entries.push_back({check, -1, checkLemma8(*r, cfg, c.domain, all)});
    } else if (check == "symmetry") {
      entries.push_back({check, -1, checkSymmetry(*r, cfg, c.domain, all)});
    } else if (check == "remark") {
      try {
        entries.push_back({check, -1, checkRemarkStrict(*r, cfg, c.domain, all)});
      } catch (const NotStrictlyPseudoconvex& e) {
        EstimateReport skipped;
        skipped.name = "remarkStrict";
        skipped.skipped = true;
        skipped.note = e.what();
        entries.push_back({check, -1, skipped});
      }
    } else {
      for (size_t k = 0; k < probes.size(); ++k) {
        const int idx = static_cast<int>(k);
        if (check == "prop4") entries.push_back({check, idx, checkProp4(*r, cfg, c.domain, probes[k], perProbe(k))});
        if (check == "prop2") entries.push_back({check, idx, checkProp2(*r, cfg, c.domain, probes[k], perProbe(k))});
        if (check == "corollary6")
          entries.push_back({check, idx, checkCorollary6(*r, cfg, c.domain, probes[k], perProbe(k))});
      }
      if (check == "prop2" && !probes.empty()) {
        KernelConfig k0 = cfg;
        k0.K = 0.0;
        EstimateReport control = checkProp2(*r, k0, c.domain, probes[0], perProbe(0));
        control.name = "prop2K0Control";
        control.pass = control.extra["supDbarZ"] == 0.0;
        control.note = "K = 0: dbar_z Phi_0 vanishes identically";
        entries.push_back({"prop2-k0-control", 0, control});
      }
    }
  }

  Csv csv({"check", "point", "samples", "min_ratio", "sup_ratio", "pass", "skipped"});
  nlohmann::json reports = nlohmann::json::array();
  const Entry* firstFailure = nullptr;
  for (const Entry& e : entries) {
    nlohmann::json j = toJson(e.report);
    j["check"] = e.check;
    if (e.point >= 0) j["point"] = pointToJson(probes[static_cast<size_t>(e.point)]);
    reports.push_back(j);
    csv.row(e.check, e.point, e.report.samples,
            e.report.minRatio ? num(*e.report.minRatio) : std::string(),
            e.report.supRatio ? num(*e.report.supRatio) : std::string(), e.report.pass, e.report.skipped);
    if (!e.report.pass && !e.report.skipped && !firstFailure) firstFailure = &e;
  }
  rep.result()["reports"] = reports;
  rep.table(std::move(csv));
  if (firstFailure) {
    rep.result()["firstFailure"] = {{"check", firstFailure->check},
                                    {"report", toJson(firstFailure->report)}};
    return rep.finish(kEstimateFailure, "estimate-failed", "first failing check: " + firstFailure->check);
  }
  return rep.finish(kPass, "pass");
}

/// Criterion for the reproduction table: at the finest level every error is
/// below `tol`, and the maximal error decreased from the previous level
/// unless it already sits at the rounding floor.
inline bool reproductionConverged(const std::vector<ReproductionRow>& rows, int levels, double tol,
                                  double floor = 1e-12) {
  std::vector<double> maxErr(static_cast<size_t>(levels), 0.0);
  for (const auto& row : rows) maxErr[static_cast<size_t>(row.level)] = std::max(maxErr[static_cast<size_t>(row.level)], row.errTS);
  if (maxErr.back() > tol) return false;
  return levels < 2 || maxErr.back() < maxErr[maxErr.size() - 2] || maxErr.back() <= floor;
}

inline int cmdReproduce(const RunConfig& c) {
  Report rep(c, "reproduce");
  const DefiningPtr r = makeDefiningFunction(c.domain);
  const ChartPtr chart = buildChart(c.domain).front();
  const auto zs = c.reproduce.points.empty() ? defaultInteriorPoints(c.domain) : c.reproduce.points;
  const auto fs = monomialsUpTo(c.domain.dim, c.reproduce.maxDegree);
  const auto rows = reproductionStudy(*r, c.kernel, chart, fs, zs, c.reproduce.levels);

  Csv csv({"level", "resolution", "nodes", "point", "function", "exact_re", "exact_im", "ts_re", "ts_im",
           "bm_re", "bm_im", "err_ts", "err_bm", "gap"});
  std::vector<double> maxTS(static_cast<size_t>(c.reproduce.levels), 0.0), maxBM = maxTS, maxGap = maxTS;
  for (const auto& row : rows) {
    const size_t p = static_cast<size_t>(std::find(zs.begin(), zs.end(), row.z) - zs.begin());
    csv.row(row.level, row.resolution, row.nodes, p, row.function, row.exact.real(), row.exact.imag(),
            row.ts.real(), row.ts.imag(), row.tbm.real(), row.tbm.imag(), row.errTS, row.errBM, row.gap);
    const auto l = static_cast<size_t>(row.level);
    maxTS[l] = std::max(maxTS[l], row.errTS);
    maxBM[l] = std::max(maxBM[l], row.errBM);
    maxGap[l] = std::max(maxGap[l], row.gap);
  }
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& z : zs) pts.push_back(pointToJson(z));
  rep.result()["points"] = pts;
  rep.result()["maxErrorTS"] = maxTS;
  rep.result()["maxErrorBM"] = maxBM;
  rep.result()["maxGap"] = maxGap;
  rep.table(std::move(csv));
  if (!reproductionConverged(rows, c.reproduce.levels, 1e-2))
    return rep.finish(kNonConvergence, "non-convergence", "reproduction error above 1e-2 or not decreasing");
  return rep.finish(kPass, "pass");
}

inline nlohmann::json decayJson(const DecayResult& d) {
  nlohmann::json j;
  j["basePoint"] = pointToJson(d.z0);
  j["delta"] = d.delta;
  j["slopesCF"] = d.slopesCF;
  j["slopesBM"] = d.slopesBM;
  j["slopeCF"] = d.slopeCF;
  j["slopeBM"] = d.slopeBM;
  j["slopeChange"] = d.slopeChange;
  j["degenerate"] = d.degenerate;
  j["stable"] = d.stable;
  j["pass"] = d.pass;
  j["orderedAgainstBM"] = d.orderedAgainstBM;
  return j;
}

inline int cmdDecay(const RunConfig& c) {
  Report rep(c, "decay");
  const DefiningPtr r = makeDefiningFunction(c.domain);
  const ChartPtr chart = buildChart(c.domain).front();
  const ComplexPoint z0 = c.decay.basePoint.empty() ? axisBoundaryPoint(*r, c.domain)
                                                    : boundaryProjection(*r, c.decay.basePoint.front());
  DecayOptions o;
  o.delta = c.decay.delta;
  o.distances = c.decay.distances;
  o.maxRefinements = c.decay.maxRefinements;
  o.panelNodes = c.decay.panelNodes;
  o.bochnerMartinelliControl = c.decay.bmControl;
  const DecayResult d = dbarDecayProbe(*r, c.kernel, chart, detail::decayFunction(c.decay.function), z0, o);

  Csv csv({"refinement", "panel_nodes", "dist", "abs_r", "dbar_ts", "dbar_bm"});
  for (const auto& row : d.rows) csv.row(row.refinement, row.resolution, row.dist, row.absR, row.cf, row.bm);
  rep.result() = decayJson(d);
  rep.result()["function"] = c.decay.function;
  rep.table(std::move(csv));
  if (d.degenerate) return rep.finish(kPass, "skipped", "values at the noise floor (degenerate fit)");
  if (!d.stable) return rep.finish(kNonConvergence, "non-convergence", "slope not stable under refinement");
  if (!d.pass) return rep.finish(kEstimateFailure, "estimate-failed", "fitted slope below delta - 1 - slack");
  return rep.finish(kPass, "pass");
}

inline nlohmann::json alphaJson(const AlphaResult& a) {
  nlohmann::json j;
  j["kernel"] = a.kernel;
  j["alpha"] = a.alpha;
  j["point"] = pointToJson(a.z);
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : a.rows)
    rows.push_back({{"level", row.level}, {"panelLevels", row.panelLevels}, {"panelNodes", row.resolution},
                    {"nodes", row.nodes},
                    {"value", row.value}, {"ratio", row.ratio}});
  j["rows"] = rows;
  j["contraction"] = a.contraction;
  j["pass"] = a.pass;
  j["diverging"] = a.diverging;
  return j;
}

inline int cmdAlpha(const RunConfig& c) {
  Report rep(c, "alpha");
  const DefiningPtr r = makeDefiningFunction(c.domain);
  const ChartPtr chart = buildChart(c.domain).front();
  const ComplexPoint z = c.alpha.basePoint.empty() ? axisBoundaryPoint(*r, c.domain)
                                                   : boundaryProjection(*r, c.alpha.basePoint.front());
  std::vector<AlphaResult> results;
  for (double a : c.alpha.alphas)
    results.push_back(alphaIntegrability(*r, c.kernel, chart, z, a, c.alpha.levels, c.alpha.baseResolution, false));
  if (c.alpha.bmControl)
    results.push_back(alphaIntegrability(*r, c.kernel, chart, z, 0.0, c.alpha.levels, c.alpha.baseResolution, true));

  Csv csv({"kernel", "alpha", "level", "panel_levels", "panel_nodes", "nodes", "value", "ratio"});
  nlohmann::json arr = nlohmann::json::array();
  bool cfOk = true, controlOk = true;
  for (const auto& res : results) {
    for (const auto& row : res.rows)
      csv.row(res.kernel, res.alpha, row.level, row.panelLevels, row.resolution, row.nodes, row.value, row.ratio);
    arr.push_back(alphaJson(res));
    if (res.kernel == "cf") cfOk = cfOk && res.pass;
    if (res.kernel == "bm") controlOk = controlOk && res.diverging;
  }
  rep.result()["runs"] = arr;
  rep.table(std::move(csv));
  if (!cfOk) return rep.finish(kNonConvergence, "non-convergence", "weighted CF integral did not stabilize");
  if (!controlOk) return rep.finish(kEstimateFailure, "estimate-failed", "BM control not flagged diverging");
  return rep.finish(kPass, "pass");
}

inline int cmdLeviSpectrum(const RunConfig& c) {
  Report rep(c, "levi-spectrum");
  const DefiningPtr r = makeDefiningFunction(c.domain);
  std::vector<ComplexPoint> pts;
  if (c.levi.points.empty()) {
    pts.push_back(axisBoundaryPoint(*r, c.domain));
    for (int i = 0; i < 8; ++i) {
      Rng rng(c.seed, static_cast<std::uint64_t>(i));
      pts.push_back(sampleBoundaryPoint(*r, c.domain, rng));
    }
  } else {
    for (const auto& p : c.levi.points) pts.push_back(boundaryProjection(*r, p));
  }
  const int n = c.domain.dim;
  std::vector<std::string> header{"point"};
  for (int j = 1; j <= n; ++j) {
    header.push_back("re_z" + std::to_string(j));
    header.push_back("im_z" + std::to_string(j));
  }
  header.push_back("r");
  for (int j = 1; j < n; ++j) header.push_back("lambda_" + std::to_string(j));
  Csv csv(header);
  nlohmann::json arr = nlohmann::json::array();
  double minEig = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < pts.size(); ++i) {
    const LeviSpectrum s = leviSpectrum(*r, pts[i], c.kernel.tol);
    std::vector<std::string> cells{std::to_string(i)};
    for (int j = 0; j < n; ++j) {
      cells.push_back(num(pts[i][j].real()));
      cells.push_back(num(pts[i][j].imag()));
    }
    const double rv = r->eval(pts[i]);
    cells.push_back(num(rv));
    for (double e : s.eigenvalues) {
      cells.push_back(num(e));
      minEig = std::min(minEig, e);
    }
    csv.row(cells);
    arr.push_back({{"point", pointToJson(pts[i])}, {"r", rv}, {"eigenvalues", s.eigenvalues}});
  }
  rep.result()["points"] = arr;
  rep.result()["minEigenvalue"] = minEig;
  rep.table(std::move(csv));
  if (minEig < -c.kernel.tol.psd)
    return rep.finish(kEstimateFailure, "estimate-failed", "negative tangential Levi eigenvalue");
  return rep.finish(kPass, "pass");
}

/// Runs one command; maps library errors to exit codes and reports to `err`.
inline int run(const std::string& command, const Overrides& o, std::ostream& err) {
  RunConfig c;
  try {
    c = resolveConfig(o);
  } catch (const Error& e) {
    err << "config: " << e.what() << "\n";
    return kConfigFailure;
  }
  setThreadCount(c.threads);
  try {
    if (command == "calibrate") return cmdCalibrate(c);
    if (command == "verify-estimates") return cmdVerifyEstimates(c);
    if (command == "reproduce") return cmdReproduce(c);
    if (command == "decay") return cmdDecay(c);
    if (command == "alpha") return cmdAlpha(c);
    if (command == "levi-spectrum") return cmdLeviSpectrum(c);
    err << "unknown command '" << command << "'\n";
    return kConfigFailure;
  } catch (const ConfigError& e) {
    err << e.what() << "\n";
    return kConfigFailure;
  } catch (const UnsupportedDomain& e) {
    err << e.what() << "\n";
    return kConfigFailure;
  } catch (const PointTooClose& e) {
    err << e.what() << "\n";
    return kConfigFailure;
  } catch (const CalibrationFailed& e) {
    err << e.what() << "\n";
    return kCalibrationFailure;
  } catch (const QuadratureNonConvergence& e) {
    err << e.what() << "\n";
    return kNonConvergence;
  } catch (const NonFiniteDensity& e) {
    err << e.what() << "\n";
    return kNonConvergence;
  } catch (const Error& e) {
    err << e.what() << "\n";
    return kEstimateFailure;
  }
}

}  // namespace cfk::cli
