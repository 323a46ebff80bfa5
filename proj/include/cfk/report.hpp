#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "cfk/types.hpp"

namespace cfk {

struct Witness {
  std::vector<ComplexPoint> points;
  double value = 0.0;
  std::string note;
};

/// Max of a ratio inside one distance bin [lo, hi).
struct BinStat {
  double lo = 0.0;
  double hi = 0.0;
  long count = 0;
  double max = 0.0;
};

/// Empirical record of one inequality: the fitted constant (min or sup of
/// the sampled ratio), bin-wise trends, pass flag and witnesses.
struct EstimateReport {
  std::string name;
  long samples = 0;
  std::optional<double> minRatio;
  std::optional<double> supRatio;
  std::map<std::string, std::vector<BinStat>> bins;
  std::map<std::string, double> extra;
  bool pass = false;
  bool skipped = false;
  std::string note;
  std::vector<Witness> witnesses;
};

inline nlohmann::json pointToJson(const ComplexPoint& p) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index j = 0; j < p.size(); ++j) a.push_back({p[j].real(), p[j].imag()});
  return a;
}

inline nlohmann::json toJson(const EstimateReport& r) {
  nlohmann::json j;
  j["name"] = r.name;
  j["samples"] = r.samples;
  if (r.minRatio) j["minRatio"] = *r.minRatio;
  if (r.supRatio) j["supRatio"] = *r.supRatio;
  if (!r.bins.empty()) {
    nlohmann::json b = nlohmann::json::object();
    for (const auto& [key, list] : r.bins) {
      nlohmann::json arr = nlohmann::json::array();
      for (const BinStat& s : list)
        arr.push_back({{"lo", s.lo}, {"hi", s.hi}, {"count", s.count}, {"max", s.max}});
      b[key] = arr;
    }
    j["bins"] = b;
  }
  if (!r.extra.empty()) j["extra"] = r.extra;
  j["pass"] = r.pass;
  if (r.skipped) j["skipped"] = true;
  if (!r.note.empty()) j["note"] = r.note;
  nlohmann::json w = nlohmann::json::array();
  for (const Witness& x : r.witnesses) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : x.points) pts.push_back(pointToJson(p));
    w.push_back({{"points", pts}, {"value", x.value}, {"note", x.note}});
  }
  j["witnesses"] = w;
  return j;
}

}  // namespace cfk
