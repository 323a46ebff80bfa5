#pragma once

// Sampled checkers for the lower bounds and vanishing orders of the support
// function, and the grid search that fixes (eps, K).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "cfk/errors.hpp"
#include "cfk/geometry.hpp"
#include "cfk/parallel.hpp"
#include "cfk/random.hpp"
#include "cfk/report.hpp"
#include "cfk/support.hpp"
#include "json.hpp"

namespace cfk {

struct SampleOptions {
  long samples = 10000;
  std::uint64_t seed = 1;
};

/// Sampling failures (no admissible partner point) surface as this error
/// rather than silently shrinking the sample.
class CalibrationFailed : public Error {
 public:
  CalibrationFailed(const std::string& what, nlohmann::json detail)
      : Error("CalibrationFailed", what), detail_(std::move(detail)) {}
  const nlohmann::json& detail() const { return detail_; }

 private:
  nlohmann::json detail_;
};

namespace detail {

/// Distance in (0, maxDist): uniform for half the draws, log-uniform over
/// three decades for the rest so that near-diagonal pairs are well covered.
inline double sampleDistance(Rng& rng, double maxDist) {
  const double u = rng.uniform(), v = rng.uniform();
  double rho = (u < 0.5) ? maxDist * v : maxDist * std::pow(10.0, -3.0 * v);
  return std::max(rho, 1e-9 * maxDist);
}

/// A partner of `center` at distance < maxDist inside the closed band.
inline std::optional<ComplexPoint> samplePartner(const DefiningFunction& r, const DomainSpec& spec,
                                                 const ComplexPoint& center, double maxDist, Rng& rng,
                                                 bool requireBand = true) {
  for (int attempt = 0; attempt < 200; ++attempt) {
    const double rho = sampleDistance(rng, maxDist);
    const ComplexPoint p = center + rho * randomDirection(rng, r.dim());
    if (requireBand ? inClosedBand(r, spec, p) : r.eval(p) <= 0.0) return p;
  }
  return std::nullopt;
}

struct PairSample {
  bool valid = false;
  double ratio = std::numeric_limits<double>::infinity();
  bool termsNonnegative = true;
  ComplexPoint zeta, z;
};

inline EstimateReport reduceMin(const std::string& name, const std::vector<PairSample>& res,
                                double floor, const std::string& note) {
  EstimateReport rep;
  rep.name = name;
  double best = std::numeric_limits<double>::infinity();
  const PairSample* worst = nullptr;
  long valid = 0, negative = 0;
  for (const PairSample& p : res) {
    if (!p.valid) continue;
    ++valid;
    if (!p.termsNonnegative) ++negative;
    if (p.ratio < best) {
      best = p.ratio;
      worst = &p;
    }
  }
  rep.samples = valid;
  rep.minRatio = best;
  rep.extra["negativeTermSamples"] = static_cast<double>(negative);
  rep.pass = valid > 0 && best >= floor && negative == 0;
  if (worst) rep.witnesses.push_back(Witness{{worst->zeta, worst->z}, worst->ratio, note});
  for (const PairSample& p : res)
    if (p.valid && !p.termsNonnegative && rep.witnesses.size() < 4)
      rep.witnesses.push_back(Witness{{p.zeta, p.z}, p.ratio, "negative right-hand-side term"});
  return rep;
}

}  // namespace detail

/// True when the bin maxima (ordered by halving distance) never grow by
/// more than `factor` from one bin to the next. Maxima below `floor` are
/// raised to it (rounding noise of ratios with a vanishing numerator).
inline bool noGrowth(const std::vector<BinStat>& bins, double factor = 1.2, double floor = 0.0) {
  for (size_t b = 1; b < bins.size(); ++b)
    if (std::max(bins[b].max, floor) > factor * std::max(bins[b - 1].max, floor) + 1e-300) return false;
  return true;
}

/// Each bin max against the largest coarser bin max, so sampling noise in a
/// single bin does not read as growth.
inline bool noGrowthTrend(const std::vector<BinStat>& bins, double factor = 1.2, double floor = 0.0) {
  double seen = bins.empty() ? 0.0 : std::max(bins.front().max, floor);
  for (size_t b = 1; b < bins.size(); ++b) {
    const double v = std::max(bins[b].max, floor);
    if (v > factor * seen + 1e-300) return false;
    seen = std::max(seen, v);
  }
  return true;
}

// ---------------------------------------------------------------------------

/// |Phi_K| against |Im F| + |r(zeta)| + |r(z)| + L(r, zeta; pi_t(zeta - z)) + K|zeta - z|^3
/// on pairs of the closed band with |zeta - z| < eps.
inline EstimateReport checkTheorem3(const DefiningFunction& r, const KernelConfig& cfg, const DomainSpec& spec,
                                    const SampleOptions& opt) {
  std::vector<detail::PairSample> res(static_cast<size_t>(opt.samples));
  parallelFor(res.size(), [&](size_t i) {
    Rng rng(opt.seed, i);
    const ComplexPoint zeta = sampleBandPoint(r, spec, rng);
    auto z = detail::samplePartner(r, spec, zeta, cfg.eps, rng);
    if (!z) return;
    const CVec d = zeta - *z;
    const double t = d.norm();
    if (t < cfg.coincidence) return;
    const Jet jz = r.jet(zeta, 2);
    const cplx F = leviPolynomial(jz, zeta, *z);
    const cplx phi = F - jz.value + cfg.K * t * t * t;
    const CVec dt = tangentialProjection(jz.grad, d, cfg.tol);
    const double levi = leviForm(jz, dt, cfg.tol);
    const double den = std::abs(F.imag()) + std::abs(jz.value) + std::abs(r.eval(*z)) + levi + cfg.K * t * t * t;
    auto& out = res[i];
    out.valid = true;
    out.termsNonnegative = levi >= -cfg.tol.psd * std::max(1.0, dt.squaredNorm());
    out.ratio = std::abs(phi) / den;
    out.zeta = zeta;
    out.z = *z;
  });
  auto rep = detail::reduceMin("theorem3", res, cfg.cMin, "min |Phi_K| / rhs");
  rep.extra["K"] = cfg.K;
  rep.extra["eps"] = cfg.eps;
  return rep;
}

/// Smallest sampled Levi eigenvalue on the boundary (strict pseudoconvexity
/// precondition of the strong estimate).
inline double minBoundaryLeviEigenvalue(const DefiningFunction& r, const DomainSpec& spec, long samples,
                                        std::uint64_t seed, const Tolerances& tol = {}) {
  std::vector<double> vals(static_cast<size_t>(samples));
  parallelFor(vals.size(), [&](size_t i) {
    Rng rng(seed ^ 0x5bd1e995ULL, i);
    vals[i] = minTangentialLevi(r, sampleBoundaryPoint(r, spec, rng), tol);
  });
  return vals.empty() ? 0.0 : *std::min_element(vals.begin(), vals.end());
}

/// |Phi_K| against |Im F| + |r(zeta)| + |r(z)| + |zeta - z|^2; the fitted
/// constant is the sampled minimum. Throws NotStrictlyPseudoconvex when the
/// boundary has (sampled) Levi eigenvalues below cfg.strictLeviFloor.
inline EstimateReport checkRemarkStrict(const DefiningFunction& r, const KernelConfig& cfg,
                                        const DomainSpec& spec, const SampleOptions& opt) {
  const double minEig = minBoundaryLeviEigenvalue(r, spec, 4000, opt.seed, cfg.tol);
  if (minEig < cfg.strictLeviFloor)
    throw NotStrictlyPseudoconvex("sampled boundary Levi eigenvalue " + std::to_string(minEig));
  std::vector<detail::PairSample> res(static_cast<size_t>(opt.samples));
  parallelFor(res.size(), [&](size_t i) {
    Rng rng(opt.seed, i);
    const ComplexPoint zeta = sampleBandPoint(r, spec, rng);
    auto z = detail::samplePartner(r, spec, zeta, cfg.eps, rng);
    if (!z) return;
    const double t = (zeta - *z).norm();
    if (t < cfg.coincidence) return;
    const Jet jz = r.jet(zeta, 2);
    const cplx F = leviPolynomial(jz, zeta, *z);
    const cplx phi = F - jz.value + cfg.K * t * t * t;
    const double den = std::abs(F.imag()) + std::abs(jz.value) + std::abs(r.eval(*z)) + t * t;
    auto& out = res[i];
    out.valid = true;
    out.ratio = std::abs(phi) / den;
    out.zeta = zeta;
    out.z = *z;
  });
  auto rep = detail::reduceMin("remarkStrict", res, cfg.cMin, "fitted c~");
  rep.extra["minBoundaryLevi"] = minEig;
  return rep;
}

/// Lower bound at a fixed z, in z-diagonalizing
/// coordinates, over |zeta - z| < delta. Phi_K is recomputed in the rotated
/// coordinates on every 64th sample; a relative mismatch above 1e-10 throws.
inline EstimateReport checkProp4(const DefiningFunction& r, const KernelConfig& cfg, const DomainSpec& spec,
                                 const ComplexPoint& z, const SampleOptions& opt) {
  const Jet jzz = r.jet(z, 2);
  const LeviSpectrum spec_z = leviSpectrum(jzz, z, cfg.tol);
  const CMat& U = spec_z.unitary;
  const DefiningPtr borrowed(std::shared_ptr<const DefiningFunction>{}, &r);
  const UnitaryTransformed rotated(borrowed, U);
  const double rz = std::abs(jzz.value);
  const double delta = cfg.delta();
  std::vector<detail::PairSample> res(static_cast<size_t>(opt.samples));
  parallelFor(res.size(), [&](size_t i) {
    Rng rng(opt.seed, i);
    auto zeta = detail::samplePartner(r, spec, z, delta, rng);
    if (!zeta) return;
    const CVec d = *zeta - z;
    const double t = d.norm();
    if (t < cfg.coincidence) return;
    const Jet jz = r.jet(*zeta, 2);
    const cplx F = leviPolynomial(jz, *zeta, z);
    const cplx phi = F - jz.value + cfg.K * t * t * t;
    if (i % 64 == 0) {
      const ComplexPoint wz = U.adjoint() * (*zeta), w0 = U.adjoint() * z;
      const cplx again = phiK(rotated.jet(wz, 2), cfg.K, wz, w0);
      if (std::abs(again - phi) > 1e-10 * std::max(1.0, std::abs(phi)))
        throw InvariantViolation("Phi_K not invariant under the z-diagonalizing rotation");
    }
    const CVec w = U.adjoint() * d;
    double levi = 0.0;
    for (size_t j = 0; j < spec_z.eigenvalues.size(); ++j) levi += spec_z.eigenvalues[j] * std::norm(w[j]);
    const double den = std::abs(F.imag()) + std::abs(jz.value) + rz + levi + 0.5 * cfg.K * t * t * t;
    auto& out = res[i];
    out.valid = true;
    out.termsNonnegative = levi >= -cfg.tol.psd;
    out.ratio = std::abs(phi) / den;
    out.zeta = *zeta;
    out.z = z;
  });
  auto rep = detail::reduceMin("prop4", res, cfg.cMin, "min |Phi_K| / rhs in z-diagonalizing coordinates");
  for (size_t j = 0; j < spec_z.eigenvalues.size(); ++j)
    rep.extra["lambda" + std::to_string(j + 1)] = spec_z.eigenvalues[j];
  rep.extra["delta"] = delta;
  return rep;
}

/// |S| / |zeta - z|^3 for zeta in the closed domain with |r(zeta)| <= eps
/// and z anywhere in the closed domain.
inline EstimateReport checkLemma8(const DefiningFunction& r, const KernelConfig& cfg, const DomainSpec& spec,
                                  const SampleOptions& opt) {
  std::vector<detail::PairSample> res(static_cast<size_t>(opt.samples));
  parallelFor(res.size(), [&](size_t i) {
    Rng rng(opt.seed, i);
    ComplexPoint zeta;
    for (int a = 0; a < 100; ++a) {
      zeta = sampleBandPoint(r, spec, rng);
      if (std::abs(r.eval(zeta)) <= cfg.eps) break;
    }
    if (std::abs(r.eval(zeta)) > cfg.eps) return;
    std::optional<ComplexPoint> z;
    if (rng.uniform() < 0.5)
      z = sampleDomainPoint(r, spec, rng);
    else
      z = detail::samplePartner(r, spec, zeta, cfg.eps, rng, false);
    if (!z) return;
    const double t = (zeta - *z).norm();
    if (t < cfg.coincidence) return;
    const SupportEval e = supportEval(r.jet(zeta, 2), cfg, zeta, *z, JetLevel::Values);
    auto& out = res[i];
    out.valid = true;
    out.ratio = std::abs(e.S) / (t * t * t);
    out.zeta = zeta;
    out.z = *z;
  });
  return detail::reduceMin("lemma8", res, cfg.cMin, "min |S| / |zeta - z|^3");
}

/// Order checks for the derivatives of Phi_K at a fixed z over six dyadic
/// distance bins below eps:
///   dbarZ      : |dbar_z Phi_K| / |zeta - z|^2
///   tangential : max_j<n |L_{j,z} Phi_K| / |zeta - z|
/// and the infimum of |L_{n,z} Phi_K|.
inline EstimateReport checkProp2(const DefiningFunction& r, const KernelConfig& cfg, const DomainSpec& spec,
                                 const ComplexPoint& z, const SampleOptions& opt, int nBins = 6) {
  const LeviSpectrum frame = leviSpectrum(r, z, cfg.tol);
  const Eigen::Index n = z.size();
  struct Row {
    bool valid = false;
    int bin = 0;
    double dbar = 0.0, tang = 0.0, normal = 0.0;
  };
  std::vector<Row> rows(static_cast<size_t>(opt.samples));
  parallelFor(rows.size(), [&](size_t i) {
    Rng rng(opt.seed, i);
    const int bin = static_cast<int>(i % static_cast<size_t>(nBins));
    const double hi = cfg.eps * std::ldexp(1.0, -bin), lo = 0.5 * hi;
    for (int a = 0; a < 200; ++a) {
      const double rho = lo * std::pow(2.0, rng.uniform());
      const ComplexPoint zeta = z + rho * randomDirection(rng, static_cast<int>(n));
      if (!inClosedBand(r, spec, zeta)) continue;
      const Jet jz = r.jet(zeta, 3);
      const SupportEval e = supportEval(jz, cfg, zeta, z, JetLevel::First, 1.0);
      const CVec dz = dzPhiK(jz, cfg.K, zeta, z);
      Row& row = rows[i];
      row.valid = true;
      row.bin = bin;
      row.dbar = e.dbarZPhiK.norm() / (rho * rho);
      for (Eigen::Index j = 0; j + 1 < n; ++j)
        row.tang = std::max(row.tang, std::abs((frame.unitary.col(j).transpose() * dz)(0, 0)) / rho);
      row.normal = std::abs((frame.unitary.col(n - 1).transpose() * dz)(0, 0));
      return;
    }
  });
  EstimateReport rep;
  rep.name = "prop2";
  std::vector<BinStat> dbar(nBins), tang(nBins);
  for (int b = 0; b < nBins; ++b) {
    dbar[b].hi = tang[b].hi = cfg.eps * std::ldexp(1.0, -b);
    dbar[b].lo = tang[b].lo = 0.5 * dbar[b].hi;
  }
  double infNormal = std::numeric_limits<double>::infinity();
  long valid = 0;
  for (const Row& row : rows) {
    if (!row.valid) continue;
    ++valid;
    auto& a = dbar[row.bin];
    auto& t = tang[row.bin];
    ++a.count;
    ++t.count;
    a.max = std::max(a.max, row.dbar);
    t.max = std::max(t.max, row.tang);
    infNormal = std::min(infNormal, row.normal);
  }
  rep.samples = valid;
  rep.bins["dbarZ"] = dbar;
  rep.bins["tangential"] = tang;
  double supD = 0.0, supT = 0.0;
  for (int b = 0; b < nBins; ++b) {
    supD = std::max(supD, dbar[b].max);
    supT = std::max(supT, tang[b].max);
  }
  rep.supRatio = supD;
  rep.extra["supDbarZ"] = supD;
  rep.extra["supTangential"] = supT;
  rep.extra["infNormal"] = infNormal;
  const bool boundedD = noGrowth(dbar), boundedT = noGrowth(tang);
  rep.extra["dbarZBounded"] = boundedD ? 1.0 : 0.0;
  rep.extra["tangentialBounded"] = boundedT ? 1.0 : 0.0;
  rep.pass = valid > 0 && boundedD && boundedT && infNormal >= cfg.tol.grad;
  rep.witnesses.push_back(Witness{{z}, infNormal, "base point; value = inf |L_n Phi_K|"});
  return rep;
}

/// Sup of |Phi_K(zeta,z) - conj(Phi_K(z,zeta))| / |zeta - z|^3 over band pairs
/// in six dyadic distance bins below eps; passes when the bin maxima show no
/// growth toward the diagonal.
inline EstimateReport checkSymmetry(const DefiningFunction& r, const KernelConfig& cfg, const DomainSpec& spec,
                                    const SampleOptions& opt, int nBins = 6) {
  struct Row {
    bool valid = false;
    int bin = 0;
    double value = 0.0;
    ComplexPoint zeta, z;
  };
  std::vector<Row> rows(static_cast<size_t>(opt.samples));
  parallelFor(rows.size(), [&](size_t i) {
    Rng rng(opt.seed, i);
    const int bin = static_cast<int>(i % static_cast<size_t>(nBins));
    const double hi = cfg.eps * std::ldexp(1.0, -bin), lo = 0.5 * hi;
    const ComplexPoint zeta = sampleBandPoint(r, spec, rng);
    for (int a = 0; a < 200; ++a) {
      const double rho = lo * std::pow(2.0, rng.uniform());
      const ComplexPoint z = zeta + rho * randomDirection(rng, r.dim());
      if (!inClosedBand(r, spec, z)) continue;
      rows[i] = Row{true, bin, symmetryResidual(r, cfg, zeta, z), zeta, z};
      return;
    }
  });
  EstimateReport rep;
  rep.name = "symmetry";
  std::vector<BinStat> bins(static_cast<size_t>(nBins));
  for (int b = 0; b < nBins; ++b) {
    bins[b].hi = cfg.eps * std::ldexp(1.0, -b);
    bins[b].lo = 0.5 * bins[b].hi;
  }
  const Row* worst = nullptr;
  long valid = 0;
  for (const Row& row : rows) {
    if (!row.valid) continue;
    ++valid;
    BinStat& b = bins[static_cast<size_t>(row.bin)];
    ++b.count;
    b.max = std::max(b.max, row.value);
    if (!worst || row.value > worst->value) worst = &row;
  }
  rep.samples = valid;
  rep.bins["residual"] = bins;
  rep.supRatio = worst ? worst->value : 0.0;
  rep.pass = valid > 0 && noGrowthTrend(bins, 1.2, 1e-6);
  if (worst) rep.witnesses.push_back(Witness{{worst->zeta, worst->z}, worst->value, "max residual / |zeta - z|^3"});
  return rep;
}

// ---------------------------------------------------------------------------
// Calibration

/// Deterministic probe points in the closed band.
inline std::vector<ComplexPoint> probePoints(const DefiningFunction& r, const DomainSpec& spec, int count,
                                             std::uint64_t seed) {
  std::vector<ComplexPoint> pts;
  for (int i = 0; i < count; ++i) {
    Rng rng(seed ^ 0x9e3779b97f4a7c15ULL, static_cast<std::uint64_t>(i));
    pts.push_back(sampleBandPoint(r, spec, rng));
  }
  return pts;
}

struct CalibrationResult {
  KernelConfig config;
  EstimateReport theorem3;
  EstimateReport lemma8;
  std::vector<EstimateReport> prop4;
  int attempts = 0;
};

inline const std::vector<double>& calibrationEpsGrid() {
  static const std::vector<double> g{0.4, 0.3, 0.2, 0.15, 0.1};
  return g;
}

/// Descends eps over {0.4, 0.3, 0.2, 0.15, 0.1} * bandWidth and, for each,
/// ascends K over {1, 2, 4, ..., 1024}; returns the first pair for which the
/// theorem3, prop4 (8 probe points) and lemma8 checks all pass.
inline CalibrationResult calibrateConstants(const DefiningFunction& r, const DomainSpec& spec,
                                            const KernelConfig& base, const SampleOptions& opt) {
  const EstimateReport psc = verifyPseudoconvexity(r, spec, 2000, opt.seed, base.tol);
  if (!psc.pass) throw CalibrationFailed("domain is not pseudoconvex on the band", toJson(psc));

  const auto probes = probePoints(r, spec, 8, opt.seed);
  CalibrationResult out;
  nlohmann::json best;
  double bestScore = -std::numeric_limits<double>::infinity();
  for (double frac : calibrationEpsGrid()) {
    for (int p = 0; p <= 10; ++p) {
      KernelConfig cfg = base;
      cfg.eps = frac * spec.band();
      cfg.K = std::ldexp(1.0, p);
      ++out.attempts;
      EstimateReport t3 = checkTheorem3(r, cfg, spec, opt);
      double score = t3.minRatio.value_or(0.0);
      if (!t3.pass) {
        if (score > bestScore) bestScore = score, best = toJson(t3);
        continue;
      }
      std::vector<EstimateReport> p4;
      bool ok = true;
      for (size_t k = 0; k < probes.size() && ok; ++k) {
        SampleOptions o = opt;
        o.samples = std::max<long>(1, opt.samples / static_cast<long>(probes.size()));
        o.seed = opt.seed + 17 * (k + 1);
        p4.push_back(checkProp4(r, cfg, spec, probes[k], o));
        ok = p4.back().pass;
        if (!ok && p4.back().minRatio.value_or(0.0) > bestScore)
          bestScore = p4.back().minRatio.value_or(0.0), best = toJson(p4.back());
      }
      if (!ok) continue;
      EstimateReport l8 = checkLemma8(r, cfg, spec, opt);
      if (!l8.pass) {
        if (l8.minRatio.value_or(0.0) > bestScore) bestScore = l8.minRatio.value_or(0.0), best = toJson(l8);
        continue;
      }
      out.config = cfg;
      out.theorem3 = std::move(t3);
      out.prop4 = std::move(p4);
      out.lemma8 = std::move(l8);
      return out;
    }
  }
  throw CalibrationFailed("no (eps, K) grid point passes", best);
}

}  // namespace cfk
