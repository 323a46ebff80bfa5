#pragma once

// Refinement studies on top of the quadrature: reproduction of holomorphic
// functions, weighted integrability of the kernel at a boundary point, decay
// of dbar_z T^S along a normal ray, and the sup bound for Holder data.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "cfk/geometry.hpp"
#include "cfk/kernel.hpp"
#include "cfk/quadrature.hpp"
#include "cfk/support.hpp"

namespace cfk {

// ---------------------------------------------------------------------------
// Reproduction

/// zeta^a for a multi-exponent a.
struct Monomial {
  std::vector<int> exponents;

  cplx operator()(const ComplexPoint& p) const {
    cplx v = 1.0;
    for (size_t j = 0; j < exponents.size(); ++j)
      for (int e = 0; e < exponents[j]; ++e) v *= p[static_cast<Eigen::Index>(j)];
    return v;
  }
  std::string name() const {
    std::string s;
    for (size_t j = 0; j < exponents.size(); ++j) {
      if (exponents[j] == 0) continue;
      if (!s.empty()) s += "*";
      s += "z" + std::to_string(j + 1);
      if (exponents[j] > 1) s += "^" + std::to_string(exponents[j]);
    }
    return s.empty() ? "1" : s;
  }
};

/// All monomials in n variables of total degree <= maxDegree, graded-lex.
inline std::vector<Monomial> monomialsUpTo(int n, int maxDegree) {
  std::vector<Monomial> out;
  std::vector<int> e(static_cast<size_t>(n), 0);
  for (int deg = 0; deg <= maxDegree; ++deg) {
    std::function<void(int, int)> rec = [&](int j, int left) {
      if (j == n - 1) {
        e[static_cast<size_t>(j)] = left;
        out.push_back(Monomial{e});
        return;
      }
      for (int k = left; k >= 0; --k) {
        e[static_cast<size_t>(j)] = k;
        rec(j + 1, left - k);
      }
    };
    rec(0, deg);
  }
  return out;
}

/// Fixed interior test points at distance >= 0.1 (in units of the domain
/// size) from the boundary of each built-in domain.
inline std::vector<ComplexPoint> defaultInteriorPoints(const DomainSpec& spec) {
  static const std::vector<std::array<cplx, 2>> unit{{cplx(0.5, 0.0), cplx(0.0, 0.0)},
                                                     {cplx(0.3, 0.0), cplx(0.5, 0.0)},
                                                     {cplx(0.0, -0.4), cplx(0.3, 0.0)},
                                                     {cplx(0.2, 0.2), cplx(0.0, -0.5)},
                                                     {cplx(0.7, 0.0), cplx(0.0, 0.0)}};
  std::vector<ComplexPoint> out;
  for (const auto& u : unit) {
    ComplexPoint p = ComplexPoint::Zero(spec.dim);
    for (int j = 0; j < std::min(spec.dim, 2); ++j) p[j] = u[static_cast<size_t>(j)];
    if (spec.kind == DomainKind::Ball && !spec.params.empty()) p *= spec.params[0];
    if (spec.kind == DomainKind::ConvexEllipsoid)
      for (int j = 0; j < spec.dim; ++j)
        p[j] = cplx(spec.params[2 * j] * p[j].real(), spec.params[2 * j + 1] * p[j].imag());
    out.push_back(p);
  }
  return out;
}

/// Boundary point on the positive zeta_1 axis.
inline ComplexPoint axisBoundaryPoint(const DefiningFunction& r, const DomainSpec& spec) {
  CVec e = CVec::Zero(r.dim());
  e[0] = 1.0;
  const auto b = radialBoundaryPoint(r, e, 1.5 * spec.boundingRadius());
  if (!b) throw UnsupportedDomain("no boundary crossing on the zeta_1 axis");
  return *b;
}

struct ReproductionRow {
  int level = 0;
  int resolution = 0;
  size_t nodes = 0;
  ComplexPoint z;
  std::string function;
  cplx exact;
  cplx ts;
  cplx tbm;
  double errTS = 0.0;   // |T^S f - f| / max(1, |f|)
  double errBM = 0.0;
  double gap = 0.0;     // |T^S f - T^BM f|
};

/// T^S and T^BM of each monomial at each z, at resolution res * 2^level for
/// level = 0..levels-1.
inline std::vector<ReproductionRow> reproductionStudy(const DefiningFunction& r, const KernelConfig& cfg,
                                                      const ChartPtr& chart, const std::vector<Monomial>& fs,
                                                      const std::vector<ComplexPoint>& zs, int levels) {
  std::vector<BoundaryFunction> funcs;
  for (const auto& m : fs) funcs.push_back([m](const ComplexPoint& p) { return m(p); });
  std::vector<ReproductionRow> rows;
  for (int level = 0; level < levels; ++level) {
    GridOptions o;
    o.resolution = cfg.resolution << level;
    const QuadratureGrid grid(chart, o);
    for (const ComplexPoint& z : zs) {
      const CVec ts = applyTSMany(r, cfg, grid, funcs, z);
      const CVec bm = applyTBMMany(grid, funcs, z);
      for (size_t i = 0; i < fs.size(); ++i) {
        ReproductionRow row;
        row.level = level;
        row.resolution = o.resolution;
        row.nodes = grid.size();
        row.z = z;
        row.function = fs[i].name();
        row.exact = fs[i](z);
        row.ts = ts[static_cast<Eigen::Index>(i)];
        row.tbm = bm[static_cast<Eigen::Index>(i)];
        const double scale = std::max(1.0, std::abs(row.exact));
        row.errTS = std::abs(row.ts - row.exact) / scale;
        row.errBM = std::abs(row.tbm - row.exact) / scale;
        row.gap = std::abs(row.ts - row.tbm);
        rows.push_back(row);
      }
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Weighted integrability at a boundary point

struct RefinementRow {
  int level = 0;
  int panelLevels = 0;
  int resolution = 0;  // Gauss nodes per panel
  size_t nodes = 0;
  double value = 0.0;
  double ratio = 0.0;  // value / previous value; 0 on the first level
};

struct AlphaResult {
  std::string kernel;  // "cf" or "bm"
  double alpha = 0.0;
  ComplexPoint z;
  std::vector<RefinementRow> rows;
  double contraction = 0.0;  // last increment / previous increment
  bool pass = false;         // final ratio <= 1 + ratioTol
  bool diverging = false;
};

/// Sequence of integrals of |zeta - z|^alpha |Omega| over grids of geometric
/// panels around the chart preimage of the boundary point z. Level l uses
/// 4(l+1) panel levels with baseResolution/2 + 4l Gauss nodes per panel, so
/// every level resolves four more dyadic shells around z. Nodes coinciding
/// with z contribute nothing.
inline AlphaResult alphaIntegrability(const DefiningFunction& r, const KernelConfig& cfg, const ChartPtr& chart,
                                      const ComplexPoint& z, double alpha, int levels, int baseResolution,
                                      bool bochnerMartinelliControl = false) {
  if (!(alpha >= 0.0)) throw ConfigError("alpha must be nonnegative");
  if (levels < 2) throw ConfigError("alpha probe needs at least two levels");
  if (baseResolution < 2) throw ConfigError("alpha probe needs a base resolution of at least 2");
  if (std::abs(r.eval(z)) > cfg.boundaryTol) throw OffBoundary("alpha probe needs z on the boundary");
  AlphaResult res;
  res.kernel = bochnerMartinelliControl ? "bm" : "cf";
  res.alpha = alpha;
  res.z = z;
  const auto focus = chart->preimage(z);
  const auto moving = movingAxes(*chart, focus);
  for (int level = 0; level < levels; ++level) {
    GridOptions o;
    o.resolution = baseResolution;
    o.focus = focus;
    o.gradedAxes = moving;
    o.geometricLevels = 4 * (level + 1);
    o.panelNodes = std::max(2, baseResolution / 2) + 4 * level;
    const QuadratureGrid grid(chart, o);
    const cplx v = grid.integrate(1, [&](const ChartJet& jet, cplx* out) {
      const double t = (jet.point - z).norm();
      if (t < cfg.coincidence) return;
      const cplx k = bochnerMartinelliControl ? bochnerMartinelliDensity(jet, z)
                                              : omega0Density(r.jet(jet.point, 3), cfg, jet, z);
      out[0] = std::pow(t, alpha) * std::abs(k);
    })[0];
    RefinementRow row;
    row.level = level;
    row.panelLevels = o.geometricLevels;
    row.resolution = o.panelNodes;
    row.nodes = grid.size();
    row.value = std::abs(v);
    row.ratio = res.rows.empty() ? 0.0 : row.value / res.rows.back().value;
    res.rows.push_back(row);
  }
  const size_t L = res.rows.size();
  const double last = res.rows[L - 1].value - res.rows[L - 2].value;
  const double prev = L >= 3 ? res.rows[L - 2].value - res.rows[L - 3].value : 0.0;
  res.contraction = (L >= 3 && std::abs(prev) > 0.0) ? last / prev : 0.0;
  const double finalRatio = res.rows.back().ratio;
  res.pass = finalRatio <= 1.0 + cfg.ratioTol;
  res.diverging = !res.pass || (L >= 3 && res.contraction >= 0.85);
  return res;
}

// ---------------------------------------------------------------------------
// dbar_z decay along a normal ray

struct DecayRow {
  int refinement = 0;
  int resolution = 0;
  double dist = 0.0;   // |z - z0|
  double absR = 0.0;   // |r(z)|
  double cf = 0.0;     // |dbar_z T^S f (z)|
  double bm = 0.0;     // |dbar_z T^BM f (z)|
};

struct DecayResult {
  ComplexPoint z0;
  double delta = 0.5;
  std::vector<DecayRow> rows;
  std::vector<double> slopesCF;  // per refinement
  std::vector<double> slopesBM;
  double slopeCF = 0.0;
  double slopeBM = 0.0;
  double slopeChange = 0.0;  // |last - previous| CF slope
  bool degenerate = false;   // values at the noise floor (holomorphic data)
  bool stable = false;
  bool pass = false;
  bool orderedAgainstBM = false;  // CF slope exceeds BM slope by >= 0.15
};

/// Least-squares slope of log y against log x.
inline double logLogSlope(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < n; ++i) mx += std::log(x[i]), my += std::log(y[i]);
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

struct DecayOptions {
  double delta = 0.5;
  std::vector<double> distances{0.1, 0.05, 0.025, 0.0125};
  int maxRefinements = 2;
  /// Gauss nodes per geometric panel on the first pass; doubled per pass.
  int panelNodes = 24;
  double panelRatio = 0.5;
  double slopeTolerance = 0.02;
  double noiseFloor = 1e-7;
  bool bochnerMartinelliControl = true;
};

/// Panels shrinking geometrically toward the chart preimage of z0 until the
/// innermost panel is below the distance d; polar axes use the trapezoid rule.
/// Panels within capRadius of the focus are split to width at most capWidth.
inline QuadratureGrid nearBoundaryGrid(const ChartPtr& chart, const std::vector<double>& focus, double d,
                                       int panelNodes, double panelRatio, double capRadius = 0.0,
                                       double capWidth = 0.0) {
  GridOptions o;
  o.panelCapRadius = capRadius;
  o.panelCapWidth = capWidth;
  o.focus = focus;
  o.panelNodes = panelNodes;
  o.panelRatio = panelRatio;
  o.resolution = std::max(8, panelNodes / 4);
  o.gradedAxes = movingAxes(*chart, focus);
  o.geometricLevels = std::max(3, static_cast<int>(std::ceil(std::log(d / kPi) / std::log(panelRatio))) + 1);
  return QuadratureGrid(chart, o);
}

/// Fits log |dbar_z T f| against log |r(z)| on z = z0 - d nu, nu the outer
/// unit normal at z0, doubling the nodes per panel until the fitted slope
/// moves by less than slopeTolerance.
inline DecayResult dbarDecayProbe(const DefiningFunction& r, const KernelConfig& cfg, const ChartPtr& chart,
                                  const BoundaryFunction& f, const ComplexPoint& z0, const DecayOptions& opt) {
  if (!(opt.delta > 0.0 && opt.delta < 2.0 / 3.0)) throw ConfigError("delta must lie in (0, 2/3)");
  if (opt.distances.size() < 2) throw ConfigError("decay probe needs at least two distances");
  if (std::abs(r.eval(z0)) > cfg.boundaryTol) throw OffBoundary("decay ray must end on the boundary");
  DecayResult res;
  res.z0 = z0;
  res.delta = opt.delta;
  const CVec nu = outwardNormal(r.jet(z0, 1));
  const auto focus = chart->preimage(z0);
  for (int ref = 0; ref < opt.maxRefinements; ++ref) {
    const int nodes = opt.panelNodes << ref;
    std::vector<double> xs, ycf, ybm;
    double maxCF = 0.0;
    for (double d : opt.distances) {
      const ComplexPoint z = z0 - d * nu;
      const QuadratureGrid grid =
          nearBoundaryGrid(chart, focus, d, nodes, opt.panelRatio, 1.5 * cfg.eps, cfg.eps / 8.0);
      DecayRow row;
      row.refinement = ref;
      row.resolution = nodes;
      row.dist = d;
      row.absR = std::abs(r.eval(z));
      row.cf = dbarZApplyTS(r, cfg, grid, f, z).norm();
      if (opt.bochnerMartinelliControl) row.bm = dbarZApplyTBM(grid, f, z).norm();
      maxCF = std::max(maxCF, row.cf);
      xs.push_back(row.absR);
      ycf.push_back(std::max(row.cf, 1e-300));
      ybm.push_back(std::max(row.bm, 1e-300));
      res.rows.push_back(row);
    }
    if (maxCF < opt.noiseFloor) {
      res.degenerate = true;
      return res;
    }
    res.slopesCF.push_back(logLogSlope(xs, ycf));
    if (opt.bochnerMartinelliControl) res.slopesBM.push_back(logLogSlope(xs, ybm));
    if (res.slopesCF.size() >= 2) {
      res.slopeChange = std::abs(res.slopesCF.back() - res.slopesCF[res.slopesCF.size() - 2]);
      if (res.slopeChange < opt.slopeTolerance) {
        res.stable = true;
        break;
      }
    }
  }
  res.slopeCF = res.slopesCF.back();
  if (!res.slopesBM.empty()) res.slopeBM = res.slopesBM.back();
  res.pass = res.stable && res.slopeCF >= opt.delta - 1.0 - cfg.slopeSlack;
  res.orderedAgainstBM = opt.bochnerMartinelliControl && res.slopeCF - res.slopeBM >= 0.15;
  return res;
}

// ---------------------------------------------------------------------------
// Sup bound for Holder data

struct HolderRow {
  int level = 0;
  double beta = 0.0;
  double holderNorm = 0.0;  // sup |f| + [f]_beta
  double supT = 0.0;        // max_z |T^S f (z)|
  double ratio = 0.0;
};

struct HolderResult {
  std::vector<HolderRow> rows;
  double maxRatio = 0.0;
  bool pass = false;
};

/// f_beta(zeta) = |zeta - zeta0|^beta with [f_beta]_beta = 1 and sup |f|
/// taken over the grid nodes; the ratio sup_z |T^S f_beta| / |f_beta|_beta must not
/// grow by more than 20% from one refinement to the next.
inline HolderResult holderBoundProbe(const DefiningFunction& r, const KernelConfig& cfg, const ChartPtr& chart,
                                     const std::vector<double>& betas, const ComplexPoint& zeta0,
                                     const std::vector<ComplexPoint>& zs, int levels) {
  HolderResult res;
  std::vector<double> prevRatio(betas.size(), 0.0);
  res.pass = true;
  for (int level = 0; level < levels; ++level) {
    GridOptions o;
    o.resolution = cfg.resolution << level;
    const QuadratureGrid grid(chart, o);
    for (size_t b = 0; b < betas.size(); ++b) {
      const double beta = betas[b];
      const BoundaryFunction f = [&](const ComplexPoint& p) { return cplx(std::pow((p - zeta0).norm(), beta)); };
      double fmax = 0.0;
      for (double t1 : grid.rule(0).nodes)
        for (double t2 : grid.rule(1).nodes)
          for (double ph : grid.rule(2).nodes) fmax = std::max(fmax, std::abs(f(chart->map({t1, t2, ph}))));
      HolderRow row;
      row.level = level;
      row.beta = beta;
      row.holderNorm = fmax + 1.0;
      for (const ComplexPoint& z : zs) row.supT = std::max(row.supT, std::abs(applyTS(r, cfg, grid, f, z)));
      row.ratio = row.supT / row.holderNorm;
      if (level > 0 && row.ratio > 1.2 * prevRatio[b]) res.pass = false;
      prevRatio[b] = row.ratio;
      res.maxRatio = std::max(res.maxRatio, row.ratio);
      res.rows.push_back(row);
    }
  }
  return res;
}

}  // namespace cfk
