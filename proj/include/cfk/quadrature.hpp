#pragma once

// Boundary charts for the built-in domains in C^2, tensor-product rules with
// optional grading toward a parameter point, and boundary integrals of
// kernel densities.

#include <Eigen/SVD>
#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cfk/errors.hpp"
#include "cfk/forms.hpp"
#include "cfk/geometry.hpp"
#include "cfk/kernel.hpp"
#include "cfk/parallel.hpp"
#include "cfk/support.hpp"

namespace cfk {

// ---------------------------------------------------------------------------
// One-dimensional rules

struct AxisRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  size_t size() const { return nodes.size(); }
};

/// Gauss-Legendre rule with N nodes on [a, b].
inline AxisRule gaussLegendre(int N, double a, double b) {
  if (N < 1) throw ConfigError("Gauss-Legendre rule needs at least one node");
  AxisRule r;
  r.nodes.resize(N);
  r.weights.resize(N);
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  for (int i = 0; i < (N + 1) / 2; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (N + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= N; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (N == 1) p0 = 1.0, p1 = x;
      dp = N * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= N; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = N * (x * p1 - p0) / (x * x - 1.0);
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.nodes[i] = mid - half * x;
    r.nodes[N - 1 - i] = mid + half * x;
    r.weights[i] = r.weights[N - 1 - i] = half * w;
  }
  return r;
}

/// Midpoint trapezoid rule for a periodic integrand on [a, b).
inline AxisRule periodicTrapezoid(int N, double a, double b) {
  if (N < 1) throw ConfigError("trapezoid rule needs at least one node");
  AxisRule r;
  const double h = (b - a) / N;
  for (int k = 0; k < N; ++k) {
    r.nodes.push_back(a + (k + 0.5) * h);
    r.weights.push_back(h);
  }
  return r;
}

/// Gauss-Legendre on [a, b] graded toward `focus` in [a, b]: each side of the
/// focus is mapped from [0, 1] by u -> u^p with the focus at u = 0.
inline AxisRule gradedGauss(int N, double a, double b, double focus, double p) {
  if (p <= 1.0) return gaussLegendre(N, a, b);
  focus = std::clamp(focus, a, b);
  const double span = b - a;
  const double leftFrac = (focus - a) / span;
  AxisRule r;
  auto piece = [&](int count, double len, double sign) {
    if (count <= 0 || len <= 0.0) return;
    const AxisRule u = gaussLegendre(count, 0.0, 1.0);
    for (size_t i = 0; i < u.size(); ++i) {
      r.nodes.push_back(focus + sign * len * std::pow(u.nodes[i], p));
      r.weights.push_back(len * p * std::pow(u.nodes[i], p - 1.0) * u.weights[i]);
    }
  };
  const double tiny = 1e-12 * span;
  if (focus - a <= tiny) {
    piece(N, b - focus, 1.0);
  } else if (b - focus <= tiny) {
    piece(N, focus - a, -1.0);
  } else {
    int nl = static_cast<int>(std::lround(N * std::clamp(leftFrac, 0.25, 0.75)));
    nl = std::clamp(nl, 1, N - 1);
    piece(nl, focus - a, -1.0);
    piece(N - nl, b - focus, 1.0);
  }
  // Keep nodes in increasing order for a fixed summation order.
  std::vector<size_t> idx(r.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](size_t x, size_t y) { return r.nodes[x] < r.nodes[y]; });
  AxisRule sorted;
  for (size_t i : idx) {
    sorted.nodes.push_back(r.nodes[i]);
    sorted.weights.push_back(r.weights[i]);
  }
  return sorted;
}

/// Periodic rule on [a, b) graded toward `focus`: the graded Gauss rule on
/// the period centred at the focus, wrapped back into [a, b).
inline AxisRule gradedPeriodic(int N, double a, double b, double focus, double p) {
  if (p <= 1.0) return periodicTrapezoid(N, a, b);
  const double L = b - a;
  const AxisRule g = gradedGauss(N, focus - 0.5 * L, focus + 0.5 * L, focus, p);
  std::vector<std::pair<double, double>> pts;
  for (size_t i = 0; i < g.size(); ++i) {
    double x = std::fmod(g.nodes[i] - a, L);
    if (x < 0.0) x += L;
    pts.push_back({a + x, g.weights[i]});
  }
  std::sort(pts.begin(), pts.end());
  AxisRule r;
  for (const auto& [x, w] : pts) {
    r.nodes.push_back(x);
    r.weights.push_back(w);
  }
  return r;
}

/// Composite Gauss-Legendre rule on panels shrinking geometrically toward
/// `focus`: on each side the breakpoints are focus +- len * ratio^k,
/// k = 0..levels, with len the half period (periodic axes) or the distance
/// to the interval end. With capWidth > 0, panels reaching within capRadius
/// of the focus are split into pieces no wider than capWidth.
inline AxisRule geometricPanels(double lo, double hi, double focus, bool periodic, int levels, int nodesPerPanel,
                                double ratio, double capRadius = 0.0, double capWidth = 0.0) {
  if (levels < 1 || nodesPerPanel < 1 || !(ratio > 0.0 && ratio < 1.0))
    throw ConfigError("geometric panels need levels >= 1, nodes >= 1 and ratio in (0, 1)");
  if (capWidth < 0.0 || capRadius < 0.0) throw ConfigError("panel cap must be non-negative");
  const AxisRule ref = gaussLegendre(nodesPerPanel, 0.0, 1.0);
  AxisRule r;
  auto panel = [&](double a, double b) {
    if (a > b) std::swap(a, b);
    const double near = std::min(std::abs(a - focus), std::abs(b - focus));
    const int pieces =
        capWidth > 0.0 && near < capRadius ? std::max(1, static_cast<int>(std::ceil((b - a) / capWidth))) : 1;
    const double h = (b - a) / pieces;
    for (int p = 0; p < pieces; ++p) {
      const double pa = a + p * h;
      for (size_t i = 0; i < ref.size(); ++i) {
        r.nodes.push_back(pa + h * ref.nodes[i]);
        r.weights.push_back(h * ref.weights[i]);
      }
    }
  };
  auto side = [&](double len, double sign) {
    if (len <= 1e-14 * (hi - lo)) return;
    double outer = len;
    for (int k = 0; k < levels; ++k) {
      const double inner = outer * ratio;
      panel(focus + sign * outer, focus + sign * inner);
      outer = inner;
    }
    panel(focus + sign * outer, focus);
  };
  if (periodic) {
    side(0.5 * (hi - lo), -1.0);
    side(0.5 * (hi - lo), 1.0);
  } else {
    focus = std::clamp(focus, lo, hi);
    side(focus - lo, -1.0);
    side(hi - focus, 1.0);
  }
  std::vector<size_t> idx(r.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](size_t x, size_t y) { return r.nodes[x] < r.nodes[y]; });
  AxisRule sorted;
  for (size_t i : idx) {
    sorted.nodes.push_back(r.nodes[i]);
    sorted.weights.push_back(r.weights[i]);
  }
  return sorted;
}

// ---------------------------------------------------------------------------
// Charts

struct ParamAxis {
  double lo = 0.0;
  double hi = 1.0;
  bool periodic = false;
};

/// A parameterization of the whole boundary by a (2n-1)-box.
class BoundaryChart {
 public:
  virtual ~BoundaryChart() = default;
  virtual int dim() const = 0;
  virtual std::vector<ParamAxis> axes() const = 0;
  virtual ChartJet jet(const std::vector<double>& u) const = 0;
  /// Parameters of a boundary point.
  virtual std::vector<double> preimage(const ComplexPoint& p) const = 0;

  ComplexPoint map(const std::vector<double>& u) const { return jet(u).point; }
  /// +1 or -1 so that parameter order times this sign is the boundary
  /// orientation induced by the outward normal.
  double orientation() const { return orientation_; }

 protected:
  /// Fixes the sign from det[outward, d/du_1, ..., d/du_{2n-1}] in real
  /// coordinates (x_1, y_1, ..., x_n, y_n), using the radial direction as
  /// the outward transversal (charts here are for star-shaped domains).
  void fixOrientation(const std::vector<double>& u) {
    const ChartJet j = jet(u);
    const int n = dim();
    Eigen::MatrixXd M(2 * n, 2 * n);
    for (int k = 0; k < n; ++k) {
      M(2 * k, 0) = j.point[k].real();
      M(2 * k + 1, 0) = j.point[k].imag();
      for (int i = 0; i < 2 * n - 1; ++i) {
        M(2 * k, i + 1) = j.jacobian(k, i).real();
        M(2 * k + 1, i + 1) = j.jacobian(k, i).imag();
      }
    }
    orientation_ = M.determinant() >= 0.0 ? 1.0 : -1.0;
  }

  double orientation_ = 1.0;
};

using ChartPtr = std::shared_ptr<const BoundaryChart>;

/// Chart of a Reinhardt-type boundary in C^2 by angles (theta_1, theta_2, phi):
///   zeta_j = rho_j(phi) (a_j cos theta_j + i b_j sin theta_j),
/// theta periodic on [0, 2 pi), phi in [0, pi/2].
class HopfChart final : public BoundaryChart {
 public:
  /// Ellipse profile rho = (cos phi, sin phi).
  HopfChart(std::array<double, 2> a, std::array<double, 2> b) : a_(a), b_(b), m_(1) { init(); }
  /// Profile of |zeta_1|^2 + |zeta_2|^{2m} = 1: rho = lambda(phi) (cos phi, sin phi).
  explicit HopfChart(int m) : a_{1.0, 1.0}, b_{1.0, 1.0}, m_(m) {
    if (m < 1) throw UnsupportedDomain("complex-ellipsoid exponent must be >= 1");
    init();
  }

  int dim() const override { return 2; }
  std::vector<ParamAxis> axes() const override {
    return {{0.0, 2.0 * kPi, true}, {0.0, 2.0 * kPi, true}, {0.0, 0.5 * kPi, false}};
  }

  /// lambda(phi) and lambda'(phi).
  std::pair<double, double> profileScale(double phi) const {
    if (m_ == 1) return {1.0, 0.0};
    const double c = std::cos(phi), s = std::sin(phi);
    const double c2 = c * c, s2m = std::pow(s, 2 * m_);
    double lam = 2.0;
    for (int it = 0; it < 100; ++it) {
      const double G = lam * lam * c2 + std::pow(lam, 2 * m_) * s2m - 1.0;
      const double Gl = 2.0 * lam * c2 + 2.0 * m_ * std::pow(lam, 2 * m_ - 1) * s2m;
      const double step = G / Gl;
      lam -= step;
      if (std::abs(step) < 1e-16 * lam) break;
    }
    const double Gl = 2.0 * lam * c2 + 2.0 * m_ * std::pow(lam, 2 * m_ - 1) * s2m;
    const double Gp = -2.0 * lam * lam * c * s + 2.0 * m_ * std::pow(lam, 2 * m_) * std::pow(s, 2 * m_ - 1) * c;
    return {lam, -Gp / Gl};
  }

  ChartJet jet(const std::vector<double>& u) const override {
    if (u.size() != 3) throw DimensionMismatch("Hopf chart takes three parameters");
    const double t1 = u[0], t2 = u[1], phi = u[2];
    const auto [lam, dlam] = profileScale(phi);
    const double c = std::cos(phi), s = std::sin(phi);
    const double r1 = lam * c, r2 = lam * s;
    const double dr1 = dlam * c - lam * s, dr2 = dlam * s + lam * c;
    const cplx e1(a_[0] * std::cos(t1), b_[0] * std::sin(t1));
    const cplx e2(a_[1] * std::cos(t2), b_[1] * std::sin(t2));
    const cplx de1(-a_[0] * std::sin(t1), b_[0] * std::cos(t1));
    const cplx de2(-a_[1] * std::sin(t2), b_[1] * std::cos(t2));
    ChartJet j;
    j.point.resize(2);
    j.point << r1 * e1, r2 * e2;
    j.jacobian = CMat::Zero(2, 3);
    j.jacobian(0, 0) = r1 * de1;
    j.jacobian(1, 1) = r2 * de2;
    j.jacobian(0, 2) = dr1 * e1;
    j.jacobian(1, 2) = dr2 * e2;
    return j;
  }

  std::vector<double> preimage(const ComplexPoint& p) const override {
    const double x1 = p[0].real() / a_[0], y1 = p[0].imag() / b_[0];
    const double x2 = p[1].real() / a_[1], y2 = p[1].imag() / b_[1];
    auto wrap = [](double t) { return t < 0.0 ? t + 2.0 * kPi : t; };
    const double q1 = std::hypot(x1, y1), q2 = std::hypot(x2, y2);
    return {wrap(std::atan2(y1, x1)), wrap(std::atan2(y2, x2)), std::atan2(q2, q1)};
  }

 private:
  void init() { fixOrientation({0.3, 0.7, 0.6}); }

  std::array<double, 2> a_, b_;
  int m_;
};

/// Global charts for the built-in domains in C^2.
inline std::vector<ChartPtr> buildChart(const DomainSpec& spec) {
  validate(spec);
  if (spec.dim != 2) throw UnsupportedDomain("boundary charts are provided for n = 2 only");
  switch (spec.kind) {
    case DomainKind::Ball: {
      const double R = spec.params.empty() ? 1.0 : spec.params[0];
      return {std::make_shared<HopfChart>(std::array<double, 2>{R, R}, std::array<double, 2>{R, R})};
    }
    case DomainKind::ConvexEllipsoid:
      return {std::make_shared<HopfChart>(std::array<double, 2>{spec.params[0], spec.params[2]},
                                          std::array<double, 2>{spec.params[1], spec.params[3]})};
    case DomainKind::ComplexEllipsoid:
      return {std::make_shared<HopfChart>(static_cast<int>(spec.params[0]))};
    case DomainKind::Custom: break;
  }
  throw UnsupportedDomain("no boundary chart for custom domains");
}

// ---------------------------------------------------------------------------
// Grids and integration

struct GridOptions {
  int resolution = 48;
  /// Grading exponent p; values <= 1 give the plain rules.
  double grading = 1.0;
  /// Parameter point the grading concentrates on.
  std::optional<std::vector<double>> focus;
  /// > 0 replaces power grading by composite Gauss-Legendre panels whose
  /// widths shrink by panelRatio per level toward the focus.
  int geometricLevels = 0;
  int panelNodes = 8;
  double panelRatio = 0.5;
  /// Panels reaching within panelCapRadius of the focus are split to width
  /// at most panelCapWidth (0: off).
  double panelCapRadius = 0.0;
  double panelCapWidth = 0.0;
  /// Axes that are graded (empty: all). Ungraded axes use the plain rule.
  std::vector<bool> gradedAxes;
  /// Per-axis node counts for ungraded axes (empty: resolution).
  std::vector<int> axisResolution;
};

class QuadratureGrid {
 public:
  QuadratureGrid(ChartPtr chart, const GridOptions& opt) : chart_(std::move(chart)), opt_(opt) {
    if (opt.resolution < 2) throw ConfigError("quadrature resolution must be at least 2");
    const auto ax = chart_->axes();
    const bool focused = opt.focus.has_value() && (opt.grading > 1.0 || opt.geometricLevels > 0);
    if (focused && opt.focus->size() != ax.size()) throw DimensionMismatch("grading focus has the wrong arity");
    if (!opt.gradedAxes.empty() && opt.gradedAxes.size() != ax.size())
      throw DimensionMismatch("gradedAxes has the wrong arity");
    if (!opt.axisResolution.empty() && opt.axisResolution.size() != ax.size())
      throw DimensionMismatch("axisResolution has the wrong arity");
    for (size_t i = 0; i < ax.size(); ++i) {
      const bool graded = focused && (opt.gradedAxes.empty() || opt.gradedAxes[i]);
      const int N = opt.axisResolution.empty() ? opt.resolution : opt.axisResolution[i];
      if (graded && opt.geometricLevels > 0) {
        rules_.push_back(geometricPanels(ax[i].lo, ax[i].hi, (*opt.focus)[i], ax[i].periodic, opt.geometricLevels,
                                         opt.panelNodes, opt.panelRatio, opt.panelCapRadius, opt.panelCapWidth));
      } else {
        const double f = graded ? (*opt.focus)[i] : 0.0;
        const double p = graded ? opt.grading : 1.0;
        rules_.push_back(ax[i].periodic ? gradedPeriodic(N, ax[i].lo, ax[i].hi, f, p)
                                        : gradedGauss(N, ax[i].lo, ax[i].hi, f, p));
      }
    }
    checkRank();
  }

  const BoundaryChart& chart() const { return *chart_; }
  const ChartPtr& chartPtr() const { return chart_; }
  const GridOptions& options() const { return opt_; }
  const AxisRule& rule(size_t axis) const { return rules_[axis]; }
  size_t axes() const { return rules_.size(); }
  size_t size() const {
    size_t s = 1;
    for (const auto& r : rules_) s *= r.size();
    return s;
  }

  /// Integrates m scalar densities. `fn(jet, out)` writes the m pulled-back
  /// coefficients at one node; weights and orientation are applied here.
  /// Nodes are summed pairwise per outer-axis slice, then pairwise across
  /// slices, so the result does not depend on the thread count.
  template <class Fn>
  CVec integrate(int m, Fn&& fn) const {
    const size_t n0 = rules_[0].size();
    size_t inner = 1;
    for (size_t a = 1; a < rules_.size(); ++a) inner *= rules_[a].size();
    std::vector<std::vector<cplx>> slices(n0);
    const double orient = chart_->orientation();
    parallelFor(n0, [&](size_t i0) {
      std::vector<std::vector<cplx>> vals(static_cast<size_t>(m), std::vector<cplx>(inner));
      std::vector<double> u(rules_.size());
      std::vector<cplx> out(static_cast<size_t>(m));
      u[0] = rules_[0].nodes[i0];
      for (size_t k = 0; k < inner; ++k) {
        size_t rest = k;
        double w = rules_[0].weights[i0];
        for (size_t a = rules_.size(); a-- > 1;) {
          const size_t ia = rest % rules_[a].size();
          rest /= rules_[a].size();
          u[a] = rules_[a].nodes[ia];
          w *= rules_[a].weights[ia];
        }
        const ChartJet jet = chart_->jet(u);
        std::fill(out.begin(), out.end(), cplx(0.0));
        fn(jet, out.data());
        for (int c = 0; c < m; ++c) {
          if (!std::isfinite(out[c].real()) || !std::isfinite(out[c].imag())) {
            std::ostringstream os;
            os << "density component " << c << " at parameters (";
            for (size_t a = 0; a < u.size(); ++a) os << (a ? ", " : "") << u[a];
            os << ")";
            throw NonFiniteDensity(os.str());
          }
          vals[c][k] = out[c] * (w * orient);
        }
      }
      slices[i0].resize(static_cast<size_t>(m));
      for (int c = 0; c < m; ++c) slices[i0][c] = pairwiseSum(vals[c]);
    });
    CVec total(m);
    std::vector<cplx> col(n0);
    for (int c = 0; c < m; ++c) {
      for (size_t i = 0; i < n0; ++i) col[i] = slices[i][c];
      total[c] = pairwiseSum(col);
    }
    return total;
  }

 private:
  void checkRank() const {
    constexpr double tolRank = 1e-12;
    std::vector<std::vector<size_t>> picks;
    for (const auto& r : rules_) {
      std::vector<size_t> p;
      const size_t k = std::min<size_t>(8, r.size());
      for (size_t i = 0; i < k; ++i) p.push_back(i * (r.size() - 1) / std::max<size_t>(1, k - 1));
      picks.push_back(p);
    }
    std::vector<size_t> idx(rules_.size(), 0);
    std::vector<double> u(rules_.size());
    while (true) {
      for (size_t a = 0; a < rules_.size(); ++a) u[a] = rules_[a].nodes[picks[a][idx[a]]];
      const ChartJet j = chart_->jet(u);
      const Eigen::Index n = j.jacobian.rows(), d = j.jacobian.cols();
      Eigen::MatrixXd R(2 * n, d);
      R.topRows(n) = j.jacobian.real();
      R.bottomRows(n) = j.jacobian.imag();
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(R);
      if (svd.singularValues().minCoeff() < tolRank)
        throw InvariantViolation("chart jacobian is rank deficient at a grid node");
      size_t a = 0;
      while (a < idx.size() && ++idx[a] == picks[a].size()) idx[a++] = 0;
      if (a == idx.size()) break;
    }
  }

  ChartPtr chart_;
  GridOptions opt_;
  std::vector<AxisRule> rules_;
};

/// Integral over the grid of one density; the density is evaluated at the
/// chart point and pulled back by the caller-supplied functor.
inline cplx integrateDensity(const QuadratureGrid& grid, const std::function<cplx(const ChartJet&)>& density) {
  return grid.integrate(1, [&](const ChartJet& j, cplx* out) { out[0] = density(j); })[0];
}

/// Integral of the pullback of a top-degree form field.
inline cplx integrateForm(const QuadratureGrid& grid, const std::function<PointForm(const ComplexPoint&)>& form) {
  return integrateDensity(grid, [&](const ChartJet& j) { return pullbackTop(form(j.point), j); });
}

// ---------------------------------------------------------------------------
// Distance to the boundary

/// Foot of the boundary normal through z: Newton steps along the real
/// gradient, with a bisection fallback along the initial normal.
inline ComplexPoint boundaryProjection(const DefiningFunction& r, const ComplexPoint& z) {
  ComplexPoint p = z;
  for (int it = 0; it < 50; ++it) {
    const Jet j = r.jet(p, 1);
    const CVec G = 2.0 * j.grad.conjugate();
    const double g2 = G.squaredNorm();
    if (g2 < 1e-300) break;
    const ComplexPoint next = p - (j.value / g2) * G;
    const double step = (next - p).norm();
    p = next;
    if (std::abs(j.value) < 1e-15 && step < 1e-15) break;
  }
  if (std::abs(r.eval(p)) < 1e-10) return p;
  const Jet j0 = r.jet(z, 1);
  const CVec dir = j0.grad.conjugate().normalized();
  const double sign = j0.value < 0.0 ? 1.0 : -1.0;
  double lo = 0.0, hi = 1e-3;
  while (sign * r.eval(z + sign * hi * dir) < 0.0 && hi < 1e3) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (sign * r.eval(z + sign * mid * dir) < 0.0 ? lo : hi) = mid;
  }
  return z + sign * 0.5 * (lo + hi) * dir;
}

inline double boundaryDistance(const DefiningFunction& r, const ComplexPoint& z) {
  return (z - boundaryProjection(r, z)).norm();
}

namespace detail {
inline void requireInterior(const DefiningFunction& r, const ComplexPoint& z, double distFloor) {
  if (r.eval(z) >= 0.0) throw PointTooClose("z is not inside the domain");
  const double d = boundaryDistance(r, z);
  if (d < distFloor) throw PointTooClose("dist(z, bD) = " + std::to_string(d) + " below the floor");
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Integral operators

using BoundaryFunction = std::function<cplx(const ComplexPoint&)>;

/// T^S f(z) for several f at once.
inline CVec applyTSMany(const DefiningFunction& r, const KernelConfig& cfg, const QuadratureGrid& grid,
                        const std::vector<BoundaryFunction>& fs, const ComplexPoint& z) {
  detail::requireInterior(r, z, cfg.distFloor);
  const int m = static_cast<int>(fs.size());
  return grid.integrate(m, [&](const ChartJet& jet, cplx* out) {
    const cplx v = omega0Density(r.jet(jet.point, 3), cfg, jet, z);
    for (int i = 0; i < m; ++i) out[i] = fs[i](jet.point) * v;
  });
}

inline cplx applyTS(const DefiningFunction& r, const KernelConfig& cfg, const QuadratureGrid& grid,
                    const BoundaryFunction& f, const ComplexPoint& z) {
  return applyTSMany(r, cfg, grid, {f}, z)[0];
}

/// Bochner-Martinelli integral of several f at once.
inline CVec applyTBMMany(const QuadratureGrid& grid, const std::vector<BoundaryFunction>& fs,
                         const ComplexPoint& z) {
  const int m = static_cast<int>(fs.size());
  return grid.integrate(m, [&](const ChartJet& jet, cplx* out) {
    const cplx v = bochnerMartinelliDensity(jet, z);
    for (int i = 0; i < m; ++i) out[i] = fs[i](jet.point) * v;
  });
}

inline cplx applyTBM(const QuadratureGrid& grid, const BoundaryFunction& f, const ComplexPoint& z) {
  return applyTBMMany(grid, {f}, z)[0];
}

/// dzbar_l of T^S f at z, l = 0..n-1, by differentiating under the integral.
inline CVec dbarZApplyTS(const DefiningFunction& r, const KernelConfig& cfg, const QuadratureGrid& grid,
                         const BoundaryFunction& f, const ComplexPoint& z) {
  const int n = static_cast<int>(z.size());
  return grid.integrate(n, [&](const ChartJet& jet, cplx* out) {
    dbarZOmega0Density(r.jet(jet.point, 3), cfg, jet, z, out);
    const cplx fv = f(jet.point);
    for (int l = 0; l < n; ++l) out[l] *= fv;
  });
}

inline CVec dbarZApplyTBM(const QuadratureGrid& grid, const BoundaryFunction& f, const ComplexPoint& z) {
  const int n = static_cast<int>(z.size());
  return grid.integrate(n, [&](const ChartJet& jet, cplx* out) {
    dbarZBochnerMartinelliDensity(jet, z, out);
    const cplx fv = f(jet.point);
    for (int l = 0; l < n; ++l) out[l] *= fv;
  });
}

/// Axes along which the chart actually moves at parameter u (a zero
/// jacobian column marks a polar axis that needs no grading).
inline std::vector<bool> movingAxes(const BoundaryChart& chart, const std::vector<double>& u) {
  const ChartJet j = chart.jet(u);
  std::vector<bool> out;
  for (Eigen::Index i = 0; i < j.jacobian.cols(); ++i) out.push_back(j.jacobian.col(i).norm() > 1e-8);
  return out;
}

/// Grid graded toward the chart preimage of a point (projected to bD).
inline QuadratureGrid focusedGrid(const ChartPtr& chart, const DefiningFunction& r, const ComplexPoint& p,
                                  int resolution, double grading) {
  GridOptions o;
  o.resolution = resolution;
  o.grading = grading;
  o.focus = chart->preimage(boundaryProjection(r, p));
  return QuadratureGrid(chart, o);
}

}  // namespace cfk
