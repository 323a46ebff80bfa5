#pragma once

// Defining functions with Wirtinger jets up to order three, Levi forms,
// tangential projections and z-diagonalizing frames.
//
// Conventions used throughout the library:
//   grad[j]          = dr/dzeta_j
//   hess_holo(j,k)   = d^2 r / dzeta_j dzeta_k
//   hess_mixed(j,k)  = d^2 r / dzeta_j dzetabar_k      (Hermitian)
//   third[k](j,m)    = d^3 r / dzetabar_k dzeta_j dzeta_m

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cfk/errors.hpp"
#include "cfk/random.hpp"
#include "cfk/report.hpp"
#include "cfk/types.hpp"

namespace cfk {

struct Jet {
  double value = 0.0;
  CVec grad;
  CMat hess_holo;
  CMat hess_mixed;
  std::vector<CMat> third;
};

class DefiningFunction {
 public:
  virtual ~DefiningFunction() = default;
  virtual int dim() const = 0;
  /// Jets through `order` (0..3). Higher-order members are left empty.
  virtual Jet jet(const ComplexPoint& p, int order = 3) const = 0;

  double eval(const ComplexPoint& p) const { return jet(p, 0).value; }
  CVec grad(const ComplexPoint& p) const { return jet(p, 1).grad; }
};

using DefiningPtr = std::shared_ptr<const DefiningFunction>;

namespace detail {

inline Jet emptyJet(int n, int order) {
  Jet j;
  if (order >= 1) j.grad = CVec::Zero(n);
  if (order >= 2) {
    j.hess_holo = CMat::Zero(n, n);
    j.hess_mixed = CMat::Zero(n, n);
  }
  if (order >= 3) j.third.assign(n, CMat::Zero(n, n));
  return j;
}

// w^a * conj(w)^b with the convention 0^0 = 1.
inline cplx monomial(cplx w, int a, int b) {
  cplx out = 1.0;
  for (int i = 0; i < a; ++i) out *= w;
  for (int i = 0; i < b; ++i) out *= std::conj(w);
  return out;
}

}  // namespace detail

/// r = |zeta|^2 - R^2.
class BallFunction final : public DefiningFunction {
 public:
  explicit BallFunction(int n, double radius = 1.0) : n_(n), radius_(radius) {}
  int dim() const override { return n_; }

  Jet jet(const ComplexPoint& p, int order = 3) const override {
    Jet j = detail::emptyJet(n_, order);
    j.value = p.squaredNorm() - radius_ * radius_;
    if (order >= 1) j.grad = p.conjugate();
    if (order >= 2) j.hess_mixed = CMat::Identity(n_, n_);
    return j;
  }

 private:
  int n_;
  double radius_;
};

/// Real ellipsoid sum_j (x_j/a_j)^2 + (y_j/b_j)^2 - 1 with zeta_j = x_j + i y_j.
/// Convex, strictly pseudoconvex, and its holomorphic Hessian is nonzero
/// whenever a_j != b_j.
class ConvexEllipsoidFunction final : public DefiningFunction {
 public:
  ConvexEllipsoidFunction(std::vector<double> a, std::vector<double> b)
      : a_(std::move(a)), b_(std::move(b)) {
    if (a_.size() != b_.size() || a_.empty())
      throw DimensionMismatch("convex ellipsoid needs one (a,b) pair per coordinate");
  }
  int dim() const override { return static_cast<int>(a_.size()); }
  const std::vector<double>& a() const { return a_; }
  const std::vector<double>& b() const { return b_; }

  Jet jet(const ComplexPoint& p, int order = 3) const override {
    const int n = dim();
    Jet j = detail::emptyJet(n, order);
    double v = -1.0;
    for (int k = 0; k < n; ++k) {
      const double ia = 1.0 / (a_[k] * a_[k]);
      const double ib = 1.0 / (b_[k] * b_[k]);
      v += p[k].real() * p[k].real() * ia + p[k].imag() * p[k].imag() * ib;
      if (order >= 1)
        j.grad[k] = 0.5 * (ia - ib) * p[k] + 0.5 * (ia + ib) * std::conj(p[k]);
      if (order >= 2) {
        j.hess_holo(k, k) = 0.5 * (ia - ib);
        j.hess_mixed(k, k) = 0.5 * (ia + ib);
      }
    }
    j.value = v;
    return j;
  }

 private:
  std::vector<double> a_, b_;
};

/// r = |zeta_1|^2 + ... + |zeta_{n-1}|^2 + |zeta_n|^{2m} - 1, integer m >= 1.
/// Weakly pseudoconvex along {zeta_n = 0} when m >= 2.
class ComplexEllipsoidFunction final : public DefiningFunction {
 public:
  ComplexEllipsoidFunction(int n, int m) : n_(n), m_(m) {
    if (m < 1) throw UnsupportedDomain("complex-ellipsoid exponent must be an integer >= 1");
  }
  int dim() const override { return n_; }
  int exponent() const { return m_; }

  Jet jet(const ComplexPoint& p, int order = 3) const override {
    Jet j = detail::emptyJet(n_, order);
    const int last = n_ - 1;
    const cplx w = p[last];
    const double m = m_;
    double v = -1.0;
    for (int k = 0; k < last; ++k) v += std::norm(p[k]);
    v += std::pow(std::norm(w), m_);
    j.value = v;
    if (order >= 1) {
      for (int k = 0; k < last; ++k) j.grad[k] = std::conj(p[k]);
      j.grad[last] = m * detail::monomial(w, m_ - 1, m_);
    }
    if (order >= 2) {
      for (int k = 0; k < last; ++k) j.hess_mixed(k, k) = 1.0;
      j.hess_mixed(last, last) = m * m * detail::monomial(w, m_ - 1, m_ - 1);
      if (m_ >= 2) j.hess_holo(last, last) = m * (m - 1) * detail::monomial(w, m_ - 2, m_);
    }
    if (order >= 3 && m_ >= 2)
      j.third[last](last, last) = m * m * (m - 1) * detail::monomial(w, m_ - 2, m_ - 1);
    return j;
  }

 private:
  int n_, m_;
};

/// Jets of the product of two real functions, from the jets of the factors.
inline Jet productJet(const Jet& a, const Jet& b, int n, int order) {
  Jet r = detail::emptyJet(n, order);
  r.value = a.value * b.value;
  if (order < 1) return r;
  // d/dzetabar_k of a real function is conj(d/dzeta_k).
  const CVec abar = a.grad.conjugate();
  const CVec bbar = b.grad.conjugate();
  r.grad = a.grad * b.value + a.value * b.grad;
  if (order < 2) return r;
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      r.hess_holo(j, k) = a.hess_holo(j, k) * b.value + a.grad[j] * b.grad[k] +
                          a.grad[k] * b.grad[j] + a.value * b.hess_holo(j, k);
      r.hess_mixed(j, k) = a.hess_mixed(j, k) * b.value + a.grad[j] * bbar[k] +
                           abar[k] * b.grad[j] + a.value * b.hess_mixed(j, k);
    }
  if (order < 3) return r;
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int m = 0; m < n; ++m) {
        r.third[k](j, m) = a.third[k](j, m) * b.value + a.hess_holo(j, m) * bbar[k] +
                           a.hess_mixed(j, k) * b.grad[m] + a.grad[j] * b.hess_mixed(m, k) +
                           a.hess_mixed(m, k) * b.grad[j] + a.grad[m] * b.hess_mixed(j, k) +
                           abar[k] * b.hess_holo(j, m) + a.value * b.third[k](j, m);
      }
  return r;
}

/// Jets of exp(-C |z|^2).
inline Jet gaussianJet(const ComplexPoint& z, double c, int order) {
  const int n = static_cast<int>(z.size());
  Jet e = detail::emptyJet(n, order);
  const double E = std::exp(-c * z.squaredNorm());
  e.value = E;
  if (order < 1) return e;
  const CVec zb = z.conjugate();
  e.grad = -c * E * zb;
  if (order < 2) return e;
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      e.hess_holo(j, k) = c * c * zb[j] * zb[k] * E;
      e.hess_mixed(j, k) = ((j == k ? -c : 0.0) + c * c * zb[j] * z[k]) * E;
    }
  if (order < 3) return e;
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int m = 0; m < n; ++m) {
        cplx t = -c * c * c * zb[j] * zb[m] * z[k];
        if (j == k) t += c * c * zb[m];
        if (m == k) t += c * c * zb[j];
        e.third[k](j, m) = t * E;
      }
  return e;
}

/// r(z) = phi(z) exp(-C |z|^2), jets by the product rule.
class RescaledFunction final : public DefiningFunction {
 public:
  RescaledFunction(DefiningPtr phi, double c) : phi_(std::move(phi)), c_(c) {
    if (c_ < 0.0) throw ConfigError("rescaling constant C must be nonnegative");
  }
  int dim() const override { return phi_->dim(); }
  Jet jet(const ComplexPoint& p, int order = 3) const override {
    if (c_ == 0.0) return phi_->jet(p, order);
    return productJet(phi_->jet(p, order), gaussianJet(p, c_, order), dim(), order);
  }
  const DefiningPtr& base() const { return phi_; }
  double constant() const { return c_; }

 private:
  DefiningPtr phi_;
  double c_;
};

inline DefiningPtr rescaleDefining(DefiningPtr phi, double c) {
  return std::make_shared<RescaledFunction>(std::move(phi), c);
}

/// r'(w) = r(U w) for a unitary U. Used to express jets in z-diagonalizing
/// coordinates.
class UnitaryTransformed final : public DefiningFunction {
 public:
  UnitaryTransformed(DefiningPtr r, CMat u) : r_(std::move(r)), u_(std::move(u)) {}
  int dim() const override { return r_->dim(); }
  Jet jet(const ComplexPoint& w, int order = 3) const override {
    const Jet j = r_->jet(u_ * w, order);
    Jet o;
    o.value = j.value;
    if (order >= 1) o.grad = u_.transpose() * j.grad;
    if (order >= 2) {
      o.hess_holo = u_.transpose() * j.hess_holo * u_;
      o.hess_mixed = u_.transpose() * j.hess_mixed * u_.conjugate();
    }
    if (order >= 3) {
      const int n = dim();
      std::vector<CMat> rotated(n);
      for (int k = 0; k < n; ++k) rotated[k] = u_.transpose() * j.third[k] * u_;
      o.third.assign(n, CMat::Zero(n, n));
      for (int c = 0; c < n; ++c)
        for (int k = 0; k < n; ++k) o.third[c] += std::conj(u_(k, c)) * rotated[k];
    }
    return o;
  }
  const CMat& unitary() const { return u_; }

 private:
  DefiningPtr r_;
  CMat u_;
};

/// Order-2 jets from values only, by central differences in the 2n real
/// directions. Step h is absolute.
inline Jet finiteDifferenceOrder2(const std::function<double(const ComplexPoint&)>& f,
                                  const ComplexPoint& p, double h) {
  const int n = static_cast<int>(p.size());
  const int d = 2 * n;
  auto shifted = [&](int a, double s) {
    ComplexPoint q = p;
    q[a / 2] += (a % 2 == 0) ? cplx(s, 0.0) : cplx(0.0, s);
    return q;
  };
  Jet j = detail::emptyJet(n, 2);
  j.value = f(p);
  Eigen::VectorXd g(d);
  Eigen::MatrixXd H(d, d);
  for (int a = 0; a < d; ++a) {
    const double fp = f(shifted(a, h)), fm = f(shifted(a, -h));
    g[a] = (fp - fm) / (2 * h);
    H(a, a) = (fp - 2 * j.value + fm) / (h * h);
  }
  for (int a = 0; a < d; ++a)
    for (int b = a + 1; b < d; ++b) {
      auto q = [&](double sa, double sb) {
        ComplexPoint x = shifted(a, sa);
        x[b / 2] += (b % 2 == 0) ? cplx(sb, 0.0) : cplx(0.0, sb);
        return f(x);
      };
      H(a, b) = H(b, a) = (q(h, h) - q(h, -h) - q(-h, h) + q(-h, -h)) / (4 * h * h);
    }
  // Wirtinger: d/dz = (d/dx - i d/dy)/2, d/dzbar = (d/dx + i d/dy)/2.
  for (int k = 0; k < n; ++k) j.grad[k] = 0.5 * cplx(g[2 * k], -g[2 * k + 1]);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      const double xx = H(2 * a, 2 * b), xy = H(2 * a, 2 * b + 1);
      const double yx = H(2 * a + 1, 2 * b), yy = H(2 * a + 1, 2 * b + 1);
      j.hess_holo(a, b) = 0.25 * cplx(xx - yy, -(xy + yx));
      j.hess_mixed(a, b) = 0.25 * cplx(xx + yy, xy - yx);
    }
  return j;
}

/// A user-supplied defining function. The order-2 jets come from the
/// callback; the third-order tensor is a nested central difference of the
/// order-2 jets with step cbrt(eps)*scale.
class CustomFunction final : public DefiningFunction {
 public:
  using Order2 = std::function<Jet(const ComplexPoint&)>;

  CustomFunction(int n, Order2 order2, double scale = 1.0)
      : n_(n), order2_(std::move(order2)), scale_(scale) {}

  /// Value-only input: every jet is differenced.
  static std::shared_ptr<CustomFunction> fromValues(int n,
                                                    std::function<double(const ComplexPoint&)> f,
                                                    double scale = 1.0) {
    const double h = 1e-4 * scale;
    return std::make_shared<CustomFunction>(
        n, [f = std::move(f), h](const ComplexPoint& p) { return finiteDifferenceOrder2(f, p, h); },
        scale);
  }

  int dim() const override { return n_; }

  Jet jet(const ComplexPoint& p, int order = 3) const override {
    Jet j = order2_(p);
    if (order >= 3) {
      const double h = std::cbrt(std::numeric_limits<double>::epsilon()) * scale_;
      j.third.assign(n_, CMat::Zero(n_, n_));
      for (int k = 0; k < n_; ++k) {
        ComplexPoint q = p;
        q[k] = p[k] + h;
        const CMat hx_p = order2_(q).hess_holo;
        q[k] = p[k] - h;
        const CMat hx_m = order2_(q).hess_holo;
        q[k] = p[k] + cplx(0.0, h);
        const CMat hy_p = order2_(q).hess_holo;
        q[k] = p[k] - cplx(0.0, h);
        const CMat hy_m = order2_(q).hess_holo;
        j.third[k] = 0.5 * ((hx_p - hx_m) / (2 * h) + kI * (hy_p - hy_m) / (2 * h));
      }
    }
    if (order < 2) {
      j.hess_holo.resize(0, 0);
      j.hess_mixed.resize(0, 0);
    }
    if (order < 1) j.grad.resize(0);
    return j;
  }

 private:
  int n_;
  Order2 order2_;
  double scale_;
};

// ---------------------------------------------------------------------------
// Domains

enum class DomainKind { Ball, ConvexEllipsoid, ComplexEllipsoid, Custom };

inline std::string toString(DomainKind k) {
  switch (k) {
    case DomainKind::Ball: return "ball";
    case DomainKind::ConvexEllipsoid: return "convex-ellipsoid";
    case DomainKind::ComplexEllipsoid: return "complex-ellipsoid";
    case DomainKind::Custom: return "custom";
  }
  return "?";
}

inline DomainKind domainKindFromString(const std::string& s) {
  if (s == "ball") return DomainKind::Ball;
  if (s == "convex-ellipsoid") return DomainKind::ConvexEllipsoid;
  if (s == "complex-ellipsoid") return DomainKind::ComplexEllipsoid;
  if (s == "custom") return DomainKind::Custom;
  throw ConfigError("unknown domain kind '" + s + "'");
}

/// Parameters per kind:
///   ball              [R]                      (default R = 1)
///   convex-ellipsoid  [a_1, b_1, ..., a_n, b_n]
///   complex-ellipsoid [m]                      (integer m >= 1)
///   custom            [c_1, ..., c_n, c_0]     r = sum c_j |zeta_j|^2 + c_0, jets differenced
struct DomainSpec {
  DomainKind kind = DomainKind::Ball;
  int dim = 2;
  std::vector<double> params;
  double C = 0.0;
  double bandWidth = 0.0;  // <= 0 selects 0.15 * diameter
  double samplingRadius = 2.0;  // custom only: radial search bound

  static DomainSpec ball(double radius = 1.0) {
    DomainSpec s;
    s.kind = DomainKind::Ball;
    s.params = {radius};
    return s;
  }
  static DomainSpec complexEllipsoid(int m) {
    DomainSpec s;
    s.kind = DomainKind::ComplexEllipsoid;
    s.params = {static_cast<double>(m)};
    return s;
  }
  static DomainSpec convexEllipsoid(std::vector<double> ab) {
    DomainSpec s;
    s.kind = DomainKind::ConvexEllipsoid;
    s.params = std::move(ab);
    return s;
  }

  double diameter() const {
    switch (kind) {
      case DomainKind::Ball: return 2.0 * (params.empty() ? 1.0 : params[0]);
      case DomainKind::ConvexEllipsoid:
        return 2.0 * *std::max_element(params.begin(), params.end());
      case DomainKind::ComplexEllipsoid: return 2.0;
      case DomainKind::Custom: return 2.0 * samplingRadius;
    }
    return 2.0;
  }
  double band() const { return bandWidth > 0.0 ? bandWidth : 0.15 * diameter(); }
  double boundingRadius() const { return 0.5 * diameter(); }
};

inline void validate(const DomainSpec& s) {
  if (s.dim < 1) throw ConfigError("dimension must be positive");
  switch (s.kind) {
    case DomainKind::Ball:
      if (s.params.size() > 1 || (!s.params.empty() && s.params[0] <= 0.0))
        throw ConfigError("ball takes one positive radius");
      break;
    case DomainKind::ConvexEllipsoid:
      if (s.params.size() != static_cast<size_t>(2 * s.dim))
        throw ConfigError("convex-ellipsoid takes 2n radii");
      for (double v : s.params)
        if (v <= 0.0) throw ConfigError("convex-ellipsoid radii must be positive");
      break;
    case DomainKind::ComplexEllipsoid: {
      if (s.params.size() != 1) throw ConfigError("complex-ellipsoid takes the exponent m");
      const double m = s.params[0];
      if (m != std::floor(m) || m < 1.0)
        throw UnsupportedDomain("complex-ellipsoid exponent must be an integer");
      break;
    }
    case DomainKind::Custom:
      if (s.params.size() != static_cast<size_t>(s.dim + 1))
        throw ConfigError("custom takes n+1 coefficients");
      break;
  }
  if (s.C < 0.0) throw ConfigError("C must be nonnegative");
}

/// The unrescaled function phi of a domain.
inline DefiningPtr makeBaseFunction(const DomainSpec& s) {
  validate(s);
  switch (s.kind) {
    case DomainKind::Ball:
      return std::make_shared<BallFunction>(s.dim, s.params.empty() ? 1.0 : s.params[0]);
    case DomainKind::ConvexEllipsoid: {
      std::vector<double> a, b;
      for (int j = 0; j < s.dim; ++j) {
        a.push_back(s.params[2 * j]);
        b.push_back(s.params[2 * j + 1]);
      }
      return std::make_shared<ConvexEllipsoidFunction>(a, b);
    }
    case DomainKind::ComplexEllipsoid:
      return std::make_shared<ComplexEllipsoidFunction>(s.dim, static_cast<int>(s.params[0]));
    case DomainKind::Custom: {
      std::vector<double> c = s.params;
      const int n = s.dim;
      return CustomFunction::fromValues(n, [c, n](const ComplexPoint& p) {
        double v = c[n];
        for (int j = 0; j < n; ++j) v += c[j] * std::norm(p[j]);
        return v;
      });
    }
  }
  throw UnsupportedDomain(toString(s.kind));
}

/// The rescaled defining function r = phi exp(-C|z|^2) of a domain.
inline DefiningPtr makeDefiningFunction(const DomainSpec& s) {
  DefiningPtr phi = makeBaseFunction(s);
  return s.C > 0.0 ? rescaleDefining(phi, s.C) : phi;
}

// ---------------------------------------------------------------------------
// Levi geometry

inline double leviForm(const Jet& jet, const CVec& t, const Tolerances& tol = {}) {
  cplx s = 0.0;
  const Eigen::Index n = t.size();
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index k = 0; k < n; ++k) s += jet.hess_mixed(j, k) * t[j] * std::conj(t[k]);
  const double scale = jet.hess_mixed.cwiseAbs().maxCoeff() * t.squaredNorm();
  if (std::abs(s.imag()) > tol.sym * std::max(1.0, scale))
    throw InvariantViolation("Levi form has imaginary residue " + std::to_string(s.imag()));
  return s.real();
}

inline double leviForm(const DefiningFunction& r, const ComplexPoint& zeta, const CVec& t,
                       const Tolerances& tol = {}) {
  return leviForm(r.jet(zeta, 2), t, tol);
}

/// Orthogonal projection of v onto {t : sum_j grad_j t_j = 0}.
inline CVec tangentialProjection(const CVec& grad, const CVec& v, const Tolerances& tol = {}) {
  const CVec N = grad.conjugate();
  const double nn = N.squaredNorm();
  if (std::sqrt(nn) < tol.grad)
    throw DegenerateGradient("|grad r| = " + std::to_string(std::sqrt(nn)));
  return v - (hdot(v, N) / nn) * N;
}

inline CVec tangentialProjection(const DefiningFunction& r, const ComplexPoint& zeta,
                                 const CVec& v, const Tolerances& tol = {}) {
  return tangentialProjection(r.grad(zeta), v, tol);
}

/// Deterministic orthonormal basis of the complex tangent space: projected
/// standard basis vectors, Gram-Schmidt in index order, skipping vectors
/// whose norm drops below 1e-8.
inline std::vector<CVec> tangentBasis(const CVec& grad, const Tolerances& tol = {}) {
  const Eigen::Index n = grad.size();
  std::vector<CVec> basis;
  for (Eigen::Index i = 0; i < n && static_cast<Eigen::Index>(basis.size()) < n - 1; ++i) {
    CVec v = tangentialProjection(grad, CVec::Unit(n, i), tol);
    for (const CVec& b : basis) v -= hdot(v, b) * b;
    const double len = v.norm();
    if (len < 1e-8) continue;
    basis.push_back(v / len);
  }
  return basis;
}

struct LeviSpectrum {
  ComplexPoint basePoint;
  std::vector<CVec> tangentBasis;
  std::vector<double> eigenvalues;  // descending
  /// Column j < n-1 is the j-th Levi eigendirection, column n-1 the unit
  /// complex normal. Old coordinates = unitary * new coordinates.
  CMat unitary;
};

/// Levi matrix of `jet` restricted to span(basis): entry (a,b) is the
/// Hermitian form evaluated on (basis[b], basis[a]) so that
/// L(sum c_a basis_a) = c^H M c.
inline CMat restrictedLevi(const Jet& jet, const std::vector<CVec>& basis) {
  const Eigen::Index m = static_cast<Eigen::Index>(basis.size());
  CMat M(m, m);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < m; ++b)
      M(a, b) = (basis[b].transpose() * jet.hess_mixed * basis[a].conjugate())(0, 0);
  return M;
}

inline LeviSpectrum leviSpectrum(const Jet& jet, const ComplexPoint& z, const Tolerances& tol = {}) {
  const Eigen::Index n = z.size();
  LeviSpectrum out;
  out.basePoint = z;
  out.tangentBasis = tangentBasis(jet.grad, tol);
  const Eigen::Index m = static_cast<Eigen::Index>(out.tangentBasis.size());
  out.unitary = CMat::Zero(n, n);
  const CVec nu = jet.grad.conjugate().normalized();
  out.unitary.col(n - 1) = nu;
  if (m == 0) return out;

  const CMat A = restrictedLevi(jet, out.tangentBasis);
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (A + A.adjoint()));
  std::vector<std::pair<double, CVec>> pairs;
  for (Eigen::Index i = 0; i < m; ++i) {
    CVec c = es.eigenvectors().col(i);
    for (Eigen::Index k = 0; k < m; ++k)
      if (std::abs(c[k]) > 1e-12) {
        c *= std::conj(c[k]) / std::abs(c[k]);
        break;
      }
    pairs.emplace_back(es.eigenvalues()[i], c);
  }
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const auto& x, const auto& y) { return x.first > y.first; });
  for (Eigen::Index i = 0; i < m; ++i) {
    out.eigenvalues.push_back(pairs[i].first);
    CVec dir = CVec::Zero(n);
    for (Eigen::Index a = 0; a < m; ++a) dir += pairs[i].second[a] * out.tangentBasis[a];
    out.unitary.col(i) = dir;
  }
  return out;
}

inline LeviSpectrum leviSpectrum(const DefiningFunction& r, const ComplexPoint& z,
                                 const Tolerances& tol = {}) {
  return leviSpectrum(r.jet(z, 2), z, tol);
}

// ---------------------------------------------------------------------------
// Sampling inside the closed domain and the boundary band

/// Boundary crossing along the ray t*dir from the origin (assumes r(0) < 0).
inline std::optional<ComplexPoint> radialBoundaryPoint(const DefiningFunction& r, const CVec& dir,
                                                       double rmax) {
  const ComplexPoint origin = CVec::Zero(dir.size());
  if (r.eval(origin) >= 0.0) return std::nullopt;
  double lo = 0.0, hi = rmax;
  if (r.eval(hi * dir) <= 0.0) return std::nullopt;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * rmax; ++it) {
    const double mid = 0.5 * (lo + hi);
    (r.eval(mid * dir) < 0.0 ? lo : hi) = mid;
  }
  double t = 0.5 * (lo + hi);
  // Newton polish along the ray: d/dt r(t dir) = 2 Re sum grad_j dir_j.
  for (int it = 0; it < 4; ++it) {
    const Jet j = r.jet(t * dir, 1);
    const double dr = 2.0 * (j.grad.transpose() * dir)(0, 0).real();
    if (std::abs(dr) < 1e-300) break;
    const double next = t - j.value / dr;
    if (next < lo || next > hi) break;
    t = next;
  }
  return ComplexPoint(t * dir);
}

/// Unit outward normal of the level set through p as a vector of C^n.
inline CVec outwardNormal(const Jet& jet) { return jet.grad.conjugate().normalized(); }

/// First-order distance estimate -r / |real gradient|, with |real grad| = 2|grad|.
inline double bandDepth(const Jet& jet) { return -jet.value / (2.0 * jet.grad.norm()); }

/// Membership in the closed band; r up to 1e-12 counts as the boundary.
inline bool inClosedBand(const DefiningFunction& r, const DomainSpec& spec, const ComplexPoint& p) {
  const Jet j = r.jet(p, 1);
  if (j.value > 1e-12) return false;
  return bandDepth(j) <= spec.band();
}

inline CVec randomDirection(Rng& rng, int n) {
  CVec v(n);
  for (int j = 0; j < n; ++j) v[j] = cplx(rng.normal(), rng.normal());
  return v.normalized();
}

/// A boundary point of the domain, reached radially from the origin.
inline ComplexPoint sampleBoundaryPoint(const DefiningFunction& r, const DomainSpec& spec, Rng& rng) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    auto b = radialBoundaryPoint(r, randomDirection(rng, r.dim()), 1.5 * spec.boundingRadius());
    if (b) return *b;
  }
  throw UnsupportedDomain("no boundary crossing found from the origin");
}

/// A point of the closed domain within the band: a boundary point pushed
/// inward along the normal. One sample in five stays on the boundary.
inline ComplexPoint sampleBandPoint(const DefiningFunction& r, const DomainSpec& spec, Rng& rng) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const ComplexPoint b = sampleBoundaryPoint(r, spec, rng);
    const double u = rng.uniform();
    if (u < 0.2) return b;
    const double depth = spec.band() * (u - 0.2) / 0.8;
    const ComplexPoint p = b - depth * outwardNormal(r.jet(b, 1));
    if (inClosedBand(r, spec, p)) return p;
  }
  throw UnsupportedDomain("band sampling failed");
}

/// Uniform point of the closed domain by rejection from the bounding box.
inline ComplexPoint sampleDomainPoint(const DefiningFunction& r, const DomainSpec& spec, Rng& rng) {
  const double R = spec.boundingRadius();
  const int n = r.dim();
  for (int attempt = 0; attempt < 100000; ++attempt) {
    ComplexPoint p(n);
    for (int j = 0; j < n; ++j) p[j] = cplx(R * (2 * rng.uniform() - 1), R * (2 * rng.uniform() - 1));
    if (r.eval(p) <= 0.0) return p;
  }
  throw UnsupportedDomain("domain sampling failed");
}

/// Checks |grad r| >= tol.grad on band samples; throws DegenerateGradient.
inline void validateBand(const DefiningFunction& r, const DomainSpec& spec, int nSamples,
                         std::uint64_t seed, const Tolerances& tol = {}) {
  for (int i = 0; i < nSamples; ++i) {
    Rng rng(seed, static_cast<std::uint64_t>(i));
    const ComplexPoint p = sampleBandPoint(r, spec, rng);
    const double g = r.grad(p).norm();
    if (g < tol.grad) throw DegenerateGradient("band too wide: |grad r| = " + std::to_string(g));
  }
}

/// Samples the tangential Levi form over the closed band and reports the
/// minimum of L(r, zeta; t) / |t|^2.
inline EstimateReport verifyPseudoconvexity(const DefiningFunction& r, const DomainSpec& spec,
                                            int nSamples, std::uint64_t seed,
                                            const Tolerances& tol = {}) {
  EstimateReport rep;
  rep.name = "pseudoconvexity";
  rep.samples = nSamples;
  double best = std::numeric_limits<double>::infinity();
  std::vector<Witness> failures;
  Witness worst;
  for (int i = 0; i < nSamples; ++i) {
    Rng rng(seed, static_cast<std::uint64_t>(i));
    const ComplexPoint zeta = sampleBandPoint(r, spec, rng);
    const Jet j = r.jet(zeta, 2);
    CVec t = tangentialProjection(j.grad, randomDirection(rng, r.dim()), tol);
    if (t.norm() < 1e-12) continue;
    const double ratio = leviForm(j, t, tol) / t.squaredNorm();
    if (ratio < best) {
      best = ratio;
      worst = Witness{{zeta, t}, ratio, "min tangential Levi ratio"};
    }
    if (ratio < -tol.psd && failures.size() < 5)
      failures.push_back(Witness{{zeta, t}, ratio, "negative tangential Levi form"});
  }
  rep.minRatio = best;
  rep.pass = best >= -tol.psd;
  rep.witnesses = rep.pass ? std::vector<Witness>{worst} : failures;
  return rep;
}

/// The example at a single point: min over the tangent space of L/|t|^2 is
/// the smallest Levi eigenvalue.
inline double minTangentialLevi(const DefiningFunction& r, const ComplexPoint& p,
                                const Tolerances& tol = {}) {
  const LeviSpectrum s = leviSpectrum(r, p, tol);
  return s.eigenvalues.empty() ? 0.0 : s.eigenvalues.back();
}

}  // namespace cfk
