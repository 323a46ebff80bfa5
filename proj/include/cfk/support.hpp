#pragma once

// Levi polynomial, the cubic-corrected support function Phi_K, its
// decomposition g, the cutoff chi, and the patched pair (S, s) together
// with their closed-form zetabar / zbar jets.
//
// Writing d = zeta - z and t = |d|:
//   F     = sum_j r_j d_j - 1/2 sum_jk r_jk d_j d_k
//   Phi_K = F - r(zeta) + K t^3
//   g_j   = r_j - 1/2 sum_k r_jk d_k + K t conj(d_j),   sum g_j d_j = Phi_K + r(zeta)
//   S     = chi(t) Phi_K + (1 - chi(t)) t^2
//   s_j   = chi(t) g_j + (1 - chi(t)) conj(d_j),        sum s_j d_j = S on the boundary

#include <cmath>
#include <string>
#include <vector>

#include "cfk/errors.hpp"
#include "cfk/geometry.hpp"
#include "cfk/types.hpp"

namespace cfk {

struct KernelConfig {
  double C = 0.0;
  double K = 1.0;
  double eps = 0.1;
  std::string chiShape = "exp";  // exp(-1/x) transition, the only shape provided
  Tolerances tol;

  double cMin = 1e-3;           // floor for fitted estimate constants
  double prop4Delta = 0.0;      // <= 0 selects eps / 2
  double strictLeviFloor = 1e-2;  // min Levi eigenvalue for the strict estimate
  double coincidence = 1e-12;   // |zeta - z| below this is a coincident pair
  double boundaryTol = 1e-9;    // |r(zeta)| <= this means zeta is on bD

  int resolution = 48;          // nodes per chart axis
  double gradingExponent = 2.0;
  double distFloor = 1e-3;
  double ratioTol = 0.15;
  double slopeSlack = 0.1;

  double delta() const { return prop4Delta > 0.0 ? prop4Delta : 0.5 * eps; }
};

inline void validate(const KernelConfig& cfg, double bandWidth) {
  if (!(cfg.K >= 0.0)) throw ConfigError("K must be nonnegative");
  if (!(cfg.eps > 0.0)) throw ConfigError("eps must be positive");
  if (bandWidth > 0.0 && cfg.eps >= bandWidth) throw ConfigError("eps must be smaller than the band width");
  if (cfg.chiShape != "exp") throw ConfigError("unknown chi shape '" + cfg.chiShape + "'");
  if (cfg.resolution < 2) throw ConfigError("resolution must be at least 2");
}

// ---------------------------------------------------------------------------
// Cutoff

/// chi and its first two derivatives at t.
struct ChiValues {
  double value = 1.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

namespace detail {
inline double psi(double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; }
inline double psi1(double x) { return x > 0.0 ? psi(x) / (x * x) : 0.0; }
inline double psi2(double x) {
  if (x <= 0.0) return 0.0;
  const double ix = 1.0 / x;
  return psi(x) * (ix * ix * ix * ix - 2.0 * ix * ix * ix);
}
}  // namespace detail

/// Smooth cutoff: 1 on [0, eps/2], 0 on [3eps/4, inf), psi(b)/(psi(a)+psi(b))
/// in between with a = (t - eps/2)/(eps/4), b = 1 - a.
inline ChiValues chiValues(double t, double eps) {
  ChiValues c;
  if (t <= 0.5 * eps) return c;
  if (t >= 0.75 * eps) {
    c.value = 0.0;
    return c;
  }
  const double kappa = 4.0 / eps;
  const double a = (t - 0.5 * eps) * kappa;
  const double b = 1.0 - a;
  const double p = detail::psi(b), q = detail::psi(a);
  const double p1 = -kappa * detail::psi1(b), q1 = kappa * detail::psi1(a);
  const double p2 = kappa * kappa * detail::psi2(b), q2 = kappa * kappa * detail::psi2(a);
  const double sum = p + q;
  const double num1 = p1 * q - p * q1;
  c.value = p / sum;
  c.d1 = num1 / (sum * sum);
  c.d2 = (p2 * q - p * q2) / (sum * sum) - 2.0 * num1 * (p1 + q1) / (sum * sum * sum);
  return c;
}

inline double chi(double t, const KernelConfig& cfg) { return chiValues(t, cfg.eps).value; }
inline double chiPrime(double t, const KernelConfig& cfg) { return chiValues(t, cfg.eps).d1; }

// ---------------------------------------------------------------------------
// Scalar pieces

inline cplx leviPolynomial(const Jet& jz, const ComplexPoint& zeta, const ComplexPoint& z) {
  const CVec d = zeta - z;
  cplx lin = 0.0, quad = 0.0;
  for (Eigen::Index j = 0; j < d.size(); ++j) {
    lin += jz.grad[j] * d[j];
    for (Eigen::Index k = 0; k < d.size(); ++k) quad += jz.hess_holo(j, k) * d[j] * d[k];
  }
  return lin - 0.5 * quad;
}

inline cplx leviPolynomial(const DefiningFunction& r, const ComplexPoint& zeta, const ComplexPoint& z) {
  return leviPolynomial(r.jet(zeta, 2), zeta, z);
}

inline cplx phiK(const Jet& jz, double K, const ComplexPoint& zeta, const ComplexPoint& z) {
  const double t = (zeta - z).norm();
  return leviPolynomial(jz, zeta, z) - jz.value + K * t * t * t;
}

inline cplx phiK(const DefiningFunction& r, const KernelConfig& cfg, const ComplexPoint& zeta,
                 const ComplexPoint& z) {
  return phiK(r.jet(zeta, 2), cfg.K, zeta, z);
}

/// |2 Re[F - r(zeta)] + r(zeta) + r(z) - L(r, zeta; zeta - z)| / |zeta - z|^3.
inline double taylorResidual(const DefiningFunction& r, const ComplexPoint& zeta, const ComplexPoint& z,
                             const Tolerances& tol = {}) {
  const CVec d = zeta - z;
  const double t = d.norm();
  if (t < 1e-12) throw CoincidentPoints("taylorResidual at |zeta - z| = " + std::to_string(t));
  const Jet jz = r.jet(zeta, 2);
  const double lhs = 2.0 * (leviPolynomial(jz, zeta, z) - jz.value).real();
  const double rhs = -jz.value - r.eval(z) + leviForm(jz, d, tol);
  return std::abs(lhs - rhs) / (t * t * t);
}

inline CVec gDecomposition(const Jet& jz, double K, const ComplexPoint& zeta, const ComplexPoint& z) {
  const CVec d = zeta - z;
  const double t = d.norm();
  return jz.grad - 0.5 * (jz.hess_holo * d) + K * t * d.conjugate();
}

inline CVec gDecomposition(const DefiningFunction& r, const KernelConfig& cfg, const ComplexPoint& zeta,
                           const ComplexPoint& z) {
  return gDecomposition(r.jet(zeta, 2), cfg.K, zeta, z);
}

/// |Phi_K(zeta,z) - conj(Phi_K(z,zeta))| / |zeta - z|^3.
inline double symmetryResidual(const DefiningFunction& r, const KernelConfig& cfg, const ComplexPoint& zeta,
                               const ComplexPoint& z) {
  const double t = (zeta - z).norm();
  if (t < cfg.coincidence) throw CoincidentPoints("symmetryResidual at |zeta - z| = " + std::to_string(t));
  return std::abs(phiK(r, cfg, zeta, z) - std::conj(phiK(r, cfg, z, zeta))) / (t * t * t);
}

/// Holomorphic z-derivatives dPhi_K/dz_k.
inline CVec dzPhiK(const Jet& jz, double K, const ComplexPoint& zeta, const ComplexPoint& z) {
  const CVec d = zeta - z;
  const double t = d.norm();
  return -jz.grad + jz.hess_holo * d - 1.5 * K * t * d.conjugate();
}

// ---------------------------------------------------------------------------
// Patched support function and jets

enum class JetLevel { Values, First, Mixed };

struct SupportEval {
  double dist = 0.0;  // |zeta - z|
  cplx F = 0.0;
  cplx phiK = 0.0;
  CVec g;
  double chi = 1.0;
  cplx S = 0.0;
  CVec s;
  // First jets (JetLevel::First and above).
  CMat dbarZetaS;   // (j,k): ds_j / dzetabar_k
  CVec dbarZetaSS;  // k: dS / dzetabar_k
  CVec dbarZPhiK;   // l: dPhi_K / dzbar_l
  CMat dbarZS;      // (j,l): ds_j / dzbar_l
  CVec dbarZSS;     // l: dS / dzbar_l
  // Mixed jets (JetLevel::Mixed): mixed[l](j,k) = d^2 s_j / dzbar_l dzetabar_k.
  std::vector<CMat> mixed;
};

/// Evaluates S, s and their jets at (zeta, z), given the order-3 jet of r at
/// zeta. With `forceChi` in [0,1] the cutoff is overridden by that constant
/// (its derivatives are then zero), which exposes the pure local or pure
/// Bochner-Martinelli regimes.
inline SupportEval supportEval(const Jet& jz, const KernelConfig& cfg, const ComplexPoint& zeta,
                               const ComplexPoint& z, JetLevel level = JetLevel::First,
                               double forceChi = -1.0) {
  const Eigen::Index n = zeta.size();
  const CVec d = zeta - z;
  const CVec db = d.conjugate();
  const double t = d.norm();
  const double K = cfg.K;
  if (level != JetLevel::Values && t < cfg.coincidence)
    throw CoincidentPoints("support jets at |zeta - z| = " + std::to_string(t));

  SupportEval e;
  e.dist = t;
  e.F = leviPolynomial(jz, zeta, z);
  e.phiK = e.F - jz.value + K * t * t * t;
  e.g = jz.grad - 0.5 * (jz.hess_holo * d) + K * t * db;
  ChiValues c = forceChi >= 0.0 ? ChiValues{forceChi, 0.0, 0.0} : chiValues(t, cfg.eps);
  e.chi = c.value;
  e.S = c.value * e.phiK + (1.0 - c.value) * t * t;
  e.s = c.value * e.g + (1.0 - c.value) * db;
  if (level == JetLevel::Values) return e;

  const double ch = c.value;
  const bool local = ch > 0.0;
  // zetabar_k derivatives of the local pieces.
  CMat dg = CMat::Zero(n, n);
  CVec dPhi = CVec::Zero(n);
  if (local) {
    if (jz.third.size() != static_cast<size_t>(n)) throw DimensionMismatch("support jets need the order-3 jet of r");
    for (Eigen::Index k = 0; k < n; ++k) {
      const CMat& T = jz.third[k];
      cplx dF = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        dF += jz.hess_mixed(j, k) * d[j];
        cplx td = 0.0;
        for (Eigen::Index m = 0; m < n; ++m) {
          td += T(j, m) * d[m];
          dF -= 0.5 * T(j, m) * d[j] * d[m];
        }
        dg(j, k) = jz.hess_mixed(j, k) - 0.5 * td + K * d[k] * db[j] / (2.0 * t) + (j == k ? K * t : 0.0);
      }
      dPhi[k] = dF - std::conj(jz.grad[k]) + 1.5 * K * t * d[k];
    }
  }
  const double chiOverT = (t > 0.0) ? c.d1 / (2.0 * t) : 0.0;

  e.dbarZetaS.resize(n, n);
  e.dbarZetaSS.resize(n);
  e.dbarZPhiK.resize(n);
  e.dbarZS.resize(n, n);
  e.dbarZSS.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const cplx dchi = chiOverT * d[k];  // dchi/dzetabar_k, and -dchi/dzbar_k
    e.dbarZetaSS[k] = dchi * (e.phiK - t * t) + ch * dPhi[k] + (1.0 - ch) * d[k];
    e.dbarZPhiK[k] = -1.5 * K * t * d[k];
    e.dbarZSS[k] = -dchi * (e.phiK - t * t) + ch * e.dbarZPhiK[k] - (1.0 - ch) * d[k];
    for (Eigen::Index j = 0; j < n; ++j) {
      e.dbarZetaS(j, k) = dchi * (e.g[j] - db[j]) + ch * dg(j, k) + (j == k ? 1.0 - ch : 0.0);
      const cplx zg = -K * (d[k] * db[j] / (2.0 * t) + (j == k ? t : 0.0));
      e.dbarZS(j, k) = -dchi * (e.g[j] - db[j]) + ch * zg - (j == k ? 1.0 - ch : 0.0);
    }
  }
  if (level != JetLevel::Mixed) return e;

  // d/dzbar_l of ds_j/dzetabar_k.
  const double cross = (t > 0.0) ? (c.d1 / (4.0 * t * t * t) - c.d2 / (4.0 * t * t)) : 0.0;
  e.mixed.assign(n, CMat::Zero(n, n));
  for (Eigen::Index l = 0; l < n; ++l) {
    const cplx zchi = -chiOverT * d[l];
    for (Eigen::Index j = 0; j < n; ++j) {
      const cplx zg = -K * (d[l] * db[j] / (2.0 * t) + (j == l ? t : 0.0));
      for (Eigen::Index k = 0; k < n; ++k) {
        const cplx dchi = chiOverT * d[k];
        const cplx dzdchi = cross * d[k] * d[l];
        const cplx dzdg = K * (-(j == l ? 1.0 : 0.0) * d[k] / (2.0 * t) +
                               d[k] * db[j] * d[l] / (4.0 * t * t * t) - (j == k ? 1.0 : 0.0) * d[l] / (2.0 * t));
        e.mixed[l](j, k) = dzdchi * (e.g[j] - db[j]) + dchi * (zg + (j == l ? 1.0 : 0.0)) +
                           zchi * dg(j, k) + ch * dzdg - (j == k ? zchi : cplx(0.0));
      }
    }
  }
  return e;
}

inline SupportEval supportEval(const DefiningFunction& r, const KernelConfig& cfg, const ComplexPoint& zeta,
                               const ComplexPoint& z, JetLevel level = JetLevel::First) {
  return supportEval(r.jet(zeta, 3), cfg, zeta, z, level);
}

}  // namespace cfk
