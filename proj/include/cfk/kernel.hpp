#pragma once

// Cauchy-Fantappie kernel of the patched generating form, the
// Bochner-Martinelli baseline, the dbar_z kernel, and the coefficient checker
// for the normalized Levi volume form.

#include <cmath>
#include <string>
#include <vector>

#include "cfk/errors.hpp"
#include "cfk/estimates.hpp"
#include "cfk/forms.hpp"
#include "cfk/geometry.hpp"
#include "cfk/support.hpp"

namespace cfk {

/// An (n, n-1) form in zeta evaluated at the pair (zeta, z).
struct KernelDensity {
  PointForm value;
  ComplexPoint zeta;
  ComplexPoint z;
};

/// (2 pi i)^{-n}
inline cplx cfConstant(int n) { return std::pow(cplx(0.0, 2.0 * kPi), -n); }

/// sum_j s_j dzeta_j
inline PointForm generatingForm(const CVec& s) {
  const int n = static_cast<int>(s.size());
  PointForm f(n);
  for (int j = 0; j < n; ++j) f.add(FormMask{1} << j, s[j]);
  return f;
}

/// sum_{j,k} M(j,k) dzetabar_k ^ dzeta_j, for M(j,k) = ds_j/dzetabar_k.
inline PointForm dbarForm(const CMat& M) {
  const int n = static_cast<int>(M.rows());
  std::vector<PointForm::Term> raw;
  raw.reserve(static_cast<size_t>(n * n));
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      // dzetabar_k ^ dzeta_j = -dzeta_j ^ dzetabar_k
      raw.push_back({(FormMask{1} << j) | (FormMask{1} << (n + k)), -M(j, k)});
    }
  return PointForm::fromTerms(n, std::move(raw));
}

/// s ^ (dbar s)^{n-1}
inline PointForm cfNumerator(const CVec& s, const CMat& dbarS) {
  const int n = static_cast<int>(s.size());
  return wedge(generatingForm(s), power(dbarForm(dbarS), n - 1));
}

namespace detail {

inline void requireKernelPair(const Jet& jz, const KernelConfig& cfg, const ComplexPoint& zeta,
                              const ComplexPoint& z) {
  if (zeta.size() != z.size()) throw DimensionMismatch("zeta and z have different dimensions");
  if (std::abs(jz.value) > cfg.boundaryTol)
    throw OffBoundary("|r(zeta)| = " + std::to_string(std::abs(jz.value)));
  const double t = (zeta - z).norm();
  if (t < cfg.coincidence) throw CoincidentPoints("kernel at |zeta - z| = " + std::to_string(t));
}

inline KernelDensity omega0From(const SupportEval& e, const ComplexPoint& zeta, const ComplexPoint& z) {
  const int n = static_cast<int>(zeta.size());
  KernelDensity out{cfNumerator(e.s, e.dbarZetaS), zeta, z};
  out.value *= cfConstant(n) / std::pow(e.S, n);
  return out;
}

}  // namespace detail

/// Omega_0(W^S) = (2 pi i)^{-n} s ^ (dbar_zeta s)^{n-1} / S^n at zeta on bD.
inline KernelDensity omega0(const Jet& jz, const KernelConfig& cfg, const ComplexPoint& zeta,
                            const ComplexPoint& z) {
  detail::requireKernelPair(jz, cfg, zeta, z);
  return detail::omega0From(supportEval(jz, cfg, zeta, z, JetLevel::First), zeta, z);
}

inline KernelDensity omega0(const DefiningFunction& r, const KernelConfig& cfg, const ComplexPoint& zeta,
                            const ComplexPoint& z) {
  return omega0(r.jet(zeta, 3), cfg, zeta, z);
}

/// Bochner-Martinelli kernel, the CF kernel of conj(zeta - z) / |zeta - z|^2.
inline KernelDensity bochnerMartinelli(const ComplexPoint& zeta, const ComplexPoint& z) {
  if (zeta.size() != z.size()) throw DimensionMismatch("zeta and z have different dimensions");
  const int n = static_cast<int>(zeta.size());
  const CVec d = zeta - z;
  const double t2 = d.squaredNorm();
  if (std::sqrt(t2) < 1e-12) throw CoincidentPoints("Bochner-Martinelli kernel at coincident points");
  KernelDensity out{cfNumerator(d.conjugate(), CMat::Identity(n, n)), zeta, z};
  out.value *= cfConstant(n) / std::pow(t2, n);
  return out;
}

/// Coefficient densities of dzbar_l, l = 0..n-1, of dbar_z Omega_0(W^S):
///   c_n [dzbar_l s ^ (dbar s)^{n-1} + (n-1) s ^ dzbar_l dbar s ^ (dbar s)^{n-2}] / S^n
///   - n c_n (dzbar_l S) s ^ (dbar s)^{n-1} / S^{n+1}
inline std::vector<KernelDensity> dbarZOmega0(const Jet& jz, const KernelConfig& cfg, const ComplexPoint& zeta,
                                              const ComplexPoint& z) {
  detail::requireKernelPair(jz, cfg, zeta, z);
  const int n = static_cast<int>(zeta.size());
  const SupportEval e = supportEval(jz, cfg, zeta, z, JetLevel::Mixed);
  const cplx cn = cfConstant(n);
  const PointForm sForm = generatingForm(e.s);
  const PointForm ds = dbarForm(e.dbarZetaS);
  const PointForm dsPowLow = power(ds, n >= 2 ? n - 2 : 0);
  const PointForm dsPow = n >= 2 ? wedge(dsPowLow, ds) : dsPowLow;
  const PointForm base = wedge(sForm, dsPow);
  const cplx Sn = std::pow(e.S, n);
  std::vector<KernelDensity> out;
  out.reserve(static_cast<size_t>(n));
  for (int l = 0; l < n; ++l) {
    PointForm term = wedge(generatingForm(e.dbarZS.col(l)), dsPow);
    if (n >= 2) term += static_cast<double>(n - 1) * wedge(wedge(sForm, dbarForm(e.mixed[l])), dsPowLow);
    term *= cn / Sn;
    term -= base * (static_cast<double>(n) * cn * e.dbarZSS[l] / (Sn * e.S));
    out.push_back(KernelDensity{std::move(term), zeta, z});
  }
  return out;
}

inline std::vector<KernelDensity> dbarZOmega0(const DefiningFunction& r, const KernelConfig& cfg,
                                              const ComplexPoint& zeta, const ComplexPoint& z) {
  return dbarZOmega0(r.jet(zeta, 3), cfg, zeta, z);
}

namespace detail {

/// Pulled-back s ^ dbar s in C^2: the coefficient of
/// dzeta_1 ^ dzeta_2 ^ dzetabar_k is s_2 M(1,k) - s_1 M(2,k).
inline cplx pulledNumerator2(const CVec& s, const CMat& M, const PullbackMinors& pb) {
  return (s[1] * M(0, 0) - s[0] * M(1, 0)) * pb.minor(3) + (s[1] * M(0, 1) - s[0] * M(1, 1)) * pb.minor(2);
}

}  // namespace detail

/// Pulled-back Omega_0 density at a chart point; closed form for n = 2.
inline cplx omega0Density(const Jet& jz, const KernelConfig& cfg, const ChartJet& jet, const ComplexPoint& z) {
  const ComplexPoint& zeta = jet.point;
  if (zeta.size() != 2) return pullbackTop(omega0(jz, cfg, zeta, z).value, jet);
  detail::requireKernelPair(jz, cfg, zeta, z);
  const SupportEval e = supportEval(jz, cfg, zeta, z, JetLevel::First);
  const PullbackMinors pb(jet);
  return cfConstant(2) * detail::pulledNumerator2(e.s, e.dbarZetaS, pb) / (e.S * e.S);
}

/// Pulled-back coefficient densities of dbar_z Omega_0, l = 0..n-1; closed
/// form for n = 2.
inline void dbarZOmega0Density(const Jet& jz, const KernelConfig& cfg, const ChartJet& jet, const ComplexPoint& z,
                               cplx* out) {
  const ComplexPoint& zeta = jet.point;
  const int n = static_cast<int>(zeta.size());
  if (n != 2) {
    const auto ks = dbarZOmega0(jz, cfg, zeta, z);
    const PullbackMinors pb(jet);
    for (int l = 0; l < n; ++l) out[l] = pb(ks[static_cast<size_t>(l)].value);
    return;
  }
  detail::requireKernelPair(jz, cfg, zeta, z);
  const SupportEval e = supportEval(jz, cfg, zeta, z, JetLevel::Mixed);
  const PullbackMinors pb(jet);
  const cplx c = cfConstant(2);
  const cplx S2 = e.S * e.S;
  const cplx base = detail::pulledNumerator2(e.s, e.dbarZetaS, pb);
  for (int l = 0; l < 2; ++l) {
    const cplx lead = detail::pulledNumerator2(e.dbarZS.col(l), e.dbarZetaS, pb) +
                      detail::pulledNumerator2(e.s, e.mixed[static_cast<size_t>(l)], pb);
    out[l] = c * lead / S2 - 2.0 * c * e.dbarZSS[l] * base / (S2 * e.S);
  }
}

/// dzbar_l of the Bochner-Martinelli density, l = 0..n-1.
inline std::vector<KernelDensity> dbarZBochnerMartinelli(const ComplexPoint& zeta, const ComplexPoint& z) {
  const int n = static_cast<int>(zeta.size());
  const CVec d = zeta - z;
  const double t2 = d.squaredNorm();
  if (std::sqrt(t2) < 1e-12) throw CoincidentPoints("Bochner-Martinelli kernel at coincident points");
  const cplx cn = cfConstant(n);
  const PointForm dsPow = power(dbarForm(CMat::Identity(n, n)), n - 1);
  const PointForm base = wedge(generatingForm(d.conjugate()), dsPow);
  std::vector<KernelDensity> out;
  for (int l = 0; l < n; ++l) {
    // dzbar_l conj(d_j) = -delta_jl, dzbar_l |d|^2 = -d_l
    PointForm term = wedge(PointForm::dz(n, l, -1.0), dsPow) * (cn / std::pow(t2, n));
    term -= base * (static_cast<double>(n) * cn * (-d[l]) / std::pow(t2, n + 1));
    out.push_back(KernelDensity{std::move(term), zeta, z});
  }
  return out;
}

/// Pulled-back Bochner-Martinelli density; closed form for n = 2.
inline cplx bochnerMartinelliDensity(const ChartJet& jet, const ComplexPoint& z) {
  const ComplexPoint& zeta = jet.point;
  if (zeta.size() != 2) return pullbackTop(bochnerMartinelli(zeta, z).value, jet);
  const CVec d = zeta - z;
  const double t2 = d.squaredNorm();
  if (std::sqrt(t2) < 1e-12) throw CoincidentPoints("Bochner-Martinelli kernel at coincident points");
  const PullbackMinors pb(jet);
  return cfConstant(2) * detail::pulledNumerator2(d.conjugate(), CMat::Identity(2, 2), pb) / (t2 * t2);
}

/// Pulled-back densities of dzbar_l of the Bochner-Martinelli kernel;
/// closed form for n = 2.
inline void dbarZBochnerMartinelliDensity(const ChartJet& jet, const ComplexPoint& z, cplx* out) {
  const ComplexPoint& zeta = jet.point;
  const int n = static_cast<int>(zeta.size());
  if (n != 2) {
    const auto ks = dbarZBochnerMartinelli(zeta, z);
    const PullbackMinors pb(jet);
    for (int l = 0; l < n; ++l) out[l] = pb(ks[static_cast<size_t>(l)].value);
    return;
  }
  const CVec d = zeta - z;
  const double t2 = d.squaredNorm();
  if (std::sqrt(t2) < 1e-12) throw CoincidentPoints("Bochner-Martinelli kernel at coincident points");
  const PullbackMinors pb(jet);
  const CMat I = CMat::Identity(2, 2);
  const cplx c = cfConstant(2);
  const cplx base = detail::pulledNumerator2(d.conjugate(), I, pb);
  for (int l = 0; l < 2; ++l) {
    CVec e = CVec::Zero(2);
    e[l] = -1.0;
    out[l] = c * detail::pulledNumerator2(e, I, pb) / (t2 * t2) + 2.0 * c * d[l] * base / (t2 * t2 * t2);
  }
}

// ---------------------------------------------------------------------------

namespace detail {

/// del r ^ delbar r ^ del delbar r from a jet, in the coordinates of the jet.
inline PointForm leviVolumeForm(const Jet& j) {
  const int n = static_cast<int>(j.grad.size());
  PointForm dr(n), dbr(n), ddb(n);
  for (int a = 0; a < n; ++a) {
    dr.add(FormMask{1} << a, j.grad[a]);
    dbr.add(FormMask{1} << (n + a), std::conj(j.grad[a]));
  }
  std::vector<PointForm::Term> raw;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) raw.push_back({(FormMask{1} << a) | (FormMask{1} << (n + b)), j.hess_mixed(a, b)});
  ddb = PointForm::fromTerms(n, std::move(raw));
  return wedge(wedge(dr, dbr), ddb);
}

}  // namespace detail

/// Coefficients of del r ^ delbar r ^ del delbar r / Phi_K in z-diagonalizing
/// coordinates w, split into the frozen diagonal part
///   A_j = lambda_j(z) / Phi_K
/// and the tangential remainder
///   B_jl = (M_jl(zeta) - delta_jl lambda_j(z)) / Phi_K, j, l < n,
/// M being the mixed Hessian in w. Records per dyadic bin the sups of
///   |A_j| (|Im F| + |r(zeta)| + |r(z)| + |w_j|^2 + K/2 |zeta - z|^3)
///   |B_jl| (|Im F| + |r(zeta)| + |r(z)| + K/2 |zeta - z|^2)
/// and the size of what the A/B forms leave unexplained (not asserted).
inline EstimateReport checkCorollary6(const DefiningFunction& r, const KernelConfig& cfg, const DomainSpec& spec,
                                      const ComplexPoint& z, const SampleOptions& opt, int nBins = 6) {
  const Jet jzz = r.jet(z, 2);
  const LeviSpectrum frame = leviSpectrum(jzz, z, cfg.tol);
  const CMat& U = frame.unitary;
  const DefiningPtr borrowed(std::shared_ptr<const DefiningFunction>{}, &r);
  const UnitaryTransformed rotated(borrowed, U);
  const int n = static_cast<int>(z.size());
  const double rz = std::abs(jzz.value);
  struct Row {
    bool valid = false;
    int bin = 0;
    double a = 0.0, b = 0.0, rem = 0.0;
  };
  std::vector<Row> rows(static_cast<size_t>(opt.samples));
  parallelFor(rows.size(), [&](size_t i) {
    Rng rng(opt.seed, i);
    const int bin = static_cast<int>(i % static_cast<size_t>(nBins));
    const double hi = cfg.eps * std::ldexp(1.0, -bin), lo = 0.5 * hi;
    for (int attempt = 0; attempt < 200; ++attempt) {
      const double rho = lo * std::pow(2.0, rng.uniform());
      const ComplexPoint zeta = z + rho * randomDirection(rng, n);
      if (!inClosedBand(r, spec, zeta)) continue;
      const Jet jz = r.jet(zeta, 2);
      const cplx F = leviPolynomial(jz, zeta, z);
      const cplx phi = F - jz.value + cfg.K * rho * rho * rho;
      const CVec w = U.adjoint() * (zeta - z);
      const Jet jw = rotated.jet(U.adjoint() * zeta, 2);
      const double common = std::abs(F.imag()) + std::abs(jz.value) + rz;
      Row& row = rows[i];
      PointForm dr(n), dbr(n), model(n);
      for (int a = 0; a < n; ++a) {
        dr.add(FormMask{1} << a, jw.grad[a]);
        dbr.add(FormMask{1} << (n + a), std::conj(jw.grad[a]));
      }
      for (int j = 0; j + 1 < n; ++j) {
        const cplx A = frame.eigenvalues[j] / phi;
        row.a = std::max(row.a, std::abs(A) * (common + std::norm(w[j]) + 0.5 * cfg.K * rho * rho * rho));
        model.add((FormMask{1} << j) | (FormMask{1} << (n + j)), A);
        for (int l = 0; l + 1 < n; ++l) {
          const cplx B = (jw.hess_mixed(j, l) - (j == l ? frame.eigenvalues[j] : 0.0)) / phi;
          row.b = std::max(row.b, std::abs(B) * (common + 0.5 * cfg.K * rho * rho));
          model.add((FormMask{1} << j) | (FormMask{1} << (n + l)), B);
        }
      }
      PointForm full = detail::leviVolumeForm(jw) * (1.0 / phi);
      const PointForm explained = wedge(wedge(dr, dbr), model);
      row.rem = (full - explained).maxAbs() * std::abs(phi) / std::max(1e-300, jw.grad.squaredNorm());
      row.valid = true;
      row.bin = bin;
      return;
    }
  });
  EstimateReport rep;
  rep.name = "corollary6";
  std::vector<BinStat> aBins(nBins), bBins(nBins), remBins(nBins);
  for (int b = 0; b < nBins; ++b) {
    aBins[b].hi = bBins[b].hi = remBins[b].hi = cfg.eps * std::ldexp(1.0, -b);
    aBins[b].lo = bBins[b].lo = remBins[b].lo = 0.5 * aBins[b].hi;
  }
  long valid = 0;
  for (const Row& row : rows) {
    if (!row.valid) continue;
    ++valid;
    for (auto* bins : {&aBins, &bBins, &remBins}) ++(*bins)[row.bin].count;
    aBins[row.bin].max = std::max(aBins[row.bin].max, row.a);
    bBins[row.bin].max = std::max(bBins[row.bin].max, row.b);
    remBins[row.bin].max = std::max(remBins[row.bin].max, row.rem);
  }
  rep.samples = valid;
  rep.bins["A"] = aBins;
  rep.bins["B"] = bBins;
  rep.bins["remainder"] = remBins;
  double supA = 0.0, supB = 0.0;
  for (int b = 0; b < nBins; ++b) {
    supA = std::max(supA, aBins[b].max);
    supB = std::max(supB, bBins[b].max);
  }
  rep.supRatio = std::max(supA, supB);
  rep.extra["supA"] = supA;
  rep.extra["supB"] = supB;
  for (size_t j = 0; j < frame.eigenvalues.size(); ++j)
    rep.extra["lambda" + std::to_string(j + 1)] = frame.eigenvalues[j];
  rep.pass = valid > 0 && noGrowth(aBins) && noGrowth(bBins);
  rep.witnesses.push_back(Witness{{z}, rep.supRatio.value_or(0.0), "base point"});
  return rep;
}

}  // namespace cfk
