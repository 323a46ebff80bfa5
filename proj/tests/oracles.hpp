#pragma once

// Independent reference computations for the test suite: central finite
// differences in Wirtinger form, Leibniz determinants and brute-force
// exterior products.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <vector>

#include "cfk.hpp"

namespace cfk {

inline void PrintTo(const DomainSpec& spec, std::ostream* os) {
  *os << toString(spec.kind) << "(";
  for (size_t i = 0; i < spec.params.size(); ++i) *os << (i ? ", " : "") << spec.params[i];
  *os << ")";
  if (spec.C != 0.0) *os << " C=" << spec.C;
}

}  // namespace cfk

namespace cfk::test {

inline ComplexPoint shifted(const ComplexPoint& p, int k, cplx step) {
  ComplexPoint q = p;
  q[k] += step;
  return q;
}

/// |sum_j c_j d_j - ref| relative to the largest of the sum, ref, the
/// summed magnitudes sum_j |c_j d_j| and `extra`.
inline double pairingResidual(const CVec& c, const CVec& d, cplx ref, double extra = 0.0) {
  const cplx sum = c.transpose() * d;
  const double terms = c.cwiseProduct(d).cwiseAbs().sum();
  return std::abs(sum - ref) / std::max({std::abs(sum), std::abs(ref), terms, extra});
}

/// d/dzbar_k of f at p by central differences: (d/dx + i d/dy) / 2.
template <class F>
auto dbarFD(F&& f, const ComplexPoint& p, int k, double h) {
  const auto dx = ((f(shifted(p, k, h)) - f(shifted(p, k, -h))) / (2.0 * h)).eval();
  const auto dy = ((f(shifted(p, k, cplx(0.0, h))) - f(shifted(p, k, cplx(0.0, -h)))) / (2.0 * h)).eval();
  return (0.5 * (dx + kI * dy)).eval();
}

/// d/dz_k of f at p by central differences: (d/dx - i d/dy) / 2.
template <class F>
auto dzFD(F&& f, const ComplexPoint& p, int k, double h) {
  const auto dx = ((f(shifted(p, k, h)) - f(shifted(p, k, -h))) / (2.0 * h)).eval();
  const auto dy = ((f(shifted(p, k, cplx(0.0, h))) - f(shifted(p, k, cplx(0.0, -h)))) / (2.0 * h)).eval();
  return (0.5 * (dx - kI * dy)).eval();
}

/// Scalar versions (no Eigen expression to evaluate).
template <class F>
cplx dbarFDs(F&& f, const ComplexPoint& p, int k, double h) {
  const cplx dx = (f(shifted(p, k, h)) - f(shifted(p, k, -h))) / (2.0 * h);
  const cplx dy = (f(shifted(p, k, cplx(0.0, h))) - f(shifted(p, k, cplx(0.0, -h)))) / (2.0 * h);
  return 0.5 * (dx + kI * dy);
}

template <class F>
cplx dzFDs(F&& f, const ComplexPoint& p, int k, double h) {
  const cplx dx = (f(shifted(p, k, h)) - f(shifted(p, k, -h))) / (2.0 * h);
  const cplx dy = (f(shifted(p, k, cplx(0.0, h))) - f(shifted(p, k, cplx(0.0, -h)))) / (2.0 * h);
  return 0.5 * (dx - kI * dy);
}

/// Order-2 Wirtinger jets of a real function from values only.
struct FdJet {
  CVec grad;
  CMat hessHolo;
  CMat hessMixed;
};

inline FdJet fdJet(const DefiningFunction& r, const ComplexPoint& p, double h) {
  const int n = r.dim();
  auto value = [&](const ComplexPoint& q) { return cplx(r.eval(q), 0.0); };
  FdJet j;
  j.grad.resize(n);
  j.hessHolo.resize(n, n);
  j.hessMixed.resize(n, n);
  for (int a = 0; a < n; ++a) j.grad[a] = dzFDs(value, p, a, h);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      auto da = [&](const ComplexPoint& q) { return dzFDs(value, q, a, h); };
      j.hessHolo(a, b) = dzFDs(da, p, b, h);
      j.hessMixed(a, b) = dbarFDs(da, p, b, h);
    }
  return j;
}

/// |a - b| / max(1, |b|) in the max norm.
template <class A, class B>
double relErr(const A& a, const B& b) {
  const double diff = (a - b).cwiseAbs().maxCoeff();
  const double ref = b.cwiseAbs().maxCoeff();
  return diff / std::max(1.0, ref);
}

inline double relErr(cplx a, cplx b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

/// Determinant by the Leibniz permutation sum.
inline cplx leibnizDet(const CMat& m) {
  const int d = static_cast<int>(m.rows());
  std::vector<int> perm(static_cast<size_t>(d));
  std::iota(perm.begin(), perm.end(), 0);
  cplx total = 0.0;
  do {
    int inversions = 0;
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j)
        if (perm[i] > perm[j]) ++inversions;
    cplx prod = 1.0;
    for (int i = 0; i < d; ++i) prod *= m(i, perm[static_cast<size_t>(i)]);
    total += (inversions % 2 ? -1.0 : 1.0) * prod;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return d == 0 ? cplx(1.0) : total;
}

/// Coefficient of the basis covector product e_{b_1} ^ ... ^ e_{b_k}
/// (b ascending) in alpha_1 ^ ... ^ alpha_k, where row i of `alphas` holds
/// the coefficients of alpha_i: det[alpha_i(b_j)].
inline cplx wedgeCoefficient(const CMat& alphas, const std::vector<int>& basis) {
  const int k = static_cast<int>(alphas.rows());
  CMat m(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) m(i, j) = alphas(i, basis[static_cast<size_t>(j)]);
  return leibnizDet(m);
}

/// A 1-form on C^n with the given coefficients on (dz_1..dz_n, dzbar_1..dzbar_n).
inline PointForm oneForm(int n, const CVec& coeffs) {
  PointForm f(n);
  for (int b = 0; b < 2 * n; ++b) f.add(FormMask{1} << b, coeffs[b]);
  return f;
}

inline CVec randomComplex(Rng& rng, int size) {
  CVec v(size);
  for (int i = 0; i < size; ++i) v[i] = cplx(rng.normal(), rng.normal());
  return v;
}

/// A point at distance `dist` from `center` in a random direction.
inline ComplexPoint around(const ComplexPoint& center, double dist, Rng& rng) {
  return center + dist * randomDirection(rng, static_cast<int>(center.size()));
}

/// Largest coefficient difference between two forms.
inline double formDiff(const PointForm& a, const PointForm& b) {
  PointForm d = a;
  d -= b;
  return d.maxAbs();
}

}  // namespace cfk::test
