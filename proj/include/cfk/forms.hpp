#pragma once

// Pointwise exterior algebra over dzeta_1..dzeta_n, dzetabar_1..dzetabar_n.
//
// A basis monomial is stored as a bitmask over the 2n covectors in the
// global order (dzeta_1, ..., dzeta_n, dzetabar_1, ..., dzetabar_n); bit j
// is dzeta_{j+1} and bit n+j is dzetabar_{j+1}. The monomial for a mask is
// the wedge of its covectors in increasing bit order, which is exactly
// dzeta_I ^ dzetabar_J with I and J increasing.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <utility>
#include <vector>

#include "cfk/errors.hpp"
#include "cfk/types.hpp"

namespace cfk {

using FormMask = std::uint32_t;

/// Sign of the permutation that merges the increasing sequences of bits in
/// `a` followed by `b` into increasing order. Requires a & b == 0.
inline int mergeSign(FormMask a, FormMask b) {
  int inversions = 0;
  for (FormMask rest = b; rest != 0; rest &= rest - 1) {
    const int bit = std::countr_zero(rest);
    const FormMask above = (bit >= 31) ? 0u : (a & ~((FormMask{2} << bit) - 1));
    inversions += std::popcount(above);
  }
  return (inversions & 1) ? -1 : 1;
}

class PointForm {
 public:
  using Term = std::pair<FormMask, cplx>;

  PointForm() = default;
  explicit PointForm(int n) : n_(n) {
    if (n < 1 || n > 16) throw DimensionMismatch("form dimension must be in 1..16");
  }

  static PointForm scalar(int n, cplx c) {
    PointForm f(n);
    f.add(0u, c);
    return f;
  }
  /// dzeta_j, 0-based j.
  static PointForm dz(int n, int j, cplx c = 1.0) {
    PointForm f(n);
    f.add(FormMask{1} << j, c);
    return f;
  }
  /// dzetabar_j, 0-based j.
  static PointForm dzbar(int n, int j, cplx c = 1.0) {
    PointForm f(n);
    f.add(FormMask{1} << (n + j), c);
    return f;
  }

  int dim() const { return n_; }
  const std::vector<Term>& terms() const { return terms_; }
  bool isZero() const { return terms_.empty(); }

  static FormMask maskOf(FormMask holo, FormMask anti, int n) { return holo | (anti << n); }
  FormMask holoPart(FormMask m) const { return m & ((FormMask{1} << n_) - 1); }
  FormMask antiPart(FormMask m) const { return m >> n_; }

  cplx coeff(FormMask mask) const {
    auto it = std::lower_bound(terms_.begin(), terms_.end(), mask,
                               [](const Term& t, FormMask m) { return t.first < m; });
    return (it != terms_.end() && it->first == mask) ? it->second : cplx(0.0);
  }
  /// Coefficient of dzeta_I ^ dzetabar_J, with I, J given as bitmasks over 0..n-1.
  cplx coeff(FormMask holo, FormMask anti) const { return coeff(maskOf(holo, anti, n_)); }

  /// Accumulates c onto the monomial `mask`. Keeps terms sorted.
  void add(FormMask mask, cplx c) {
    auto it = std::lower_bound(terms_.begin(), terms_.end(), mask,
                               [](const Term& t, FormMask m) { return t.first < m; });
    if (it != terms_.end() && it->first == mask) {
      it->second += c;
    } else {
      terms_.insert(it, {mask, c});
    }
  }

  PointForm& operator+=(const PointForm& o) {
    requireSameDim(o);
    for (const auto& [m, c] : o.terms_) add(m, c);
    return prune();
  }
  PointForm& operator-=(const PointForm& o) {
    requireSameDim(o);
    for (const auto& [m, c] : o.terms_) add(m, -c);
    return prune();
  }
  PointForm& operator*=(cplx s) {
    for (auto& t : terms_) t.second *= s;
    return prune();
  }
  friend PointForm operator+(PointForm a, const PointForm& b) { return a += b; }
  friend PointForm operator-(PointForm a, const PointForm& b) { return a -= b; }
  friend PointForm operator*(PointForm a, cplx s) { return a *= s; }
  friend PointForm operator*(cplx s, PointForm a) { return a *= s; }

  /// The (p,q)-stratum.
  PointForm part(int p, int q) const {
    PointForm out(n_);
    for (const auto& [m, c] : terms_)
      if (std::popcount(holoPart(m)) == p && std::popcount(antiPart(m)) == q) out.terms_.push_back({m, c});
    return out;
  }

  double maxAbs() const {
    double s = 0.0;
    for (const auto& t : terms_) s = std::max(s, std::abs(t.second));
    return s;
  }

  double pruneThreshold() const { return prune_; }
  void setPruneThreshold(double t) { prune_ = t; }

  /// Builds a form from an unsorted term list, merging duplicates.
  static PointForm fromTerms(int n, std::vector<Term> raw, double pruneBelow = 1e-30) {
    PointForm out(n);
    out.prune_ = pruneBelow;
    std::sort(raw.begin(), raw.end(), [](const Term& x, const Term& y) { return x.first < y.first; });
    for (const Term& t : raw) {
      if (!out.terms_.empty() && out.terms_.back().first == t.first)
        out.terms_.back().second += t.second;
      else
        out.terms_.push_back(t);
    }
    out.prune();
    return out;
  }

  void requireSameDim(const PointForm& o) const {
    if (o.n_ != n_) throw DimensionMismatch("forms over C^" + std::to_string(n_) + " and C^" + std::to_string(o.n_));
  }

 private:
  PointForm& prune() {
    std::erase_if(terms_, [this](const Term& t) { return std::abs(t.second) < prune_; });
    return *this;
  }

  int n_ = 0;
  double prune_ = 1e-30;
  std::vector<Term> terms_;
};

inline PointForm wedge(const PointForm& a, const PointForm& b) {
  a.requireSameDim(b);
  std::vector<PointForm::Term> raw;
  raw.reserve(a.terms().size() * b.terms().size());
  for (const auto& [ma, ca] : a.terms())
    for (const auto& [mb, cb] : b.terms()) {
      if (ma & mb) continue;
      raw.push_back({ma | mb, static_cast<double>(mergeSign(ma, mb)) * ca * cb});
    }
  return PointForm::fromTerms(a.dim(), std::move(raw), std::min(a.pruneThreshold(), b.pruneThreshold()));
}

inline PointForm power(const PointForm& a, int k) {
  if (k < 0) throw DegreeMismatch("negative wedge power");
  PointForm out = PointForm::scalar(a.dim(), 1.0);
  for (int i = 0; i < k; ++i) out = wedge(out, a);
  return out;
}

/// The chart derivative at a parameter point: jacobian(j, i) = dzeta_j/du_i.
struct ChartJet {
  ComplexPoint point;
  CMat jacobian;  // n x (2n-1)
};

/// Determinants of every (2n-1)-row minor of the substituted covector
/// matrix [J; conj(J)], indexed by the omitted covector. Reused across all
/// forms pulled back at one chart point.
class PullbackMinors {
 public:
  explicit PullbackMinors(const ChartJet& jet) : n_(static_cast<int>(jet.point.size())) {
    const int d = 2 * n_ - 1;
    if (jet.jacobian.rows() != n_ || jet.jacobian.cols() != d)
      throw DimensionMismatch("chart jacobian must be n x (2n-1)");
    if (n_ == 2) {
      Eigen::Matrix<cplx, 4, 3> rows;
      rows.topRows<2>() = jet.jacobian;
      rows.bottomRows<2>() = jet.jacobian.conjugate();
      minors_.resize(4);
      for (int omit = 0; omit < 4; ++omit) {
        Eigen::Matrix3cd m;
        for (int r = 0, k = 0; r < 4; ++r)
          if (r != omit) m.row(k++) = rows.row(r);
        minors_[omit] = m.determinant();
      }
      return;
    }
    CMat rows(2 * n_, d);
    rows.topRows(n_) = jet.jacobian;
    rows.bottomRows(n_) = jet.jacobian.conjugate();
    minors_.resize(2 * n_);
    for (int omit = 0; omit < 2 * n_; ++omit) {
      CMat m(d, d);
      for (int r = 0, k = 0; r < 2 * n_; ++r)
        if (r != omit) m.row(k++) = rows.row(r);
      minors_[omit] = d == 0 ? cplx(1.0) : m.determinant();
    }
  }

  /// Pullback of the basis (2n-1)-form that omits covector `omit`.
  cplx minor(int omit) const { return minors_[static_cast<size_t>(omit)]; }

  cplx operator()(const PointForm& a) const {
    if (a.dim() != n_) throw DimensionMismatch("form and chart dimensions differ");
    const FormMask full = (FormMask{1} << (2 * n_)) - 1;
    cplx s = 0.0;
    for (const auto& [m, c] : a.terms()) {
      if (std::popcount(m) != 2 * n_ - 1) throw DegreeMismatch("pullbackTop needs degree 2n-1 terms only");
      s += c * minors_[std::countr_zero(full & ~m)];
    }
    return s;
  }

 private:
  int n_;
  std::vector<cplx> minors_;
};

/// Coefficient of du_1 ^ ... ^ du_{2n-1} in the pullback of a top-degree
/// boundary form through the chart.
inline cplx pullbackTop(const PointForm& a, const ChartJet& jet) { return PullbackMinors(jet)(a); }

}  // namespace cfk
