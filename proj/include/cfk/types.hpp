#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace cfk {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

/// A point of C^n. The length is the ambient dimension n of the domain.
using ComplexPoint = CVec;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr cplx kI{0.0, 1.0};

/// Numerical tolerances shared by the geometry and support layers.
struct Tolerances {
  double psd = 1e-9;   // negative Levi values tolerated as rounding
  double sym = 1e-10;  // Hermitian / symmetric residuals
  double tan = 1e-9;   // tangency of projected vectors
  double grad = 1e-6;  // smallest admissible |grad r|
};

/// Hermitian inner product <a,b> = sum a_j conj(b_j).
inline cplx hdot(const CVec& a, const CVec& b) {
  cplx s = 0.0;
  for (Eigen::Index j = 0; j < a.size(); ++j) s += a[j] * std::conj(b[j]);
  return s;
}

inline double norm(const CVec& v) { return v.norm(); }

}  // namespace cfk
