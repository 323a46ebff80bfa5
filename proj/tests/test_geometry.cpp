#include <gtest/gtest.h>

#include "oracles.hpp"

namespace cfk {
namespace {

struct NamedDomain {
  std::string name;
  DomainSpec spec;
};

void PrintTo(const NamedDomain& d, std::ostream* os) { *os << d.name; }

std::vector<NamedDomain> jetDomains() {
  DomainSpec rescaled = DomainSpec::complexEllipsoid(2);
  rescaled.C = 0.5;
  DomainSpec cubic = DomainSpec::complexEllipsoid(3);
  return {{"ball", DomainSpec::ball()},
          {"ball_r2", DomainSpec::ball(2.0)},
          {"convex_ellipsoid", DomainSpec::convexEllipsoid({1.0, 0.7, 1.3, 0.9})},
          {"complex_ellipsoid_m2", DomainSpec::complexEllipsoid(2)},
          {"complex_ellipsoid_m3", cubic},
          {"rescaled_m2", rescaled}};
}

class JetTest : public ::testing::TestWithParam<NamedDomain> {};

TEST_P(JetTest, ClosedFormMatchesFiniteDifferences) {
  const DomainSpec& spec = GetParam().spec;
  const DefiningPtr r = makeDefiningFunction(spec);
  const double h = 1e-4 * spec.boundingRadius();
  for (int i = 0; i < 100; ++i) {
    Rng rng(7, i);
    const ComplexPoint p = sampleBandPoint(*r, spec, rng);
    const Jet j = r->jet(p, 3);
    const test::FdJet fd = test::fdJet(*r, p, h);
    EXPECT_LE(test::relErr(j.grad, fd.grad), 1e-5) << "grad at sample " << i;
    EXPECT_LE(test::relErr(j.hess_holo, fd.hessHolo), 1e-5) << "hess_holo at sample " << i;
    EXPECT_LE(test::relErr(j.hess_mixed, fd.hessMixed), 1e-5) << "hess_mixed at sample " << i;
    for (int k = 0; k < r->dim(); ++k) {
      auto hess = [&](const ComplexPoint& q) { return CMat(r->jet(q, 2).hess_holo); };
      EXPECT_LE(test::relErr(j.third[k], test::dbarFD(hess, p, k, h)), 1e-6) << "third at sample " << i;
    }
  }
}

TEST_P(JetTest, HessiansAreSymmetricAndHermitian) {
  const DomainSpec& spec = GetParam().spec;
  const DefiningPtr r = makeDefiningFunction(spec);
  for (int i = 0; i < 20; ++i) {
    Rng rng(11, i);
    const Jet j = r->jet(sampleBandPoint(*r, spec, rng), 2);
    EXPECT_LE((j.hess_holo - j.hess_holo.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((j.hess_mixed - j.hess_mixed.adjoint()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

INSTANTIATE_TEST_SUITE_P(Domains, JetTest, ::testing::ValuesIn(jetDomains()),
                         [](const auto& info) { return info.param.name; });

TEST(Geometry, CustomFunctionMatchesClosedForm) {
  DomainSpec spec;
  spec.kind = DomainKind::Custom;
  spec.params = {1.0, 0.5, -1.0};
  const DefiningPtr custom = makeDefiningFunction(spec);
  const ConvexEllipsoidFunction exact({1.0, std::sqrt(2.0)}, {1.0, std::sqrt(2.0)});
  for (int i = 0; i < 20; ++i) {
    Rng rng(3, i);
    const ComplexPoint p = test::around(ComplexPoint::Zero(2), 0.8 * rng.uniform(), rng);
    const Jet a = custom->jet(p, 3), b = exact.jet(p, 3);
    EXPECT_NEAR(a.value, b.value, 1e-12);
    EXPECT_LE(test::relErr(a.grad, b.grad), 1e-7);
    EXPECT_LE(test::relErr(a.hess_mixed, b.hess_mixed), 1e-5);
    for (int k = 0; k < 2; ++k) EXPECT_LE(a.third[k].cwiseAbs().maxCoeff(), 1e-2);
  }
}

TEST(Geometry, UnitaryTransformIsAChangeOfVariables) {
  const DefiningPtr base = makeDefiningFunction(DomainSpec::convexEllipsoid({1.0, 0.7, 1.3, 0.9}));
  Rng rng(5, 0);
  const CMat u = CMat(Eigen::HouseholderQR<CMat>(CMat::NullaryExpr(2, 2, [&] {
                        return cplx(rng.normal(), rng.normal());
                      })).householderQ());
  const UnitaryTransformed t(base, u);
  const double h = 1e-4;
  for (int i = 0; i < 10; ++i) {
    Rng prng(9, i);
    const ComplexPoint w = test::around(ComplexPoint::Zero(2), 0.6, prng);
    const Jet j = t.jet(w, 3);
    const test::FdJet fd = test::fdJet(t, w, h);
    EXPECT_NEAR(j.value, base->eval(u * w), 1e-14);
    EXPECT_LE(test::relErr(j.grad, fd.grad), 1e-6);
    EXPECT_LE(test::relErr(j.hess_holo, fd.hessHolo), 1e-5);
    EXPECT_LE(test::relErr(j.hess_mixed, fd.hessMixed), 1e-5);
  }
}

TEST(Geometry, LeviFormOfComplexEllipsoidAxis) {
  const ComplexEllipsoidFunction r(2, 2);
  ComplexPoint zeta(2);
  zeta << 0.0, 1.0;
  CVec t(2);
  t << 0.0, 1.0;
  EXPECT_NEAR(leviForm(r, zeta, t), 4.0, 1e-14);
}

TEST(Geometry, LeviSpectrumSeparatesStrictAndWeakPoints) {
  const DefiningPtr ball = makeDefiningFunction(DomainSpec::ball());
  const DefiningPtr ell = makeDefiningFunction(DomainSpec::complexEllipsoid(2));
  ComplexPoint p(2);
  p << 1.0, 0.0;
  const LeviSpectrum sb = leviSpectrum(*ball, p);
  const LeviSpectrum se = leviSpectrum(*ell, p);
  ASSERT_EQ(sb.eigenvalues.size(), 1u);
  ASSERT_EQ(se.eigenvalues.size(), 1u);
  EXPECT_NEAR(sb.eigenvalues[0], 1.0, 1e-12);
  EXPECT_NEAR(se.eigenvalues[0], 0.0, 1e-12);
}

TEST(Geometry, LeviPolynomialIsHolomorphicInZ) {
  const DomainSpec spec = DomainSpec::complexEllipsoid(2);
  const DefiningPtr r = makeDefiningFunction(spec);
  for (int i = 0; i < 20; ++i) {
    Rng rng(13, i);
    const ComplexPoint zeta = sampleBoundaryPoint(*r, spec, rng);
    const ComplexPoint z = test::around(zeta, 0.2, rng);
    auto F = [&](const ComplexPoint& q) { return leviPolynomial(*r, zeta, q); };
    for (int l = 0; l < 2; ++l) EXPECT_LE(std::abs(test::dbarFDs(F, z, l, 1e-4)), 1e-9);
  }
}

TEST(Geometry, LeviPolynomialMatchesTaylorExpansion) {
  const ComplexEllipsoidFunction r(2, 2);
  ComplexPoint zeta(2), z(2);
  zeta << 0.0, 1.0;
  z << 0.0, 0.9;
  // dr/dzeta_2 = 2 and d^2r/dzeta_2^2 = 2 at (0, 1).
  const double w = 0.9;
  const cplx expected = 2.0 * (1.0 - w) - 0.5 * 2.0 * (1.0 - w) * (1.0 - w);
  EXPECT_NEAR(std::abs(leviPolynomial(r, zeta, z) - expected), 0.0, 1e-8);
}

TEST(Geometry, BoundarySamplesLieOnTheBoundary) {
  for (const auto& d : jetDomains()) {
    const DefiningPtr r = makeDefiningFunction(d.spec);
    for (int i = 0; i < 50; ++i) {
      Rng rng(17, i);
      const ComplexPoint b = sampleBoundaryPoint(*r, d.spec, rng);
      EXPECT_LE(std::abs(r->eval(b)), 1e-12) << d.name;
      const ComplexPoint p = sampleBandPoint(*r, d.spec, rng);
      EXPECT_LE(r->eval(p), 1e-12) << d.name;
      EXPECT_TRUE(inClosedBand(*r, d.spec, p)) << d.name;
    }
  }
}

TEST(Geometry, ValidationRejectsBadSpecs) {
  DomainSpec s = DomainSpec::ball(-1.0);
  EXPECT_THROW(validate(s), ConfigError);
  s = DomainSpec::complexEllipsoid(2);
  s.params = {2.5};
  EXPECT_THROW(validate(s), UnsupportedDomain);
  s = DomainSpec::convexEllipsoid({1.0, 1.0});
  EXPECT_THROW(validate(s), ConfigError);
  s = DomainSpec::ball();
  s.C = -1.0;
  EXPECT_THROW(validate(s), ConfigError);
  EXPECT_THROW(domainKindFromString("torus"), ConfigError);
}

// ---------------------------------------------------------------------------
// Forms

std::vector<int> bitsOf(FormMask m) {
  std::vector<int> b;
  for (int i = 0; i < 32; ++i)
    if (m & (FormMask{1} << i)) b.push_back(i);
  return b;
}

TEST(Forms, WedgeOfOneFormsIsADeterminant) {
  for (int n = 1; n <= 3; ++n)
    for (int k = 1; k <= 2 * n; ++k) {
      Rng rng(19, static_cast<std::uint64_t>(10 * n + k));
      CMat alphas(k, 2 * n);
      PointForm w = PointForm::scalar(n, 1.0);
      for (int i = 0; i < k; ++i) {
        const CVec c = test::randomComplex(rng, 2 * n);
        alphas.row(i) = c.transpose();
        w = wedge(w, test::oneForm(n, c));
      }
      for (FormMask m = 0; m < (FormMask{1} << (2 * n)); ++m) {
        if (std::popcount(m) != k) continue;
        const cplx expected = test::wedgeCoefficient(alphas, bitsOf(m));
        EXPECT_LE(std::abs(w.coeff(m) - expected), 1e-10 * std::max(1.0, std::abs(expected)));
      }
    }
}

TEST(Forms, WedgeIsGradedCommutativeAndAssociative) {
  const int n = 3;
  Rng rng(23, 0);
  const PointForm a = test::oneForm(n, test::randomComplex(rng, 2 * n));
  const PointForm b = test::oneForm(n, test::randomComplex(rng, 2 * n));
  const PointForm c = test::oneForm(n, test::randomComplex(rng, 2 * n));
  EXPECT_LE(test::formDiff(wedge(a, b), -1.0 * wedge(b, a)), 1e-14);
  EXPECT_LE(wedge(a, a).maxAbs(), 1e-14);
  const PointForm ab = wedge(a, b);
  EXPECT_LE(test::formDiff(wedge(ab, c), wedge(c, ab)), 1e-13);
  EXPECT_LE(test::formDiff(wedge(ab, c), wedge(a, wedge(b, c))), 1e-13);
}

TEST(Forms, PowerOfTwoFormCountsPermutations) {
  // (dz1^dzbar1 + dz2^dzbar2)^2 = 2 dz1^dzbar1^dz2^dzbar2.
  const int n = 2;
  const PointForm a = wedge(PointForm::dz(n, 0), PointForm::dzbar(n, 0)) +
                      wedge(PointForm::dz(n, 1), PointForm::dzbar(n, 1));
  const PointForm sq = power(a, 2);
  const PointForm expected = 2.0 * wedge(wedge(PointForm::dz(n, 0), PointForm::dzbar(n, 0)),
                                         wedge(PointForm::dz(n, 1), PointForm::dzbar(n, 1)));
  EXPECT_LE(test::formDiff(sq, expected), 1e-15);
  EXPECT_TRUE(power(a, 3).isZero());
}

TEST(Forms, PartSelectsBidegree) {
  const int n = 2;
  Rng rng(29, 0);
  const PointForm a = test::oneForm(n, test::randomComplex(rng, 4));
  const PointForm b = test::oneForm(n, test::randomComplex(rng, 4));
  const PointForm w = wedge(a, b);
  const PointForm sum = w.part(2, 0) + w.part(1, 1) + w.part(0, 2);
  EXPECT_LE(test::formDiff(sum, w), 1e-15);
  const PointForm mixed = w.part(1, 1);
  for (const auto& [m, c] : mixed.terms()) {
    EXPECT_EQ(std::popcount(w.holoPart(m)), 1);
    EXPECT_EQ(std::popcount(w.antiPart(m)), 1);
  }
}

TEST(Forms, DimensionAndDegreeErrors) {
  EXPECT_THROW(PointForm(0), DimensionMismatch);
  EXPECT_THROW(wedge(PointForm::dz(2, 0), PointForm::dz(3, 0)), DimensionMismatch);
  EXPECT_THROW(power(PointForm::dz(2, 0), -1), DegreeMismatch);
  ChartJet jet{ComplexPoint::Zero(2), CMat::Zero(2, 3)};
  EXPECT_THROW(pullbackTop(PointForm::dz(2, 0), jet), DegreeMismatch);
  jet.jacobian = CMat::Zero(2, 2);
  EXPECT_THROW(PullbackMinors{jet}, DimensionMismatch);
}

TEST(Forms, PullbackMatchesLeibnizDeterminant) {
  for (int n = 2; n <= 3; ++n) {
    const int d = 2 * n - 1;
    for (int trial = 0; trial < 5; ++trial) {
      Rng rng(31, static_cast<std::uint64_t>(10 * n + trial));
      ChartJet jet{test::randomComplex(rng, n), CMat(n, d)};
      for (int i = 0; i < d; ++i) jet.jacobian.col(i) = test::randomComplex(rng, n);
      // Row b of the covector matrix: dz_b or dzbar_b applied to the d/du_i.
      CMat covectors(2 * n, d);
      covectors.topRows(n) = jet.jacobian;
      covectors.bottomRows(n) = jet.jacobian.conjugate();
      PointForm form(n);
      cplx expected = 0.0;
      for (int omit = 0; omit < 2 * n; ++omit) {
        const FormMask m = ((FormMask{1} << (2 * n)) - 1) & ~(FormMask{1} << omit);
        const cplx c(rng.normal(), rng.normal());
        form.add(m, c);
        CMat rows(d, d);
        const auto bits = bitsOf(m);
        for (int r = 0; r < d; ++r) rows.row(r) = covectors.row(bits[static_cast<size_t>(r)]);
        expected += c * test::leibnizDet(rows);
      }
      EXPECT_LE(std::abs(pullbackTop(form, jet) - expected), 1e-10 * std::max(1.0, std::abs(expected)));
    }
  }
}

}  // namespace
}  // namespace cfk
