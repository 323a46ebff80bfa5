// Evaluates the patched support function S and its generating form s for a
// pair of points on the complex ellipsoid, and prints the Levi spectrum at
// a weakly pseudoconvex boundary point.

#include <cstdio>

#include "cfk/support.hpp"

int main() {
  using namespace cfk;
  const DomainSpec spec = DomainSpec::complexEllipsoid(2);
  const DefiningPtr r = makeDefiningFunction(spec);

  ComplexPoint zeta(2);
  zeta << cplx(1.0, 0.0), cplx(0.0, 0.0);
  ComplexPoint z(2);
  z << cplx(0.95, 0.02), cplx(0.05, -0.03);
  KernelConfig cfg;
  cfg.eps = 0.2;
  cfg.K = 2.0;
  const SupportEval e = supportEval(*r, cfg, zeta, z, JetLevel::Values);
  const cplx pairing = e.s.transpose() * (zeta - z);
  std::printf("|zeta - z| = %.4f  chi = %.4f\n", e.dist, e.chi);
  std::printf("S           = %+.6e %+.6ei\n", e.S.real(), e.S.imag());
  std::printf("<s, zeta-z> = %+.6e %+.6ei\n", pairing.real(), pairing.imag());

  const LeviSpectrum levi = leviSpectrum(*r, zeta);
  std::printf("Levi eigenvalues at (1, 0):");
  for (double v : levi.eigenvalues) std::printf(" %.3e", v);
  std::printf("\n");
}
