// Reproduces a holomorphic monomial from its boundary values on the complex
// ellipsoid |z1|^2 + |z2|^4 < 1 with the patched kernel and with
// Bochner-Martinelli, at a few quadrature resolutions.

#include <cstdio>

#include "cfk/probes.hpp"

int main() {
  using namespace cfk;
  const DomainSpec spec = DomainSpec::complexEllipsoid(2);
  const DefiningPtr r = makeDefiningFunction(spec);
  const ChartPtr chart = buildChart(spec).front();
  ComplexPoint z(2);
  z << cplx(0.3, 0.1), cplx(-0.2, 0.25);
  const BoundaryFunction f = [](const ComplexPoint& p) { return p[0] * p[1] * p[1]; };
  const cplx exact = f(z);

  KernelConfig cfg;
  std::printf("%6s %14s %14s\n", "res", "|T^S f - f|", "|T^BM f - f|");
  for (int res : {16, 32, 64}) {
    GridOptions opt;
    opt.resolution = res;
    const QuadratureGrid grid(chart, opt);
    const cplx ts = applyTS(*r, cfg, grid, f, z);
    const cplx tbm = applyTBM(grid, f, z);
    std::printf("%6d %14.3e %14.3e\n", res, std::abs(ts - exact), std::abs(tbm - exact));
  }
}
