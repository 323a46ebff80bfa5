// Acceptance run: one PASS/FAIL line per criterion.
//
//   cfk_acceptance [--allow-fail N[,N...]] [--only N[,N...]]
//
// The exit status is 0 when every criterion passes or each failing one is
// listed in --allow-fail.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include "oracles.hpp"

namespace cfk {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

struct NamedDomain {
  std::string name;
  DomainSpec spec;
};

const std::vector<NamedDomain>& builtinDomains() {
  static const std::vector<NamedDomain> d{{"ball", DomainSpec::ball()},
                                          {"convex-ellipsoid", DomainSpec::convexEllipsoid({1.0, 0.7, 1.3, 0.9})},
                                          {"complex-ellipsoid", DomainSpec::complexEllipsoid(2)}};
  return d;
}

const std::vector<NamedDomain>& testDomains() {
  static const std::vector<NamedDomain> d{{"ball", DomainSpec::ball()},
                                          {"complex-ellipsoid", DomainSpec::complexEllipsoid(2)}};
  return d;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("cfk-acceptance-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int runCommand(const std::string& command, const std::string& configText, const fs::path& dir) {
  const fs::path cfg = dir / (command + ".cfg");
  std::ofstream(cfg) << configText;
  cli::Overrides o;
  o.config = cfg.string();
  o.out = (dir / "out").string();
  std::ostringstream err;
  return cli::run(command, o, err);
}

// ---------------------------------------------------------------------------

Outcome exactAlgebra() {
  const auto start = Clock::now();
  const long pairs = 100000;
  KernelConfig cfg;
  cfg.K = 1.0;
  double worstG = 0.0, worstS = 0.0;
  for (const auto& d : builtinDomains()) {
    const DefiningPtr r = makeDefiningFunction(d.spec);
    cfg.eps = 0.5 * d.spec.band();
    std::vector<double> errG(static_cast<size_t>(pairs)), errS(static_cast<size_t>(pairs));
    parallelFor(static_cast<size_t>(pairs), [&](size_t i) {
      Rng rng(101, i);
      const ComplexPoint zeta = sampleBandPoint(*r, d.spec, rng);
      const auto z = detail::samplePartner(*r, d.spec, zeta, d.spec.band(), rng, false);
      if (!z) return;
      const Jet jz = r->jet(zeta, 3);
      const CVec dz = zeta - *z;
      const SupportEval e = supportEval(jz, cfg, zeta, *z, JetLevel::Values);
      errG[i] = test::pairingResidual(e.g, dz, e.phiK + jz.value, std::abs(jz.value));
      // On bD the reference is S; r(zeta) is carried for band points and rounding.
      errS[i] = test::pairingResidual(e.s, dz, e.S + e.chi * jz.value, e.chi * std::abs(jz.value));
    });
    for (long i = 0; i < pairs; ++i) {
      worstG = std::max(worstG, errG[static_cast<size_t>(i)]);
      worstS = std::max(worstS, errS[static_cast<size_t>(i)]);
    }
  }
  const double secs = seconds(start);
  Outcome o;
  o.pass = worstG <= 1e-12 && worstS <= 1e-12 && secs < 10.0;
  o.detail = "max rel residual g " + sci(worstG) + ", s " + sci(worstS) + " over " +
             std::to_string(pairs) + " pairs x " + std::to_string(builtinDomains().size()) + " domains in " +
             sci(secs) + " s";
  return o;
}

// Reproduction rows shared by criteria 2 and 3.
struct ReproRun {
  std::string domain;
  std::vector<ReproductionRow> rows;
  double secs = 0.0;
};

const std::vector<ReproRun>& reproduction() {
  static const std::vector<ReproRun> runs = [] {
    std::vector<ReproRun> out;
    for (const auto& d : testDomains()) {
      const auto start = Clock::now();
      KernelConfig cfg;
      cfg.resolution = 48;
      const DefiningPtr r = makeDefiningFunction(d.spec);
      const ChartPtr chart = buildChart(d.spec).front();
      ReproRun run;
      run.domain = d.name;
      run.rows = reproductionStudy(*r, cfg, chart, monomialsUpTo(2, 3), defaultInteriorPoints(d.spec), 2);
      run.secs = seconds(start);
      out.push_back(std::move(run));
    }
    return out;
  }();
  return runs;
}

Outcome reproducingFormula() {
  Outcome o{true, ""};
  double total = 0.0;
  for (const auto& run : reproduction()) {
    double e0 = 0.0, e1 = 0.0;
    for (const auto& row : run.rows) (row.level == 0 ? e0 : e1) = std::max(row.level == 0 ? e0 : e1, row.errTS);
    const bool ok = e0 <= 1e-2 && cli::reproductionConverged(run.rows, 2, 1e-2);
    o.pass = o.pass && ok;
    total += run.secs;
    o.detail += run.domain + ": max err 48^3 " + sci(e0) + ", 96^3 " + sci(e1) + "; ";
  }
  o.pass = o.pass && total < 600.0;
  o.detail += "time " + sci(total) + " s";
  return o;
}

Outcome crossOracle() {
  // The BM error is compared with a rounding floor of 64 ulp of max(1, |f|).
  const double floor = 64.0 * std::numeric_limits<double>::epsilon();
  Outcome o{true, ""};
  for (const auto& run : reproduction()) {
    double worst = 0.0;
    for (const auto& row : run.rows) {
      const double scale = std::max(1.0, std::abs(row.exact));
      const double allowed = 2.0 * scale * std::max(row.errBM, floor);
      worst = std::max(worst, row.gap / allowed);
    }
    o.pass = o.pass && worst <= 1.0;
    o.detail += run.domain + ": max |TS - TBM| / (2 BM err) " + sci(worst) + "; ";
  }
  return o;
}

Outcome calibratedSuites() {
  Outcome o{true, ""};
  for (const auto& d : testDomains()) {
    const fs::path dir = scratch("calibrate-" + d.name);
    const auto start = Clock::now();
    const int code = runCommand("calibrate",
                                "domain.kind = " + d.name + "\ndomain.params = " + (d.name == "ball" ? "1" : "2") +
                                    "\nestimates.samples = 10000\nrun.seed = 1\n",
                                dir);
    const double secs = seconds(start);
    const auto j = nlohmann::json::parse(slurp(dir / "out" / "calibrate.json"));
    bool ok = code == cli::kPass && secs < 60.0;
    double lo = std::numeric_limits<double>::infinity();
    long negative = 0;
    if (code == cli::kPass) {
      const auto& res = j.at("result");
      for (const auto& [k, v] : res.at("minima").items()) lo = std::min(lo, v.get<double>());
      auto neg = [](const nlohmann::json& rep) { return rep.at("extra").at("negativeTermSamples").get<double>(); };
      negative += static_cast<long>(neg(res.at("theorem3")) + neg(res.at("lemma8")));
      for (const auto& p : res.at("prop4")) negative += static_cast<long>(neg(p));
      ok = ok && lo >= 1e-3 && negative == 0;
      o.detail += d.name + ": eps " + sci(res.at("eps").get<double>()) + " K " + sci(res.at("K").get<double>()) +
                  ", min ratio " + sci(lo) + ", negative terms " + std::to_string(negative) + ", " + sci(secs) +
                  " s; ";
    } else {
      o.detail += d.name + ": calibrate exit " + std::to_string(code) + "; ";
    }
    o.pass = o.pass && ok;
  }
  return o;
}

Outcome prop2Orders() {
  Outcome o{true, ""};
  for (const auto& d : testDomains()) {
    const DefiningPtr r = makeDefiningFunction(d.spec);
    KernelConfig cfg;
    cfg.eps = 0.2 * d.spec.band();
    auto points = probePoints(*r, d.spec, 4, 1);
    points.push_back(axisBoundaryPoint(*r, d.spec));
    double supD = 0.0, supT = 0.0;
    bool ok = true;
    for (size_t k = 0; k < points.size(); ++k) {
      const EstimateReport rep = checkProp2(*r, cfg, d.spec, points[k], SampleOptions{2400, 17 * (k + 1)});
      ok = ok && rep.pass;
      supD = std::max(supD, rep.extra.at("supDbarZ"));
      supT = std::max(supT, rep.extra.at("supTangential"));
    }
    KernelConfig k0 = cfg;
    k0.K = 0.0;
    const EstimateReport control = checkProp2(*r, k0, d.spec, points.front(), SampleOptions{2400, 17});
    const double c0 = control.extra.at("supDbarZ");
    ok = ok && c0 == 0.0;
    o.pass = o.pass && ok;
    o.detail += d.name + ": sup dbar/t^2 " + sci(supD) + ", sup tangential/t " + sci(supT) + ", K=0 control " +
                sci(c0) + (ok ? "" : " (growth or nonzero control)") + "; ";
  }
  return o;
}

Outcome integrability() {
  Outcome o{true, ""};
  for (const auto& d : testDomains()) {
    const DefiningPtr r = makeDefiningFunction(d.spec);
    const ChartPtr chart = buildChart(d.spec).front();
    const ComplexPoint z = axisBoundaryPoint(*r, d.spec);
    KernelConfig cfg;
    const AlphaResult cf = alphaIntegrability(*r, cfg, chart, z, 0.5, 4, 12);
    const AlphaResult bm = alphaIntegrability(*r, cfg, chart, z, 0.0, 4, 12, true);
    const bool ok = cf.pass && bm.diverging;
    o.pass = o.pass && ok;
    o.detail += d.name + ": level-4 ratio " + sci(cf.rows.back().ratio) + ", BM alpha=0 ratio " +
                sci(bm.rows.back().ratio) + " contraction " + sci(bm.contraction) +
                (bm.diverging ? " diverging" : " not diverging") + "; ";
  }
  return o;
}

Outcome decay() {
  Outcome o{true, ""};
  for (const auto& d : testDomains()) {
    const DefiningPtr r = makeDefiningFunction(d.spec);
    const ChartPtr chart = buildChart(d.spec).front();
    KernelConfig cfg;
    DecayOptions opt;
    opt.delta = 0.5;
    const auto f = [](const ComplexPoint& p) { return cplx(p[0].real()); };
    const DecayResult res = dbarDecayProbe(*r, cfg, chart, f, axisBoundaryPoint(*r, d.spec), opt);
    const bool ok = res.pass && res.stable && res.orderedAgainstBM;
    o.pass = o.pass && ok;
    o.detail += d.name + ": slope " + sci(res.slopeCF) + " (>= -0.6 " + (res.pass ? "yes" : "no") +
                "), BM slope " + sci(res.slopeBM) + " (gap >= 0.15 " + (res.orderedAgainstBM ? "yes" : "no") +
                "), refinement change " + sci(res.slopeChange) + "; ";
  }
  return o;
}

Outcome strictRemark() {
  Outcome o{true, ""};
  {
    const DomainSpec spec = DomainSpec::ball();
    const DefiningPtr r = makeDefiningFunction(spec);
    const SampleOptions opt{10000, 1};
    const CalibrationResult cal = calibrateConstants(*r, spec, KernelConfig{}, opt);
    const EstimateReport rep = checkRemarkStrict(*r, cal.config, spec, opt);
    o.pass = rep.pass && rep.minRatio.value_or(0.0) >= 1e-3;
    o.detail = "ball: fitted c~ " + sci(rep.minRatio.value_or(0.0)) + "; ";
  }
  {
    const DomainSpec spec = DomainSpec::complexEllipsoid(2);
    const DefiningPtr r = makeDefiningFunction(spec);
    bool skipped = false;
    try {
      checkRemarkStrict(*r, KernelConfig{}, spec, SampleOptions{10000, 1});
    } catch (const NotStrictlyPseudoconvex&) {
      skipped = true;
    }
    o.pass = o.pass && skipped;
    o.detail += std::string("complex-ellipsoid: ") + (skipped ? "NotStrictlyPseudoconvex (skipped)" : "not skipped");
  }
  return o;
}

Outcome jetIntegrity() {
  double rJets = 0.0, chiErr = 0.0, sJets = 0.0, mixed = 0.0, kernel = 0.0;
  DomainSpec rescaled = DomainSpec::complexEllipsoid(2);
  rescaled.C = 0.5;
  std::vector<DomainSpec> domains{DomainSpec::ball(), DomainSpec::convexEllipsoid({1.0, 0.7, 1.3, 0.9}),
                                  DomainSpec::complexEllipsoid(2), rescaled};
  KernelConfig cfg;
  cfg.K = 1.5;
  cfg.eps = 0.1;
  for (const DomainSpec& spec : domains) {
    const DefiningPtr r = makeDefiningFunction(spec);
    const double h = 1e-4 * spec.boundingRadius();
    for (int i = 0; i < 100; ++i) {
      Rng rng(103, i);
      const ComplexPoint p = sampleBandPoint(*r, spec, rng);
      const Jet j = r->jet(p, 3);
      const test::FdJet fd = test::fdJet(*r, p, h);
      rJets = std::max({rJets, test::relErr(j.grad, fd.grad), test::relErr(j.hess_holo, fd.hessHolo),
                        test::relErr(j.hess_mixed, fd.hessMixed)});
    }
    auto values = [&](const ComplexPoint& zeta, const ComplexPoint& z) {
      return supportEval(r->jet(zeta, 3), cfg, zeta, z, JetLevel::Values);
    };
    for (int i = 0; i < 100; ++i) {
      Rng rng(107, i);
      const ComplexPoint zeta = sampleBandPoint(*r, spec, rng);
      const ComplexPoint z = test::around(zeta, 0.01 + 0.09 * rng.uniform(), rng);
      const SupportEval e = supportEval(*r, cfg, zeta, z, JetLevel::Mixed);
      const double hs = 1e-6 * e.dist;
      for (int k = 0; k < r->dim(); ++k) {
        auto sZeta = [&](const ComplexPoint& q) { return CVec(values(q, z).s); };
        auto SZeta = [&](const ComplexPoint& q) { return values(q, z).S; };
        auto sZ = [&](const ComplexPoint& q) { return CVec(values(zeta, q).s); };
        auto SZ = [&](const ComplexPoint& q) { return values(zeta, q).S; };
        auto first = [&](const ComplexPoint& q) { return CMat(supportEval(*r, cfg, zeta, q).dbarZetaS); };
        sJets = std::max({sJets, test::relErr(CVec(e.dbarZetaS.col(k)), test::dbarFD(sZeta, zeta, k, hs)),
                          test::relErr(e.dbarZetaSS[k], test::dbarFDs(SZeta, zeta, k, hs)),
                          test::relErr(CVec(e.dbarZS.col(k)), test::dbarFD(sZ, z, k, hs)),
                          test::relErr(e.dbarZSS[k], test::dbarFDs(SZ, z, k, hs))});
        mixed = std::max(mixed, test::relErr(e.mixed[k], test::dbarFD(first, z, k, hs)));
      }
    }
    for (int i = 0; i < 100 && spec.C == 0.0; ++i) {
      Rng rng(109, i);
      const ComplexPoint zeta = sampleBoundaryPoint(*r, spec, rng);
      const ComplexPoint z = test::around(zeta, 0.01 + 0.2 * rng.uniform(), rng);
      const Jet jz = r->jet(zeta, 3);
      const auto ks = dbarZOmega0(jz, cfg, zeta, z);
      for (int l = 0; l < 2; ++l) {
        const double hk = 1e-6 * (zeta - z).norm();
        auto form = [&](const ComplexPoint& q) { return omega0(jz, cfg, zeta, q).value; };
        const PointForm fd =
            (0.5 / (2 * hk)) * ((form(test::shifted(z, l, hk)) - form(test::shifted(z, l, -hk))) +
                                kI * (form(test::shifted(z, l, cplx(0, hk))) - form(test::shifted(z, l, cplx(0, -hk)))));
        kernel = std::max(kernel, test::formDiff(ks[l].value, fd) / std::max(1.0, ks[l].value.maxAbs()));
      }
    }
  }
  {
    Rng rng(113, 0);
    const double eps = 0.1, h = 1e-7;
    for (int i = 0; i < 100; ++i) {
      const double t = eps * (0.45 + 0.35 * rng.uniform());
      const ChiValues c = chiValues(t, eps);
      const double fd = (chiValues(t + h, eps).value - chiValues(t - h, eps).value) / (2 * h);
      chiErr = std::max(chiErr, std::abs(c.d1 - fd) / std::max(1.0, std::abs(c.d1)));
    }
  }
  Outcome o;
  o.pass = rJets <= 1e-5 && chiErr <= 1e-6 && sJets <= 1e-5 && mixed <= 1e-4 && kernel <= 1e-4;
  o.detail = "r jets " + sci(rJets) + " (tol 1e-5), chi' " + sci(chiErr) + " (1e-6), s/S jets " + sci(sJets) +
             " (1e-5), mixed jets " + sci(mixed) + " (1e-4), dbar_z Omega_0 " + sci(kernel) + " (1e-4)";
  return o;
}

Outcome determinism() {
  const std::string base =
      "domain.kind = complex-ellipsoid\ndomain.params = 2\nrun.seed = 3\nestimates.samples = 2000\n"
      "estimates.probe_count = 2\nquadrature.resolution = 12\nreproduce.max_degree = 1\nreproduce.levels = 1\n"
      "decay.distances = 0.1, 0.05\ndecay.panel_nodes = 6\ndecay.max_refinements = 1\n"
      "alpha.levels = 2\nalpha.base_resolution = 6\n";
  Outcome o{true, ""};
  for (const std::string& command : cli::commandNames()) {
    const fs::path dir = scratch("determinism-" + command);
    const int first = runCommand(command, base, dir);
    const std::string json = slurp(dir / "out" / (command + ".json"));
    const std::string csv = slurp(dir / "out" / (command + ".csv"));
    const int second = runCommand(command, base, dir);
    const bool same = first == second && !json.empty() && json == slurp(dir / "out" / (command + ".json")) &&
                      csv == slurp(dir / "out" / (command + ".csv"));
    o.pass = o.pass && same;
    o.detail += command + (same ? " identical" : " DIFFERS") + "; ";
  }
  return o;
}

std::set<int> parseList(const std::string& s) {
  std::set<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.insert(std::stoi(item));
  return out;
}

}  // namespace
}  // namespace cfk

int main(int argc, char** argv) {
  using namespace cfk;
  std::set<int> allowFail, only;
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    if (flag == "--allow-fail") allowFail = parseList(argv[i + 1]);
    else if (flag == "--only") only = parseList(argv[i + 1]);
    else {
      std::cerr << "unknown flag " << flag << "\n";
      return 2;
    }
  }
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"exact pairing identities", exactAlgebra},
      {"reproducing formula", reproducingFormula},
      {"support kernel vs Bochner-Martinelli", crossOracle},
      {"calibrated lower bounds", calibratedSuites},
      {"support function derivative orders", prop2Orders},
      {"weighted kernel integrability", integrability},
      {"dbar decay along a normal ray", decay},
      {"strictly pseudoconvex estimate", strictRemark},
      {"jet integrity", jetIntegrity},
      {"report determinism", determinism}};
  int unexpected = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!only.empty() && !only.count(id)) continue;
    const auto start = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = Outcome{false, std::string("error: ") + e.what()};
    }
    const bool tolerated = !o.pass && allowFail.count(id);
    if (!o.pass && !tolerated) ++unexpected;
    std::cout << "criterion " << id << " " << (o.pass ? "PASS" : "FAIL") << (tolerated ? " (allowed)" : "") << "  "
              << criteria[i].first << ": " << o.detail << " [" << sci(seconds(start)) << " s]" << std::endl;
  }
  return unexpected == 0 ? 0 : 1;
}
