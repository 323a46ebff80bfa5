#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"

namespace cfk {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("cfk-test-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path writeConfig(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "run.cfg";
  std::ofstream(p) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string configError(const std::string& text) {
  RunConfig c;
  try {
    applyConfigText(c, text);
    ConfigSchema::instance().finalize(c);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

// ---------------------------------------------------------------------------
// Configuration

TEST(Config, ParsesKeysListsAndPoints) {
  RunConfig c;
  applyConfigText(c,
                  "# comment\n"
                  "domain.kind = complex-ellipsoid\n"
                  "domain.params = 2\n"
                  "kernel.eps = 0.05   # trailing comment\n"
                  "decay.distances = 0.2, 0.1\n"
                  "estimates.calibrate = false\n"
                  "estimates.checks = theorem3, prop2\n"
                  "levi.points = 1,0,0,0; 0,0,1,0\n");
  ConfigSchema::instance().finalize(c);
  EXPECT_EQ(c.domain.kind, DomainKind::ComplexEllipsoid);
  EXPECT_EQ(c.kernel.eps, 0.05);
  EXPECT_EQ(c.decay.distances, (std::vector<double>{0.2, 0.1}));
  EXPECT_FALSE(c.estimates.calibrate);
  EXPECT_EQ(c.estimates.checks, (std::vector<std::string>{"theorem3", "prop2"}));
  ASSERT_EQ(c.levi.points.size(), 2u);
  EXPECT_EQ(c.levi.points[1][1], cplx(1.0, 0.0));
}

TEST(Config, RejectsMalformedInput) {
  EXPECT_NE(configError("nonsense.key = 1\n").find("unknown key"), std::string::npos);
  EXPECT_NE(configError("kernel.K = 1\nkernel.K = 2\n").find("repeated"), std::string::npos);
  EXPECT_NE(configError("kernel.K = one\n").find("line 1"), std::string::npos);
  EXPECT_NE(configError("estimates.calibrate = maybe\n"), "");
  EXPECT_NE(configError("levi.points = 1, 0, 0\n"), "");
  EXPECT_NE(configError("just text\n").find("expected key = value"), std::string::npos);
  EXPECT_NE(configError("kernel.eps = 0.5\n").find("band"), std::string::npos);
  EXPECT_NE(configError("estimates.checks = theorem3, bogus\n").find("bogus"), std::string::npos);
  EXPECT_NE(configError("run.threads = -2\n"), "");
  EXPECT_NE(configError("decay.function = im_z2\n"), "");
}

TEST(Config, ShippedConfigsParse) {
  for (const auto& entry : fs::directory_iterator(CFK_SOURCE_DIR "/configs")) {
    cli::Overrides o;
    o.config = entry.path().string();
    EXPECT_NO_THROW(cli::resolveConfig(o)) << entry.path();
  }
}

TEST(Config, OverridesWinOverTheFile) {
  const fs::path dir = scratch("overrides");
  cli::Overrides o;
  o.config = writeConfig(dir, "run.seed = 5\nrun.out = a\nquadrature.resolution = 30\n").string();
  o.seed = 9;
  o.out = "b";
  o.threads = 2;
  const RunConfig c = cli::resolveConfig(o);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.out, "b");
  EXPECT_EQ(c.kernel.resolution, 30);
  EXPECT_EQ(c.threads, 2);
}

TEST(Config, ResolvedConfigPrintsShortestDecimals) {
  RunConfig c;
  applyConfigText(c, "kernel.eps = 0.1\n");
  ConfigSchema::instance().finalize(c);
  const auto j = toJson(c);
  EXPECT_EQ(j.at("kernel.eps").get<std::string>(), "0.1");
}

// ---------------------------------------------------------------------------
// Report helpers

TEST(Reports, CsvRowsMustMatchTheHeader) {
  cli::Csv csv({"a", "b"});
  csv.row(1, 0.25);
  EXPECT_THROW(csv.row(1), InvariantViolation);
  EXPECT_EQ(csv.str(), "a,b\n1,0.25\n");
}

TEST(Reports, ReproductionConvergenceRule) {
  std::vector<ReproductionRow> rows(2);
  rows[0].level = 0;
  rows[0].errTS = 1e-3;
  rows[1].level = 1;
  rows[1].errTS = 1e-5;
  EXPECT_TRUE(cli::reproductionConverged(rows, 2, 1e-2));
  rows[1].errTS = 2e-3;
  EXPECT_FALSE(cli::reproductionConverged(rows, 2, 1e-2));
  rows[0].errTS = 1e-14;
  rows[1].errTS = 2e-14;
  EXPECT_TRUE(cli::reproductionConverged(rows, 2, 1e-2));
}

// ---------------------------------------------------------------------------
// Commands in process

int runCommand(const std::string& command, const fs::path& cfg, const fs::path& out) {
  cli::Overrides o;
  o.config = cfg.string();
  o.out = out.string();
  std::ostringstream err;
  return cli::run(command, o, err);
}

TEST(Commands, ExitCodes) {
  const fs::path dir = scratch("exit-codes");
  EXPECT_EQ(runCommand("levi-spectrum", dir / "missing.cfg", dir / "o"), cli::kConfigFailure);
  EXPECT_EQ(runCommand("unknown", writeConfig(dir, ""), dir / "o"), cli::kConfigFailure);
  EXPECT_EQ(runCommand("calibrate", CFK_SOURCE_DIR "/configs/non-pseudoconvex.cfg", dir / "np"),
            cli::kCalibrationFailure);
  const auto j = nlohmann::json::parse(slurp(dir / "np" / "calibrate.json"));
  EXPECT_EQ(j.at("exitCode").get<int>(), cli::kCalibrationFailure);
  EXPECT_EQ(j.at("status").get<std::string>(), "calibration-failed");
  EXPECT_EQ(runCommand("levi-spectrum", CFK_SOURCE_DIR "/configs/non-pseudoconvex.cfg", dir / "np"),
            cli::kEstimateFailure);
  EXPECT_EQ(runCommand("levi-spectrum", CFK_SOURCE_DIR "/configs/complex-ellipsoid.cfg", dir / "ce"), cli::kPass);
  EXPECT_EQ(runCommand("reproduce", writeConfig(dir, "domain.kind = custom\ndomain.params = 1, 1, -1\n"), dir / "c"),
            cli::kConfigFailure);
}

TEST(Commands, VerifyEstimatesWritesBothReports) {
  const fs::path dir = scratch("verify");
  const fs::path cfg = writeConfig(dir, "estimates.samples = 800\nestimates.probe_count = 2\n");
  ASSERT_EQ(runCommand("verify-estimates", cfg, dir / "o"), cli::kPass);
  const auto j = nlohmann::json::parse(slurp(dir / "o" / "verify-estimates.json"));
  EXPECT_EQ(j.at("status").get<std::string>(), "pass");
  const std::string csv = slurp(dir / "o" / "verify-estimates.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "check,point,samples,min_ratio,sup_ratio,pass,skipped");
  EXPECT_NE(csv.find("prop2-k0-control,0,"), std::string::npos);
}

TEST(Commands, CalibrateTabulatesEachCheck) {
  const fs::path dir = scratch("calibrate");
  ASSERT_EQ(runCommand("calibrate", writeConfig(dir, "estimates.samples = 800\n"), dir / "o"), cli::kPass);
  const std::string csv = slurp(dir / "o" / "calibrate.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "check,point,samples,min_ratio,sup_ratio,pass,skipped");
  EXPECT_NE(csv.find("\ntheorem3,-1,"), std::string::npos);
  EXPECT_NE(csv.find("\nlemma8,-1,"), std::string::npos);
  EXPECT_NE(csv.find("\nprop4,0,"), std::string::npos);
}

TEST(Commands, ReportsAreByteIdenticalAcrossRuns) {
  const fs::path dir = scratch("determinism");
  const fs::path cfg = writeConfig(dir,
                                   "domain.kind = complex-ellipsoid\ndomain.params = 2\n"
                                   "estimates.samples = 600\nestimates.probe_count = 2\n");
  for (const std::string command : {"verify-estimates", "levi-spectrum"}) {
    ASSERT_EQ(runCommand(command, cfg, dir / "o"), cli::kPass) << command;
    const std::string json = slurp(dir / "o" / (command + ".json")), csv = slurp(dir / "o" / (command + ".csv"));
    ASSERT_EQ(runCommand(command, cfg, dir / "o"), cli::kPass) << command;
    EXPECT_EQ(json, slurp(dir / "o" / (command + ".json"))) << command;
    EXPECT_EQ(csv, slurp(dir / "o" / (command + ".csv"))) << command;
  }
}

// ---------------------------------------------------------------------------
// The executable

int runBinary(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + std::string(CFK_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Executable, FlagsEnvironmentAndExitCodes) {
  const fs::path dir = scratch("binary");
  const std::string cfg = CFK_SOURCE_DIR "/configs/ball.cfg";
  const std::string out = (dir / "o").string();
  EXPECT_EQ(runBinary(""), cli::kConfigFailure);
  EXPECT_EQ(runBinary("levi-spectrum --help"), 0);
  EXPECT_EQ(runBinary("levi-spectrum --config " + cfg + " --out " + out + " --seed 4 --threads 1"), cli::kPass);
  const auto j = nlohmann::json::parse(slurp(dir / "o" / "levi-spectrum.json"));
  EXPECT_EQ(j.at("config").at("run.seed").get<std::string>(), "4");
  EXPECT_EQ(runBinary("levi-spectrum --config " + cfg + " --seed -3"), cli::kConfigFailure);
  EXPECT_EQ(runBinary("levi-spectrum --config " + cfg + " --resolution 1 --out " + out), cli::kConfigFailure);
  const std::string env = "CFK_CONFIG=" + cfg + " CFK_OUT=" + (dir / "env").string() + " CFK_SEED=8 ";
  EXPECT_EQ(runBinary("levi-spectrum", env), cli::kPass);
  const auto e = nlohmann::json::parse(slurp(dir / "env" / "levi-spectrum.json"));
  EXPECT_EQ(e.at("config").at("run.seed").get<std::string>(), "8");
  EXPECT_EQ(runBinary("levi-spectrum", "CFK_SEED=abc "), cli::kConfigFailure);
}

}  // namespace
}  // namespace cfk
