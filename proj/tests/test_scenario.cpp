#include "mskp/scenario.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

namespace fs = std::filesystem;
using namespace mskp;

namespace {

const std::string kCli = MSKP_CLI_PATH;
const fs::path kScenarios = MSKP_SCENARIO_DIR;

fs::path fresh_dir(const std::string& name) {
  fs::path d = fs::temp_directory_path() / ("mskp_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

void write_file(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Run {
  int code;
  std::string err;
};

Run cli(const std::string& args, const fs::path& dir, const std::string& env = "") {
  fs::path err = dir / "stderr.txt";
  std::string cmd = env + " " + kCli + " " + args + " > " + (dir / "stdout.txt").string() + " 2> " + err.string();
  int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, read_file(err)};
}

const std::string kHalfLine =
    "horizon = 1\n"
    "operator.kind = indicator\n"
    "operator.set.kind = half_line\n"
    "projection.kind = orthogonal\n";

Scenario parse_scenario(const std::string& text) { return build_scenario(Config::parse(text, "inline.cfg"), "."); }

std::string error_of(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, ParsesKeysCommentsAndLists) {
  auto c = Config::parse("# header\n a.b = 1 2 3  # trailing\n\nname = x\nm = 1 0; 0 2\n", "t.cfg");
  EXPECT_EQ(c.list("a.b"), (std::vector<double>{1, 2, 3}));
  EXPECT_EQ(c.str("name"), "x");
  Mat m = c.matrix("m");
  EXPECT_EQ(m(1, 1), 2.0);
  EXPECT_EQ(c.where("name"), "t.cfg:4");
  EXPECT_EQ(c.vec("a.b", 3), Vec::LinSpaced(3, 1, 3));
  EXPECT_EQ(Config::parse("v = 4", "t").vec("v", 2), Vec::Constant(2, 4.0));
}

TEST(Config, ErrorsCarryLineNumbers) {
  EXPECT_THROW(Config::parse("a = 1\nnot a pair\n", "t.cfg"), ConfigError);
  try {
    Config::parse("a = 1\nb = 2\na = 3\n", "t.cfg");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("t.cfg:3"), std::string::npos) << e.what();
  }
  auto msg = error_of(kHalfLine + "input.kind = step\ninput.step = 0: 1\nsolver.nsub = 3\n");
  EXPECT_NE(msg.find("inline.cfg:7"), std::string::npos) << msg;
  EXPECT_NE(msg.find("unknown key"), std::string::npos) << msg;
  msg = error_of(kHalfLine + "input.kind = step\ninput.step = 0: 1\nhorizon2 = x\nsolver.tol = abc\n");
  EXPECT_FALSE(msg.empty());
  msg = error_of(kHalfLine + "input.kind = wobble\n");
  EXPECT_NE(msg.find("inline.cfg:5"), std::string::npos) << msg;
}

TEST(Config, InitialValueOutsideDomainNamesConstraint) {
  auto msg = error_of(kHalfLine + "input.kind = step\ninput.step = 0: -1; 0.5: 2\n");
  EXPECT_NE(msg.find("inline.cfg:5"), std::string::npos) << msg;
  EXPECT_NE(msg.find("coordinate 1 >= 0"), std::string::npos) << msg;
}

TEST(Scenario, BuildsEveryShippedFile) {
  for (const auto& e : fs::directory_iterator(kScenarios)) {
    if (e.path().extension() != ".cfg") continue;
    auto s = load_scenario(e.path().string());
    EXPECT_TRUE(s.A.domain().contains(s.m.at(0))) << e.path();
    EXPECT_EQ(s.m.horizon(), s.horizon);
  }
}

TEST(Scenario, JumpTrainIsSeededAndRoundTrips) {
  std::string text = kHalfLine + "input.kind = jump_train\ninput.start = 1\ninput.jumps = 30\ninput.scale = 0.3\n";
  auto a = parse_scenario(text);
  auto b = parse_scenario(text);
  auto c = build_scenario(Config::parse(text, "inline.cfg"), ".", 99);
  EXPECT_EQ(path_to_csv(a.m), path_to_csv(b.m));
  EXPECT_NE(path_to_csv(a.m), path_to_csv(c.m));
  EXPECT_EQ(path_to_csv(path_from_csv(path_to_csv(a.m), 1.0)), path_to_csv(a.m));
  EXPECT_EQ(a.m.jump_times().size(), 30u);
  EXPECT_TRUE(a.generated_input);
}

TEST(Scenario, CheckSelectionIsValidated) {
  auto s = parse_scenario(kHalfLine + "input.kind = step\ninput.step = 0: 1\ncertify.checks = jump_bounds, consistency\n");
  EXPECT_EQ(s.checks, (std::vector<std::string>{"jump_bounds", "consistency"}));
  auto msg = error_of(kHalfLine + "input.kind = step\ninput.step = 0: 1\ncertify.checks = bogus\n");
  EXPECT_NE(msg.find("bogus"), std::string::npos);
}

TEST(Cli, CertifyReflectionPassesAndIsByteIdentical) {
  auto dir = fresh_dir("certify");
  auto cfg = (kScenarios / "reflection.cfg").string();
  ASSERT_EQ(cli("certify --scenario " + cfg + " --out " + (dir / "a").string(), dir).code, 0);
  ASSERT_EQ(cli("certify --scenario " + cfg + " --out " + (dir / "b").string(), dir).code, 0);
  for (auto f : {"report.csv", "report.txt", "input.csv"}) {
    auto a = read_file(dir / "a" / f);
    EXPECT_FALSE(a.empty()) << f;
    EXPECT_EQ(a, read_file(dir / "b" / f)) << f;
  }
  EXPECT_EQ(read_file(dir / "a" / "report.csv").find("FAIL"), std::string::npos);
}

TEST(Cli, SolveAndPenalizeAreDeterministic) {
  auto dir = fresh_dir("determinism");
  auto cfg = (kScenarios / "drifted.cfg").string();
  for (auto sub : {"a", "b"}) {
    ASSERT_EQ(cli("solve --scenario " + cfg + " --out " + (dir / sub).string(), dir).code, 0);
    ASSERT_EQ(cli("penalize --scenario " + cfg + " --out " + (dir / sub / "pen").string(), dir).code, 0);
  }
  for (auto f : {"x.csv", "k.csv", "kc.csv", "kd.csv", "reaction.csv", "diagnostics.txt", "pen/x_eps.csv", "pen/k_eps.csv"})
    EXPECT_EQ(read_file(dir / "a" / f), read_file(dir / "b" / f)) << f;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    EXPECT_EQ(e.path().string().find(".tmp"), std::string::npos) << e.path();
}

TEST(Cli, SeedOverrideChangesGeneratedInput) {
  auto dir = fresh_dir("seed");
  auto cfg = (kScenarios / "reflection.cfg").string();
  ASSERT_EQ(cli("solve --scenario " + cfg + " --seed 5 --out " + (dir / "a").string(), dir).code, 0);
  ASSERT_EQ(cli("solve --scenario " + cfg + " --out " + (dir / "b").string(), dir).code, 0);
  EXPECT_NE(read_file(dir / "a" / "input.csv"), read_file(dir / "b" / "input.csv"));
}

TEST(Cli, OutputDirectoryFromEnvironment) {
  auto dir = fresh_dir("env");
  auto r = cli("solve --scenario " + (kScenarios / "outward_jump.cfg").string(), dir,
               "MSKP_OUT=" + (dir / "envout").string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "envout" / "x.csv"));
}

TEST(Cli, ConfigErrorsExitTwo) {
  auto dir = fresh_dir("config");
  write_file(dir / "bad.cfg", kHalfLine + "input.kind = step\ninput.step = 0: -1\n");
  auto r = cli("solve --scenario " + (dir / "bad.cfg").string() + " --out " + dir.string(), dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("bad.cfg:5"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("coordinate 1 >= 0"), std::string::npos) << r.err;
  write_file(dir / "typo.cfg", kHalfLine + "input.kind = step\ninput.step = 0: 1\nsolver.tool = 1\n");
  r = cli("solve --scenario " + (dir / "typo.cfg").string() + " --out " + dir.string(), dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("typo.cfg:7"), std::string::npos) << r.err;
  EXPECT_EQ(cli("solve --scenario " + (dir / "missing.cfg").string(), dir).code, 2);
  EXPECT_EQ(cli("solve", dir).code, 2);
  EXPECT_EQ(cli("frobnicate", dir).code, 2);
  EXPECT_EQ(cli("--help", dir).code, 0);
}

TEST(Cli, NonConvergenceExitsThreeWithDiagnostics) {
  auto dir = fresh_dir("nonconv");
  write_file(dir / "hard.cfg", kHalfLine + "input.kind = sinusoid\ninput.samples = 1000\nsolver.max_levels = 1\nsolver.tol = 1e-9\n");
  auto r = cli("solve --scenario " + (dir / "hard.cfg").string() + " --out " + (dir / "out").string(), dir);
  EXPECT_EQ(r.code, 3);
  auto diag = read_file(dir / "out" / "diagnostics.txt");
  EXPECT_NE(diag.find("numerical failure"), std::string::npos);
  EXPECT_NE(diag.find("level differences"), std::string::npos);
}

TEST(Cli, ExampleReproducesBidiagonalTruncation) {
  auto dir = fresh_dir("example");
  ASSERT_EQ(cli("example 3 --out " + dir.string(), dir).code, 0);
  ASSERT_TRUE(fs::exists(dir / "bidiagonal_3.cfg"));
  ASSERT_TRUE(fs::exists(dir / "bidiagonal_3_input.csv"));
  EXPECT_EQ(read_file(dir / "bidiagonal_3.cfg"), read_file(kScenarios / "bidiagonal_3.cfg"));
  auto r = cli("solve --scenario " + (dir / "bidiagonal_3.cfg").string() + " --out " + (dir / "run").string(), dir);
  ASSERT_EQ(r.code, 0) << r.err;
  auto s = load_scenario((dir / "bidiagonal_3.cfg").string());
  EXPECT_EQ(s.A.dim(), 5);
  std::ifstream in(dir / "run" / "reaction.csv");
  Path reaction = read_path_csv(in, 1.0, "reaction.csv");
  std::ifstream xin(dir / "run" / "x.csv");
  Path x = read_path_csv(xin, 1.0, "x.csv");
  for (const auto& kn : reaction.knots())
    for (int i = 3; i < 5; ++i) {
      EXPECT_EQ(kn.left[i], 0.0);
      EXPECT_EQ(kn.right[i], 0.0);
    }
  for (const auto& kn : x.knots())
    for (int i = 0; i < 3; ++i) EXPECT_GE(std::min(kn.left[i], kn.right[i]), -1e-9);
  EXPECT_EQ(cli("example 0 --out " + dir.string(), dir).code, 2);
}
