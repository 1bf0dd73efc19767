#include <sys/wait.h>

#include <charconv>
#include <cstring>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "gtest/gtest.h"
#include "sdwave/cli/commands.hpp"
#include "support.hpp"

using namespace sdwave;
using namespace sdwave::cli;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("sdwave_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_config(const fs::path& dir, const std::string& name, const std::string& text) {
  const fs::path p = dir / name;
  std::ofstream(p) << text;
  return p;
}

int run_cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + SDWAVE_CLI + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kZero = R"toml(
nonlinearity = "power:4"
u0 = "0"
u1 = "0"
[domain]
dimension = 1
lengths = [1.0]
cells = [32]
[solver]
t_end = 0.2
)toml";

const char* kSixSin = R"toml(
seed = 3
nonlinearity = "power:4"
u0 = "6*sin(pi*x)"
u1 = "0"
[domain]
dimension = 1
lengths = [1.0]
cells = [256]
[solver]
t_end = 2.0
)toml";

}  // namespace

TEST(ConfigReader, ParsesTheSubset) {
  const json j = ConfigReader::parse(R"toml(
# comment
name = "a \"quoted\" string"   # trailing
n = 42
x = -1.5e-3
flag = true
list = [1, 2.5,
        "three"]   # multi-line
[table.sub]
"dotted.key" = 1
plain.key = false
)toml");
  EXPECT_EQ(j["name"], "a \"quoted\" string");
  EXPECT_EQ(j["n"], 42);
  EXPECT_TRUE(j["n"].is_number_integer());
  EXPECT_DOUBLE_EQ(j["x"].get<double>(), -1.5e-3);
  EXPECT_EQ(j["flag"], true);
  EXPECT_EQ(j["list"].size(), 3u);
  EXPECT_EQ(j["list"][2], "three");
  EXPECT_EQ(j["table"]["sub"]["dotted.key"], 1);
  EXPECT_EQ(j["table"]["sub"]["plain"]["key"], false);
}

TEST(ConfigReader, Errors) {
  EXPECT_THROW(ConfigReader::parse("a = 1\na = 2\n"), ConfigError);
  EXPECT_THROW(ConfigReader::parse("a = \"open\n"), ConfigError);
  EXPECT_THROW(ConfigReader::parse("a = [1, 2\n"), ConfigError);
  EXPECT_THROW(ConfigReader::parse("a 1\n"), ConfigError);
  EXPECT_THROW(ConfigReader::parse("a = 1x\n"), ConfigError);
  EXPECT_THROW(ConfigReader::parse("a = 1\n[a]\n"), ConfigError);
  EXPECT_THROW(ConfigReader::load("/nonexistent/file.toml"), ConfigError);
  try {
    ConfigReader::parse("a = 1\nb = ?\n", "f.toml");
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("f.toml:2"), std::string::npos) << e.what();
  }
}

TEST(Experiment, DefaultsAndValidation) {
  const ExperimentConfig c = experiment_from_json(json::object());
  EXPECT_EQ(c.dimension, 1);
  EXPECT_EQ(c.cells[0], 256);
  EXPECT_EQ(c.nonlinearity, "power:4");
  auto bad = [](const char* text) { return experiment_from_json(ConfigReader::parse(text)); };
  EXPECT_THROW(bad("typo = 1"), ConfigError);
  EXPECT_THROW(bad("[solver]\ndt0 = \"fast\""), ConfigError);
  EXPECT_THROW(bad("[solver]\ndt_min = 1.0"), ConfigError);
  EXPECT_THROW(bad("[domain]\ndimension = 3"), ConfigError);
  EXPECT_THROW(bad("seed = -1"), ConfigError);
  EXPECT_THROW(make_nonlinearity(bad("nonlinearity = \"cubic\"")), ConfigError);
  EXPECT_THROW(make_nonlinearity(bad("nonlinearity = \"power:x\"")), ConfigError);
  EXPECT_THROW(make_nonlinearity(bad("nonlinearity = \"power:2\"")), ConfigError);
  const ExperimentConfig y = bad("u0 = \"y\"");
  EXPECT_THROW(make_initial_data(y, make_domain(y)), ConfigError);
  const ExperimentConfig broken = bad("u0 = \"sin(\"");
  EXPECT_THROW(make_initial_data(broken, make_domain(broken)), ConfigError);
}

TEST(Experiment, NonlinearitySpecs) {
  auto nl = [](const char* text) {
    return make_nonlinearity(experiment_from_json(ConfigReader::parse(text)));
  };
  EXPECT_EQ(nl("nonlinearity = \"power:3\"").p, 3.0);
  EXPECT_EQ(nl("nonlinearity = \"logpower:3.5\"").p, 3.5);
  const Nonlinearity c = nl(R"toml(
nonlinearity = "custom"
[custom]
f = "s^3"
F = "s^4/4"
p = 4
beta = 1
q = 3
k0 = 1e-12
k1 = 3
l1 = 2
)toml");
  EXPECT_DOUBLE_EQ(c.f(2.0), 8.0);
  EXPECT_THROW(nl("nonlinearity = \"custom\"\n[custom]\nf = \"s^3\"\n"), ConfigError);
}

TEST(Experiment, SweepPathsAndProduct) {
  json j = ConfigReader::parse("[sweep]\n\"params.c\" = [1, 2]\n\"solver.t_end\" = [0.5, 1, 2]\n");
  const ExperimentConfig c = experiment_from_json(j);
  const auto pts = sweep_points(c);
  ASSERT_EQ(pts.size(), 6u);
  EXPECT_EQ(pts[0][0], 1);
  EXPECT_EQ(pts[1][1], 1);
  EXPECT_EQ(pts[3][0], 2);
  json tree = json::object();
  set_path(tree, "params.c", 2.5);
  EXPECT_EQ(tree["params"]["c"], 2.5);
  tree["x"] = 1;
  EXPECT_THROW(set_path(tree, "x.y", 1), ConfigError);
}

TEST(Output, ShortestRoundTripFormatting) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::uint64_t> bits;
  for (int k = 0; k < 10000; ++k) {
    double x;
    const std::uint64_t b = bits(rng);
    std::memcpy(&x, &b, sizeof x);
    if (!std::isfinite(x)) continue;
    const std::string s = format_double(x);
    double back = 0.0;
    std::from_chars(s.data(), s.data() + s.size(), back);
    EXPECT_EQ(back, x) << s;
  }
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(2.0), "2");
  EXPECT_EQ(format_double(INFINITY), "inf");
}

TEST(Output, TraceHeader) {
  Trace t;
  t.rows.push_back(FunctionalRow{});
  EXPECT_EQ(trace_csv(t), "t,E,I,K,M,Q,sup_abs_u,dt,energy_residual\n0,0,0,0,0,0,0,0,0\n");
}

TEST(Commands, ExitCodeTable) {
  EXPECT_EQ(exit_code(Completed{}), 0);
  EXPECT_EQ(exit_code(BlowupDetected{}), 2);
  EXPECT_EQ(exit_code(DtUnderflow{}), 3);
  EXPECT_EQ(exit_code(Overflow{}), 4);
}

TEST(Cli, ZeroDataCompletesWithZeroTrace) {
  TempDir tmp;
  const fs::path cfg = write_config(tmp.path(), "zero.toml", kZero);
  EXPECT_EQ(run_cli("run -q -c " + cfg.string() + " -o " + (tmp.path() / "out").string()), 0);
  std::istringstream trace(slurp(tmp.path() / "out" / "trace.csv"));
  std::string line;
  std::getline(trace, line);
  EXPECT_EQ(line, "t,E,I,K,M,Q,sup_abs_u,dt,energy_residual");
  int rows = 0;
  while (std::getline(trace, line)) {
    std::istringstream cells(line);
    std::string cell;
    std::getline(cells, cell, ',');  // t
    for (int k = 0; k < 6; ++k) {
      std::getline(cells, cell, ',');
      EXPECT_EQ(cell, "0") << line;
    }
    ++rows;
  }
  EXPECT_GT(rows, 1);
  const json r = json::parse(slurp(tmp.path() / "out" / "report.json"));
  EXPECT_EQ(r["outcome"]["kind"], "Completed");
  EXPECT_NE(r["bounds"]["lower"]["error"].get<std::string>().find("no blow-up from zero data"),
            std::string::npos);
}

TEST(Cli, SixSineBlowsUpInsideTheBounds) {
  TempDir tmp;
  const fs::path cfg = write_config(tmp.path(), "six.toml", kSixSin);
  const fs::path out = tmp.path() / "out";
  EXPECT_EQ(run_cli("run -q -c " + cfg.string() + " -o " + out.string()), 2);
  const json r = json::parse(slurp(out / "report.json"));
  EXPECT_EQ(r["outcome"]["kind"], "BlowupDetected");
  const json& s = r["sandwich"];
  EXPECT_NEAR(s["T_lower"].get<double>(), 1.01e-3, 1e-5);
  EXPECT_NEAR(s["T_upper"].get<double>(), 12.07, 0.01);
  EXPECT_TRUE(s["holds"].get<bool>());
  EXPECT_EQ(r["run"]["k_monotonicity_violations"], 0);
  EXPECT_EQ(r["config"]["seed"], 3);
  EXPECT_FALSE(r["config"].contains("out"));
}

TEST(Cli, MissingConfigAndBadUsage) {
  TempDir tmp;
  EXPECT_EQ(run_cli("run -c " + (tmp.path() / "missing.toml").string()), 1);
  EXPECT_EQ(run_cli("run"), 1);
  EXPECT_EQ(run_cli("frobnicate"), 1);
  const fs::path bad = write_config(tmp.path(), "bad.toml", "u0 = \"sin(\"\n");
  EXPECT_EQ(run_cli("run -c " + bad.string() + " -o " + tmp.path().string()), 1);
}

TEST(Cli, OutputDirectoryPrecedence) {
  TempDir tmp;
  const std::string text = std::string("out = \"") + (tmp.path() / "from_file").string() + "\"\n" + kZero;
  const fs::path cfg = write_config(tmp.path(), "zero.toml", text);
  EXPECT_EQ(run_cli("run -q -c " + cfg.string()), 0);
  EXPECT_TRUE(fs::exists(tmp.path() / "from_file" / "trace.csv"));
  const std::string env = "SDWAVE_OUT=" + (tmp.path() / "from_env").string();
  EXPECT_EQ(run_cli("run -q -c " + cfg.string(), env), 0);
  EXPECT_TRUE(fs::exists(tmp.path() / "from_env" / "trace.csv"));
  EXPECT_EQ(run_cli("run -q -c " + cfg.string() + " -o " + (tmp.path() / "from_flag").string(), env), 0);
  EXPECT_TRUE(fs::exists(tmp.path() / "from_flag" / "trace.csv"));
}

TEST(Cli, RepeatedRunsAreByteIdentical) {
  TempDir tmp;
  const fs::path cfg = write_config(tmp.path(), "six.toml", kSixSin);
  for (int k = 0; k < 2; ++k) {
    EXPECT_EQ(run_cli("run -q --seed 9 -c " + cfg.string() + " -o " + (tmp.path() / std::to_string(k)).string()), 2);
  }
  EXPECT_EQ(slurp(tmp.path() / "0" / "trace.csv"), slurp(tmp.path() / "1" / "trace.csv"));
  EXPECT_EQ(slurp(tmp.path() / "0" / "report.json"), slurp(tmp.path() / "1" / "report.json"));
  EXPECT_EQ(json::parse(slurp(tmp.path() / "0" / "report.json"))["config"]["seed"], 9);
}

TEST(Cli, BoundsMatchLibrary) {
  TempDir tmp;
  const fs::path cfg = write_config(tmp.path(), "six.toml", kSixSin);
  EXPECT_EQ(run_cli("bounds -q -c " + cfg.string() + " -o " + tmp.path().string()), 0);
  const json b = json::parse(slurp(tmp.path() / "bounds.json"))["bounds"];

  const Domain d = Domain::interval(1.0, 256);
  const BoundsReport ref = evaluate_bounds(sdwave::testing::sin_mode(d, 6.0), Field(d), power(4.0));
  auto rel = [](double a, double b) { return std::abs(a - b) / std::abs(b); };
  EXPECT_LT(rel(b["initial"]["E0"].get<double>(), ref.data.E0), 1e-6);
  EXPECT_LT(rel(b["high_energy_criterion"]["margin"].get<double>(), ref.high_energy.margin), 1e-6);
  EXPECT_LT(rel(b["upper"]["T_upper"].get<double>(), ref.upper->T_upper), 1e-6);
  EXPECT_LT(rel(b["upper"]["main"]["T"].get<double>(), ref.upper->main->T), 1e-6);
  EXPECT_LT(rel(b["lower"]["T_lower"].get<double>(), ref.lower->T_lower), 1e-6);
  // and the continuum fixtures within discretization error
  EXPECT_NEAR(b["upper"]["main"]["lambda"].get<double>(), 2.1840, 1e-4);
  EXPECT_NEAR(b["upper"]["main"]["a"].get<double>(), 391.31, 0.05);
  EXPECT_NEAR(b["upper"]["main"]["b0"].get<double>(), 201.0, 0.1);
  EXPECT_NEAR(b["upper"]["negative_energy"]["b0"].get<double>(), 65.35, 0.01);
}

TEST(Cli, CheckCommand) {
  TempDir tmp;
  const fs::path good = write_config(tmp.path(), "good.toml", "nonlinearity = \"power:4\"\n");
  EXPECT_EQ(run_cli("check -q -c " + good.string() + " -o " + tmp.path().string()), 0);
  const json j = json::parse(slurp(tmp.path() / "check.json"));
  EXPECT_TRUE(j["passed"].get<bool>());
  EXPECT_EQ(j["checks"].size(), 3u);
  const fs::path bad = write_config(tmp.path(), "bad.toml", R"toml(
nonlinearity = "custom"
[custom]
f = "s^3"
F = "s^4/4"
p = 5
beta = 1
q = 3
k0 = 1
k1 = 3
l1 = 2
)toml");
  EXPECT_EQ(run_cli("check -q -c " + bad.string() + " -o " + tmp.path().string()), 5);
}

TEST(Cli, ConvergenceCommand) {
  TempDir tmp;
  const fs::path cfg = write_config(tmp.path(), "mms.toml", R"toml(
nonlinearity = "power:3"
source = "-(abs(exp(-t)*sin(pi*x)))*exp(-t)*sin(pi*x)"
[domain]
cells = [16]
[convergence]
exact = "exp(-t)*sin(pi*x)"
exact_t = "-exp(-t)*sin(pi*x)"
levels = 3
)toml");
  EXPECT_EQ(run_cli("convergence -q -c " + cfg.string() + " -o " + tmp.path().string()), 0);
  const json j = json::parse(slurp(tmp.path() / "convergence.json"));
  EXPECT_GE(j["min_observed_order"].get<double>(), 1.9);
  EXPECT_EQ(j["levels"].size(), 3u);
}

TEST(Cli, SweepOverAmplitude) {
  TempDir tmp;
  const fs::path cfg = write_config(tmp.path(), "sweep.toml", R"toml(
nonlinearity = "power:4"
u0 = "c*sin(pi*x)"
[params]
c = 1.0
[domain]
cells = [128]
[solver]
t_end = 2.0
[sweep]
"params.c" = [0.1, 1.0, 6.0, "oops"]
)toml");
  EXPECT_EQ(run_cli("sweep -q -j 3 -c " + cfg.string() + " -o " + tmp.path().string()), 0);
  std::istringstream csv(slurp(tmp.path() / "sweep.csv"));
  std::vector<std::string> lines;
  for (std::string l; std::getline(csv, l);) lines.push_back(l);
  ASSERT_EQ(lines.size(), 5u);
  EXPECT_EQ(lines[0].rfind("index,params.c,outcome,", 0), 0u);
  EXPECT_EQ(lines[1].rfind("0,0.1,Completed,0,", 0), 0u) << lines[1];
  EXPECT_EQ(lines[2].rfind("1,1,Completed,0,", 0), 0u) << lines[2];
  EXPECT_EQ(lines[3].rfind("2,6,BlowupDetected,2,", 0), 0u) << lines[3];
  EXPECT_NE(lines[3].find(",true,"), std::string::npos);
  EXPECT_EQ(lines[4].rfind("3,oops,Error,1,", 0), 0u) << lines[4];
  EXPECT_TRUE(fs::exists(tmp.path() / "point_0002" / "report.json"));
  const json r = json::parse(slurp(tmp.path() / "point_0002" / "report.json"));
  EXPECT_TRUE(r["sandwich"]["holds"].get<bool>());
}

TEST(Cli, ShippedConfigsLoad) {
  for (const auto& entry : fs::directory_iterator(SDWAVE_CONFIG_DIR)) {
    if (entry.path().extension() != ".toml") continue;
    const ExperimentConfig c = experiment_from_json(ConfigReader::load(entry.path().string()));
    EXPECT_NO_THROW(make_nonlinearity(c)) << entry.path();
    EXPECT_NO_THROW(make_initial_data(c, make_domain(c))) << entry.path();
  }
}
