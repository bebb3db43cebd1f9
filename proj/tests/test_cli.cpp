#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
};

std::string data(const std::string& name) { return std::string(FRACDELAY_TEST_DATA) + "/" + name; }

// Runs the front end with stdout captured; stderr goes to a separate file.
CliRun cli(const std::string& args, const fs::path& err_file = {}) {
  std::string cmd = std::string("\"") + FRACDELAY_CLI_PATH + "\" " + args;
  cmd += err_file.empty() ? " 2>/dev/null" : " 2>\"" + err_file.string() + "\"";
  CliRun r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("fracdelay_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, SimulateScalarIntegerOrder) {
  const fs::path out = dir_ / "traj.csv";
  const fs::path err = dir_ / "err.txt";
  const CliRun r = cli("simulate --spec " + data("scalar_dde_alpha1.json") + " --out " + out.string(), err);
  ASSERT_EQ(r.code, 0) << slurp(err);
  const std::string csv = slurp(out);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,x1");
  const std::string log = slurp(err);
  const auto pos = log.find("residual ");
  ASSERT_NE(pos, std::string::npos);
  EXPECT_LE(std::stod(log.substr(pos + 9)), 1e-6);
}

TEST_F(CliTest, SimulateMalformedSpecWritesNothing) {
  for (const char* name : {"malformed_missing_B.json", "malformed_syntax.json", "no_such_file.json"}) {
    const fs::path out = dir_ / "traj.csv";
    const fs::path err = dir_ / "err.txt";
    const CliRun r = cli("simulate --spec " + data(name) + " --out " + out.string(), err);
    EXPECT_EQ(r.code, 2) << name;
    EXPECT_FALSE(fs::exists(out)) << name;
    EXPECT_NE(slurp(err).find("spec error"), std::string::npos);
    EXPECT_EQ(slurp(err).find("t,x1"), std::string::npos);
  }
}

TEST_F(CliTest, SimulateZeroDataIsAllZero) {
  const fs::path out = dir_ / "zero.csv";
  ASSERT_EQ(cli("simulate --spec " + data("zero_data.json") + " --out " + out.string()).code, 0);
  std::ifstream f(out);
  std::string line;
  std::getline(f, line);
  EXPECT_EQ(line, "t,x1,x2");
  int rows = 0;
  while (std::getline(f, line)) {
    ++rows;
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    while (std::getline(ss, cell, ',')) EXPECT_EQ(std::stod(cell), 0.0) << line;
  }
  EXPECT_GT(rows, 100);
}

TEST_F(CliTest, SimulateStepTooLargeIsSolverFailure) {
  const fs::path out = dir_ / "traj.csv";
  EXPECT_EQ(cli("simulate --spec " + data("scalar_half.json") + " --dt 0.5 --out " + out.string()).code, 3);
  EXPECT_FALSE(fs::exists(out));
}

TEST_F(CliTest, SimulateIsDeterministic) {
  const fs::path a = dir_ / "a.csv", b = dir_ / "b.csv";
  ASSERT_EQ(cli("simulate --spec " + data("repeated_delays.json") + " --seed 5 --out " + a.string()).code, 0);
  ASSERT_EQ(cli("simulate --spec " + data("repeated_delays.json") + " --seed 5 --out " + b.string()).code, 0);
  EXPECT_EQ(slurp(a), slurp(b));
}

TEST_F(CliTest, AnalyzeReports) {
  const fs::path out = dir_ / "report.json";
  ASSERT_EQ(cli("analyze --spec " + data("metzler_alpha08.json") + " --out " + out.string()).code, 0);
  EXPECT_NE(slurp(out).find("NonnegativeForAllTime"), std::string::npos);

  const CliRun unstable = cli("analyze --spec " + data("unstable_measure.json"));
  ASSERT_EQ(unstable.code, 0);
  const auto stab = unstable.out.find("\"stability\"");
  ASSERT_NE(stab, std::string::npos);
  EXPECT_NE(unstable.out.find("\"verdict\": \"Inconclusive\"", stab), std::string::npos);

  const CliRun adv = cli("analyze --spec " + data("alpha2_advisory.json"));
  ASSERT_EQ(adv.code, 0);
  EXPECT_NE(adv.out.find("Alpha2Advisory"), std::string::npos);

  EXPECT_EQ(cli("analyze --spec " + data("malformed_missing_B.json")).code, 2);
}

TEST_F(CliTest, CrossCheckRoutes) {
  const CliRun one = cli("cross-check --spec " + data("scalar_dde_alpha1.json"));
  EXPECT_EQ(one.code, 0) << one.out;
  EXPECT_NE(one.out.find("classical"), std::string::npos);

  const CliRun half = cli("cross-check --spec " + data("scalar_half.json"));
  EXPECT_EQ(half.code, 0) << half.out;

  const CliRun zero = cli("cross-check --spec " + data("zero_data.json"));
  EXPECT_EQ(zero.code, 0);
  std::stringstream ss(zero.out);
  std::string line;
  while (std::getline(ss, line)) EXPECT_NE(line.find("deviation 0 "), std::string::npos) << line;

  // A tolerance no discretisation can meet trips the deviation exit code.
  EXPECT_EQ(cli("cross-check --spec " + data("scalar_half.json") + " --tol 1e-300").code, 4);
}

TEST_F(CliTest, VerifyResidual) {
  const CliRun ok = cli("verify --spec " + data("scalar_half.json"));
  EXPECT_EQ(ok.code, 0) << ok.out;
  EXPECT_EQ(cli("verify --spec " + data("scalar_half.json") + " --tol 1e-300").code, 4);
}

TEST_F(CliTest, MlEval) {
  const CliRun r = cli("ml-eval --alpha 1 --beta 1 --z 1");
  ASSERT_EQ(r.code, 0);
  EXPECT_NEAR(std::stod(r.out.substr(r.out.find(' ') + 1)), 2.718281828459045, 1e-15);
  EXPECT_EQ(cli("ml-eval --alpha -1 --z 1").code, 2);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(cli("").code, 1);
  EXPECT_EQ(cli("simulate").code, 1);
  EXPECT_EQ(cli("frobnicate --spec x").code, 1);
  EXPECT_EQ(cli("--help").code, 0);
}
