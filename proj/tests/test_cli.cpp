#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "json.hpp"
#include "ksnno/cli.hpp"
#include "ksnno/output.hpp"

namespace fs = std::filesystem;
using ksnno::cli::run;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() /
            ("ksnno_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  std::string dir(const std::string& name) const { return (root_ / name).string(); }

  fs::path root_;
};

}  // namespace

TEST_F(CliTest, Table1EmbeddedFixture) {
  const Result r = invoke({"table1", "--out", dir("a")});
  EXPECT_EQ(r.code, 0) << r.err;
  const std::string csv = slurp(fs::path(dir("a")) / "table1.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,dW,W,X,Xn,abs_err,sq_err");
  EXPECT_EQ(line_count(csv), 22u);
  EXPECT_EQ(csv.find('\r'), std::string::npos);

  const auto manifest = nlohmann::json::parse(slurp(fs::path(dir("a")) / "manifest.json"));
  EXPECT_EQ(manifest["command"], "table1");
  EXPECT_EQ(manifest["files"]["table1.csv"], ksnno::sha256_hex(csv));
  EXPECT_EQ(manifest["results"]["time_rule"], "trapezoid");
}

TEST_F(CliTest, Table1FromFixtureFileMatchesEmbedded) {
  fs::create_directories(root_);
  const fs::path fx = root_ / "fixture.csv";
  {
    std::ofstream out(fx);
    out << "t,dW\n";
    const Result base = invoke({"table1", "--out", dir("ref")});
    ASSERT_EQ(base.code, 0);
    std::istringstream csv(slurp(fs::path(dir("ref")) / "table1.csv"));
    std::string line;
    std::getline(csv, line);
    while (std::getline(csv, line)) {
      const auto c1 = line.find(',');
      const auto c2 = line.find(',', c1 + 1);
      out << line.substr(0, c2) << "\n";
    }
  }
  const Result r = invoke({"table1", "--fixture", fx.string(), "--out", dir("file")});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(fs::path(dir("file")) / "table1.csv"), slurp(fs::path(dir("ref")) / "table1.csv"));
}

TEST_F(CliTest, MalformedFixtureIsUsageError) {
  fs::create_directories(root_);
  const fs::path fx = root_ / "bad.csv";
  std::ofstream(fx) << "t,dW\n0,0\n0.05,oops\n";
  const Result r = invoke({"table1", "--fixture", fx.string(), "--out", dir("x")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("row 3"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(dir("x")));
}

TEST_F(CliTest, MseSweepDeterministic) {
  const std::vector<std::string> common{"mse-sweep", "--n", "5,10,20", "--paths", "100", "--seed", "7"};
  auto a = common, b = common;
  a.insert(a.end(), {"--out", dir("a")});
  b.insert(b.end(), {"--out", dir("b")});
  const Result ra = invoke(a), rb = invoke(b);
  EXPECT_NE(ra.code, 2) << ra.err;
  EXPECT_EQ(ra.code, rb.code);
  for (const char* f : {"mse_sweep.csv", "mse_pointwise.csv", "mse_sweep.svg"}) {
    const std::string x = slurp(fs::path(dir("a")) / f);
    EXPECT_FALSE(x.empty()) << f;
    EXPECT_EQ(x, slurp(fs::path(dir("b")) / f)) << f;
  }
}

TEST_F(CliTest, WorkersDoNotChangeOutput) {
  const std::vector<std::vector<std::string>> commands{
      {"mse-sweep", "--n", "5,10,20", "--paths", "60", "--t-grid", "0:1:11"},
      {"covariance", "--paths", "1000", "--m", "300"},
      {"neuron-check", "--n", "10", "--paths", "200"},
      {"paths", "--n", "5", "--paths", "2", "--m", "400"},
      {"kantorovich-error", "--n", "5,10", "--t-grid", "0.25,0.5"},
  };
  const std::vector<std::string> files{"mse_sweep.csv", "covariance.csv", "neuron_check.csv", "paths.csv",
                                       "kantorovich_error.csv"};
  for (std::size_t i = 0; i < commands.size(); ++i) {
    auto one = commands[i], many = commands[i];
    one.insert(one.end(), {"--workers", "1", "--out", dir("w1_" + files[i])});
    many.insert(many.end(), {"--workers", "3", "--out", dir("w3_" + files[i])});
    const Result r1 = invoke(one), r3 = invoke(many);
    ASSERT_NE(r1.code, 2) << commands[i][0] << ": " << r1.err;
    EXPECT_EQ(r1.code, r3.code);
    const std::string a = slurp(fs::path(dir("w1_" + files[i])) / files[i]);
    EXPECT_FALSE(a.empty()) << files[i];
    EXPECT_EQ(a, slurp(fs::path(dir("w3_" + files[i])) / files[i])) << files[i];
  }
}

TEST_F(CliTest, DegenerateOrderIsUsageErrorWithoutOutput) {
  const Result r = invoke({"mse-sweep", "--n", "1", "--out", dir("n1")});
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(fs::exists(dir("n1")));
}

TEST_F(CliTest, UnknownFlagNamed) {
  const Result r = invoke({"table1", "--bogus", "3", "--out", dir("u")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--bogus"), std::string::npos) << r.err;
}

TEST_F(CliTest, MissingOrUnknownSubcommand) {
  EXPECT_EQ(invoke({}).code, 2);
  EXPECT_EQ(invoke({"frobnicate"}).code, 2);
}

TEST_F(CliTest, BadValuesAreUsageErrors) {
  EXPECT_EQ(invoke({"table1", "--kernel", "poly:2*x", "--out", dir("k")}).code, 2);
  EXPECT_EQ(invoke({"table1", "--activation", "relu", "--out", dir("a")}).code, 2);
  EXPECT_EQ(invoke({"mse-sweep", "--n", "5", "--m", "100", "--out", dir("m")}).code, 2);
  EXPECT_EQ(invoke({"mse-sweep", "--n", "5,10,20", "--t-grid", "0:2:5", "--out", dir("t")}).code, 2);
  EXPECT_EQ(invoke({"covariance", "--paths", "10", "--out", dir("c")}).code, 2);
  EXPECT_EQ(invoke({"paths", "--workers", "0", "--out", dir("w")}).code, 2);
}

TEST_F(CliTest, VerifyActivation) {
  const Result r = invoke({"verify-activation", "--out", dir("v")});
  EXPECT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(slurp(fs::path(dir("v")) / "verify_activation.json"));
  EXPECT_EQ(j["oddness"]["pass"], true);
  EXPECT_EQ(j["decay"]["pass"], true);
  EXPECT_EQ(j["all_passed"], true);
}

TEST_F(CliTest, KantorovichErrorColumns) {
  const Result r = invoke({"kantorovich-error", "--n", "5,10,20", "--t-grid", "0.25,0.5", "--out", dir("k")});
  EXPECT_EQ(r.code, 0) << r.err;
  const std::string csv = slurp(fs::path(dir("k")) / "kantorovich_error.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "n,D_mean,D_at_0.25,D_at_0.5");
  EXPECT_EQ(line_count(csv), 4u);
}

TEST_F(CliTest, ConfigFileWithFlagOverride) {
  fs::create_directories(root_);
  const fs::path cfg = root_ / "run.ini";
  std::ofstream(cfg) << "n = 5,10\nt-grid = 0.5\n";
  const Result r = invoke({"kantorovich-error", "--config", cfg.string(), "--n", "5,10,20", "--out", dir("c")});
  EXPECT_EQ(r.code, 0) << r.err;
  const std::string csv = slurp(fs::path(dir("c")) / "kantorovich_error.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "n,D_mean,D_at_0.5");
  EXPECT_EQ(line_count(csv), 4u);
}

TEST(CliParsing, TGridAndIntLists) {
  using ksnno::cli::parse_int_list;
  using ksnno::cli::parse_t_grid;
  const std::vector<double> g = parse_t_grid("0:1:5");
  ASSERT_EQ(g.size(), 5u);
  EXPECT_DOUBLE_EQ(g[1], 0.25);
  EXPECT_EQ(parse_t_grid("0.1,0.7"), (std::vector<double>{0.1, 0.7}));
  EXPECT_EQ(parse_int_list("5,10,20"), (std::vector<int>{5, 10, 20}));
  EXPECT_THROW(parse_t_grid("0:1"), std::invalid_argument);
  EXPECT_THROW(parse_int_list("5,x"), std::invalid_argument);
}
