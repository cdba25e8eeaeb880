#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tailfit/csv_io.hpp"
#include "tailfit/model.hpp"

using namespace tailfit;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("tailfit_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  RunResult run(const std::string& args) const {
    const auto out = dir_ / "stdout.txt";
    const auto err = dir_ / "stderr.txt";
    const std::string cmd = std::string(TAILFIT_CLI) + " " + args + " >" + out.string() + " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  std::string data_file(const std::string& name, const Sample& s) const {
    const auto path = dir_ / name;
    write_csv(path.string(), s);
    return path.string();
  }

  std::string text_file(const std::string& name, const std::string& text) const {
    const auto path = dir_ / name;
    std::ofstream(path) << text;
    return path.string();
  }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, DescribePrintsJson) {
  const auto input = data_file("d.csv", sample(DistributionModel(LognormalParams{3.0, 1.0}), 500, 1));
  const auto r = run("describe --input " + input);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["stats"]["n"], 500);
  EXPECT_NEAR(j["stats"]["log_mean"].get<double>(), 3.0, 0.2);
}

TEST_F(CliTest, FitWritesToTheOutputDirectory) {
  const auto input = data_file("d.csv", sample(DistributionModel(LognormalParams{3.0, 1.0}), 800, 2));
  const auto out = (dir_ / "results").string();
  const auto r = run("fit --model 2ln --restarts 3 --seed 4 --input " + input + " --out " + out);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(slurp(fs::path(out) / "fit.json"));
  EXPECT_EQ(j["fit"]["model"], "2LN");
  EXPECT_EQ(j["fit"]["k"], 5);
  EXPECT_EQ(nlohmann::json::parse(r.out), j);
}

TEST_F(CliTest, TailFitReportsTheCutoff) {
  const auto input = data_file("d.csv", sample(DistributionModel(ParetoParams{2.0, 10.0}), 1000, 3));
  const auto r = run("fit --model pareto --xmin 20 --input " + input);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["x_min"], 20.0);
  EXPECT_EQ(j["x_min_source"], "config");
  const auto scan = nlohmann::json::parse(run("tail --input " + input).out);
  EXPECT_GE(scan["tail_n"].get<int>(), 50);
}

TEST_F(CliTest, ConfigFileWithCommandLineOverride) {
  const auto conf = text_file("run.conf", "# sde settings\nseed = 5\ndt = 0.02\nsteps = 20000\nburnin = 1000\nthin = 5\n");
  const auto r = run("sde --config " + conf + " --seed 7 --drift normal:0,1");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["seed"], 7);
  EXPECT_EQ(j["dt"], 0.02);
  EXPECT_EQ(j["retained"], 3800);
  EXPECT_LT(j["score_identity_max_error"].get<double>(), 1e-6);
}

TEST_F(CliTest, SameSeedSameOutput) {
  const auto input = data_file("d.csv", sample(DistributionModel(LognormalParams{3.0, 1.0}), 300, 4));
  const std::string args = "gof --model ln --test ad --replicates 20 --seed 9 --input " + input;
  const auto a = run(args);
  const auto b = run(args);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
}

TEST_F(CliTest, InputAndConfigErrorsExitTwo) {
  const auto input = data_file("d.csv", sample(DistributionModel(LognormalParams{3.0, 1.0}), 300, 5));
  EXPECT_EQ(run("describe --input " + (dir_ / "missing.csv").string()).code, 2);
  EXPECT_EQ(run("describe").code, 2);
  EXPECT_EQ(run("fit --model weibull --input " + input).code, 2);
  EXPECT_EQ(run("gof --test chi2 --input " + input).code, 2);
  EXPECT_EQ(run("describe --column nosuch --input " + input).code, 2);
  EXPECT_EQ(run("describe --config " + text_file("bad.conf", "colour = red\n") + " --input " + input).code, 2);
  EXPECT_EQ(run("describe --seed minus-one --input " + input).code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("sde --drift cauchy:0,1").code, 2);
  const auto r = run("describe --input " + text_file("bad.csv", "0\nx\n"));
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(r.err.empty());
}

TEST_F(CliTest, FitFailuresExitThree) {
  // Exact Pareto quantiles: the LNt likelihood has no interior maximum.
  std::vector<double> grid;
  for (int i = 0; i < 1000; ++i) grid.push_back(10.0 / (1.0 - (i + 0.5) / 1000.0));
  const auto pareto = data_file("p.csv", Sample(grid));
  const auto r = run("fit --model lnt --xmin 10 --input " + pareto);
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("mu"), std::string::npos);

  const auto constant = text_file("c.csv", "7\n7\n7\n7\n7\n");
  EXPECT_EQ(run("fit --model ln --input " + constant).code, 3);
  EXPECT_EQ(run("sde --drift estexp:0.9,1 --dt 5 --steps 100 --burnin 0 --thin 1").code, 3);
}

TEST_F(CliTest, HelpExitsZero) {
  const auto r = run("--help");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("report"), std::string::npos);
}
