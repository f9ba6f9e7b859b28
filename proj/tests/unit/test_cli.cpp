#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kCli = EMCLAB_CLI_PATH;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("emclab_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " " + kCli + " " + args + " > " + (dir_ / "stdout").string() +
                            " 2> " + (dir_ / "stderr").string();
    const int raw = std::system(cmd.c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  }

  std::string read(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  nlohmann::json report(const std::string& rel) { return nlohmann::json::parse(read(dir_ / rel)); }

  void write(const std::string& rel, const std::string& text) { std::ofstream(dir_ / rel) << text; }

  std::string out(const std::string& rel = "out") { return "--out " + (dir_ / rel).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, EmcExactOnSecondOrder) {
  ASSERT_EQ(run("emc --exact --scenario secondorder " + out()), 0) << read(dir_ / "stderr");
  const auto j = report("out/emc.json");
  EXPECT_LE(j.at("result").at("max_tv").get<double>(), 1e-9);
  EXPECT_EQ(j.at("config").at("seed"), 0);
  EXPECT_EQ(j.at("config").at("mode"), "exact");
  EXPECT_EQ(j.at("tool").get<std::string>().rfind("emclab ", 0), 0u);
  EXPECT_TRUE(j.at("result").contains("tolerance"));
}

TEST_F(Cli, AnalyzeTwoCycleRequireErgodic) {
  write("cyc.json", R"({"labels":["a","b"],"rows":[[0,1],[1,0]]})");
  const std::string m = "--matrix " + (dir_ / "cyc.json").string();
  EXPECT_EQ(run("analyze " + m + " --require-ergodic " + out()), 2);
  EXPECT_NE(read(dir_ / "stderr").find("chain-analysis"), std::string::npos);
  EXPECT_FALSE(report("out/analyze.json").at("result").at("structure").at("aperiodic").get<bool>());
  EXPECT_EQ(run("analyze " + m + " " + out()), 0);
}

TEST_F(Cli, VerifyWithCorruptMatrixExits4) {
  write("bad.json", R"({"rows":[[0.5,0.6],[1,0]]})");
  EXPECT_EQ(run("verify --scenario all --matrix " + (dir_ / "bad.json").string() + " " + out()), 4);
  EXPECT_NE(read(dir_ / "stderr").find("matrix_input"), std::string::npos);
}

TEST_F(Cli, VerifyIsDeterministic) {
  ASSERT_EQ(run("verify --scenario markov2 --seed 5 " + out()), 0) << read(dir_ / "stderr");
  const std::string first = read(dir_ / "out/verify.json");
  ASSERT_EQ(run("verify --scenario markov2 --seed 5 " + out()), 0);
  EXPECT_EQ(first, read(dir_ / "out/verify.json"));
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run("simulate " + out()), 1);                                   // no model
  EXPECT_EQ(run("simulate --scenario nope " + out()), 1);                   // unknown scenario
  EXPECT_EQ(run("oracle --scenario regime --horizon 30 " + out()), 3);      // cap
  EXPECT_EQ(run("censor --scenario reinforced --censor 0 " + out()), 2);    // time-varying P_t
  EXPECT_EQ(run("emc --exact --monte-carlo --scenario markov2 " + out()), 1);
  EXPECT_EQ(run("frobnicate"), 1);
}

TEST_F(Cli, RoundTripSimulateEstimateAnalyze) {
  for (const char* s : {"markov2", "secondorder", "reinforced", "regime"}) {
    const std::string o = out(s);
    ASSERT_EQ(run(std::string("simulate --scenario ") + s + " --horizon 200 --samples 50 " + o), 0) << s;
    ASSERT_EQ(run("estimate --input " + (dir_ / s / "ensemble.jsonl").string() + " " + o), 0) << s;
    ASSERT_EQ(run("analyze --matrix " + (dir_ / s / "matrix.json").string() + " " + o), 0) << s;
    EXPECT_TRUE(fs::exists(dir_ / s / "profile.csv"));
  }
}

TEST_F(Cli, ConfigPrecedenceAndEnvOutDir) {
  write("cfg.json", R"({"scenario":"markov2","horizon":7,"samples":3,"seed":11})");
  const std::string cfg = "--config " + (dir_ / "cfg.json").string();
  ASSERT_EQ(run("simulate " + cfg + " --samples 4", "EMCLAB_OUT_DIR=" + (dir_ / "env").string()), 0)
      << read(dir_ / "stderr");
  const auto j = report("env/simulate.json");
  EXPECT_EQ(j.at("config").at("horizon"), 7);   // from config
  EXPECT_EQ(j.at("config").at("samples"), 4);   // flag wins
  EXPECT_EQ(j.at("config").at("seed"), 11);
  EXPECT_TRUE(fs::exists(dir_ / "env" / "run.log"));

  write("bad.json", R"({"scenario":"markov2","horizn":7})");
  EXPECT_EQ(run("simulate --config " + (dir_ / "bad.json").string() + " " + out()), 1);
}

TEST_F(Cli, CensorAndOracleOutputs) {
  ASSERT_EQ(run("censor --scenario secondorder-stationary --censor 0 --samples 5000 " + out()), 0)
      << read(dir_ / "stderr");
  const auto c = report("out/censor.json").at("result");
  EXPECT_EQ(c.at("hit_report").at("A"), nlohmann::json::array({"0"}));
  EXPECT_TRUE(c.contains("censored_matrix"));
  ASSERT_EQ(run("oracle --scenario secondorder --horizon 3 " + out()), 0);
  const auto o = report("out/oracle.json").at("result");
  EXPECT_GT(o.at("max_history_gap").get<double>(), 0.5);
  EXPECT_EQ(read(dir_ / "out/joint.csv").substr(0, 9), "a_0,a_1,a");
}
