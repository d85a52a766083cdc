#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <unistd.h>
#include <regex>
#include <sstream>

#include "commands.hpp"

using namespace optinet;
using namespace optinet::cli;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("optinet_cli_" + std::string(info->name()) + "_" +
                                        std::to_string(static_cast<long>(::getpid())));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write_config(const std::string& name, const std::string& json) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << json;
    return p;
  }

  int run(std::vector<std::string> args) {
    args.insert(args.begin(), "optinet");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return run_main(static_cast<int>(argv.size()), argv.data());
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  static std::vector<std::string> data_lines(const std::string& csv) {
    std::vector<std::string> out;
    std::istringstream in(csv);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line[0] != '#') out.push_back(line);
    }
    return out;
  }

  static std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, VerifyDefaultSweepPasses) {
  const auto cfg = write_config("v.json", R"({"dims": [4, 8], "draws": 2})");
  ::testing::internal::CaptureStdout();
  EXPECT_EQ(run({"verify", "--config", cfg.string(), "--out", (dir_ / "out").string()}), 0);
  const std::string log = ::testing::internal::GetCapturedStdout();
  EXPECT_NE(log.find("PASS"), std::string::npos);

  const std::string csv = slurp(dir_ / "out" / "verify.csv");
  EXPECT_EQ(csv.rfind("# optinet " OPTINET_VERSION "\n", 0), 0u);
  EXPECT_NE(csv.find("# config: {"), std::string::npos);
  const auto rows = data_lines(csv);
  ASSERT_FALSE(rows.empty());
  EXPECT_EQ(rows[0], "check,activation,dim,draw,max_deviation,tolerance,pass");
  // 3 matrix checks x 8 activations x 2 dims x 2 draws + 8 antiderivative rows
  EXPECT_EQ(rows.size(), 1u + 3 * 8 * 2 * 2 + 8);
}

TEST_F(CliTest, VerifyZeroToleranceFailsEveryRow) {
  const auto cfg = write_config("v.json", R"({"dims": [4], "draws": 1, "tolerance": 0})");
  ::testing::internal::CaptureStdout();
  EXPECT_EQ(run({"verify", "--config", cfg.string(), "--out", (dir_ / "out").string()}), 1);
  ::testing::internal::GetCapturedStdout();
  const auto rows = data_lines(slurp(dir_ / "out" / "verify.csv"));
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_EQ(split(rows[i]).back(), "false") << rows[i];
}

TEST_F(CliTest, UnknownActivationIsConfigError) {
  const auto cfg = write_config("v.json", R"({"activations": ["sigmoid", "gelu"]})");
  ::testing::internal::CaptureStderr();
  EXPECT_EQ(run({"verify", "--config", cfg.string(), "--out", (dir_ / "out").string()}), 2);
  const std::string err = ::testing::internal::GetCapturedStderr();
  EXPECT_NE(err.find("activations[1]"), std::string::npos) << err;
}

TEST_F(CliTest, MalformedConfigsAreConfigErrors) {
  ::testing::internal::CaptureStderr();
  EXPECT_EQ(run({"race", "--config", write_config("a.json", "{not json").string()}), 2);
  EXPECT_EQ(run({"race", "--config", write_config("b.json", R"({"kappas": [10], "colour": 1})").string()}), 2);
  EXPECT_EQ(run({"race", "--config", write_config("c.json", R"({"dim": -3})").string()}), 2);
  EXPECT_EQ(run({"race", "--config", write_config("d.json", R"({"kappas": [0.5]})").string()}), 2);
  EXPECT_EQ(run({"simulate", "--config", write_config("e.json", R"({"optimizer": {"kind": "adam", "lr": 0}})").string()}),
            2);
  EXPECT_EQ(run({"simulate", "--config", write_config("f.json", R"({"optimizer": {"momentum": 0.9}})").string()}), 2);
  EXPECT_EQ(run({"bogus"}), 2);
  EXPECT_EQ(run({"race"}), 2);
  EXPECT_EQ(run({"race", "--config", write_config("g.json", "{}").string(), "--jobs", "0"}), 2);
  const std::string err = ::testing::internal::GetCapturedStderr();
  EXPECT_NE(err.find("unknown key 'colour'"), std::string::npos) << err;
  EXPECT_NE(err.find("optimizer: unknown key 'momentum'"), std::string::npos) << err;
}

TEST_F(CliTest, IoFailuresExitThree) {
  ::testing::internal::CaptureStderr();
  EXPECT_EQ(run({"race", "--config", (dir_ / "missing.json").string()}), 3);
  const fs::path blocker = dir_ / "file";
  std::ofstream(blocker) << "x";
  EXPECT_EQ(run({"export", "--config", write_config("x.json", "{}").string(), "--out", (blocker / "sub").string()}), 3);
  ::testing::internal::GetCapturedStderr();
}

TEST_F(CliTest, RaceIsByteReproducibleAndOrdered) {
  const auto cfg = write_config("r.json", R"({"kappas": [1, 100], "seeds": [1, 2, 3], "dim": 16})");
  ::testing::internal::CaptureStdout();
  EXPECT_EQ(run({"race", "--config", cfg.string(), "--out", (dir_ / "a").string(), "--seed", "5"}), 0);
  const std::string a = slurp(dir_ / "a" / "race.csv");
  EXPECT_EQ(run({"race", "--config", cfg.string(), "--out", (dir_ / "a").string(), "--seed", "5", "--jobs", "3"}), 0);
  ::testing::internal::GetCapturedStdout();
  EXPECT_EQ(slurp(dir_ / "a" / "race.csv"), a);

  std::map<std::pair<std::string, std::string>, std::map<std::string, long>> counts;
  const auto rows = data_lines(a);
  EXPECT_EQ(rows[0], "algorithm,kappa,seed,iterations,converged");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto c = split(rows[i]);
    counts[{c[1], c[2]}][c[0]] = std::stol(c[3]);
    if (c[1] == "1" && c[0] == "gd") EXPECT_EQ(c[3], "1");
  }
  EXPECT_EQ(rows.size(), 1u + 2 * 3 * 5);
  for (const auto& [cell, by_alg] : counts) {
    if (cell.first == "100") EXPECT_LT(by_alg.at("agd"), by_alg.at("gd"));
  }
}

TEST_F(CliTest, SimulateZeroEpochsWritesInitialLoss) {
  const auto cfg = write_config(
      "s.json", R"({"structures": ["feedforward", "admm_net"], "depths": [2], "seeds": [1, 2], "samples": 40,
                    "width": 4, "epochs": 0})");
  ::testing::internal::CaptureStdout();
  EXPECT_EQ(run({"simulate", "--config", cfg.string(), "--out", (dir_ / "s").string()}), 0);
  ::testing::internal::GetCapturedStdout();
  const auto rows = data_lines(slurp(dir_ / "s" / "simulate.csv"));
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[0], "structure,depth,seed,final_mse,wall_time_s");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto c = split(rows[i]);
    ASSERT_EQ(c.size(), 5u);
    const double mse = std::stod(c[3]);
    EXPECT_GT(mse, 0.5);
    EXPECT_LT(mse, 3.0);
  }
  EXPECT_EQ(data_lines(slurp(dir_ / "s" / "losses" / "feedforward_d2_s1.csv")).size(), 1u);
  EXPECT_EQ(data_lines(slurp(dir_ / "s" / "simulate_summary.csv")).size(), 3u);
}

TEST_F(CliTest, SimulateMatchesLibraryTraining) {
  const auto loaded = parse_simulate(
      R"({"structures": ["hb_net"], "depths": [3], "seeds": [4], "samples": 64, "width": 5, "epochs": 2})");
  const auto rows = simulate_rows(loaded.command, 9, 1);
  ASSERT_EQ(rows.size(), 1u);
  RngStream data_rng(simulate_data_seed(9, 4));
  const Dataset data = gaussian_dataset(64, 5, data_rng);
  TrainConfig tc = loaded.command.train;
  tc.seed = simulate_train_seed(simulate_data_seed(9, 4), StructureKind::hb_net, 3);
  const TrainResult r = train(simulate_spec(loaded.command, StructureKind::hb_net, 3), data, tc);
  EXPECT_EQ(rows[0].final_mse, r.losses.back().mse);
  EXPECT_EQ(simulate_rows(loaded.command, 9, 2)[0].final_mse, rows[0].final_mse);
}

TEST_F(CliTest, ExportWritesDeterministicDot) {
  const auto cfg = write_config("x.json", R"({"structures": ["feedforward", "hb_net"], "depths": [3, 5]})");
  ::testing::internal::CaptureStdout();
  EXPECT_EQ(run({"export", "--config", cfg.string(), "--out", (dir_ / "a").string()}), 0);
  EXPECT_EQ(run({"export", "--config", cfg.string(), "--out", (dir_ / "b").string()}), 0);
  ::testing::internal::GetCapturedStdout();
  for (const char* name : {"feedforward_d3.dot", "feedforward_d5.dot", "hb_net_d3.dot", "hb_net_d5.dot"}) {
    EXPECT_EQ(slurp(dir_ / "a" / name), slurp(dir_ / "b" / name)) << name;
  }
  const std::string chain = slurp(dir_ / "a" / "feedforward_d3.dot");
  EXPECT_NE(chain.find("op2 -> layer3"), std::string::npos);
  EXPECT_EQ(chain.find("op3"), std::string::npos);
  const std::string hb = slurp(dir_ / "a" / "hb_net_d5.dot");
  const std::regex into_layer5(R"(\w+ -> layer5\b)");
  EXPECT_EQ(std::distance(std::sregex_iterator(hb.begin(), hb.end(), into_layer5), std::sregex_iterator()), 3);
}

TEST_F(CliTest, JobsResolution) {
  EXPECT_EQ(resolve_jobs(4), 4u);
  ::setenv("OPTINET_JOBS", "3", 1);
  EXPECT_EQ(resolve_jobs(std::nullopt), 3u);
  ::setenv("OPTINET_JOBS", "three", 1);
  EXPECT_THROW(resolve_jobs(std::nullopt), ConfigError);
  ::unsetenv("OPTINET_JOBS");
  EXPECT_EQ(resolve_jobs(std::nullopt), 1u);
  EXPECT_THROW(resolve_jobs(0), ConfigError);
}

TEST_F(CliTest, ResolvedConfigFillsDefaults) {
  const auto v = parse_simulate("{}");
  EXPECT_EQ(v.command.depths, (std::vector<std::size_t>{10, 20, 30}));
  EXPECT_NE(v.resolved_json.find(R"("epochs":300)"), std::string::npos);
  EXPECT_NE(v.resolved_json.find(R"("kind":"adam")"), std::string::npos);
  const auto overridden = parse_race(apply_overrides(R"({"seed": 1})", 42, std::string("dir")));
  EXPECT_EQ(overridden.common.seed, 42u);
  EXPECT_EQ(overridden.common.out, fs::path("dir"));
}
