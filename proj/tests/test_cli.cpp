#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "depiabs/io.hpp"

namespace depiabs {
namespace {

namespace fs = std::filesystem;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() / ("depiabs_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  int run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), {"--out", root_.string()});
    return cli::main(args);
  }
  std::string artifact(const std::string& run, const std::string& name) const {
    return read_file((root_ / run / name).string());
  }
  std::vector<std::vector<std::string>> rows(const std::string& run, const std::string& name) const {
    std::vector<std::vector<std::string>> out;
    std::istringstream in(artifact(run, name));
    std::string line;
    while (std::getline(in, line)) {
      std::vector<std::string> fields;
      std::istringstream cells(line);
      std::string cell;
      while (std::getline(cells, cell, ',')) fields.push_back(cell);
      out.push_back(fields);
    }
    return out;
  }

  fs::path root_;
};

const std::vector<std::string> kSmall{"--set", "P=60", "--set", "A0=3", "--set", "T=12"};

std::vector<std::string> with(std::vector<std::string> head, const std::vector<std::string>& tail) {
  head.insert(head.end(), tail.begin(), tail.end());
  return head;
}

TEST_F(Cli, SimulateWritesConservedDailySeries) {
  ASSERT_EQ(run_cli(with(kSmall, {"simulate"})), 0);
  const auto table = rows("simulate-seed1", "series.csv");
  ASSERT_EQ(table.size(), 13u);
  const auto& header = table[0];
  auto col = [&](const std::string& name) {
    return static_cast<std::size_t>(std::find(header.begin(), header.end(), name) - header.begin());
  };
  // Recovered agents are not reported, so the listed classes stay within P.
  double deceased = 0;
  for (std::size_t t = 1; t < table.size(); ++t) {
    double total = 0;
    for (const char* k : {"susceptible", "asymptomatic", "symptomatic", "deceased"})
      total += std::stod(table[t].at(col(k)));
    EXPECT_LE(total, 60.0 + 1e-6) << "day " << t;
    EXPECT_GE(std::stod(table[t].at(col("deceased"))), deceased - 1e-9);
    deceased = std::stod(table[t].at(col("deceased")));
  }
  const auto summary = nlohmann::json::parse(artifact("simulate-seed1", "summary.json"));
  EXPECT_EQ(summary["command"], "simulate");
  EXPECT_TRUE(fs::exists(root_ / "simulate-seed1" / "config.txt"));
  EXPECT_TRUE(fs::exists(root_ / "simulate-seed1" / "log.txt"));
}

TEST_F(Cli, RerunsAreByteIdentical) {
  ASSERT_EQ(run_cli(with(kSmall, {"--seed", "4", "simulate"})), 0);
  const auto first = artifact("simulate-seed4", "series.csv");
  const auto summary = artifact("simulate-seed4", "summary.json");
  ASSERT_EQ(run_cli(with(kSmall, {"--seed", "4", "simulate"})), 0);
  EXPECT_EQ(artifact("simulate-seed4", "series.csv"), first);
  EXPECT_EQ(artifact("simulate-seed4", "summary.json"), summary);
}

TEST_F(Cli, SyntheticForecastWritesMetrics) {
  ASSERT_EQ(run_cli(with(kSmall, {"--set", "T=30", "forecast", "--synthetic", "--epochs", "2", "--train-days", "20",
                                  "--horizon", "5", "--observable", "cumulative_infections"})),
            0);
  const auto table = rows("forecast-seed1", "metrics.csv");
  ASSERT_EQ(table.size(), 3u);
  for (const char* k : {"nd", "rmse", "mae"})
    EXPECT_NE(std::find(table[0].begin(), table[0].end(), k), table[0].end()) << k;
  EXPECT_EQ(rows("forecast-seed1", "forecast.csv").size(), 26u);
  EXPECT_TRUE(fs::exists(root_ / "forecast-seed1" / "loss_trace.csv"));
}

TEST_F(Cli, CalibrateReadsCsvData) {
  const auto data = root_ / "target.csv";
  std::string text = "date,value\n";
  for (int d = 1; d <= 9; ++d) text += "2020-04-0" + std::to_string(d) + "," + std::to_string(d * d) + "\n";
  write_file(data.string(), text);
  ASSERT_EQ(run_cli(with(kSmall, {"--data", data.string(), "calibrate", "--epochs", "2", "--observable",
                                  "cumulative_infections"})),
            0);
  EXPECT_EQ(rows("calibrate-seed1", "loss_trace.csv").size(), 3u);
  EXPECT_TRUE(fs::exists(root_ / "calibrate-seed1" / "fitted.txt"));
}

TEST_F(Cli, OatAndSobolProduceTables) {
  ASSERT_EQ(run_cli(with(kSmall, {"oat", "--param", "beta", "--values", "0.1,0.3", "--replicates", "1"})), 0);
  EXPECT_EQ(rows("oat-seed1", "oat.csv").size() > 1, true);
  const auto space = root_ / "space.txt";
  write_file(space.string(), "beta 0.1 0.4 epidemic\nc 0.5 1.5 economic\n");
  ASSERT_EQ(run_cli(with(kSmall, {"sobol", "--space", space.string(), "--samples", "4", "--replicates", "1"})), 0);
  EXPECT_EQ(rows("sobol-seed1", "sobol.csv").size(), 3u);
  EXPECT_EQ(rows("sobol-seed1", "design.csv").size(), 4u * 6 + 1);
}

TEST_F(Cli, ErrorsGiveNonZeroExitCodes) {
  EXPECT_NE(run_cli({"simulate", "--no-such-flag"}), 0);
  EXPECT_NE(run_cli({}), 0);
  EXPECT_EQ(run_cli({"--set", "bogus=1", "simulate"}), 2);
  EXPECT_EQ(run_cli({"--set", "beta", "simulate"}), 2);
  const auto cfg = root_ / "bad.conf";
  write_file(cfg.string(), "P = 10\n[calibration]\nepoch = 3\n");
  EXPECT_EQ(run_cli({"--config", cfg.string(), "simulate"}), 2);
  write_file(cfg.string(), "P = 10\nP = 11\n");
  EXPECT_EQ(run_cli({"--config", cfg.string(), "simulate"}), 3);
  EXPECT_EQ(run_cli({"calibrate"}), 2);
}

}  // namespace
}  // namespace depiabs
