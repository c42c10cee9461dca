#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <gtest/gtest.h>
#include <string>
#include <sys/wait.h>

#include "degenbranch/config_io.hpp"

using namespace degenbranch;

namespace {

struct Result {
  int code;
  std::string out;
};

Result run(const std::string& args) {
  const std::string cmd = std::string(DEGENBRANCH_CLI) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return {-1, ""};
  std::string out;
  std::array<char, 4096> buf{};
  while (std::size_t n = fread(buf.data(), 1, buf.size(), pipe)) out.append(buf.data(), n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::filesystem::path scratch(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("degenbranch_cli_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST(Cli, ConstantsCritical) {
  const auto r = run("constants --alpha 0.5 --gamma 1 --theta 1 --kappa 0.5");
  ASSERT_EQ(r.code, 0);
  const Json j = Json::parse(r.out);
  EXPECT_EQ(j["regime"].get<std::string>(), "critical");
  EXPECT_NEAR(j["c1"]["value"].get<double>(), 0.564190, 1e-6);
  EXPECT_NEAR(j["cubic_integral"].get<double>(), 2.0, 1e-12);
}

TEST(Cli, ConstantsIntermediateAndLarge) {
  const auto r = run("constants --alpha 1,1.5");
  ASSERT_EQ(r.code, 0);
  const Json j = Json::parse(r.out);
  EXPECT_EQ(j["regime"].get<std::string>(), "intermediate");
  EXPECT_GT(j["c2"]["value"].get<double>(), 0.0);
  const auto big = run("constants --alpha 0.4");
  ASSERT_EQ(big.code, 0);
  EXPECT_NEAR(Json::parse(big.out)["large_dim_variance_standard_gaussian"].get<double>(),
              15.4966456740439131, 1e-7);
}

TEST(Cli, InvalidInputExitsTwo) {
  EXPECT_EQ(run("constants --alpha 2").code, 2);
  EXPECT_EQ(run("constants --alpha 0.5 --kappa 1.5").code, 2);
  EXPECT_EQ(run("constants --alpha 0.5,abc").code, 2);
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  const auto dir = scratch("malformed");
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "bad.json") << "{\"alphas\": [0.5], \"kappa\": ";
  EXPECT_EQ(run("simulate --config " + (dir / "bad.json").string() + " --out " + (dir / "o").string()).code, 2);
  std::ofstream(dir / "kappa.json")
      << R"({"alphas": [0.5], "gamma": 1, "theta": 1, "kappa": 1.5, "n_schedule": [8],
             "replicates": 100, "master_seed": 1})";
  EXPECT_EQ(run("verify --config " + (dir / "kappa.json").string() + " --out " + (dir / "o").string()).code, 2);
  std::filesystem::remove_all(dir);
}

TEST(Cli, SelftestPasses) {
  const auto r = run("selftest");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
}

TEST(Cli, SimulateWritesRunDirectory) {
  const auto dir = scratch("simulate");
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "c.json")
      << R"({"alphas": [0.6666666666666666], "gamma": 1, "theta": 1, "kappa": 0.5,
             "n_schedule": [4, 8], "replicates": 100, "master_seed": 3, "t_grid": [0.5, 1.0],
             "box": {"max_expected_roots": 32}, "bootstrap_resamples": 100})";
  const auto r = run("simulate --config " + (dir / "c.json").string() + " --out " + (dir / "o").string() +
                     " --format csv --workers 2");
  ASSERT_EQ(r.code, 0);
  for (const char* f : {"manifest.json", "samples.csv", "summary.json", "variances.csv"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / "o" / f)) << f;
  }
  std::filesystem::remove_all(dir);
}
