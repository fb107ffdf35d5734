#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "qolcr/config.hpp"
#include "qolcr/trace_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("qolcr_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Exit status of `qolcr args`; stderr is kept in err_.
  int run(const std::string& args) {
    const auto err_path = dir_ / "stderr.txt";
    const std::string cmd = std::string(QOLCR_CLI_PATH) + " " + args + " > " + (dir_ / "stdout.txt").string() +
                            " 2> " + err_path.string();
    const int status = std::system(cmd.c_str());
    err_ = slurp(err_path);
    out_ = slurp(dir_ / "stdout.txt");
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path path(const std::string& name) const { return dir_ / name; }

  fs::path write_config(const std::string& name, const json& patch) {
    auto doc = json(qolcr::config_to_json(qolcr::default_config()));
    doc.merge_patch(patch);
    std::ofstream(path(name)) << doc.dump(2);
    return path(name);
  }

  fs::path dir_;
  std::string err_;
  std::string out_;
};

std::size_t count_rows(const std::string& text) {
  std::size_t n = 0;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line[0] != '#') ++n;
  }
  return n;
}

}  // namespace

TEST_F(Cli, SimulateCalibrateMeasure) {
  const auto trace = path("scan.txt");
  ASSERT_EQ(run("simulate --output " + trace.string()), 0) << err_;
  EXPECT_EQ(count_rows(slurp(trace)), 60000u);

  ASSERT_EQ(run("calibrate " + trace.string() + " --output " + path("scan").string()), 0) << err_;
  EXPECT_TRUE(fs::exists(path("scan.calib.txt")));
  EXPECT_TRUE(fs::exists(path("scan.record.txt")));
  EXPECT_EQ(count_rows(slurp(path("scan.calib.txt"))), 60000u);

  ASSERT_EQ(run("measure " + path("scan.record.txt").string() + " --expected-peaks 1 --output " +
                path("report.json").string()),
            0)
      << err_;
  const auto report = json::parse(slurp(path("report.json")));
  ASSERT_EQ(report["separations"].size(), 1u);
  EXPECT_NEAR(report["separations"][0]["separation_um"].get<double>(), 280.228, 0.01);

  ASSERT_EQ(run("measure " + path("scan.record.txt").string() + " --expected-peaks 1"), 0) << err_;
  EXPECT_EQ(json::parse(out_), report);
}

TEST_F(Cli, FixedSeedIsReproducible) {
  ASSERT_EQ(run("simulate --seed 42 --output " + path("a.txt").string()), 0) << err_;
  ASSERT_EQ(run("simulate --seed 42 --output " + path("b.txt").string()), 0) << err_;
  ASSERT_EQ(run("simulate --seed 43 --output " + path("c.txt").string()), 0) << err_;
  EXPECT_EQ(slurp(path("a.txt")), slurp(path("b.txt")));
  EXPECT_NE(slurp(path("a.txt")), slurp(path("c.txt")));
}

TEST_F(Cli, ValidationErrorsExitOne) {
  const auto cfg = write_config("empty.json", {{"sample", {{"surfaces", json::array()}}}});
  EXPECT_EQ(run("simulate --config " + cfg.string() + " --output " + path("x.txt").string()), 1);
  EXPECT_NE(err_.find("sample.surfaces"), std::string::npos) << err_;
  EXPECT_FALSE(fs::exists(path("x.txt")));

  EXPECT_EQ(run("repeat --runs 0 --output " + path("r").string()), 1);
  EXPECT_EQ(run("simulate"), 1);
  EXPECT_EQ(run("no-such-command"), 1);
  EXPECT_EQ(run("--help"), 0);
}

TEST_F(Cli, TruncatedTraceNamesTheLine) {
  const auto trace = path("scan.txt");
  ASSERT_EQ(run("simulate --output " + trace.string()), 0) << err_;
  auto text = slurp(trace);
  text.resize(text.size() / 2);
  text = text.substr(0, text.rfind('\n') + 1);
  std::ofstream(path("short.txt")) << text;
  EXPECT_EQ(run("calibrate " + path("short.txt").string() + " --output " + path("out").string()), 1);
  EXPECT_NE(err_.find("line "), std::string::npos) << err_;
  EXPECT_FALSE(fs::exists(path("out.calib.txt")));
}

TEST_F(Cli, InsufficientPeaksExitTwo) {
  const auto cfg = write_config("single.json", {{"sample", {{"surfaces", {{{"r", 0.5}, {"z_um", 150.0}}}}}},
                                                {"experiments", {{"moving_surface", 0}}}});
  ASSERT_EQ(run("simulate --config " + cfg.string() + " --output " + path("s.txt").string()), 0) << err_;
  ASSERT_EQ(run("calibrate " + path("s.txt").string() + " --output " + path("s").string()), 0) << err_;
  EXPECT_EQ(run("measure " + path("s.record.txt").string() + " --expected-peaks 1"), 2);
  EXPECT_NE(err_.find("insufficient peaks"), std::string::npos) << err_;
}

TEST_F(Cli, IoErrorsExitThree) {
  EXPECT_EQ(run("simulate --config " + path("missing.json").string() + " --output " + path("x.txt").string()), 3);
  EXPECT_EQ(run("calibrate " + path("missing.txt").string() + " --output " + path("x").string()), 3);
  EXPECT_EQ(run("simulate --output " + path("nodir/x.txt").string()), 3);
}

TEST_F(Cli, RepeatAndLinearityWriteResults) {
  ASSERT_EQ(run("repeat --runs 3 --seed 5 --output " + path("rep").string()), 0) << err_;
  const auto rep = json::parse(slurp(path("rep.json")));
  EXPECT_EQ(rep["summary"]["n_runs"], 3);
  EXPECT_EQ(count_rows(slurp(path("rep.dat"))), 3u);

  ASSERT_EQ(run("linearity --steps 3 --step-size 5 --seed 5 --output " + path("lin").string()), 0) << err_;
  const auto lin = json::parse(slurp(path("lin.json")));
  EXPECT_EQ(lin["points"].size(), 3u);
  EXPECT_EQ(lin["step_nm"], 5.0);
  EXPECT_EQ(count_rows(slurp(path("lin.dat"))), 3u);
}

TEST_F(Cli, PrintConfigMatchesShippedDefaults) {
  ASSERT_EQ(run("print-config"), 0) << err_;
  EXPECT_EQ(json::parse(out_), json::parse(slurp(fs::path(QOLCR_SOURCE_DIR) / "configs" / "default.json")));
}
