#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "qolcr/config.hpp"
#include "qolcr/errors.hpp"

using namespace qolcr;
using nlohmann::json;

namespace {

std::string config_error(const json& doc) {
  try {
    config_from_json(doc);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Config, DefaultsAreValidAndDescribeTheExperiment) {
  const auto c = default_config();
  EXPECT_NO_THROW(validate(c));
  ASSERT_EQ(c.surfaces.size(), 2u);
  EXPECT_NEAR(c.surfaces[1].z - c.surfaces[0].z, 280.228e-6, 1e-15);
  EXPECT_DOUBLE_EQ(c.lambda0, 810e-9);
  EXPECT_DOUBLE_EQ(c.bandwidth, 30e-9);
  EXPECT_DOUBLE_EQ(c.lambda_p, 405e-9);
  EXPECT_DOUBLE_EQ(c.stage.spacing(), 5e-9);
  EXPECT_DOUBLE_EQ(c.scan.length, 300e-6);
  EXPECT_EQ(c.experiments.runs, 70u);
}

TEST(Config, JsonRoundTripIsExact) {
  auto c = default_config();
  c.surfaces.push_back({0.125, 295.0001e-6});
  c.stage.scale_error = -3.3e-4;
  c.experiments.forced_outlier_runs = {3, 17};
  c.pipeline.grid_step = 2.5e-9;
  const auto doc = config_to_json(c);
  const auto back = config_from_json(json::parse(doc.dump()));
  EXPECT_EQ(config_to_json(back).dump(), doc.dump());
  ASSERT_EQ(back.surfaces.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back.surfaces[i].z, c.surfaces[i].z);
    EXPECT_EQ(back.surfaces[i].r, c.surfaces[i].r);
  }
  EXPECT_EQ(back.stage.scale_error, c.stage.scale_error);
  EXPECT_EQ(back.pipeline.grid_step, c.pipeline.grid_step);
  EXPECT_EQ(back.experiments.forced_outlier_runs, c.experiments.forced_outlier_runs);
}

TEST(Config, MissingKeysKeepDefaults) {
  const auto c = config_from_json(json::parse(R"({"stage": {"seed": 99}})"));
  EXPECT_EQ(c.stage.seed, 99u);
  EXPECT_EQ(c.noise.seed, default_config().noise.seed);
  EXPECT_EQ(config_from_json(json::object()).surfaces.size(), 2u);
}

TEST(Config, UnknownKeysAndWrongTypesAreNamed) {
  EXPECT_NE(config_error(json::parse(R"({"stage": {"velocty_nm_per_s": 1}})")).find("stage.velocty_nm_per_s"),
            std::string::npos);
  EXPECT_NE(config_error(json::parse(R"({"extra": 1})")).find("unknown key"), std::string::npos);
  EXPECT_NE(config_error(json::parse(R"({"noise": {"poisson": 1}})")).find("noise.poisson"), std::string::npos);
  EXPECT_NE(config_error(json::parse(R"({"experiments": {"runs": -5}})")).find("experiments.runs"), std::string::npos);
  EXPECT_NE(config_error(json::parse(R"({"sample": {"surfaces": 3}})")).find("sample.surfaces"), std::string::npos);
}

TEST(Config, ValidationMessagesNameTheField) {
  EXPECT_NE(config_error(json::parse(R"({"sample": {"surfaces": []}})")).find("sample.surfaces"), std::string::npos);
  EXPECT_NE(config_error(json::parse(R"({"spectrum": {"bandwidth_nm": -1}})")).find("spectrum.bandwidth_nm"),
            std::string::npos);
  EXPECT_NE(config_error(json::parse(R"({"pump": {"lambda_p_nm": 400}})")).find("pump.lambda_p_nm"),
            std::string::npos);
  EXPECT_NE(config_error(json::parse(R"({"scan": {"length_um": 100}})")).find("outside the scan range"),
            std::string::npos);
  EXPECT_NE(config_error(json::parse(R"({"pipeline": {"bandpass": {"filter_length": 1000}}})"))
                .find("pipeline.bandpass.filter_length"),
            std::string::npos);
  EXPECT_NE(config_error(json::parse(R"({"pipeline": {"grid_step_nm": 6}})")).find("pipeline.grid_step_nm"),
            std::string::npos);
  EXPECT_NE(config_error(json::parse(R"({"experiments": {"moving_surface": 2}})")).find("experiments.moving_surface"),
            std::string::npos);
}

TEST(Config, LoadConfigErrors) {
  const auto dir = std::filesystem::temp_directory_path() / "qolcr_config_test";
  std::filesystem::create_directories(dir);
  EXPECT_THROW(load_config(dir / "missing.json"), IoError);
  std::ofstream(dir / "bad.json") << "{ \"stage\": ";
  EXPECT_THROW(load_config(dir / "bad.json"), ParseError);
  std::ofstream(dir / "good.json") << config_to_json(default_config()).dump(2);
  EXPECT_EQ(config_to_json(load_config(dir / "good.json")), config_to_json(default_config()));
  std::filesystem::remove_all(dir);
}

TEST(Config, ToUnitGivesShortestExactDecimal) {
  EXPECT_EQ(to_unit(30e-9, 1e9), 30.0);
  EXPECT_EQ(to_unit(810e-9, 1e9), 810.0);
  EXPECT_EQ(to_unit(9.886e-6, 1e6), 9.886);
  EXPECT_EQ(to_unit(0.0, 1e9), 0.0);
  for (double si : {1.2345678e-7, 290.114e-6, 3.0e-9 / 7.0}) {
    EXPECT_EQ(to_unit(si, 1e9) / 1e9, si);
  }
  EXPECT_TRUE(std::isnan(to_unit(std::nan(""), 1e9)));
  EXPECT_TRUE(std::isinf(to_unit(INFINITY, 1e9)));
}

TEST(DeriveSeed, DeterministicAndDistinct) {
  EXPECT_EQ(derive_seed(20170101, 3, 1), derive_seed(20170101, 3, 1));
  std::set<std::uint64_t> seen;
  for (std::uint64_t run = 0; run < 200; ++run) {
    for (std::uint64_t stream = 0; stream < 2; ++stream) seen.insert(derive_seed(20170101, run, stream));
  }
  EXPECT_EQ(seen.size(), 400u);
  EXPECT_NE(derive_seed(1, 0, 0), derive_seed(2, 0, 0));
  EXPECT_NE(derive_seed(1ull << 32, 0, 0), derive_seed(0, 0, 0));
}
