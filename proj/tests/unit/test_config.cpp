#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "ficoco/config.hpp"
#include "ficoco/errors.hpp"

using namespace ficoco;
using nlohmann::json;

TEST(Config, OmittedLambdaTakesDefault) {
  const auto c = config_from_json(json{{"epsilon", 0.9}});
  EXPECT_EQ(c.lambda, 0.35);
  EXPECT_EQ(c.epsilon, 0.9);
}

TEST(Config, EmptyObjectGivesEncoderDefaults) {
  const auto c = config_from_json(json::object());
  EXPECT_EQ(c, ReductionConfig::defaults(Variant::V));
  EXPECT_EQ(c.lambda, 0.35);
  EXPECT_EQ(c.beta, 0.6);
  EXPECT_EQ(c.gamma, 0.6);
  EXPECT_EQ(c.epsilon, 0.998);
  EXPECT_EQ(c.penalty_coefficient, 2.0);
  EXPECT_EQ(c.window_size, 2u);
  EXPECT_EQ(c.start_layer, 12u);
  EXPECT_EQ(c.num_layers, 24u);
  EXPECT_EQ(c.keep_budget, std::optional<std::size_t>(64));
  EXPECT_EQ(c.cls_mode, ClsMode::ClsRow);
}

TEST(Config, DecoderDefaultsStartAtLayerFour) {
  const auto c = config_from_json(json{{"variant", "L"}});
  EXPECT_EQ(c.variant, Variant::L);
  EXPECT_EQ(c.start_layer, 4u);
  EXPECT_EQ(c.num_layers, 32u);
}

TEST(Config, EpsilonOutOfRangeIsRejected) {
  EXPECT_THROW(config_from_json(json{{"epsilon", 1.5}}), ConfigError);
  EXPECT_THROW(config_from_json(json{{"epsilon", 0.0}}), ConfigError);
  EXPECT_NO_THROW(config_from_json(json{{"epsilon", 1.0}}));
}

TEST(Config, UnitWeightsAreRangeChecked) {
  EXPECT_THROW(config_from_json(json{{"lambda", -0.1}}), ConfigError);
  EXPECT_THROW(config_from_json(json{{"beta", 1.01}}), ConfigError);
  EXPECT_THROW(config_from_json(json{{"gamma", 2}}), ConfigError);
}

TEST(Config, UnknownKeyIsRejected) {
  try {
    config_from_json(json{{"lamda", 0.3}});
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.error_class(), "config");
    EXPECT_NE(std::string(e.what()).find("lamda"), std::string::npos);
  }
}

TEST(Config, WrongTypeIsRejected) {
  EXPECT_THROW(config_from_json(json{{"lambda", "high"}}), ConfigError);
  EXPECT_THROW(config_from_json(json{{"window_size", -2}}), ConfigError);
  EXPECT_THROW(config_from_json(json{{"local_penalty", 1}}), ConfigError);
  EXPECT_THROW(config_from_json(json{{"cls_mode", "none"}}), ConfigError);
}

TEST(Config, PenaltyCoefficientMustBePositive) {
  EXPECT_THROW(config_from_json(json{{"penalty_coefficient", 0}}), ConfigError);
  EXPECT_THROW(config_from_json(json{{"window_size", 0}}), ConfigError);
}

TEST(Config, VectorAndBudgetAreExclusive) {
  std::vector<std::size_t> v(24, 0);
  EXPECT_THROW(config_from_json(json{{"per_layer_discard", v}, {"keep_budget", 10}}), ConfigError);
}

TEST(Config, VectorReplacesDefaultBudget) {
  std::vector<std::size_t> v(24, 0);
  v[12] = 5;
  const auto c = config_from_json(json{{"per_layer_discard", v}});
  EXPECT_FALSE(c.keep_budget.has_value());
  EXPECT_EQ(c.per_layer_discard, v);
}

TEST(Config, VectorLengthMustMatchDepth) {
  EXPECT_THROW(config_from_json(json{{"per_layer_discard", std::vector<int>(23, 0)}}), ConfigError);
}

TEST(Config, DiscardsBeforeStartLayerAreRejected) {
  std::vector<std::size_t> v(24, 0);
  v[3] = 1;
  EXPECT_THROW(config_from_json(json{{"per_layer_discard", v}}), ConfigError);
}

TEST(Config, GridMustCoverVisualTokens) {
  const auto c = ReductionConfig::defaults(Variant::V);
  EXPECT_NO_THROW(validate_config(c, 576));
  EXPECT_THROW(validate_config(c, 577), ConfigError);
}

TEST(Config, BudgetAboveVisualCountIsRejected) {
  auto c = ReductionConfig::defaults(Variant::V);
  c.grid_rows = 4;
  c.grid_cols = 4;
  c.keep_budget = 17;
  EXPECT_THROW(validate_config(c, 16), ConfigError);
}

TEST(Config, JsonRoundTrip) {
  auto c = ReductionConfig::defaults(Variant::L);
  c.lambda = 0.125;
  c.cls_mode = ClsMode::KeyMeanEquivalent;
  c.assignment = AssignmentMode::FixedK;
  c.fixed_k = 3;
  c.compression = CompressionMode::Average;
  c.replaceable_read = ReplaceableRead::ColumnMean;
  c.seed = 0xFFFFFFFFFFFFFFFFULL;
  EXPECT_EQ(config_from_json(config_to_json(c)), c);
}

TEST(Config, FileRoundTripAndMissingFile) {
  const auto path = std::filesystem::temp_directory_path() / "ficoco_config_rt.json";
  auto c = ReductionConfig::defaults(Variant::V);
  c.keep_budget = 128;
  write_config(path, c);
  EXPECT_EQ(read_config(path), c);
  try {
    read_config("/nonexistent/ficoco.json");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.error_class(), "config");
  }
}

TEST(Config, MalformedJsonIsAConfigError) {
  const auto path = std::filesystem::temp_directory_path() / "ficoco_config_bad.json";
  std::ofstream(path) << "{ \"lambda\": ";
  EXPECT_THROW(read_config(path), ConfigError);
}
