#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "ficoco/errors.hpp"
#include "ficoco/trace.hpp"

using namespace ficoco;

namespace {

ReductionTrace two_layer_trace() {
  LayerRecord first;
  first.layer = 0;
  first.penalty_applied = true;
  first.tokens = {1, 2, 3};
  first.scores = {0.1, 0.7, -0.25};
  first.discarded = {2};
  first.assignments = {{2, {1, 3}, {0.25, 0.75}}};
  first.received_mass = {{1, 0.25}, {3, 0.75}};

  LayerRecord second;
  second.layer = 1;
  second.tokens = {1, 3};
  second.scores = {0.5, 0.0};
  second.discarded = {0};
  second.assignments = {{0, {}, {}}};
  return {first, second};
}

}  // namespace

TEST(Trace, TwoLayerRoundTrip) {
  const auto trace = two_layer_trace();
  const auto path = std::filesystem::temp_directory_path() / "ficoco_trace_rt.json";
  write_trace(path, trace);
  EXPECT_EQ(read_trace(path), trace);
}

TEST(Trace, JsonShape) {
  const auto doc = trace_to_json(two_layer_trace());
  ASSERT_TRUE(doc.is_array());
  ASSERT_EQ(doc.size(), 2u);
  EXPECT_EQ(doc[0]["variant"], "V");
  EXPECT_EQ(doc[0]["discarded"], nlohmann::json::array({2}));
  EXPECT_EQ(doc[0]["assignments"][0]["source"], 2);
  EXPECT_EQ(doc[1]["layer"], 1);
}

TEST(Trace, EmptyTraceRoundTrips) {
  EXPECT_TRUE(trace_from_json(trace_to_json({})).empty());
}

TEST(Trace, DoublesSurviveTextRoundTrip) {
  LayerRecord r;
  r.tokens = {0};
  r.scores = {0.1 + 0.2};
  const auto back = trace_from_json(nlohmann::json::parse(trace_to_json({r}).dump()));
  EXPECT_EQ(back[0].scores[0], 0.1 + 0.2);
}

TEST(Trace, MalformedDocumentsAreFormatErrors) {
  EXPECT_THROW(trace_from_json(nlohmann::json::object()), FormatError);
  EXPECT_THROW(trace_from_json(nlohmann::json::parse(R"([{"layer": "x"}])")), FormatError);
  auto doc = trace_to_json(two_layer_trace());
  doc[0]["variant"] = "Q";
  EXPECT_THROW(trace_from_json(doc), FormatError);
  doc = trace_to_json(two_layer_trace());
  doc[0]["assignments"][0]["weights"] = nlohmann::json::array({1.0});
  EXPECT_THROW(trace_from_json(doc), FormatError);
}

TEST(Trace, UnreadableFiles) {
  EXPECT_THROW(read_trace("/nonexistent/trace.json"), IoError);
  const auto path = std::filesystem::temp_directory_path() / "ficoco_trace_bad.json";
  std::ofstream(path) << "[";
  EXPECT_THROW(read_trace(path), FormatError);
}
