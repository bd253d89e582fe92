#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_int.hpp>

#include "ficoco/errors.hpp"
#include "ficoco/flops.hpp"
#include "ficoco/rng.hpp"

using namespace ficoco;
using boost::multiprecision::cpp_int;

namespace {

cpp_int big(FlopCount v) { return cpp_int(to_string(v)); }

// Term-by-term evaluation in arbitrary precision.
cpp_int oracle_layer(cpp_int p, cpp_int d, cpp_int h) { return 4 * p * d * d + 2 * p * p * d + 2 * p * d * h; }

}  // namespace

TEST(LayerFlops, ToyExample) {
  EXPECT_EQ(layer_flops(10, 4, 8), FlopCount{2080});
  EXPECT_EQ(layer_flops(8, 4, 8), FlopCount{1536});
}

TEST(LayerFlops, ZeroTokens) { EXPECT_EQ(layer_flops(0, 4096, 11008), FlopCount{0}); }

TEST(LayerFlops, LargeCaseMatchesBigInteger) {
  EXPECT_EQ(big(layer_flops(636, 4096, 11008)), oracle_layer(636, 4096, 11008));
}

TEST(LayerFlops, StrictlyIncreasing) {
  EXPECT_LT(layer_flops(9, 4, 8), layer_flops(10, 4, 8));
  EXPECT_LT(layer_flops(10, 3, 8), layer_flops(10, 4, 8));
  EXPECT_LT(layer_flops(10, 4, 7), layer_flops(10, 4, 8));
}

TEST(LayerFlops, OverflowIsReported) {
  const std::uint64_t huge = std::numeric_limits<std::uint64_t>::max();
  EXPECT_THROW(layer_flops(huge, huge, huge), OverflowError);
}

TEST(LayerFlops, DecimalRendering) {
  EXPECT_EQ(to_string(FlopCount{0}), "0");
  const FlopCount wide = FlopCount{1} << 100;
  EXPECT_EQ(to_string(wide), "1267650600228229401496703205376");
  EXPECT_TRUE(flops_to_json(wide).is_string());
  EXPECT_EQ(flops_to_json(FlopCount{2080}), 2080);
}

TEST(ReductionDelta, EncoderCounterexample) {
  const auto r = reduction_delta({4, 8, 10, 2, 0}, Variant::V);
  EXPECT_EQ(r.before, FlopCount{2080});
  EXPECT_EQ(r.after, FlopCount{1536});
  EXPECT_EQ(r.delta, FlopCount{544});
  EXPECT_EQ(r.printed, FlopCount{384});
  EXPECT_TRUE(r.mismatch());
}

TEST(ReductionDelta, ZeroDiscardsIsZero) {
  for (const auto v : {Variant::V, Variant::L}) {
    const auto r = reduction_delta({4, 8, 10, 0, 3}, v);
    EXPECT_EQ(r.delta, FlopCount{0});
    EXPECT_EQ(r.printed, FlopCount{0});
  }
}

TEST(ReductionDelta, DecoderMissesTheTextTerm) {
  // True middle term is 2 D Ns (2N + 2M - Ns); the printed form drops 4 D Ns M.
  RandomStream rng(100);
  for (int k = 0; k < 100; ++k) {
    const std::uint64_t n = 1 + rng.below(600), ns = rng.below(n + 1), m = 1 + rng.below(100);
    const std::uint64_t d = 1 + rng.below(4096), h = rng.below(12000);
    const auto r = reduction_delta({d, h, n, ns, m}, Variant::L);
    const cpp_int cd = d, cns = ns, cn = n, cm = m, ch = h;
    EXPECT_EQ(big(r.delta), 4 * cns * cd * cd + 2 * cd * cns * (2 * cn + 2 * cm - cns) + 2 * cns * cd * ch);
    EXPECT_EQ(big(r.delta) - big(r.printed), 4 * cd * cns * cm);
    EXPECT_EQ(r.mismatch(), ns > 0);
  }
}

TEST(ReductionDelta, DecoderWithoutTextMatchesPrinted) {
  const auto r = reduction_delta({4, 8, 10, 2, 0}, Variant::L);
  EXPECT_FALSE(r.mismatch());
  EXPECT_EQ(r.delta, FlopCount{544});
}

TEST(ReductionDelta, TooManyDiscardsIsAnError) {
  EXPECT_THROW(reduction_delta({4, 8, 2, 3, 0}, Variant::V), StageError);
}

TEST(Overhead, EncoderExample) { EXPECT_EQ(overhead_flops({4, 8, 10, 2, 0}, Variant::V), FlopCount{158}); }

TEST(Overhead, NoDiscardsCollapses) { EXPECT_EQ(overhead_flops({4, 8, 10, 0, 0}, Variant::V), FlopCount{124}); }

TEST(Overhead, DecoderAddsScoringTerm) {
  RandomStream rng(5);
  for (int k = 0; k < 50; ++k) {
    const std::uint64_t n = 1 + rng.below(600), ns = rng.below(n + 1), d = 1 + rng.below(512);
    const LayerCostParams p{d, 4 * d, n, ns, 7};
    EXPECT_EQ(overhead_flops(p, Variant::L) - overhead_flops(p, Variant::V), FlopCount{n * n + 2 * n});
  }
}

TEST(Overhead, DominatedByDeltaForWideModels) {
  RandomStream rng(7);
  for (int k = 0; k < 200; ++k) {
    const std::uint64_t d = 64 + rng.below(4096), n = 2 + rng.below(600), ns = 1 + rng.below(n - 1);
    const LayerCostParams p{d, 4 * d, n, ns, rng.below(100)};
    for (const auto v : {Variant::V, Variant::L}) EXPECT_LT(overhead_flops(p, v), reduction_delta(p, v).delta);
  }
}

TEST(PipelineCost, ZeroScheduleIsZeroPercent) {
  const auto s = pipeline_cost(std::vector<std::size_t>(24, 0), 576, 0, 64, 256, Variant::V);
  EXPECT_EQ(s.percent_reduction, 0.0);
  EXPECT_EQ(s.total_before, s.total_after);
  EXPECT_TRUE(s.warnings.empty());
}

TEST(PipelineCost, CountsEvolveAlongSchedule) {
  const auto s = pipeline_cost({0, 2, 3}, 10, 0, 4, 8, Variant::V);
  ASSERT_EQ(s.layers.size(), 3u);
  EXPECT_EQ(s.layers[1].visual_in, 10u);
  EXPECT_EQ(s.layers[2].visual_in, 8u);
  EXPECT_EQ(s.total_before, 3 * layer_flops(10, 4, 8));
  EXPECT_EQ(s.total_after, layer_flops(10, 4, 8) + layer_flops(8, 4, 8) + layer_flops(5, 4, 8));
  EXPECT_EQ(s.warnings.size(), 2u);
  EXPECT_EQ(s.total_overhead, overhead_flops({4, 8, 10, 2, 0}, Variant::V) + overhead_flops({4, 8, 8, 3, 0}, Variant::V));
}

TEST(PipelineCost, DecoderCountsText) {
  const auto s = pipeline_cost({0, 4}, 8, 6, 4, 8, Variant::L);
  EXPECT_EQ(s.layers[0].before, layer_flops(14, 4, 8));
  EXPECT_EQ(s.layers[1].after, layer_flops(10, 4, 8));
}

TEST(PipelineCost, PercentInvariantUnderJointScaling) {
  // Every layer cost is a cubic form in (P, D, H), so scaling token counts,
  // width and FFN width together leaves the percentage unchanged.
  std::vector<std::size_t> schedule(24, 0), doubled(24, 0);
  for (std::size_t l = 12; l < 24; ++l) {
    schedule[l] = 40;
    doubled[l] = 80;
  }
  const auto a = pipeline_cost(schedule, 576, 0, 64, 256, Variant::V);
  const auto b = pipeline_cost(doubled, 1152, 0, 128, 512, Variant::V);
  EXPECT_EQ(b.total_before, 8 * a.total_before);
  EXPECT_EQ(b.total_after, 8 * a.total_after);
  EXPECT_NEAR(a.percent_reduction, b.percent_reduction, 1e-12);
}

TEST(PipelineCost, WidthOnlyScalingMovesThePercentage) {
  // The 2 P^2 D attention term does not scale with H, so D and H alone are
  // not enough.
  std::vector<std::size_t> schedule(24, 0);
  for (std::size_t l = 12; l < 24; ++l) schedule[l] = 40;
  const auto a = pipeline_cost(schedule, 576, 0, 64, 256, Variant::V);
  const auto b = pipeline_cost(schedule, 576, 0, 128, 512, Variant::V);
  EXPECT_NE(a.percent_reduction, b.percent_reduction);
}

TEST(PipelineCost, LlavaLikeScheduleReachesEightyPercent) {
  std::vector<std::size_t> schedule(32, 0);
  schedule[0] = 512;
  const auto s = pipeline_cost(schedule, 576, 60, 4096, 11008, Variant::L);
  EXPECT_GT(s.percent_reduction, 80.0);
  EXPECT_LT(s.percent_reduction, 85.0);
}

TEST(PipelineCost, JsonReport) {
  const auto doc = to_json(pipeline_cost({0, 2}, 10, 0, 4, 8, Variant::V));
  EXPECT_EQ(doc["total_before"], 4160);
  EXPECT_EQ(doc["total_after"], 3616);
  ASSERT_EQ(doc["warnings"].size(), 1u);
  EXPECT_EQ(doc["warnings"][0]["kind"], "closed_form_mismatch");
  EXPECT_EQ(doc["warnings"][0]["true_delta"], 544);
  EXPECT_EQ(doc["warnings"][0]["printed_delta"], 384);
}

TEST(PipelineCost, OverdrawnScheduleIsAnError) {
  EXPECT_THROW(pipeline_cost({6, 6}, 10, 0, 4, 8, Variant::V), StageError);
}
