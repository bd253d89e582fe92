#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ficoco/attention.hpp"
#include "ficoco/config.hpp"
#include "ficoco/flops.hpp"
#include "ficoco/synth.hpp"
#include "ficoco/trace.hpp"
#include "ficoco/workspace.hpp"

namespace ficoco {

/// Visual tokens discarded at each layer; zero before the start layer.
struct Schedule {
  std::vector<std::size_t> per_layer_discard;

  std::size_t total() const;
  friend bool operator==(const Schedule&, const Schedule&) = default;
};

/// Splits initial_visual - keep_budget evenly over [start_layer, num_layers),
/// earlier layers taking the remainder.
Schedule plan_schedule(std::size_t initial_visual, std::size_t keep_budget, std::size_t start_layer,
                       std::size_t num_layers);

/// Validates an explicit per-layer vector.
Schedule plan_schedule(std::size_t initial_visual, std::vector<std::size_t> per_layer_discard,
                       std::size_t start_layer, std::size_t num_layers);

Schedule schedule_for(const ReductionConfig& config, std::size_t initial_visual);

/// What a layer needs: its attention over the current tokens and, for the
/// CLS-free score, the per-head keys.
struct LayerInputs {
  AttentionView attention;
  std::vector<Matrix> keys;
};

/// Produces layer inputs from the current workspace. Called only for layers
/// that discard something.
using LayerInputProvider =
    std::function<LayerInputs(std::size_t layer, const TokenWorkspace& workspace, bool causal)>;

/// Encoder step: score, local penalty, top-k, direct correlation, quantile
/// assignment, compression, removal.
std::pair<TokenWorkspace, LayerRecord> reduce_layer_v(const TokenWorkspace& workspace,
                                                      const AttentionView& attention,
                                                      const std::vector<Matrix>& keys,
                                                      const ReductionConfig& config,
                                                      std::size_t n_discard, std::size_t layer = 0);

/// Decoder step: as above with text-aware scoring and correlation and no
/// penalty. Text tokens are never discarded.
std::pair<TokenWorkspace, LayerRecord> reduce_layer_l(const TokenWorkspace& workspace,
                                                      const AttentionView& attention,
                                                      const ReductionConfig& config,
                                                      std::size_t n_discard, std::size_t layer = 0);

struct LayerCount {
  std::size_t layer = 0;
  std::size_t visual_before = 0;
  std::size_t discarded = 0;
  std::size_t visual_after = 0;
};

struct RunSummary {
  Variant variant = Variant::V;
  std::size_t initial_visual = 0;
  std::size_t final_visual = 0;
  std::size_t final_tokens = 0;
  std::vector<LayerCount> layers;
  CostSummary cost;
};

nlohmann::json to_json(const RunSummary& summary);

struct RunResult {
  TokenWorkspace final;
  ReductionTrace trace;
  RunSummary summary;
};

/// Runs every layer of the schedule. `ffn_width` feeds the cost model
/// (0 = 4 x embedding width).
RunResult run(const TokenWorkspace& initial, const ReductionConfig& config,
              const LayerInputProvider& inputs, std::size_t ffn_width = 0);

/// Attention recomputed each layer from the current embeddings with the
/// workload's seeded projections, averaged over heads.
LayerInputProvider synthetic_inputs(const SyntheticWorkload& workload);

RunResult run(const SyntheticWorkload& workload, const ReductionConfig& config,
              std::size_t ffn_width = 0);

/// Re-applies the recorded discards and weights to `initial`.
TokenWorkspace replay_trace(const TokenWorkspace& initial, const ReductionTrace& trace,
                            CompressionMode mode = CompressionMode::Weighted);

}  // namespace ficoco
