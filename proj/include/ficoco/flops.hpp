#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "ficoco/types.hpp"

namespace ficoco {

/// Exact FLOP count. Every operation is overflow-checked (OverflowError).
__extension__ using FlopCount = unsigned __int128;

std::string to_string(FlopCount value);

/// JSON number when it fits in 64 bits, decimal string otherwise.
nlohmann::json flops_to_json(FlopCount value);

/// Cost-model inputs for one layer. `visual` is N, `discarded` N_s, `text` M.
/// The target count N_t is visual - discarded.
struct LayerCostParams {
  std::uint64_t width = 0;      // D
  std::uint64_t ffn_width = 0;  // H
  std::uint64_t visual = 0;
  std::uint64_t discarded = 0;
  std::uint64_t text = 0;

  std::uint64_t targets() const { return visual - discarded; }
};

/// 4 P D^2 + 2 P^2 D + 2 P D H.
FlopCount layer_flops(std::uint64_t tokens, std::uint64_t width, std::uint64_t ffn_width);

/// Closed form printed alongside the cost model, evaluated literally.
FlopCount printed_delta(const LayerCostParams& params, Variant variant);

struct DeltaReport {
  FlopCount before = 0;
  FlopCount after = 0;
  FlopCount delta = 0;    // before - after
  FlopCount printed = 0;  // the closed form
  bool mismatch() const { return delta != printed; }
};

/// Encoder layers cost P = N tokens, decoder layers P = N + M.
DeltaReport reduction_delta(const LayerCostParams& params, Variant variant);

/// Cost of the reduction itself:
///   V: N^2 + 2N + N_s (N_t + 2D + 1) + D
///   L: 2 (N^2 + 2N) + N_s (N_t + 2D + 1) + D
FlopCount overhead_flops(const LayerCostParams& params, Variant variant);

struct ClosedFormWarning {
  std::size_t layer = 0;
  FlopCount true_delta = 0;
  FlopCount printed_delta = 0;
  std::string term;
};

struct LayerCost {
  std::size_t layer = 0;
  std::uint64_t visual_in = 0;
  std::uint64_t discarded = 0;
  FlopCount before = 0;  // unreduced baseline
  FlopCount after = 0;   // at the reduced count
  FlopCount overhead = 0;
};

struct CostSummary {
  std::vector<LayerCost> layers;
  FlopCount total_before = 0;
  FlopCount total_after = 0;
  FlopCount total_overhead = 0;
  double percent_reduction = 0.0;
  std::vector<ClosedFormWarning> warnings;
};

/// Sums the per-layer model along a schedule. The baseline runs every layer
/// at `initial_visual` tokens; with reduction, layer l runs at the count left
/// after its own discards and later layers inherit it.
CostSummary pipeline_cost(const std::vector<std::size_t>& per_layer_discard,
                          std::uint64_t initial_visual, std::uint64_t text, std::uint64_t width,
                          std::uint64_t ffn_width, Variant variant);

nlohmann::json to_json(const CostSummary& summary);

}  // namespace ficoco
