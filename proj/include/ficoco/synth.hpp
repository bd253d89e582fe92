#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ficoco/matrix.hpp"
#include "ficoco/workspace.hpp"

namespace ficoco {

struct SynthSpec {
  std::size_t num_visual = 576;
  std::size_t num_text = 0;
  std::size_t width = 64;
  std::size_t num_layers = 24;
  std::size_t num_heads = 4;
  std::uint64_t seed = 42;
  std::size_t grid_rows = 24;
  std::size_t grid_cols = 24;
  bool has_cls = true;

  friend bool operator==(const SynthSpec&, const SynthSpec&) = default;
};

/// Seeded synthetic input: unit-Gaussian embeddings laid out as
/// [CLS?] + visual + text, plus per-layer projection seeds.
struct SyntheticWorkload {
  SynthSpec spec;
  TokenWorkspace initial;
  std::vector<std::uint64_t> layer_seeds;
  /// Original indices of planted near-duplicates and of the token each copies.
  std::vector<std::size_t> planted;
  std::vector<std::size_t> planted_from;
};

/// Per-head query/key projections of one layer (width x width each).
struct LayerProjections {
  std::vector<Matrix> queries;
  std::vector<Matrix> keys;
};

SyntheticWorkload gen_workload(const SynthSpec& spec);

/// Replaces `duplicate_count` visual tokens by copies of other (unplanted)
/// visual tokens plus N(0, noise_sigma^2) noise.
SyntheticWorkload plant_redundancy(SyntheticWorkload workload, std::size_t duplicate_count,
                                   double noise_sigma, std::uint64_t seed);

/// Gaussian N(0, 1/width) projections. Query and key projections of a head
/// share one draw, so similar tokens attend to each other.
LayerProjections layer_projections(const SyntheticWorkload& workload, std::size_t layer);

}  // namespace ficoco
