#include "ficoco/synth.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "ficoco/errors.hpp"
#include "ficoco/rng.hpp"

namespace ficoco {

namespace {

constexpr std::uint64_t kEmbeddingStream = 0x656d62;  // "emb"
constexpr std::uint64_t kLayerStream = 0x6c6179;      // "lay"

}  // namespace

SyntheticWorkload gen_workload(const SynthSpec& spec) {
  if (spec.width == 0) throw ShapeError("embedding width must be at least 1");
  if (spec.num_heads == 0) throw ShapeError("at least one attention head is required");
  if (spec.num_layers == 0) throw ShapeError("at least one layer is required");
  if (spec.grid_rows * spec.grid_cols != spec.num_visual) {
    throw ShapeError("grid " + std::to_string(spec.grid_rows) + "x" + std::to_string(spec.grid_cols) +
                     " does not cover " + std::to_string(spec.num_visual) + " visual tokens");
  }
  const std::size_t total = (spec.has_cls ? 1 : 0) + spec.num_visual + spec.num_text;
  RandomStream rng(mix_seed(spec.seed ^ kEmbeddingStream));
  Matrix embeddings(total, spec.width);
  // Rounded to float32 so a workload survives a round trip through .npy.
  for (auto& v : embeddings.data()) v = static_cast<float>(rng.normal());

  SyntheticWorkload workload;
  workload.spec = spec;
  workload.initial = TokenWorkspace::create(std::move(embeddings), spec.has_cls, spec.num_visual,
                                            spec.num_text, spec.grid_rows, spec.grid_cols);
  for (std::size_t l = 0; l < spec.num_layers; ++l) {
    workload.layer_seeds.push_back(mix_seed(mix_seed(spec.seed ^ kLayerStream) + l));
  }
  return workload;
}

SyntheticWorkload plant_redundancy(SyntheticWorkload workload, std::size_t duplicate_count,
                                   double noise_sigma, std::uint64_t seed) {
  auto visual = workload.initial.rows_with(TokenRole::Visual);
  if (duplicate_count >= visual.size()) {
    throw StageError("duplicate_count must be smaller than the visual token count");
  }
  RandomStream rng(seed);
  // Partial Fisher-Yates: the first duplicate_count entries become copies.
  for (std::size_t k = 0; k < duplicate_count; ++k) {
    const auto pick = k + static_cast<std::size_t>(rng.below(visual.size() - k));
    std::swap(visual[k], visual[pick]);
  }
  auto& x = workload.initial.embeddings;
  workload.planted.clear();
  workload.planted_from.clear();
  for (std::size_t k = 0; k < duplicate_count; ++k) {
    const std::size_t copy_row = visual[k];
    const std::size_t from_row =
        visual[duplicate_count + static_cast<std::size_t>(rng.below(visual.size() - duplicate_count))];
    for (std::size_t d = 0; d < x.cols(); ++d) {
      const double noise = noise_sigma > 0.0 ? noise_sigma * rng.normal() : 0.0;
      x(copy_row, d) = static_cast<float>(x(from_row, d) + noise);
    }
    workload.planted.push_back(workload.initial.original_index[copy_row]);
    workload.planted_from.push_back(workload.initial.original_index[from_row]);
  }
  return workload;
}

LayerProjections layer_projections(const SyntheticWorkload& workload, std::size_t layer) {
  if (layer >= workload.layer_seeds.size()) {
    throw ShapeError("layer " + std::to_string(layer) + " outside the workload's " +
                     std::to_string(workload.layer_seeds.size()) + " layers");
  }
  const std::size_t d = workload.spec.width;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  RandomStream rng(workload.layer_seeds[layer]);
  LayerProjections p;
  for (std::size_t h = 0; h < workload.spec.num_heads; ++h) {
    Matrix w(d, d);
    for (auto& v : w.data()) v = scale * rng.normal();
    p.queries.push_back(w);
    p.keys.push_back(std::move(w));
  }
  return p;
}

}  // namespace ficoco
