#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ficoco/pipeline.hpp"
#include "ficoco/synth.hpp"
#include "ficoco/tensor_io.hpp"

namespace ficoco {

/// Per-layer tensors of a file-mode workload. Attention is (T, T) or
/// (heads, T, T); keys are (T, width) or (heads, T, width).
struct LayerFiles {
  std::string attention;
  std::optional<std::string> keys;
};

/// A workload directory: manifest.json plus embeddings.npy and, in file
/// mode, the per-layer tensors it lists.
///
/// Synthetic mode regenerates attention from the seeded projections; file
/// mode reads the supplied tensors, which must match the tokens alive at that
/// layer.
struct LoadedWorkload {
  std::filesystem::path directory;
  SyntheticWorkload synthetic;  // spec and initial workspace are always filled
  bool file_mode = false;
  std::vector<std::optional<LayerFiles>> layers;
};

nlohmann::json manifest_for(const SyntheticWorkload& workload);

/// Writes manifest.json and embeddings.npy; with `emit_first_attention`
/// also the layer-0 per-head attention (attention_layer0.npy).
void save_workload(const std::filesystem::path& directory, const SyntheticWorkload& workload,
                   bool emit_first_attention = false, bool causal = false);

LoadedWorkload load_workload(const std::filesystem::path& directory);

/// Attention/key provider reading the workload's layer files.
LayerInputProvider file_inputs(const LoadedWorkload& workload);

RunResult run_workload(const LoadedWorkload& workload, const ReductionConfig& config,
                       std::size_t ffn_width = 0);

/// Converts between engine matrices and float32 tensors.
TensorFile to_tensor(const Matrix& m);
TensorFile to_tensor(const std::vector<Matrix>& stack);
Matrix to_matrix(const TensorFile& t);
std::vector<Matrix> to_stack(const TensorFile& t);

}  // namespace ficoco
