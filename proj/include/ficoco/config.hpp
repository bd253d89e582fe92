#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <json.hpp>

#include "ficoco/types.hpp"

namespace ficoco {

/// Where the task-agnostic term of the encoder score comes from.
enum class ClsMode { ClsRow, KeyMeanEquivalent };

/// How the visually-replaceable term reads the visual block: the mean of row i
/// (attention token i pays) or of column i (attention token i receives).
enum class ReplaceableRead { RowMean, ColumnMean };

/// Correlated-target selection. Adaptive is the quantile rule; the others are
/// ablation baselines.
enum class AssignmentMode { Adaptive, FixedK, ManyToOne };

enum class CompressionMode { Weighted, Average };

struct ReductionConfig {
  Variant variant = Variant::V;
  double lambda = 0.35;
  double beta = 0.6;
  double gamma = 0.6;
  double epsilon = 0.998;
  std::size_t window_size = 2;
  double penalty_coefficient = 2.0;
  std::size_t start_layer = 12;
  std::size_t num_layers = 24;
  // Exactly one of these drives the schedule.
  std::optional<std::vector<std::size_t>> per_layer_discard;
  std::optional<std::size_t> keep_budget = 64;
  std::size_t grid_rows = 24;
  std::size_t grid_cols = 24;
  std::uint64_t seed = 42;
  ClsMode cls_mode = ClsMode::ClsRow;

  // Ablation switches.
  bool local_penalty = true;  // encoder variant only
  ReplaceableRead replaceable_read = ReplaceableRead::RowMean;
  AssignmentMode assignment = AssignmentMode::Adaptive;
  std::size_t fixed_k = 1;
  CompressionMode compression = CompressionMode::Weighted;

  /// Defaults for a variant: start layer 12 / 4 and depth 24 / 32.
  static ReductionConfig defaults(Variant variant);

  friend bool operator==(const ReductionConfig&, const ReductionConfig&) = default;
};

/// Range checks; when `initial_visual` is given also checks the grid covers
/// exactly that many tokens. Throws ConfigError.
void validate_config(const ReductionConfig& config,
                     std::optional<std::size_t> initial_visual = std::nullopt);

/// Unknown keys, wrong types and out-of-range values are ConfigErrors. Absent
/// keys take the variant's defaults.
ReductionConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const ReductionConfig& config);

ReductionConfig read_config(const std::filesystem::path& path);
void write_config(const std::filesystem::path& path, const ReductionConfig& config);

}  // namespace ficoco
