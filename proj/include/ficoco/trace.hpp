#pragma once

#include <cstddef>
#include <filesystem>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ficoco/types.hpp"

namespace ficoco {

/// Where one discarded token went. Indices are original token indices.
struct SourceAssignment {
  std::size_t source = 0;
  std::vector<std::size_t> targets;
  std::vector<double> weights;

  friend bool operator==(const SourceAssignment&, const SourceAssignment&) = default;
};

/// What one layer did. `tokens` and `scores` are parallel over the visual
/// tokens alive on entry; scores are the ones ranked for discarding.
struct LayerRecord {
  std::size_t layer = 0;
  Variant variant = Variant::V;
  bool penalty_applied = false;
  bool text_read = false;
  std::vector<std::size_t> tokens;
  std::vector<double> scores;
  std::vector<std::size_t> discarded;
  std::vector<SourceAssignment> assignments;
  /// (target, total alpha received) for targets that absorbed something.
  std::vector<std::pair<std::size_t, double>> received_mass;

  friend bool operator==(const LayerRecord&, const LayerRecord&) = default;
};

using ReductionTrace = std::vector<LayerRecord>;

nlohmann::json trace_to_json(const ReductionTrace& trace);
ReductionTrace trace_from_json(const nlohmann::json& doc);

/// One JSON array of layer records, two-space indented, trailing newline.
void write_trace(const std::filesystem::path& path, const ReductionTrace& trace);
ReductionTrace read_trace(const std::filesystem::path& path);

}  // namespace ficoco
