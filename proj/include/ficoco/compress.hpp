#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "ficoco/correlate.hpp"
#include "ficoco/matrix.hpp"

namespace ficoco {

struct CompressionResult {
  Matrix updated_targets;
  /// Sum of alpha over the sources each target absorbed.
  std::vector<double> received_mass;
  /// Per target, (source position, alpha) in ascending source order.
  std::vector<std::vector<std::pair<std::size_t, double>>> provenance;
};

/// X_j <- (X_j + sum_i alpha_ij X_i) / (1 + sum_i alpha_ij) over i in I_j.
/// Targets with an empty I_j are returned bit-for-bit unchanged.
CompressionResult weighted_compress(const Matrix& targets, const Matrix& sources,
                                    const CorrelationPlan& plan);

/// Ablation: X_j <- (X_j + sum_i X_i) / (1 + |I_j|), ignoring alpha.
CompressionResult average_compress(const Matrix& targets, const Matrix& sources,
                                   const CorrelationPlan& plan);

}  // namespace ficoco
