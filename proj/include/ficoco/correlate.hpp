#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ficoco/filter.hpp"
#include "ficoco/matrix.hpp"

namespace ficoco {

/// Where each discarded (source) token sends its information.
///
/// Rows of `correlation` are sources, columns are targets, both indexed by
/// position in the split. `targets_of[i]` (J_i) and `sources_of[j]` (I_j) are
/// ascending and transposes of one another; `weights[i]` is parallel to
/// `targets_of[i]`. `tau` is empty for the fixed-K and many-to-one plans.
struct CorrelationPlan {
  Matrix correlation;
  std::vector<double> tau;
  std::vector<std::vector<std::size_t>> targets_of;
  std::vector<std::vector<std::size_t>> sources_of;
  std::vector<std::vector<double>> weights;

  std::size_t num_sources() const noexcept { return targets_of.size(); }
  std::size_t num_targets() const noexcept { return sources_of.size(); }

  /// alpha_ij, or 0 when j is not in J_i.
  double alpha(std::size_t source, std::size_t target) const;
};

/// C[i, j] = A_vv[source_i, target_j].
Matrix correlation_v(const Matrix& a_vv, const SourceTargetSplit& split);

/// C[i, j] = gamma * direct + (1 - gamma) * mean_k A_tv[k, s_i] * A_tv[k, t_j].
/// For causal blocks the direct term is max(A[s, t], A[t, s]) so that the
/// pair is visible whichever token comes first; otherwise it is A[s, t].
Matrix correlation_l(const Matrix& a_vv, const Matrix& a_tv, const SourceTargetSplit& split,
                     double gamma, bool causal = true);

/// Linear-interpolation ("type 7") empirical quantile; never above max(row).
double quantile(std::span<const double> row, double epsilon);

/// Per-row epsilon quantiles.
std::vector<double> thresholds(const Matrix& correlation, double epsilon);

/// J_i = {j : C[i, j] >= tau_i}, alpha normalised over J_i (uniform if the
/// selected entries sum to zero).
CorrelationPlan assignments(Matrix correlation, std::vector<double> tau);

/// Ablation: the k largest entries of each row (k = 0 prunes).
CorrelationPlan fixed_k_assignments(Matrix correlation, std::size_t k);

/// Ablation: each source feeds only its argmax target, with weight 1.
CorrelationPlan many_to_one_assignments(Matrix correlation);

/// Plan for a split with no targets: every source is pruned.
CorrelationPlan pruning_plan(std::size_t num_sources, std::size_t num_targets);

}  // namespace ficoco
