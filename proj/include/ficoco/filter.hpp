#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ficoco/config.hpp"
#include "ficoco/matrix.hpp"
#include "ficoco/types.hpp"
#include "ficoco/workspace.hpp"

namespace ficoco {

/// One score per alive visual token (ascending original index). Higher means
/// more redundant.
struct RedundancyScores {
  std::vector<double> scores;
  Variant variant = Variant::V;
};

/// Positions into the alive-visual ordering, both ascending.
struct SourceTargetSplit {
  std::vector<std::size_t> source;
  std::vector<std::size_t> target;

  friend bool operator==(const SourceTargetSplit&, const SourceTargetSplit&) = default;
};

/// Encoder score: lambda * mean_j A_vv[i, j] - (1 - lambda) * a_cls[i].
/// With ReplaceableRead::ColumnMean the first term is mean_j A_vv[j, i].
RedundancyScores score_v(const Matrix& a_vv, std::span<const double> a_cls, double lambda,
                         ReplaceableRead read = ReplaceableRead::RowMean);

/// Decoder score: beta * mean_j A_vv[i, j] - (1 - beta) * mean_k A_tv[k, i].
/// The second term is attention token i receives from the text rows.
RedundancyScores score_l(const Matrix& a_vv, const Matrix& a_tv, double beta);

/// CLS-free stand-in for the CLS row: keys are averaged over heads, mu is the
/// mean visual key, and entry i is -cos(mu, key_i). `keys` are per-head
/// token x width matrices over the same rows as `layout`. A zero-norm operand
/// gives cosine 0.
std::vector<double> key_mean_equivalent(std::span<const Matrix> keys,
                                        std::span<const TokenRole> layout);

/// Scatters scores to the patch grid, tiles it into window x window blocks
/// and multiplies only the largest alive score of each block by
/// `coefficient`. Cells of discarded tokens never win a block.
RedundancyScores local_penalty(const RedundancyScores& scores, const TokenWorkspace& workspace,
                               std::size_t window_size, double coefficient);

/// Source = the n_discard highest scores (lower index wins ties).
SourceTargetSplit select_discarded(std::span<const double> scores, std::size_t n_discard);

}  // namespace ficoco
