#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ficoco/matrix.hpp"
#include "ficoco/types.hpp"

namespace ficoco {

/// One layer's attention map over the alive tokens, optionally head-stacked.
/// `layout[r]` is the role of token r in both the row and column order.
struct AttentionView {
  std::vector<Matrix> heads;
  std::vector<TokenRole> layout;
  bool causal = false;

  std::size_t num_heads() const noexcept { return heads.size(); }
  std::size_t size() const noexcept { return layout.size(); }

  /// The single head; throws ShapeError for stacked views.
  const Matrix& weights() const;

  /// Checks shapes, entry range and row sums (over permitted columns).
  void validate(double tolerance = 1e-5) const;
};

/// X * W.
Matrix project(const Matrix& x, const Matrix& w);

/// Row-wise Softmax(Q K^T / sqrt(D)) with D = Q.cols(). Causal masking puts
/// exact zeros above the diagonal.
Matrix softmax_attention(const Matrix& queries, const Matrix& keys, bool causal);

/// Softmax(X Wq (X Wk)^T / sqrt(D)) as a single-head view. An empty layout
/// means "all visual".
AttentionView attention_from_projections(const Matrix& x, const Matrix& wq, const Matrix& wk,
                                         bool causal, std::vector<TokenRole> layout = {});

/// Uniform mean over the head axis.
AttentionView head_mean(const AttentionView& multi_head);

/// Visual rows x visual columns, entries copied verbatim.
Matrix visual_block(const AttentionView& view);

/// The CLS row restricted to visual columns. Throws AbsentClsError when the
/// layout has no CLS token.
std::vector<double> cls_row(const AttentionView& view);

/// Text rows x visual columns; 0 x N when there is no text.
Matrix text_to_visual_block(const AttentionView& view);

}  // namespace ficoco
