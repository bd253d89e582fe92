#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "ficoco/matrix.hpp"
#include "ficoco/types.hpp"

namespace ficoco {

/// The live token sequence of one run. Rows of `embeddings` are the alive
/// tokens in ascending original index; every per-token vector is parallel to
/// those rows. `alive` spans the original index space.
struct TokenWorkspace {
  Matrix embeddings;
  std::vector<TokenRole> roles;
  std::vector<std::size_t> original_index;
  std::vector<std::optional<GridPos>> grid_pos;
  std::vector<bool> alive;
  std::size_t grid_rows = 0;
  std::size_t grid_cols = 0;

  /// Lays out [CLS?] + visual + text rows of `embeddings`; visual token k sits
  /// at grid cell (k / grid_cols, k % grid_cols).
  static TokenWorkspace create(Matrix embeddings, bool has_cls, std::size_t num_visual,
                               std::size_t num_text, std::size_t grid_rows, std::size_t grid_cols);

  std::size_t size() const noexcept { return roles.size(); }
  std::size_t width() const noexcept { return embeddings.cols(); }
  std::size_t count(TokenRole role) const;
  bool has_cls() const { return count(TokenRole::Cls) > 0; }

  /// Row positions of tokens with `role`, ascending.
  std::vector<std::size_t> rows_with(TokenRole role) const;

  /// Row of the token with this original index, if alive.
  std::optional<std::size_t> row_of(std::size_t original) const;

  /// Drops the given rows (ascending, unique) and marks them dead.
  TokenWorkspace without_rows(std::span<const std::size_t> rows) const;

  /// Throws ShapeError if any structural invariant is broken.
  void validate() const;

  friend bool operator==(const TokenWorkspace&, const TokenWorkspace&) = default;
};

}  // namespace ficoco
