#include "ficoco/workspace.hpp"

#include <algorithm>
#include <set>
#include <string>

#include "ficoco/errors.hpp"

namespace ficoco {

TokenWorkspace TokenWorkspace::create(Matrix embeddings, bool has_cls, std::size_t num_visual,
                                      std::size_t num_text, std::size_t grid_rows,
                                      std::size_t grid_cols) {
  const std::size_t total = (has_cls ? 1 : 0) + num_visual + num_text;
  if (embeddings.rows() != total) {
    throw ShapeError("embeddings have " + std::to_string(embeddings.rows()) +
                     " rows, layout needs " + std::to_string(total));
  }
  if (embeddings.cols() == 0) throw ShapeError("embedding width must be positive");
  if (grid_rows * grid_cols != num_visual) {
    throw ShapeError("grid " + std::to_string(grid_rows) + "x" + std::to_string(grid_cols) +
                     " does not cover " + std::to_string(num_visual) + " visual tokens");
  }

  TokenWorkspace ws;
  ws.embeddings = std::move(embeddings);
  ws.grid_rows = grid_rows;
  ws.grid_cols = grid_cols;
  ws.alive.assign(total, true);
  ws.roles.reserve(total);
  for (std::size_t i = 0; i < total; ++i) {
    ws.original_index.push_back(i);
    if (has_cls && i == 0) {
      ws.roles.push_back(TokenRole::Cls);
      ws.grid_pos.emplace_back();
      continue;
    }
    const std::size_t k = i - (has_cls ? 1 : 0);
    if (k < num_visual) {
      ws.roles.push_back(TokenRole::Visual);
      ws.grid_pos.emplace_back(GridPos{k / grid_cols, k % grid_cols});
    } else {
      ws.roles.push_back(TokenRole::Text);
      ws.grid_pos.emplace_back();
    }
  }
  return ws;
}

std::size_t TokenWorkspace::count(TokenRole role) const {
  return static_cast<std::size_t>(std::count(roles.begin(), roles.end(), role));
}

std::vector<std::size_t> TokenWorkspace::rows_with(TokenRole role) const {
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < roles.size(); ++r) {
    if (roles[r] == role) rows.push_back(r);
  }
  return rows;
}

std::optional<std::size_t> TokenWorkspace::row_of(std::size_t original) const {
  const auto it = std::lower_bound(original_index.begin(), original_index.end(), original);
  if (it == original_index.end() || *it != original) return std::nullopt;
  return static_cast<std::size_t>(it - original_index.begin());
}

TokenWorkspace TokenWorkspace::without_rows(std::span<const std::size_t> rows) const {
  std::vector<bool> drop(size(), false);
  for (const auto r : rows) {
    if (r >= size()) throw ShapeError("row " + std::to_string(r) + " out of range");
    drop[r] = true;
  }
  TokenWorkspace out;
  out.grid_rows = grid_rows;
  out.grid_cols = grid_cols;
  out.alive = alive;
  const std::size_t kept = size() - static_cast<std::size_t>(std::count(drop.begin(), drop.end(), true));
  out.embeddings = Matrix(kept, width());
  std::size_t w = 0;
  for (std::size_t r = 0; r < size(); ++r) {
    if (drop[r]) {
      out.alive[original_index[r]] = false;
      continue;
    }
    const auto src = embeddings.row(r);
    std::copy(src.begin(), src.end(), out.embeddings.row(w).begin());
    out.roles.push_back(roles[r]);
    out.original_index.push_back(original_index[r]);
    out.grid_pos.push_back(grid_pos[r]);
    ++w;
  }
  return out;
}

void TokenWorkspace::validate() const {
  const auto n = roles.size();
  if (embeddings.rows() != n || original_index.size() != n || grid_pos.size() != n) {
    throw ShapeError("workspace per-token vectors disagree in length");
  }
  if (!std::is_sorted(original_index.begin(), original_index.end()) ||
      std::adjacent_find(original_index.begin(), original_index.end()) != original_index.end()) {
    throw ShapeError("workspace rows are not in strictly ascending original order");
  }
  std::size_t alive_count = 0;
  for (const bool a : alive) alive_count += a ? 1 : 0;
  if (alive_count != n) throw ShapeError("alive mask does not match the row count");
  std::set<std::pair<std::size_t, std::size_t>> cells;
  for (std::size_t r = 0; r < n; ++r) {
    if (original_index[r] >= alive.size() || !alive[original_index[r]]) {
      throw ShapeError("row for a token not marked alive");
    }
    if (roles[r] == TokenRole::Cls && original_index[r] != 0) {
      throw ShapeError("CLS token must have original index 0");
    }
    if (roles[r] == TokenRole::Visual) {
      if (!grid_pos[r]) throw ShapeError("visual token without grid position");
      const auto [gr, gc] = *grid_pos[r];
      if (gr >= grid_rows || gc >= grid_cols) throw ShapeError("grid position outside grid");
      if (!cells.emplace(gr, gc).second) throw ShapeError("two visual tokens share a grid cell");
    }
  }
  if (count(TokenRole::Cls) > 1) throw ShapeError("more than one CLS token");
}

}  // namespace ficoco
