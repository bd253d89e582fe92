#include "ficoco/filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "ficoco/errors.hpp"

namespace ficoco {

namespace {

double cosine(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    dot += a[d] * b[d];
    na += a[d] * a[d];
    nb += b[d] * b[d];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  // Rounding can push parallel vectors a hair past +-1.
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

}  // namespace

RedundancyScores score_v(const Matrix& a_vv, std::span<const double> a_cls, double lambda,
                         ReplaceableRead read) {
  const std::size_t n = a_vv.rows();
  if (a_vv.cols() != n) throw ShapeError("visual block must be square");
  if (a_cls.size() != n) {
    throw ShapeError("CLS row has " + std::to_string(a_cls.size()) + " entries, visual block " +
                     std::to_string(n));
  }
  RedundancyScores out{std::vector<double>(n), Variant::V};
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) sum += read == ReplaceableRead::RowMean ? a_vv(i, j) : a_vv(j, i);
    out.scores[i] = lambda * (sum / static_cast<double>(n)) - (1.0 - lambda) * a_cls[i];
  }
  return out;
}

RedundancyScores score_l(const Matrix& a_vv, const Matrix& a_tv, double beta) {
  const std::size_t n = a_vv.rows();
  if (a_vv.cols() != n) throw ShapeError("visual block must be square");
  if (a_tv.rows() == 0) throw StageError("decoder scoring needs at least one text token");
  if (a_tv.cols() != n) throw ShapeError("text-to-visual block width differs from visual count");
  const double m = static_cast<double>(a_tv.rows());
  RedundancyScores out{std::vector<double>(n), Variant::L};
  for (std::size_t i = 0; i < n; ++i) {
    double paid = 0.0;
    for (std::size_t j = 0; j < n; ++j) paid += a_vv(i, j);
    double received = 0.0;
    for (std::size_t k = 0; k < a_tv.rows(); ++k) received += a_tv(k, i);
    out.scores[i] = beta * (paid / static_cast<double>(n)) - (1.0 - beta) * (received / m);
  }
  return out;
}

std::vector<double> key_mean_equivalent(std::span<const Matrix> keys,
                                        std::span<const TokenRole> layout) {
  if (keys.empty()) throw ShapeError("key_mean_equivalent needs at least one head");
  const std::size_t tokens = keys.front().rows();
  const std::size_t width = keys.front().cols();
  if (width == 0) throw ShapeError("key width must be positive");
  if (layout.size() != tokens) throw ShapeError("key rows differ from layout length");
  for (const auto& k : keys) {
    if (k.rows() != tokens || k.cols() != width) throw ShapeError("key heads differ in shape");
  }

  std::vector<std::size_t> visual;
  for (std::size_t r = 0; r < tokens; ++r) {
    if (layout[r] == TokenRole::Visual) visual.push_back(r);
  }
  if (visual.empty()) throw StageError("key_mean_equivalent needs at least one visual token");

  // Head-mean keys of the visual rows, then their mean.
  Matrix patch(visual.size(), width);
  for (const auto& k : keys) {
    for (std::size_t i = 0; i < visual.size(); ++i) {
      for (std::size_t d = 0; d < width; ++d) patch(i, d) += k(visual[i], d);
    }
  }
  const double heads = static_cast<double>(keys.size());
  for (auto& v : patch.data()) v /= heads;

  std::vector<double> mu(width, 0.0);
  for (std::size_t i = 0; i < visual.size(); ++i) {
    for (std::size_t d = 0; d < width; ++d) mu[d] += patch(i, d);
  }
  for (auto& v : mu) v /= static_cast<double>(visual.size());

  std::vector<double> out(visual.size());
  for (std::size_t i = 0; i < visual.size(); ++i) out[i] = -cosine(mu, patch.row(i));
  return out;
}

RedundancyScores local_penalty(const RedundancyScores& scores, const TokenWorkspace& workspace,
                               std::size_t window_size, double coefficient) {
  if (window_size == 0) throw StageError("window_size must be positive");
  const auto visual_rows = workspace.rows_with(TokenRole::Visual);
  if (visual_rows.size() != scores.scores.size()) {
    throw ShapeError("score count differs from alive visual tokens");
  }

  constexpr std::size_t kDead = std::numeric_limits<std::size_t>::max();
  const std::size_t rows = workspace.grid_rows;
  const std::size_t cols = workspace.grid_cols;
  // Each cell holds the alive-visual position occupying it, or kDead (the
  // -inf padding of discarded tokens).
  std::vector<std::size_t> cell(rows * cols, kDead);
  for (std::size_t p = 0; p < visual_rows.size(); ++p) {
    const auto& pos = workspace.grid_pos[visual_rows[p]];
    if (!pos || pos->row >= rows || pos->col >= cols) {
      throw ShapeError("visual token without a valid grid position");
    }
    cell[pos->row * cols + pos->col] = p;
  }

  RedundancyScores out = scores;
  for (std::size_t r0 = 0; r0 < rows; r0 += window_size) {
    for (std::size_t c0 = 0; c0 < cols; c0 += window_size) {
      std::size_t best = kDead;
      for (std::size_t r = r0; r < std::min(rows, r0 + window_size); ++r) {
        for (std::size_t c = c0; c < std::min(cols, c0 + window_size); ++c) {
          const std::size_t p = cell[r * cols + c];
          if (p == kDead) continue;
          const bool better = best == kDead || scores.scores[p] > scores.scores[best] ||
                              (scores.scores[p] == scores.scores[best] &&
                               workspace.original_index[visual_rows[p]] <
                                   workspace.original_index[visual_rows[best]]);
          if (better) best = p;
        }
      }
      if (best != kDead) out.scores[best] = scores.scores[best] * coefficient;
    }
  }
  return out;
}

SourceTargetSplit select_discarded(std::span<const double> scores, std::size_t n_discard) {
  if (n_discard > scores.size()) {
    throw StageError("cannot discard " + std::to_string(n_discard) + " of " +
                     std::to_string(scores.size()) + " visual tokens");
  }
  if (std::any_of(scores.begin(), scores.end(), [](double s) { return std::isnan(s); })) {
    throw StageError("redundancy scores contain NaN");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  std::vector<bool> dropped(scores.size(), false);
  for (std::size_t k = 0; k < n_discard; ++k) dropped[order[k]] = true;
  SourceTargetSplit split;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    (dropped[i] ? split.source : split.target).push_back(i);
  }
  return split;
}

}  // namespace ficoco
