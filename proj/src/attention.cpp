#include "ficoco/attention.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ficoco/errors.hpp"
#include "ficoco/parallel.hpp"

namespace ficoco {

namespace {

std::vector<std::size_t> positions(const std::vector<TokenRole>& layout, TokenRole role) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < layout.size(); ++i) {
    if (layout[i] == role) out.push_back(i);
  }
  return out;
}

Matrix gather(const Matrix& a, const std::vector<std::size_t>& rows,
              const std::vector<std::size_t>& cols) {
  Matrix out(rows.size(), cols.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) out(r, c) = a(rows[r], cols[c]);
  }
  return out;
}

}  // namespace

const Matrix& AttentionView::weights() const {
  if (heads.size() != 1) {
    throw ShapeError("expected a single-head attention view, got " + std::to_string(heads.size()) +
                     " heads; average heads first");
  }
  return heads.front();
}

void AttentionView::validate(double tolerance) const {
  if (heads.empty()) throw ShapeError("attention view has no heads");
  const auto n = layout.size();
  for (const auto& h : heads) {
    if (h.rows() != n || h.cols() != n) {
      throw ShapeError("attention head is " + std::to_string(h.rows()) + "x" +
                       std::to_string(h.cols()) + ", layout has " + std::to_string(n) + " tokens");
    }
    for (std::size_t i = 0; i < n; ++i) {
      double sum = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double v = h(i, j);
        if (!(v >= -tolerance && v <= 1.0 + tolerance)) {
          throw ShapeError("attention entry outside [0, 1]");
        }
        if (causal && j > i) {
          if (v > tolerance) throw ShapeError("causal attention has mass above the diagonal");
          continue;
        }
        sum += v;
      }
      if (std::abs(sum - 1.0) > tolerance) {
        throw ShapeError("attention row " + std::to_string(i) + " sums to " + std::to_string(sum));
      }
    }
  }
}

Matrix project(const Matrix& x, const Matrix& w) {
  if (x.cols() != w.rows()) {
    throw ShapeError("projection mismatch: " + std::to_string(x.cols()) + " vs " +
                     std::to_string(w.rows()));
  }
  Matrix out(x.rows(), w.cols());
  parallel_for(x.rows(), [&](std::size_t r) {
    auto dst = out.row(r);
    const auto src = x.row(r);
    for (std::size_t k = 0; k < src.size(); ++k) {
      const double xv = src[k];
      const auto wrow = w.row(k);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += xv * wrow[c];
    }
  });
  return out;
}

Matrix softmax_attention(const Matrix& queries, const Matrix& keys, bool causal) {
  if (queries.rows() != keys.rows() || queries.cols() != keys.cols()) {
    throw ShapeError("query/key shapes differ");
  }
  if (queries.rows() == 0) throw ShapeError("attention over zero tokens");
  if (queries.cols() == 0) throw ShapeError("attention width must be positive");
  const std::size_t n = queries.rows();
  const double scale = 1.0 / std::sqrt(static_cast<double>(queries.cols()));
  Matrix out(n, n);
  parallel_for(n, [&](std::size_t i) {
    auto row = out.row(i);
    const auto q = queries.row(i);
    const std::size_t limit = causal ? i + 1 : n;
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < limit; ++j) {
      const auto k = keys.row(j);
      double dot = 0.0;
      for (std::size_t d = 0; d < q.size(); ++d) dot += q[d] * k[d];
      row[j] = dot * scale;
      peak = std::max(peak, row[j]);
    }
    double total = 0.0;
    for (std::size_t j = 0; j < limit; ++j) {
      row[j] = std::exp(row[j] - peak);
      total += row[j];
    }
    for (std::size_t j = 0; j < limit; ++j) row[j] /= total;
  });
  return out;
}

AttentionView attention_from_projections(const Matrix& x, const Matrix& wq, const Matrix& wk,
                                         bool causal, std::vector<TokenRole> layout) {
  if (x.rows() == 0) throw ShapeError("attention over zero tokens");
  if (wq.rows() != x.cols() || wk.rows() != x.cols() || wq.cols() != wk.cols()) {
    throw ShapeError("projection matrices do not match embedding width " +
                     std::to_string(x.cols()));
  }
  if (layout.empty()) layout.assign(x.rows(), TokenRole::Visual);
  if (layout.size() != x.rows()) throw ShapeError("layout length differs from token count");
  AttentionView view;
  view.heads.push_back(softmax_attention(project(x, wq), project(x, wk), causal));
  view.layout = std::move(layout);
  view.causal = causal;
  return view;
}

AttentionView head_mean(const AttentionView& multi_head) {
  if (multi_head.heads.empty()) throw ShapeError("attention view has no heads");
  const auto& first = multi_head.heads.front();
  Matrix mean(first.rows(), first.cols());
  for (const auto& h : multi_head.heads) {
    if (h.rows() != first.rows() || h.cols() != first.cols()) {
      throw ShapeError("attention heads differ in shape");
    }
    for (std::size_t i = 0; i < h.data().size(); ++i) mean.data()[i] += h.data()[i];
  }
  const double count = static_cast<double>(multi_head.heads.size());
  for (auto& v : mean.data()) v /= count;
  AttentionView out;
  out.heads.push_back(std::move(mean));
  out.layout = multi_head.layout;
  out.causal = multi_head.causal;
  return out;
}

Matrix visual_block(const AttentionView& view) {
  const auto vis = positions(view.layout, TokenRole::Visual);
  return gather(view.weights(), vis, vis);
}

std::vector<double> cls_row(const AttentionView& view) {
  const auto cls = positions(view.layout, TokenRole::Cls);
  if (cls.empty()) {
    throw AbsentClsError(
        "layout has no CLS token; use cls_mode key_mean_equivalent for CLS-free encoders");
  }
  const auto vis = positions(view.layout, TokenRole::Visual);
  const auto& a = view.weights();
  std::vector<double> out;
  out.reserve(vis.size());
  for (const auto c : vis) out.push_back(a(cls.front(), c));
  return out;
}

Matrix text_to_visual_block(const AttentionView& view) {
  return gather(view.weights(), positions(view.layout, TokenRole::Text),
                positions(view.layout, TokenRole::Visual));
}

}  // namespace ficoco
