#include "ficoco/correlate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ficoco/errors.hpp"

namespace ficoco {

namespace {

void check_split(const Matrix& a_vv, const SourceTargetSplit& split) {
  if (a_vv.rows() != a_vv.cols()) throw ShapeError("visual block must be square");
  for (const auto i : split.source) {
    if (i >= a_vv.rows()) throw ShapeError("source index outside the visual block");
  }
  for (const auto j : split.target) {
    if (j >= a_vv.rows()) throw ShapeError("target index outside the visual block");
  }
}

// Fills weights from C over the chosen sets and builds the transpose.
void finish_plan(CorrelationPlan& plan) {
  const auto& c = plan.correlation;
  plan.weights.assign(plan.targets_of.size(), {});
  plan.sources_of.assign(c.cols(), {});
  for (std::size_t i = 0; i < plan.targets_of.size(); ++i) {
    const auto& chosen = plan.targets_of[i];
    if (chosen.empty()) continue;
    double total = 0.0;
    for (const auto j : chosen) total += c(i, j);
    auto& w = plan.weights[i];
    w.reserve(chosen.size());
    for (const auto j : chosen) {
      w.push_back(total > 0.0 ? c(i, j) / total : 1.0 / static_cast<double>(chosen.size()));
    }
    for (const auto j : chosen) plan.sources_of[j].push_back(i);
  }
}

}  // namespace

double CorrelationPlan::alpha(std::size_t source, std::size_t target) const {
  const auto& js = targets_of.at(source);
  const auto it = std::lower_bound(js.begin(), js.end(), target);
  if (it == js.end() || *it != target) return 0.0;
  return weights[source][static_cast<std::size_t>(it - js.begin())];
}

Matrix correlation_v(const Matrix& a_vv, const SourceTargetSplit& split) {
  check_split(a_vv, split);
  Matrix c(split.source.size(), split.target.size());
  for (std::size_t i = 0; i < split.source.size(); ++i) {
    for (std::size_t j = 0; j < split.target.size(); ++j) c(i, j) = a_vv(split.source[i], split.target[j]);
  }
  return c;
}

Matrix correlation_l(const Matrix& a_vv, const Matrix& a_tv, const SourceTargetSplit& split,
                     double gamma, bool causal) {
  check_split(a_vv, split);
  if (a_tv.rows() == 0) throw StageError("decoder correlation needs at least one text token");
  if (a_tv.cols() != a_vv.rows()) throw ShapeError("text-to-visual block width differs from visual count");
  const double m = static_cast<double>(a_tv.rows());
  Matrix c(split.source.size(), split.target.size());
  for (std::size_t i = 0; i < split.source.size(); ++i) {
    const auto s = split.source[i];
    for (std::size_t j = 0; j < split.target.size(); ++j) {
      const auto t = split.target[j];
      const double direct = causal ? std::max(a_vv(s, t), a_vv(t, s)) : a_vv(s, t);
      double bridge = 0.0;
      for (std::size_t k = 0; k < a_tv.rows(); ++k) bridge += a_tv(k, s) * a_tv(k, t);
      c(i, j) = gamma * direct + (1.0 - gamma) * (bridge / m);
    }
  }
  return c;
}

double quantile(std::span<const double> row, double epsilon) {
  if (row.empty()) throw StageError("quantile of an empty row");
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw StageError("epsilon must lie in (0, 1]");
  std::vector<double> v(row.begin(), row.end());
  std::sort(v.begin(), v.end());
  const double h = epsilon * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = static_cast<std::size_t>(std::ceil(h));
  const double tau = v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
  // Rounding can push the interpolant one ulp past the upper order statistic.
  return std::min(tau, v[hi]);
}

std::vector<double> thresholds(const Matrix& correlation, double epsilon) {
  std::vector<double> tau;
  tau.reserve(correlation.rows());
  for (std::size_t i = 0; i < correlation.rows(); ++i) tau.push_back(quantile(correlation.row(i), epsilon));
  return tau;
}

CorrelationPlan assignments(Matrix correlation, std::vector<double> tau) {
  if (tau.size() != correlation.rows()) throw ShapeError("one threshold per source row expected");
  CorrelationPlan plan;
  plan.correlation = std::move(correlation);
  plan.tau = std::move(tau);
  plan.targets_of.resize(plan.correlation.rows());
  for (std::size_t i = 0; i < plan.correlation.rows(); ++i) {
    for (std::size_t j = 0; j < plan.correlation.cols(); ++j) {
      if (plan.correlation(i, j) >= plan.tau[i]) plan.targets_of[i].push_back(j);
    }
  }
  finish_plan(plan);
  return plan;
}

CorrelationPlan fixed_k_assignments(Matrix correlation, std::size_t k) {
  if (k > correlation.cols()) {
    throw StageError("fixed K=" + std::to_string(k) + " exceeds " +
                     std::to_string(correlation.cols()) + " targets");
  }
  CorrelationPlan plan;
  plan.correlation = std::move(correlation);
  plan.targets_of.resize(plan.correlation.rows());
  std::vector<std::size_t> order(plan.correlation.cols());
  for (std::size_t i = 0; i < plan.correlation.rows(); ++i) {
    const auto row = plan.correlation.row(i);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return row[a] > row[b]; });
    auto& chosen = plan.targets_of[i];
    chosen.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(chosen.begin(), chosen.end());
  }
  finish_plan(plan);
  return plan;
}

CorrelationPlan many_to_one_assignments(Matrix correlation) {
  if (correlation.rows() > 0 && correlation.cols() == 0) {
    throw StageError("many-to-one assignment needs at least one target");
  }
  CorrelationPlan plan;
  plan.correlation = std::move(correlation);
  plan.targets_of.resize(plan.correlation.rows());
  for (std::size_t i = 0; i < plan.correlation.rows(); ++i) {
    const auto row = plan.correlation.row(i);
    const auto best = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    plan.targets_of[i] = {best};
  }
  finish_plan(plan);
  return plan;
}

CorrelationPlan pruning_plan(std::size_t num_sources, std::size_t num_targets) {
  CorrelationPlan plan;
  plan.correlation = Matrix(num_sources, num_targets);
  plan.targets_of.resize(num_sources);
  finish_plan(plan);
  return plan;
}

}  // namespace ficoco
