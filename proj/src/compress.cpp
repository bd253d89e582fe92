#include "ficoco/compress.hpp"

#include <string>

#include "ficoco/errors.hpp"
#include "ficoco/parallel.hpp"

namespace ficoco {

namespace {

void check_dims(const Matrix& targets, const Matrix& sources, const CorrelationPlan& plan) {
  if (plan.num_targets() != targets.rows()) {
    throw ShapeError("plan has " + std::to_string(plan.num_targets()) + " targets, matrix " +
                     std::to_string(targets.rows()));
  }
  if (plan.num_sources() != sources.rows()) {
    throw ShapeError("plan has " + std::to_string(plan.num_sources()) + " sources, matrix " +
                     std::to_string(sources.rows()));
  }
  if (sources.rows() > 0 && targets.rows() > 0 && sources.cols() != targets.cols()) {
    throw ShapeError("source and target embeddings differ in width");
  }
}

template <typename WeightFn>
CompressionResult compress(const Matrix& targets, const Matrix& sources,
                           const CorrelationPlan& plan, WeightFn weight_of) {
  check_dims(targets, sources, plan);
  CompressionResult out{targets, std::vector<double>(targets.rows(), 0.0),
                        std::vector<std::vector<std::pair<std::size_t, double>>>(targets.rows())};
  const std::size_t width = targets.cols();
  parallel_for(targets.rows(), [&](std::size_t j) {
    const auto& incoming = plan.sources_of[j];
    if (incoming.empty()) return;
    auto& prov = out.provenance[j];
    double mass = 0.0;
    double total_weight = 0.0;
    std::vector<double> acc(targets.row(j).begin(), targets.row(j).end());
    for (const auto i : incoming) {
      const double alpha = plan.alpha(i, j);
      prov.emplace_back(i, alpha);
      mass += alpha;
      const double w = weight_of(alpha);
      total_weight += w;
      const auto x = sources.row(i);
      for (std::size_t d = 0; d < width; ++d) acc[d] += w * x[d];
    }
    const double denom = 1.0 + total_weight;
    auto dst = out.updated_targets.row(j);
    for (std::size_t d = 0; d < width; ++d) dst[d] = acc[d] / denom;
    out.received_mass[j] = mass;
  });
  return out;
}

}  // namespace

CompressionResult weighted_compress(const Matrix& targets, const Matrix& sources,
                                    const CorrelationPlan& plan) {
  return compress(targets, sources, plan, [](double alpha) { return alpha; });
}

CompressionResult average_compress(const Matrix& targets, const Matrix& sources,
                                   const CorrelationPlan& plan) {
  return compress(targets, sources, plan, [](double) { return 1.0; });
}

}  // namespace ficoco
