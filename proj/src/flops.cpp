#include "ficoco/flops.hpp"

#include <algorithm>
#include <limits>

#include "ficoco/errors.hpp"

namespace ficoco {

namespace {

FlopCount add(FlopCount a, FlopCount b) {
  FlopCount r;
  if (__builtin_add_overflow(a, b, &r)) throw OverflowError("FLOP count overflow in addition");
  return r;
}

FlopCount mul(FlopCount a, FlopCount b) {
  FlopCount r;
  if (__builtin_mul_overflow(a, b, &r)) throw OverflowError("FLOP count overflow in multiplication");
  return r;
}

FlopCount sub(FlopCount a, FlopCount b) {
  if (b > a) throw OverflowError("FLOP count underflow in subtraction");
  return a - b;
}

std::uint64_t tokens_for(const LayerCostParams& p, std::uint64_t visual, Variant variant) {
  if (variant == Variant::V) return visual;
  FlopCount total = add(visual, p.text);
  if (total > std::numeric_limits<std::uint64_t>::max()) throw OverflowError("token count overflow");
  return static_cast<std::uint64_t>(total);
}

void check(const LayerCostParams& p) {
  if (p.discarded > p.visual) throw StageError("discarded tokens exceed visual tokens");
}

}  // namespace

std::string to_string(FlopCount value) {
  if (value == 0) return "0";
  std::string digits;
  while (value > 0) {
    digits.push_back(static_cast<char>('0' + static_cast<int>(value % 10)));
    value /= 10;
  }
  std::reverse(digits.begin(), digits.end());
  return digits;
}

nlohmann::json flops_to_json(FlopCount value) {
  if (value <= std::numeric_limits<std::uint64_t>::max()) return static_cast<std::uint64_t>(value);
  return to_string(value);
}

FlopCount layer_flops(std::uint64_t tokens, std::uint64_t width, std::uint64_t ffn_width) {
  const FlopCount p = tokens, d = width, h = ffn_width;
  const FlopCount projections = mul(mul(4, p), mul(d, d));
  const FlopCount attention = mul(mul(2, mul(p, p)), d);
  const FlopCount feed_forward = mul(mul(2, mul(p, d)), h);
  return add(add(projections, attention), feed_forward);
}

FlopCount printed_delta(const LayerCostParams& params, Variant variant) {
  check(params);
  const FlopCount n = params.visual, ns = params.discarded, d = params.width, h = params.ffn_width;
  const FlopCount first = mul(mul(4, ns), mul(d, d));
  const FlopCount cross = variant == Variant::V ? mul(n, ns) : mul(2, mul(n, ns));
  const FlopCount middle = mul(mul(2, sub(cross, mul(ns, ns))), d);
  const FlopCount last = mul(mul(2, ns), mul(d, h));
  return add(add(first, middle), last);
}

DeltaReport reduction_delta(const LayerCostParams& params, Variant variant) {
  check(params);
  DeltaReport report;
  report.before = layer_flops(tokens_for(params, params.visual, variant), params.width, params.ffn_width);
  report.after = layer_flops(tokens_for(params, params.targets(), variant), params.width, params.ffn_width);
  report.delta = sub(report.before, report.after);
  report.printed = printed_delta(params, variant);
  return report;
}

FlopCount overhead_flops(const LayerCostParams& params, Variant variant) {
  check(params);
  const FlopCount n = params.visual, ns = params.discarded, nt = params.targets(), d = params.width;
  FlopCount scoring = add(mul(n, n), mul(2, n));
  if (variant == Variant::L) scoring = mul(2, scoring);
  const FlopCount merging = mul(ns, add(add(nt, mul(2, d)), 1));
  return add(add(scoring, merging), d);
}

CostSummary pipeline_cost(const std::vector<std::size_t>& per_layer_discard,
                          std::uint64_t initial_visual, std::uint64_t text, std::uint64_t width,
                          std::uint64_t ffn_width, Variant variant) {
  CostSummary summary;
  std::uint64_t visual = initial_visual;
  const LayerCostParams base{width, ffn_width, initial_visual, 0, text};
  const FlopCount baseline = layer_flops(tokens_for(base, initial_visual, variant), width, ffn_width);
  for (std::size_t l = 0; l < per_layer_discard.size(); ++l) {
    const std::uint64_t ns = per_layer_discard[l];
    if (ns > visual) throw StageError("schedule discards more tokens than remain at layer " + std::to_string(l));
    const LayerCostParams params{width, ffn_width, visual, ns, text};
    LayerCost cost;
    cost.layer = l;
    cost.visual_in = visual;
    cost.discarded = ns;
    cost.before = baseline;
    cost.after = layer_flops(tokens_for(params, visual - ns, variant), width, ffn_width);
    if (ns > 0) {
      cost.overhead = overhead_flops(params, variant);
      const auto delta = reduction_delta(params, variant);
      if (delta.mismatch()) {
        summary.warnings.push_back(
            {l, delta.delta, delta.printed,
             variant == Variant::V ? "encoder attention term 2(N*Ns - Ns^2)D understates 2D(N^2 - N'^2)"
                                   : "decoder attention term omits the 4*D*Ns*M text contribution"});
      }
    }
    summary.total_before = add(summary.total_before, cost.before);
    summary.total_after = add(summary.total_after, cost.after);
    summary.total_overhead = add(summary.total_overhead, cost.overhead);
    summary.layers.push_back(cost);
    visual -= ns;
  }
  if (summary.total_before > 0) {
    summary.percent_reduction =
        100.0 * static_cast<double>(summary.total_before - summary.total_after) /
        static_cast<double>(summary.total_before);
  }
  return summary;
}

nlohmann::json to_json(const CostSummary& summary) {
  nlohmann::json doc;
  doc["total_before"] = flops_to_json(summary.total_before);
  doc["total_after"] = flops_to_json(summary.total_after);
  doc["total_delta"] = flops_to_json(summary.total_before - summary.total_after);
  doc["total_overhead"] = flops_to_json(summary.total_overhead);
  doc["percent_reduction"] = summary.percent_reduction;
  auto& layers = doc["layers"] = nlohmann::json::array();
  for (const auto& c : summary.layers) {
    layers.push_back({{"layer", c.layer},
                      {"visual_in", c.visual_in},
                      {"discarded", c.discarded},
                      {"before", flops_to_json(c.before)},
                      {"after", flops_to_json(c.after)},
                      {"overhead", flops_to_json(c.overhead)}});
  }
  auto& warnings = doc["warnings"] = nlohmann::json::array();
  for (const auto& w : summary.warnings) {
    warnings.push_back({{"kind", "closed_form_mismatch"},
                        {"layer", w.layer},
                        {"true_delta", flops_to_json(w.true_delta)},
                        {"printed_delta", flops_to_json(w.printed_delta)},
                        {"term", w.term}});
  }
  return doc;
}

}  // namespace ficoco
