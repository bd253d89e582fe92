#include "ficoco/pipeline.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "ficoco/compress.hpp"
#include "ficoco/correlate.hpp"
#include "ficoco/errors.hpp"
#include "ficoco/filter.hpp"

namespace ficoco {

namespace {

Matrix gather_rows(const Matrix& x, const std::vector<std::size_t>& rows) {
  Matrix out(rows.size(), x.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto src = x.row(rows[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

std::vector<std::size_t> pick(const std::vector<std::size_t>& from, const std::vector<std::size_t>& at) {
  std::vector<std::size_t> out;
  out.reserve(at.size());
  for (const auto i : at) out.push_back(from[i]);
  return out;
}

AttentionView prepare_attention(const AttentionView& attention, const TokenWorkspace& ws) {
  AttentionView view = attention.num_heads() > 1 ? head_mean(attention) : attention;
  if (view.heads.empty()) throw ShapeError("attention view has no heads");
  if (view.layout.empty()) view.layout = ws.roles;
  const auto& a = view.weights();
  if (a.rows() != ws.size() || a.cols() != ws.size()) {
    throw ShapeError("attention is " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                     " but " + std::to_string(ws.size()) + " tokens are alive");
  }
  if (view.layout != ws.roles) throw ShapeError("attention layout differs from the workspace roles");
  return view;
}

CorrelationPlan make_plan(Matrix correlation, const ReductionConfig& config) {
  if (correlation.cols() == 0) return pruning_plan(correlation.rows(), 0);
  switch (config.assignment) {
    case AssignmentMode::FixedK:
      return fixed_k_assignments(std::move(correlation), config.fixed_k);
    case AssignmentMode::ManyToOne:
      return many_to_one_assignments(std::move(correlation));
    case AssignmentMode::Adaptive:
      break;
  }
  auto tau = thresholds(correlation, config.epsilon);
  return assignments(std::move(correlation), std::move(tau));
}

// Compresses the sources into the targets, drops the sources and fills the
// record's discard/assignment fields.
TokenWorkspace compress_and_drop(const TokenWorkspace& ws, const std::vector<std::size_t>& visual_rows,
                                 const SourceTargetSplit& split, const CorrelationPlan& plan,
                                 CompressionMode mode, LayerRecord& record) {
  const auto source_rows = pick(visual_rows, split.source);
  const auto target_rows = pick(visual_rows, split.target);
  const Matrix targets = gather_rows(ws.embeddings, target_rows);
  const Matrix sources = gather_rows(ws.embeddings, source_rows);
  const auto result = mode == CompressionMode::Weighted ? weighted_compress(targets, sources, plan)
                                                        : average_compress(targets, sources, plan);

  TokenWorkspace updated = ws;
  for (std::size_t j = 0; j < target_rows.size(); ++j) {
    if (plan.sources_of[j].empty()) continue;
    const auto src = result.updated_targets.row(j);
    std::copy(src.begin(), src.end(), updated.embeddings.row(target_rows[j]).begin());
    record.received_mass.emplace_back(ws.original_index[target_rows[j]], result.received_mass[j]);
  }
  for (std::size_t i = 0; i < source_rows.size(); ++i) {
    record.discarded.push_back(ws.original_index[source_rows[i]]);
    SourceAssignment a;
    a.source = ws.original_index[source_rows[i]];
    for (const auto j : plan.targets_of[i]) a.targets.push_back(ws.original_index[target_rows[j]]);
    a.weights = plan.weights[i];
    record.assignments.push_back(std::move(a));
  }
  return updated.without_rows(source_rows);
}

LayerRecord empty_record(std::size_t layer, Variant variant) {
  LayerRecord record;
  record.layer = layer;
  record.variant = variant;
  return record;
}

LayerRecord begin_record(const TokenWorkspace& ws, const std::vector<std::size_t>& visual_rows,
                         Variant variant, std::size_t layer) {
  LayerRecord record;
  record.layer = layer;
  record.variant = variant;
  record.tokens = pick(ws.original_index, visual_rows);
  return record;
}

}  // namespace

std::size_t Schedule::total() const {
  return std::accumulate(per_layer_discard.begin(), per_layer_discard.end(), std::size_t{0});
}

Schedule plan_schedule(std::size_t initial_visual, std::size_t keep_budget, std::size_t start_layer,
                       std::size_t num_layers) {
  if (keep_budget > initial_visual) {
    throw ConfigError("keep budget " + std::to_string(keep_budget) + " exceeds " +
                      std::to_string(initial_visual) + " visual tokens");
  }
  Schedule schedule{std::vector<std::size_t>(num_layers, 0)};
  const std::size_t total = initial_visual - keep_budget;
  if (total == 0) return schedule;
  if (start_layer >= num_layers) {
    throw ConfigError("infeasible budget: start layer " + std::to_string(start_layer) +
                      " leaves no layer to discard " + std::to_string(total) + " tokens");
  }
  const std::size_t active = num_layers - start_layer;
  const std::size_t base = total / active;
  const std::size_t remainder = total % active;
  for (std::size_t k = 0; k < active; ++k) {
    schedule.per_layer_discard[start_layer + k] = base + (k < remainder ? 1 : 0);
  }
  return schedule;
}

Schedule plan_schedule(std::size_t initial_visual, std::vector<std::size_t> per_layer_discard,
                       std::size_t start_layer, std::size_t num_layers) {
  if (per_layer_discard.size() != num_layers) {
    throw ConfigError("schedule has " + std::to_string(per_layer_discard.size()) + " entries for " +
                      std::to_string(num_layers) + " layers");
  }
  for (std::size_t l = 0; l < std::min(start_layer, num_layers); ++l) {
    if (per_layer_discard[l] != 0) {
      throw ConfigError("schedule discards at layer " + std::to_string(l) + " before start layer " +
                        std::to_string(start_layer));
    }
  }
  Schedule schedule{std::move(per_layer_discard)};
  if (schedule.total() > initial_visual) {
    throw ConfigError("infeasible schedule: discards " + std::to_string(schedule.total()) + " of " +
                      std::to_string(initial_visual) + " visual tokens");
  }
  return schedule;
}

Schedule schedule_for(const ReductionConfig& config, std::size_t initial_visual) {
  if (config.per_layer_discard) {
    return plan_schedule(initial_visual, *config.per_layer_discard, config.start_layer, config.num_layers);
  }
  if (!config.keep_budget) throw ConfigError("config has neither keep_budget nor per_layer_discard");
  return plan_schedule(initial_visual, *config.keep_budget, config.start_layer, config.num_layers);
}

std::pair<TokenWorkspace, LayerRecord> reduce_layer_v(const TokenWorkspace& workspace,
                                                      const AttentionView& attention,
                                                      const std::vector<Matrix>& keys,
                                                      const ReductionConfig& config,
                                                      std::size_t n_discard, std::size_t layer) {
  const auto visual_rows = workspace.rows_with(TokenRole::Visual);
  if (n_discard > visual_rows.size()) {
    throw StageError("layer " + std::to_string(layer) + ": cannot discard " + std::to_string(n_discard) +
                     " of " + std::to_string(visual_rows.size()) + " visual tokens");
  }
  if (n_discard == 0) return {workspace, empty_record(layer, Variant::V)};

  const auto view = prepare_attention(attention, workspace);
  auto record = begin_record(workspace, visual_rows, Variant::V, layer);
  const Matrix a_vv = visual_block(view);
  std::vector<double> task;
  if (config.cls_mode == ClsMode::ClsRow) {
    task = cls_row(view);
  } else {
    if (keys.empty()) throw StageError("key_mean_equivalent needs per-head keys for this layer");
    task = key_mean_equivalent(keys, workspace.roles);
  }
  auto scores = score_v(a_vv, task, config.lambda, config.replaceable_read);
  if (config.local_penalty) {
    scores = local_penalty(scores, workspace, config.window_size, config.penalty_coefficient);
    record.penalty_applied = true;
  }
  record.scores = scores.scores;
  const auto split = select_discarded(scores.scores, n_discard);
  const auto plan = make_plan(correlation_v(a_vv, split), config);
  auto next = compress_and_drop(workspace, visual_rows, split, plan, config.compression, record);
  return {std::move(next), std::move(record)};
}

std::pair<TokenWorkspace, LayerRecord> reduce_layer_l(const TokenWorkspace& workspace,
                                                      const AttentionView& attention,
                                                      const ReductionConfig& config,
                                                      std::size_t n_discard, std::size_t layer) {
  if (workspace.count(TokenRole::Text) == 0) {
    throw StageError("decoder reduction needs text tokens; the workspace has none");
  }
  const auto visual_rows = workspace.rows_with(TokenRole::Visual);
  if (n_discard > visual_rows.size()) {
    throw StageError("layer " + std::to_string(layer) + ": cannot discard " + std::to_string(n_discard) +
                     " of " + std::to_string(visual_rows.size()) + " visual tokens");
  }
  if (n_discard == 0) return {workspace, empty_record(layer, Variant::L)};

  const auto view = prepare_attention(attention, workspace);
  auto record = begin_record(workspace, visual_rows, Variant::L, layer);
  record.text_read = true;
  const Matrix a_vv = visual_block(view);
  const Matrix a_tv = text_to_visual_block(view);
  const auto scores = score_l(a_vv, a_tv, config.beta);
  record.scores = scores.scores;
  const auto split = select_discarded(scores.scores, n_discard);
  const auto plan = make_plan(correlation_l(a_vv, a_tv, split, config.gamma, view.causal), config);
  auto next = compress_and_drop(workspace, visual_rows, split, plan, config.compression, record);
  return {std::move(next), std::move(record)};
}

nlohmann::json to_json(const RunSummary& summary) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& c : summary.layers) {
    layers.push_back({{"layer", c.layer},
                      {"visual_before", c.visual_before},
                      {"discarded", c.discarded},
                      {"visual_after", c.visual_after}});
  }
  return {{"variant", std::string(to_string(summary.variant))},
          {"initial_visual", summary.initial_visual},
          {"final_visual", summary.final_visual},
          {"final_tokens", summary.final_tokens},
          {"layers", std::move(layers)},
          {"flops", to_json(summary.cost)}};
}

RunResult run(const TokenWorkspace& initial, const ReductionConfig& config,
              const LayerInputProvider& inputs, std::size_t ffn_width) {
  initial.validate();
  const std::size_t initial_visual = initial.count(TokenRole::Visual);
  validate_config(config, initial_visual);
  if (initial.grid_rows != config.grid_rows || initial.grid_cols != config.grid_cols) {
    throw ConfigError("config grid differs from the workload grid");
  }
  if (config.variant == Variant::L && initial.count(TokenRole::Text) == 0) {
    throw StageError("decoder variant needs text tokens; the workload has none");
  }
  const auto schedule = schedule_for(config, initial_visual);
  const bool causal = config.variant == Variant::L;

  RunResult result;
  result.final = initial;
  result.summary.variant = config.variant;
  result.summary.initial_visual = initial_visual;
  for (std::size_t l = 0; l < config.num_layers; ++l) {
    const std::size_t n = schedule.per_layer_discard[l];
    const std::size_t before = result.final.count(TokenRole::Visual);
    std::pair<TokenWorkspace, LayerRecord> step;
    if (n == 0) {
      step = {result.final, empty_record(l, config.variant)};
    } else {
      auto layer_inputs = inputs(l, result.final, causal);
      step = config.variant == Variant::V
                 ? reduce_layer_v(result.final, layer_inputs.attention, layer_inputs.keys, config, n, l)
                 : reduce_layer_l(result.final, layer_inputs.attention, config, n, l);
    }
    result.final = std::move(step.first);
    result.trace.push_back(std::move(step.second));
    result.summary.layers.push_back({l, before, n, result.final.count(TokenRole::Visual)});
  }
  result.summary.final_visual = result.final.count(TokenRole::Visual);
  result.summary.final_tokens = result.final.size();
  const std::size_t width = initial.width();
  result.summary.cost = pipeline_cost(schedule.per_layer_discard, initial_visual,
                                      initial.count(TokenRole::Text), width,
                                      ffn_width ? ffn_width : 4 * width, config.variant);
  return result;
}

LayerInputProvider synthetic_inputs(const SyntheticWorkload& workload) {
  return [&workload](std::size_t layer, const TokenWorkspace& ws, bool causal) {
    const auto proj = layer_projections(workload, layer);
    LayerInputs in;
    in.attention.layout = ws.roles;
    in.attention.causal = causal;
    for (std::size_t h = 0; h < proj.keys.size(); ++h) {
      Matrix keys = project(ws.embeddings, proj.keys[h]);
      const bool tied = proj.queries[h] == proj.keys[h];
      Matrix queries = tied ? keys : project(ws.embeddings, proj.queries[h]);
      in.attention.heads.push_back(softmax_attention(queries, keys, causal));
      in.keys.push_back(std::move(keys));
    }
    return in;
  };
}

RunResult run(const SyntheticWorkload& workload, const ReductionConfig& config, std::size_t ffn_width) {
  return run(workload.initial, config, synthetic_inputs(workload), ffn_width);
}

TokenWorkspace replay_trace(const TokenWorkspace& initial, const ReductionTrace& trace,
                            CompressionMode mode) {
  TokenWorkspace ws = initial;
  for (const auto& rec : trace) {
    if (rec.discarded.empty()) continue;
    const auto visual_rows = ws.rows_with(TokenRole::Visual);
    std::vector<std::size_t> position_of(ws.alive.size(), visual_rows.size());
    for (std::size_t p = 0; p < visual_rows.size(); ++p) position_of[ws.original_index[visual_rows[p]]] = p;

    std::vector<bool> dropped(visual_rows.size(), false);
    for (const auto s : rec.discarded) {
      if (s >= position_of.size() || position_of[s] == visual_rows.size()) {
        throw FormatError("trace discards token " + std::to_string(s) + " which is not an alive visual token");
      }
      dropped[position_of[s]] = true;
    }
    SourceTargetSplit split;
    for (std::size_t p = 0; p < visual_rows.size(); ++p) (dropped[p] ? split.source : split.target).push_back(p);
    std::vector<std::size_t> target_slot(visual_rows.size(), 0);
    for (std::size_t j = 0; j < split.target.size(); ++j) target_slot[split.target[j]] = j;
    std::vector<std::size_t> source_slot(visual_rows.size(), 0);
    for (std::size_t i = 0; i < split.source.size(); ++i) source_slot[split.source[i]] = i;

    CorrelationPlan plan = pruning_plan(split.source.size(), split.target.size());
    for (const auto& a : rec.assignments) {
      const auto i = source_slot[position_of.at(a.source)];
      for (std::size_t k = 0; k < a.targets.size(); ++k) {
        const auto p = position_of.at(a.targets[k]);
        if (p == visual_rows.size() || dropped[p]) throw FormatError("trace assigns to a non-target token");
        plan.targets_of[i].push_back(target_slot[p]);
      }
      plan.weights[i] = a.weights;
    }
    for (std::size_t i = 0; i < plan.targets_of.size(); ++i) {
      for (const auto j : plan.targets_of[i]) plan.sources_of[j].push_back(i);
    }
    LayerRecord scratch;
    ws = compress_and_drop(ws, visual_rows, split, plan, mode, scratch);
  }
  return ws;
}

}  // namespace ficoco
