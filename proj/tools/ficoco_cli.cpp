// ficoco: batch reduction runs, FLOPs reports, workload synthesis and trace
// inspection. Errors go to stderr as {"error": {"class", "message"}}.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ficoco/config.hpp"
#include "ficoco/errors.hpp"
#include "ficoco/flops.hpp"
#include "ficoco/pipeline.hpp"
#include "ficoco/synth.hpp"
#include "ficoco/trace.hpp"
#include "ficoco/workload.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ficoco;

namespace {

// Bad flags or arguments that parse but make no sense (exit 2).
class UsageError : public Error {
 public:
  explicit UsageError(const std::string& message) : Error("usage", message) {}
};

int exit_code_for(const std::string& error_class) {
  return error_class == "config" || error_class == "usage" ? 2 : 1;
}

int report(const std::string& error_class, const std::string& message) {
  std::cerr << json{{"error", {{"class", error_class}, {"message", message}}}}.dump() << '\n';
  return exit_code_for(error_class);
}

void write_json(const fs::path& path, const json& doc) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

struct SynthArgs {
  std::optional<std::size_t> grid_rows, grid_cols, layers;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> text;
  std::size_t width = 64;
  std::size_t heads = 4;
  bool no_cls = false;
  std::size_t plant = 0;
  double plant_sigma = 0.0;
  std::uint64_t plant_seed = 1;

  void attach(CLI::App* cmd) {
    cmd->add_option("--seed", seed, "workload seed");
    cmd->add_option("--grid-rows", grid_rows, "visual grid rows");
    cmd->add_option("--grid-cols", grid_cols, "visual grid columns");
    cmd->add_option("--layers", layers, "layer count");
    cmd->add_option("--text", text, "text tokens appended after the visual ones");
    cmd->add_option("--width", width, "embedding width")->check(CLI::PositiveNumber);
    cmd->add_option("--heads", heads, "attention heads")->check(CLI::PositiveNumber);
    cmd->add_flag("--no-cls", no_cls, "omit the CLS token");
    cmd->add_option("--plant", plant, "visual tokens replaced by copies of others");
    cmd->add_option("--plant-sigma", plant_sigma, "noise added to planted copies")->check(CLI::NonNegativeNumber);
    cmd->add_option("--plant-seed", plant_seed, "seed for choosing planted tokens");
  }

  // Unset fields fall back to the config (reduce) or to the spec defaults.
  SynthSpec spec(const std::optional<ReductionConfig>& config) const {
    SynthSpec s;
    if (config) {
      s.grid_rows = config->grid_rows;
      s.grid_cols = config->grid_cols;
      s.num_layers = config->num_layers;
      s.seed = config->seed;
      s.num_text = config->variant == Variant::L ? 32 : 0;
    }
    if (grid_rows) s.grid_rows = *grid_rows;
    if (grid_cols) s.grid_cols = *grid_cols;
    s.num_visual = s.grid_rows * s.grid_cols;
    if (layers) s.num_layers = *layers;
    if (seed) s.seed = *seed;
    if (text) s.num_text = *text;
    s.width = width;
    s.num_heads = heads;
    s.has_cls = !no_cls;
    return s;
  }

  SyntheticWorkload build(const std::optional<ReductionConfig>& config) const {
    auto w = gen_workload(spec(config));
    if (plant > 0) w = plant_redundancy(std::move(w), plant, plant_sigma, plant_seed);
    return w;
  }
};

// ---- reduce ----

struct ReduceArgs {
  std::optional<std::string> config_path;
  std::string variant = "V";
  std::optional<std::string> workload;
  bool synth = false;
  SynthArgs synth_args;
  std::string out;
  std::size_t ffn_width = 0;
};

int cmd_reduce(const ReduceArgs& a, bool as_json) {
  if (a.variant != "V" && a.variant != "L") throw UsageError("--variant must be V or L");
  if (a.workload.has_value() == a.synth) throw UsageError("give exactly one of --workload and --synth");
  const auto config = a.config_path ? read_config(*a.config_path)
                                    : ReductionConfig::defaults(a.variant == "L" ? Variant::L : Variant::V);

  RunResult result;
  if (a.synth) {
    result = run(a.synth_args.build(config), config, a.ffn_width);
  } else {
    result = run_workload(load_workload(*a.workload), config, a.ffn_width);
  }

  const fs::path out(a.out);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create " + out.string() + ": " + ec.message());
  write_tensor(out / "final_embeddings.npy", to_tensor(result.final.embeddings));
  write_trace(out / "trace.json", result.trace);
  const auto summary = to_json(result.summary);
  write_json(out / "summary.json", summary);

  if (as_json) {
    std::cout << summary.dump() << '\n';
  } else {
    const auto& s = result.summary;
    std::cout << "variant=" << to_string(s.variant) << " initial_visual=" << s.initial_visual
              << " final_visual=" << s.final_visual << " final_tokens=" << s.final_tokens << '\n';
    std::cout << "flops_before=" << to_string(s.cost.total_before) << " flops_after=" << to_string(s.cost.total_after)
              << " overhead=" << to_string(s.cost.total_overhead) << " reduction=" << s.cost.percent_reduction
              << "%\n";
    std::cout << "wrote " << (out / "final_embeddings.npy").string() << ", trace.json, summary.json\n";
  }
  return 0;
}

// ---- flops ----

std::uint64_t param(const json& doc, std::initializer_list<const char*> keys, std::optional<std::uint64_t> fallback) {
  for (const char* k : keys) {
    if (!doc.contains(k)) continue;
    const auto& v = doc.at(k);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      throw ConfigError(std::string("flops parameter '") + k + "' must be a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }
  if (!fallback) throw ConfigError(std::string("flops parameters need '") + *keys.begin() + "'");
  return *fallback;
}

json parse_params(const std::string& text) {
  std::string body = text;
  if (!text.empty() && text.front() == '@') {
    std::ifstream in(text.substr(1));
    if (!in) throw ConfigError("cannot open " + text.substr(1));
    std::stringstream ss;
    ss << in.rdbuf();
    body = ss.str();
  }
  try {
    auto doc = json::parse(body);
    if (!doc.is_object()) throw ConfigError("flops parameters must be a JSON object");
    return doc;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("flops parameters: ") + e.what());
  }
}

int cmd_flops(const std::string& params_text, bool as_json) {
  const auto p = parse_params(params_text);
  static const std::vector<std::string> known{"N", "visual", "Ns", "discarded", "D", "width", "H",
                                              "ffn_width", "M", "text", "variant", "schedule"};
  for (const auto& [k, _] : p.items()) {
    if (std::find(known.begin(), known.end(), k) == known.end()) throw ConfigError("unknown flops parameter '" + k + "'");
  }
  const std::string vname = p.value("variant", std::string("V"));
  if (vname != "V" && vname != "L") throw ConfigError("variant must be \"V\" or \"L\"");
  const Variant variant = vname == "L" ? Variant::L : Variant::V;
  const auto visual = param(p, {"N", "visual"}, std::nullopt);
  const auto width = param(p, {"D", "width"}, std::nullopt);
  const auto ffn = param(p, {"H", "ffn_width"}, 4 * width);
  const auto text = param(p, {"M", "text"}, 0);

  std::vector<std::size_t> schedule;
  if (p.contains("schedule")) {
    if (p.contains("Ns") || p.contains("discarded")) throw ConfigError("give either 'schedule' or 'Ns', not both");
    try {
      schedule = p.at("schedule").get<std::vector<std::size_t>>();
    } catch (const json::exception&) {
      throw ConfigError("'schedule' must be an array of non-negative integers");
    }
  } else {
    schedule = {static_cast<std::size_t>(param(p, {"Ns", "discarded"}, std::nullopt))};
  }

  const auto cost = pipeline_cost(schedule, visual, text, width, ffn, variant);
  if (as_json) {
    auto doc = to_json(cost);
    doc["variant"] = vname;
    std::cout << doc.dump() << '\n';
    return 0;
  }
  std::cout << "before=" << to_string(cost.total_before) << " after=" << to_string(cost.total_after)
            << " delta=" << to_string(cost.total_before - cost.total_after)
            << " overhead=" << to_string(cost.total_overhead) << " reduction=" << cost.percent_reduction << "%\n";
  for (const auto& w : cost.warnings) {
    std::cout << "warning: closed_form_mismatch layer=" << w.layer << " true_delta=" << to_string(w.true_delta)
              << " printed_delta=" << to_string(w.printed_delta) << " (" << w.term << ")\n";
  }
  return 0;
}

// ---- synth ----

int cmd_synth(const SynthArgs& a, const std::string& out, bool emit_attention, bool causal, bool as_json) {
  const auto w = a.build(std::nullopt);
  save_workload(out, w, emit_attention, causal);
  if (as_json) {
    std::ifstream in(fs::path(out) / "manifest.json");
    std::cout << json::parse(in).dump() << '\n';
  } else {
    std::cout << "wrote " << (fs::path(out) / "manifest.json").string() << " (" << w.initial.size() << " tokens, width "
              << w.initial.width() << ", seed " << w.spec.seed << ")\n";
  }
  return 0;
}

// ---- trace ----

struct GridLayout {
  std::size_t rows = 0, cols = 0;
  std::size_t first = 0;  // original index of visual token 0
};

// The first non-empty record lists every visual token, since nothing was
// discarded before it.
GridLayout infer_layout(const ReductionTrace& trace, std::optional<std::size_t> rows, std::optional<std::size_t> cols) {
  const auto it = std::find_if(trace.begin(), trace.end(), [](const LayerRecord& r) { return !r.tokens.empty(); });
  if (it == trace.end()) throw UsageError("trace has no reducing layer, so there is no grid to render");
  GridLayout g;
  g.first = *std::min_element(it->tokens.begin(), it->tokens.end());
  const std::size_t n = it->tokens.size();
  if (rows && cols) {
    g.rows = *rows;
    g.cols = *cols;
  } else if (rows || cols) {
    g.rows = rows ? *rows : n / *cols;
    g.cols = cols ? *cols : n / *rows;
  } else {
    g.rows = g.cols = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
  }
  if (g.rows * g.cols != n) {
    throw UsageError("trace has " + std::to_string(n) + " visual tokens; pass --grid-rows/--grid-cols that cover them");
  }
  return g;
}

enum Cell : char { Alive = '#', Discarded = 'x', Dead = '.' };

const char* cell_name(char c) { return c == Alive ? "alive" : c == Discarded ? "discarded" : "dead"; }

json token_report(const ReductionTrace& trace, const GridLayout& g, std::size_t token) {
  const std::size_t last = g.first + g.rows * g.cols - 1;
  if (token < g.first || token > last) {
    throw UsageError("token " + std::to_string(token) + " is not a visual token; valid range is [" +
                     std::to_string(g.first) + ", " + std::to_string(last) + "]");
  }
  const std::size_t k = token - g.first;
  json doc{{"token", token}, {"row", k / g.cols}, {"col", k % g.cols}, {"discarded_at", nullptr}};
  json received = json::array();
  for (const auto& r : trace) {
    for (const auto& [t, mass] : r.received_mass) {
      if (t == token) received.push_back({{"layer", r.layer}, {"mass", mass}});
    }
    for (const auto& a : r.assignments) {
      if (a.source != token) continue;
      doc["discarded_at"] = r.layer;
      json targets = json::array();
      double sum = 0.0;
      for (std::size_t i = 0; i < a.targets.size(); ++i) {
        const std::size_t tk = a.targets[i] - g.first;
        targets.push_back({{"token", a.targets[i]}, {"row", tk / g.cols}, {"col", tk % g.cols}, {"weight", a.weights[i]}});
        sum += a.weights[i];
      }
      doc["targets"] = targets;
      doc["alpha_sum"] = sum;
    }
  }
  doc["received"] = received;
  return doc;
}

void print_token(const json& t) {
  std::cout << "token " << t["token"] << " (row " << t["row"] << ", col " << t["col"] << "): ";
  if (t["discarded_at"].is_null()) {
    std::cout << "alive at the end\n";
  } else if (t["targets"].empty()) {
    std::cout << "discarded at layer " << t["discarded_at"] << ", pruned (no targets)\n";
  } else {
    std::cout << "discarded at layer " << t["discarded_at"] << " into " << t["targets"].size() << " targets\n";
    for (const auto& x : t["targets"]) {
      std::cout << "  -> " << x["token"] << " (row " << x["row"] << ", col " << x["col"] << ") alpha=" << x["weight"].get<double>()
                << '\n';
    }
    std::cout << "  alpha_sum=" << t["alpha_sum"].get<double>() << '\n';
  }
  for (const auto& x : t["received"]) {
    std::cout << "  absorbed mass " << x["mass"].get<double>() << " at layer " << x["layer"] << '\n';
  }
}

int cmd_trace(const std::string& path, const std::string& format, std::optional<std::size_t> token,
              std::optional<std::size_t> rows, std::optional<std::size_t> cols, bool as_json) {
  const auto trace = read_trace(path);
  const auto g = infer_layout(trace, rows, cols);
  std::vector<char> state(g.rows * g.cols, Alive);

  json layers = json::array();
  if (format == "csv" && !as_json) std::cout << "layer,token,row,col,state\n";
  for (const auto& r : trace) {
    for (auto& c : state) {
      if (c == Discarded) c = Dead;
    }
    for (const auto d : r.discarded) {
      if (d < g.first || d - g.first >= state.size()) throw FormatError("trace discards a token outside the grid");
      state[d - g.first] = Discarded;
    }
    const auto dead = static_cast<std::size_t>(std::count(state.begin(), state.end(), Dead));
    const std::size_t gone = dead + r.discarded.size();
    if (as_json) {
      json grid = json::array();
      for (std::size_t i = 0; i < g.rows; ++i) grid.push_back(std::string(&state[i * g.cols], g.cols));
      layers.push_back({{"layer", r.layer}, {"discarded", r.discarded.size()}, {"dead", gone},
                        {"alive", state.size() - gone}, {"grid", grid}});
    } else if (format == "grid") {
      std::cout << "layer " << r.layer << ": alive " << state.size() - gone << " discarded " << r.discarded.size()
                << " dead " << gone << '\n';
      for (std::size_t i = 0; i < g.rows; ++i) std::cout << std::string(&state[i * g.cols], g.cols) << '\n';
    } else {
      for (std::size_t k = 0; k < state.size(); ++k) {
        std::cout << r.layer << ',' << g.first + k << ',' << k / g.cols << ',' << k % g.cols << ','
                  << cell_name(state[k]) << '\n';
      }
    }
  }

  std::optional<json> report;
  if (token) report = token_report(trace, g, *token);
  if (as_json) {
    json doc{{"grid_rows", g.rows}, {"grid_cols", g.cols}, {"first_visual", g.first}, {"layers", layers}};
    if (report) doc["token"] = *report;
    std::cout << doc.dump() << '\n';
  } else if (report) {
    print_token(*report);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"filter-correlate-compress token reduction"};
  app.set_version_flag("--version", FICOCO_VERSION);
  app.require_subcommand(1);
  bool as_json = false;
  app.add_flag("--json", as_json, "machine-readable JSON on stdout");

  ReduceArgs reduce;
  auto* r = app.add_subcommand("reduce", "run the reduction schedule over a workload");
  r->add_option("--config", reduce.config_path, "config JSON (defaults when omitted)");
  r->add_option("--variant", reduce.variant, "V or L, used without --config");
  r->add_option("--workload", reduce.workload, "workload directory with manifest.json");
  r->add_flag("--synth", reduce.synth, "generate the workload from the seed and grid in the config");
  reduce.synth_args.attach(r);
  r->add_option("--out", reduce.out, "output directory")->required();
  r->add_option("--ffn-width", reduce.ffn_width, "FFN hidden width for the cost model (0 = 4 x width)");
  r->add_flag("--json", as_json, "print the summary as JSON");

  std::string params;
  auto* f = app.add_subcommand("flops", "cost model for one layer or a whole schedule");
  f->add_option("--params", params, "JSON object or @file: N, Ns or schedule, D, H, M, variant")->required();
  f->add_flag("--json", as_json, "print the report as JSON");

  SynthArgs synth;
  std::string synth_out;
  bool emit_attention = false, causal = false;
  auto* s = app.add_subcommand("synth", "write a seeded synthetic workload");
  synth.attach(s);
  s->add_option("--out", synth_out, "output directory")->required();
  s->add_flag("--emit-attention", emit_attention, "also write layer-0 attention and keys");
  s->add_flag("--causal", causal, "causal mask for the emitted attention");
  s->add_flag("--json", as_json, "print the manifest as JSON");

  std::string trace_path, format = "grid";
  std::optional<std::size_t> token, rows, cols;
  auto* t = app.add_subcommand("trace", "render a reduction trace");
  t->add_option("--trace", trace_path, "trace.json from reduce")->required();
  t->add_option("--format", format, "grid or csv")->check(CLI::IsMember({"grid", "csv"}));
  t->add_option("--token", token, "original index of a visual token to follow");
  t->add_option("--grid-rows", rows, "grid rows (inferred for square grids)");
  t->add_option("--grid-cols", cols, "grid columns");
  t->add_flag("--json", as_json, "print layers and token report as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report("usage", e.what());
  }

  try {
    if (*r) {
      if (reduce.synth_args.grid_rows || reduce.synth_args.grid_cols || reduce.synth_args.layers) {
        throw UsageError("reduce takes the grid and depth from the config; --grid-rows/--grid-cols/--layers are synth-only");
      }
      return cmd_reduce(reduce, as_json);
    }
    if (*f) return cmd_flops(params, as_json);
    if (*s) return cmd_synth(synth, synth_out, emit_attention, causal, as_json);
    return cmd_trace(trace_path, format, token, rows, cols, as_json);
  } catch (const Error& e) {
    return report(e.error_class(), e.what());
  } catch (const std::exception& e) {
    return report("internal", e.what());
  }
}
