#include "ficoco/workload.hpp"

#include <fstream>

#include "ficoco/errors.hpp"
#include "ficoco/tensor_io.hpp"

namespace ficoco {

namespace {

using nlohmann::json;

constexpr const char* kFormat = "ficoco-workload";
constexpr int kVersion = 1;

template <typename T>
T required(const json& doc, const char* key) {
  if (!doc.contains(key)) throw FormatError(std::string("manifest is missing '") + key + "'");
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception&) {
    throw FormatError(std::string("manifest field '") + key + "' has the wrong type");
  }
}

}  // namespace

TensorFile to_tensor(const Matrix& m) {
  TensorFile t;
  t.shape = {m.rows(), m.cols()};
  t.payload.reserve(m.data().size());
  for (const double v : m.data()) t.payload.push_back(static_cast<float>(v));
  return t;
}

TensorFile to_tensor(const std::vector<Matrix>& stack) {
  if (stack.empty()) throw ShapeError("cannot write an empty tensor stack");
  TensorFile t;
  t.shape = {stack.size(), stack.front().rows(), stack.front().cols()};
  for (const auto& m : stack) {
    if (m.rows() != t.shape[1] || m.cols() != t.shape[2]) throw ShapeError("stack members differ in shape");
    for (const double v : m.data()) t.payload.push_back(static_cast<float>(v));
  }
  return t;
}

Matrix to_matrix(const TensorFile& t) {
  validate_tensor(t);
  if (t.shape.size() == 1) {
    return Matrix(1, t.shape[0], std::vector<double>(t.payload.begin(), t.payload.end()));
  }
  if (t.shape.size() != 2) throw ShapeError("expected a rank-2 tensor");
  return Matrix(t.shape[0], t.shape[1], std::vector<double>(t.payload.begin(), t.payload.end()));
}

std::vector<Matrix> to_stack(const TensorFile& t) {
  validate_tensor(t);
  if (t.shape.size() == 2) return {to_matrix(t)};
  if (t.shape.size() != 3) throw ShapeError("expected a rank-2 or rank-3 tensor");
  std::vector<Matrix> out;
  const std::size_t block = t.shape[1] * t.shape[2];
  for (std::size_t h = 0; h < t.shape[0]; ++h) {
    const auto first = t.payload.begin() + static_cast<std::ptrdiff_t>(h * block);
    out.emplace_back(t.shape[1], t.shape[2], std::vector<double>(first, first + static_cast<std::ptrdiff_t>(block)));
  }
  return out;
}

json manifest_for(const SyntheticWorkload& workload) {
  const auto& s = workload.spec;
  return {{"format", kFormat},
          {"version", kVersion},
          {"mode", "synthetic"},
          {"num_visual", s.num_visual},
          {"num_text", s.num_text},
          {"width", s.width},
          {"num_layers", s.num_layers},
          {"num_heads", s.num_heads},
          {"has_cls", s.has_cls},
          {"grid_rows", s.grid_rows},
          {"grid_cols", s.grid_cols},
          {"seed", s.seed},
          {"embeddings", "embeddings.npy"},
          {"planted", workload.planted},
          {"planted_from", workload.planted_from}};
}

void save_workload(const std::filesystem::path& directory, const SyntheticWorkload& workload,
                   bool emit_first_attention, bool causal) {
  std::filesystem::create_directories(directory);
  write_tensor(directory / "embeddings.npy", to_tensor(workload.initial.embeddings));
  auto manifest = manifest_for(workload);
  if (emit_first_attention) {
    const auto inputs = synthetic_inputs(workload)(0, workload.initial, causal);
    write_tensor(directory / "attention_layer0.npy", to_tensor(inputs.attention.heads));
    write_tensor(directory / "keys_layer0.npy", to_tensor(inputs.keys));
    manifest["first_layer_attention"] = "attention_layer0.npy";
    manifest["first_layer_keys"] = "keys_layer0.npy";
  }
  std::ofstream out(directory / "manifest.json", std::ios::trunc);
  if (!out) throw IoError("cannot write manifest in " + directory.string());
  out << manifest.dump(2) << '\n';
}

LoadedWorkload load_workload(const std::filesystem::path& directory) {
  const auto manifest_path = directory / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open " + manifest_path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(manifest_path.string() + ": " + e.what());
  }
  if (required<std::string>(doc, "format") != kFormat || required<int>(doc, "version") != kVersion) {
    throw FormatError("unsupported workload manifest format/version");
  }

  SynthSpec spec;
  spec.num_visual = required<std::size_t>(doc, "num_visual");
  spec.num_text = required<std::size_t>(doc, "num_text");
  spec.width = required<std::size_t>(doc, "width");
  spec.num_layers = required<std::size_t>(doc, "num_layers");
  spec.num_heads = doc.value("num_heads", std::size_t{1});
  spec.has_cls = required<bool>(doc, "has_cls");
  spec.grid_rows = required<std::size_t>(doc, "grid_rows");
  spec.grid_cols = required<std::size_t>(doc, "grid_cols");
  spec.seed = doc.value("seed", std::uint64_t{0});

  LoadedWorkload loaded;
  loaded.directory = directory;
  loaded.synthetic = gen_workload(spec);
  auto embeddings = to_matrix(read_tensor(directory / required<std::string>(doc, "embeddings")));
  if (embeddings.rows() != loaded.synthetic.initial.size() || embeddings.cols() != spec.width) {
    throw ShapeError("embeddings tensor does not match the manifest layout");
  }
  loaded.synthetic.initial.embeddings = std::move(embeddings);
  loaded.synthetic.planted = doc.value("planted", std::vector<std::size_t>{});
  loaded.synthetic.planted_from = doc.value("planted_from", std::vector<std::size_t>{});

  const auto mode = required<std::string>(doc, "mode");
  if (mode == "file") {
    loaded.file_mode = true;
    const auto& layers = doc.at("layers");
    if (!layers.is_array() || layers.size() != spec.num_layers) {
      throw FormatError("file-mode manifest needs one 'layers' entry per layer");
    }
    for (const auto& entry : layers) {
      if (entry.is_null()) {
        loaded.layers.emplace_back();
        continue;
      }
      LayerFiles files{required<std::string>(entry, "attention"), std::nullopt};
      if (entry.contains("keys") && !entry.at("keys").is_null()) files.keys = entry.at("keys").get<std::string>();
      loaded.layers.emplace_back(std::move(files));
    }
  } else if (mode != "synthetic") {
    throw FormatError("unknown workload mode '" + mode + "'");
  }
  return loaded;
}

LayerInputProvider file_inputs(const LoadedWorkload& workload) {
  return [&workload](std::size_t layer, const TokenWorkspace& ws, bool causal) {
    if (layer >= workload.layers.size() || !workload.layers[layer]) {
      throw ShapeError("layer " + std::to_string(layer) + " discards tokens but the workload supplies no attention");
    }
    const auto& files = *workload.layers[layer];
    LayerInputs in;
    in.attention.heads = to_stack(read_tensor(workload.directory / files.attention));
    in.attention.layout = ws.roles;
    in.attention.causal = causal;
    for (const auto& h : in.attention.heads) {
      if (h.rows() != ws.size() || h.cols() != ws.size()) {
        throw ShapeError("layer " + std::to_string(layer) + ": attention is " + std::to_string(h.rows()) + "x" +
                         std::to_string(h.cols()) + " but " + std::to_string(ws.size()) + " tokens are alive");
      }
    }
    if (files.keys) {
      in.keys = to_stack(read_tensor(workload.directory / *files.keys));
      for (const auto& k : in.keys) {
        if (k.rows() != ws.size()) throw ShapeError("layer " + std::to_string(layer) + ": key rows differ from alive tokens");
      }
    }
    return in;
  };
}

RunResult run_workload(const LoadedWorkload& workload, const ReductionConfig& config, std::size_t ffn_width) {
  if (workload.file_mode) return run(workload.synthetic.initial, config, file_inputs(workload), ffn_width);
  return run(workload.synthetic, config, ffn_width);
}

}  // namespace ficoco
