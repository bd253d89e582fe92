// Python bindings. Arrays cross as float32; the engine works in double, so
// every input is copied once on the way in and once on the way out.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <optional>
#include <type_traits>
#include <string>
#include <vector>

#include <json.hpp>

#include "ficoco/config.hpp"
#include "ficoco/errors.hpp"
#include "ficoco/flops.hpp"
#include "ficoco/pipeline.hpp"
#include "ficoco/synth.hpp"
#include "ficoco/trace.hpp"

namespace py = pybind11;
using nlohmann::json;
using namespace ficoco;

namespace {

json to_json_doc(const py::handle& obj) {
  const auto dumps = py::module_::import("json").attr("dumps");
  try {
    return json::parse(dumps(obj).cast<std::string>());
  } catch (const py::error_already_set& e) {
    throw ConfigError(std::string("mapping is not JSON-serialisable: ") + e.what());
  }
}

py::object to_py(const json& doc) { return py::module_::import("json").attr("loads")(doc.dump()); }

using F32 = py::array_t<float, py::array::c_style>;

F32 checked(const py::array& a, const std::string& name, std::initializer_list<py::ssize_t> ranks) {
  if (!a.dtype().is(py::dtype::of<float>())) {
    throw DtypeError(name + " must be float32, got " + py::str(a.dtype()).cast<std::string>());
  }
  if (std::find(ranks.begin(), ranks.end(), a.ndim()) == ranks.end()) {
    throw ShapeError(name + " has rank " + std::to_string(a.ndim()));
  }
  return F32::ensure(a);  // contiguous copy only when strides demand it
}

Matrix matrix_of(const F32& a, py::ssize_t offset, py::ssize_t rows, py::ssize_t cols) {
  Matrix m(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
  const float* p = a.data() + offset;
  for (auto& v : m.data()) v = *p++;
  return m;
}

Matrix to_matrix(const py::array& arr, const std::string& name) {
  const auto a = checked(arr, name, {2});
  return matrix_of(a, 0, a.shape(0), a.shape(1));
}

std::vector<Matrix> to_stack(const py::array& arr, const std::string& name) {
  const auto a = checked(arr, name, {2, 3});
  if (a.ndim() == 2) return {matrix_of(a, 0, a.shape(0), a.shape(1))};
  std::vector<Matrix> out;
  for (py::ssize_t h = 0; h < a.shape(0); ++h) out.push_back(matrix_of(a, h * a.shape(1) * a.shape(2), a.shape(1), a.shape(2)));
  return out;
}

py::array_t<float> to_array(const Matrix& m) {
  py::array_t<float> out({static_cast<py::ssize_t>(m.rows()), static_cast<py::ssize_t>(m.cols())});
  float* p = out.mutable_data();
  for (const double v : m.data()) *p++ = static_cast<float>(v);
  return out;
}

ReductionConfig config_of(const py::object& config) {
  if (config.is_none()) return ReductionConfig::defaults(Variant::V);
  return config_from_json(to_json_doc(config));
}

// Same fallbacks as the command-line tool: grid, depth and seed come from the
// config unless the mapping overrides them.
SynthSpec spec_of(const py::dict& synth, const ReductionConfig& config) {
  json doc = to_json_doc(synth);
  SynthSpec s;
  s.grid_rows = doc.value("grid_rows", config.grid_rows);
  s.grid_cols = doc.value("grid_cols", config.grid_cols);
  s.num_visual = doc.value("num_visual", s.grid_rows * s.grid_cols);
  s.num_layers = doc.value("num_layers", config.num_layers);
  s.seed = doc.value("seed", config.seed);
  s.num_text = doc.value("num_text", std::size_t{config.variant == Variant::L ? 32u : 0u});
  s.width = doc.value("width", s.width);
  s.num_heads = doc.value("num_heads", s.num_heads);
  s.has_cls = doc.value("has_cls", s.has_cls);
  static const char* known[] = {"grid_rows", "grid_cols", "num_visual", "num_layers", "seed",
                                "num_text",  "width",     "num_heads",  "has_cls"};
  for (const auto& [k, _] : doc.items()) {
    if (std::find(std::begin(known), std::end(known), k) == std::end(known)) {
      throw ConfigError("unknown synth key '" + k + "'");
    }
  }
  return s;
}

py::tuple bound_run(const py::object& embeddings, const py::object& attention, const py::object& keys,
                    const py::object& synth, const py::object& config_obj, std::size_t ffn_width, bool has_cls,
                    std::size_t num_text) {
  const auto config = config_of(config_obj);
  RunResult result;

  if (!synth.is_none()) {
    if (!attention.is_none() || !keys.is_none()) throw ConfigError("give attention or synth, not both");
    auto workload = gen_workload(spec_of(synth.cast<py::dict>(), config));
    if (!embeddings.is_none()) {
      auto x = to_matrix(embeddings.cast<py::array>(), "embeddings");
      if (x.rows() != workload.initial.size() || x.cols() != workload.initial.width()) {
        throw ShapeError("embeddings do not match the synthetic layout");
      }
      workload.initial.embeddings = std::move(x);
    }
    py::gil_scoped_release release;
    result = run(workload, config, ffn_width);
  } else {
    if (embeddings.is_none()) throw ConfigError("embeddings are required without a synth spec");
    const auto initial = TokenWorkspace::create(to_matrix(embeddings.cast<py::array>(), "embeddings"), has_cls,
                                                config.grid_rows * config.grid_cols, num_text, config.grid_rows,
                                                config.grid_cols);
    std::vector<std::optional<std::vector<Matrix>>> maps, key_maps;
    auto gather = [](const py::object& list, const char* what, auto& into) {
      if (list.is_none()) return;
      for (const auto& item : list.cast<py::list>()) {
        const std::string name = std::string(what) + "[" + std::to_string(into.size()) + "]";
        if (item.is_none()) {
          into.emplace_back();
        } else if (!py::isinstance<py::array>(item)) {
          throw DtypeError(name + " must be a float32 numpy array");
        } else {
          into.emplace_back(to_stack(py::reinterpret_borrow<py::array>(item), name));
        }
      }
    };
    gather(attention, "attention", maps);
    gather(keys, "keys", key_maps);

    LayerInputProvider provider = [&](std::size_t layer, const TokenWorkspace& ws, bool causal) {
      if (layer >= maps.size() || !maps[layer]) {
        throw ShapeError("layer " + std::to_string(layer) + " discards tokens but no attention was given");
      }
      LayerInputs in;
      in.attention = {*maps[layer], ws.roles, causal};
      for (const auto& h : in.attention.heads) {
        if (h.rows() != ws.size() || h.cols() != ws.size()) {
          throw ShapeError("attention[" + std::to_string(layer) + "] is " + std::to_string(h.rows()) + "x" +
                           std::to_string(h.cols()) + " but " + std::to_string(ws.size()) + " tokens are alive");
        }
      }
      if (layer < key_maps.size() && key_maps[layer]) {
        in.keys = *key_maps[layer];
        for (const auto& k : in.keys) {
          if (k.rows() != ws.size()) throw ShapeError("keys[" + std::to_string(layer) + "] rows differ from alive tokens");
        }
      }
      return in;
    };
    py::gil_scoped_release release;
    result = run(initial, config, provider, ffn_width);
  }
  return py::make_tuple(to_array(result.final.embeddings), to_py(trace_to_json(result.trace)),
                        to_py(to_json(result.summary)));
}

}  // namespace

PYBIND11_MODULE(_ficoco, m) {
  m.doc() = "Filter-correlate-compress token reduction engine.";
  m.attr("__version__") = FICOCO_VERSION;

  // Translators run newest first, so the base class goes in before the others.
  auto& base = py::register_exception<Error>(m, "FicocoError");
  base.attr("error_class") = "error";
  const auto add = [&](auto tag, const char* name, const char* error_class) {
    using T = typename decltype(tag)::type;
    py::register_exception<T>(m, name, base.ptr()).attr("error_class") = error_class;
  };
  add(std::type_identity<ConfigError>{}, "ConfigError", "config");
  add(std::type_identity<FormatError>{}, "FormatError", "format");
  add(std::type_identity<DtypeError>{}, "DtypeError", "dtype");
  add(std::type_identity<ShapeError>{}, "ShapeError", "shape");
  add(std::type_identity<StageError>{}, "StageError", "stage");
  add(std::type_identity<AbsentClsError>{}, "AbsentClsError", "absent_cls");
  add(std::type_identity<OverflowError>{}, "CountOverflowError", "overflow");
  add(std::type_identity<IoError>{}, "IoError", "io");

  m.def("run", &bound_run, py::arg("embeddings") = py::none(), py::arg("attention") = py::none(),
        py::arg("keys") = py::none(), py::kw_only(), py::arg("synth") = py::none(), py::arg("config") = py::none(),
        py::arg("ffn_width") = 0, py::arg("has_cls") = true, py::arg("num_text") = 0,
        "Runs the reduction schedule; returns (reduced float32 embeddings, trace, summary).");

  m.def(
      "plan_schedule",
      [](std::size_t initial_visual, std::optional<std::size_t> keep_budget,
         std::optional<std::vector<std::size_t>> per_layer_discard, std::size_t start_layer, std::size_t num_layers) {
        if (keep_budget.has_value() == per_layer_discard.has_value()) {
          throw ConfigError("give exactly one of keep_budget and per_layer_discard");
        }
        const auto s = keep_budget ? plan_schedule(initial_visual, *keep_budget, start_layer, num_layers)
                                   : plan_schedule(initial_visual, *per_layer_discard, start_layer, num_layers);
        return s.per_layer_discard;
      },
      py::arg("initial_visual"), py::arg("keep_budget") = py::none(), py::kw_only(),
      py::arg("per_layer_discard") = py::none(), py::arg("start_layer") = 12, py::arg("num_layers") = 24,
      "Visual tokens discarded at each layer.");

  m.def(
      "pipeline_cost",
      [](const std::vector<std::size_t>& per_layer_discard, std::uint64_t initial_visual, std::uint64_t width,
         std::optional<std::uint64_t> ffn_width, std::uint64_t text, const std::string& variant) {
        if (variant != "V" && variant != "L") throw ConfigError("variant must be 'V' or 'L'");
        const auto cost = pipeline_cost(per_layer_discard, initial_visual, text, width, ffn_width.value_or(4 * width),
                                        variant == "L" ? Variant::L : Variant::V);
        return to_py(to_json(cost));
      },
      py::arg("per_layer_discard"), py::arg("initial_visual"), py::arg("width"), py::arg("ffn_width") = py::none(),
      py::arg("text") = 0, py::arg("variant") = "V", "FLOP totals and closed-form warnings along a schedule.");
}
