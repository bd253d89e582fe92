#include "ficoco/config.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <set>
#include <string>

#include "ficoco/errors.hpp"

namespace ficoco {

namespace {

using nlohmann::json;

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "variant",     "lambda",          "beta",        "gamma",
      "epsilon",     "window_size",     "penalty_coefficient",
      "start_layer", "num_layers",      "per_layer_discard",
      "keep_budget", "grid_rows",       "grid_cols",   "seed",
      "cls_mode",    "local_penalty",   "replaceable_read",
      "assignment",  "fixed_k",         "compression"};
  return keys;
}

double get_real(const json& doc, const char* key, double fallback) {
  if (!doc.contains(key)) return fallback;
  const auto& v = doc.at(key);
  if (!v.is_number()) throw ConfigError(std::string(key) + " must be a number");
  return v.get<double>();
}

std::size_t get_count(const json& doc, const char* key, std::size_t fallback) {
  if (!doc.contains(key)) return fallback;
  const auto& v = doc.at(key);
  if (!v.is_number_unsigned()) {
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return v.get<std::size_t>();
    throw ConfigError(std::string(key) + " must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

template <typename Enum, std::size_t N>
Enum get_enum(const json& doc, const char* key, Enum fallback,
              const std::array<std::pair<const char*, Enum>, N>& names) {
  if (!doc.contains(key)) return fallback;
  const auto& v = doc.at(key);
  if (!v.is_string()) throw ConfigError(std::string(key) + " must be a string");
  const auto text = v.get<std::string>();
  for (const auto& [name, value] : names) {
    if (text == name) return value;
  }
  throw ConfigError(std::string(key) + ": unknown value '" + text + "'");
}

template <typename Enum, std::size_t N>
const char* enum_name(Enum value, const std::array<std::pair<const char*, Enum>, N>& names) {
  for (const auto& [name, v] : names) {
    if (v == value) return name;
  }
  return "?";
}

constexpr std::array<std::pair<const char*, Variant>, 2> kVariants{{{"V", Variant::V}, {"L", Variant::L}}};
constexpr std::array<std::pair<const char*, ClsMode>, 2> kClsModes{
    {{"cls_row", ClsMode::ClsRow}, {"key_mean_equivalent", ClsMode::KeyMeanEquivalent}}};
constexpr std::array<std::pair<const char*, ReplaceableRead>, 2> kReads{
    {{"row", ReplaceableRead::RowMean}, {"column", ReplaceableRead::ColumnMean}}};
constexpr std::array<std::pair<const char*, AssignmentMode>, 3> kAssignments{
    {{"adaptive", AssignmentMode::Adaptive},
     {"fixed_k", AssignmentMode::FixedK},
     {"many_to_one", AssignmentMode::ManyToOne}}};
constexpr std::array<std::pair<const char*, CompressionMode>, 2> kCompressions{
    {{"weighted", CompressionMode::Weighted}, {"average", CompressionMode::Average}}};

void check_unit(double value, const char* name) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw ConfigError(std::string(name) + " must lie in [0, 1], got " + std::to_string(value));
  }
}

}  // namespace

ReductionConfig ReductionConfig::defaults(Variant variant) {
  ReductionConfig config;
  config.variant = variant;
  if (variant == Variant::L) {
    config.start_layer = 4;
    config.num_layers = 32;
  }
  return config;
}

void validate_config(const ReductionConfig& config, std::optional<std::size_t> initial_visual) {
  check_unit(config.lambda, "lambda");
  check_unit(config.beta, "beta");
  check_unit(config.gamma, "gamma");
  if (!(config.epsilon > 0.0 && config.epsilon <= 1.0)) {
    throw ConfigError("epsilon must lie in (0, 1], got " + std::to_string(config.epsilon));
  }
  if (config.window_size == 0) throw ConfigError("window_size must be positive");
  if (!(config.penalty_coefficient > 0.0) || !std::isfinite(config.penalty_coefficient)) {
    throw ConfigError("penalty_coefficient must be a positive real");
  }
  if (config.num_layers == 0) throw ConfigError("num_layers must be positive");
  if (config.grid_rows == 0 || config.grid_cols == 0) {
    throw ConfigError("grid_rows and grid_cols must be positive");
  }
  if (config.per_layer_discard.has_value() == config.keep_budget.has_value()) {
    throw ConfigError("exactly one of per_layer_discard and keep_budget must be set");
  }
  if (config.per_layer_discard) {
    const auto& v = *config.per_layer_discard;
    if (v.size() != config.num_layers) {
      throw ConfigError("per_layer_discard has " + std::to_string(v.size()) +
                        " entries but num_layers is " + std::to_string(config.num_layers));
    }
    for (std::size_t l = 0; l < v.size() && l < config.start_layer; ++l) {
      if (v[l] != 0) {
        throw ConfigError("per_layer_discard[" + std::to_string(l) +
                          "] is non-zero before start_layer " + std::to_string(config.start_layer));
      }
    }
  }
  if (initial_visual) {
    if (config.grid_rows * config.grid_cols != *initial_visual) {
      throw ConfigError("grid " + std::to_string(config.grid_rows) + "x" +
                        std::to_string(config.grid_cols) + " does not cover " +
                        std::to_string(*initial_visual) + " visual tokens");
    }
    if (config.keep_budget && *config.keep_budget > *initial_visual) {
      throw ConfigError("keep_budget exceeds the initial visual token count");
    }
  }
}

ReductionConfig config_from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, _] : doc.items()) {
    if (!known_keys().contains(key)) throw ConfigError("unknown config key '" + key + "'");
  }

  const auto variant = get_enum(doc, "variant", Variant::V, kVariants);
  auto config = ReductionConfig::defaults(variant);
  config.lambda = get_real(doc, "lambda", config.lambda);
  config.beta = get_real(doc, "beta", config.beta);
  config.gamma = get_real(doc, "gamma", config.gamma);
  config.epsilon = get_real(doc, "epsilon", config.epsilon);
  config.window_size = get_count(doc, "window_size", config.window_size);
  config.penalty_coefficient = get_real(doc, "penalty_coefficient", config.penalty_coefficient);
  config.start_layer = get_count(doc, "start_layer", config.start_layer);
  config.num_layers = get_count(doc, "num_layers", config.num_layers);
  config.grid_rows = get_count(doc, "grid_rows", config.grid_rows);
  config.grid_cols = get_count(doc, "grid_cols", config.grid_cols);
  if (doc.contains("seed")) {
    const auto& s = doc.at("seed");
    if (!s.is_number_unsigned()) throw ConfigError("seed must be an unsigned 64-bit integer");
    config.seed = s.get<std::uint64_t>();
  }
  config.cls_mode = get_enum(doc, "cls_mode", config.cls_mode, kClsModes);
  if (doc.contains("local_penalty")) {
    if (!doc.at("local_penalty").is_boolean()) throw ConfigError("local_penalty must be a boolean");
    config.local_penalty = doc.at("local_penalty").get<bool>();
  }
  config.replaceable_read = get_enum(doc, "replaceable_read", config.replaceable_read, kReads);
  config.assignment = get_enum(doc, "assignment", config.assignment, kAssignments);
  config.fixed_k = get_count(doc, "fixed_k", config.fixed_k);
  config.compression = get_enum(doc, "compression", config.compression, kCompressions);

  const bool has_vector = doc.contains("per_layer_discard");
  const bool has_budget = doc.contains("keep_budget");
  if (has_vector && has_budget) {
    throw ConfigError("per_layer_discard and keep_budget are mutually exclusive");
  }
  if (has_vector) {
    const auto& v = doc.at("per_layer_discard");
    if (!v.is_array()) throw ConfigError("per_layer_discard must be an array");
    std::vector<std::size_t> discards;
    for (const auto& item : v) {
      if (!item.is_number_unsigned()) {
        if (!(item.is_number_integer() && item.get<std::int64_t>() >= 0)) {
          throw ConfigError("per_layer_discard entries must be non-negative integers");
        }
      }
      discards.push_back(item.get<std::size_t>());
    }
    config.per_layer_discard = std::move(discards);
    config.keep_budget.reset();
  } else if (has_budget) {
    config.keep_budget = get_count(doc, "keep_budget", 0);
  }

  validate_config(config);
  return config;
}

json config_to_json(const ReductionConfig& config) {
  json doc;
  doc["variant"] = enum_name(config.variant, kVariants);
  doc["lambda"] = config.lambda;
  doc["beta"] = config.beta;
  doc["gamma"] = config.gamma;
  doc["epsilon"] = config.epsilon;
  doc["window_size"] = config.window_size;
  doc["penalty_coefficient"] = config.penalty_coefficient;
  doc["start_layer"] = config.start_layer;
  doc["num_layers"] = config.num_layers;
  if (config.per_layer_discard) doc["per_layer_discard"] = *config.per_layer_discard;
  if (config.keep_budget) doc["keep_budget"] = *config.keep_budget;
  doc["grid_rows"] = config.grid_rows;
  doc["grid_cols"] = config.grid_cols;
  doc["seed"] = config.seed;
  doc["cls_mode"] = enum_name(config.cls_mode, kClsModes);
  doc["local_penalty"] = config.local_penalty;
  doc["replaceable_read"] = enum_name(config.replaceable_read, kReads);
  doc["assignment"] = enum_name(config.assignment, kAssignments);
  doc["fixed_k"] = config.fixed_k;
  doc["compression"] = enum_name(config.compression, kCompressions);
  return doc;
}

ReductionConfig read_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return config_from_json(doc);
}

void write_config(const std::filesystem::path& path, const ReductionConfig& config) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << config_to_json(config).dump(2) << '\n';
}

}  // namespace ficoco
