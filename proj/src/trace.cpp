#include "ficoco/trace.hpp"

#include <fstream>

#include "ficoco/errors.hpp"

namespace ficoco {

using nlohmann::json;

json trace_to_json(const ReductionTrace& trace) {
  json layers = json::array();
  for (const auto& rec : trace) {
    json assignments = json::array();
    for (const auto& a : rec.assignments) {
      assignments.push_back({{"source", a.source}, {"targets", a.targets}, {"weights", a.weights}});
    }
    json received = json::array();
    for (const auto& [target, mass] : rec.received_mass) {
      received.push_back({{"target", target}, {"mass", mass}});
    }
    layers.push_back({{"layer", rec.layer},
                      {"variant", std::string(to_string(rec.variant))},
                      {"penalty_applied", rec.penalty_applied},
                      {"text_read", rec.text_read},
                      {"tokens", rec.tokens},
                      {"scores", rec.scores},
                      {"discarded", rec.discarded},
                      {"assignments", std::move(assignments)},
                      {"received_mass", std::move(received)}});
  }
  return layers;
}

ReductionTrace trace_from_json(const json& doc) {
  if (!doc.is_array()) throw FormatError("trace must be a JSON array of layer records");
  ReductionTrace trace;
  try {
    for (const auto& item : doc) {
      LayerRecord rec;
      rec.layer = item.at("layer").get<std::size_t>();
      const auto variant = item.at("variant").get<std::string>();
      if (variant != "V" && variant != "L") throw FormatError("trace: unknown variant " + variant);
      rec.variant = variant == "V" ? Variant::V : Variant::L;
      rec.penalty_applied = item.value("penalty_applied", false);
      rec.text_read = item.value("text_read", false);
      if (item.contains("tokens")) rec.tokens = item.at("tokens").get<std::vector<std::size_t>>();
      if (item.contains("scores")) rec.scores = item.at("scores").get<std::vector<double>>();
      rec.discarded = item.at("discarded").get<std::vector<std::size_t>>();
      for (const auto& a : item.at("assignments")) {
        SourceAssignment sa;
        sa.source = a.at("source").get<std::size_t>();
        sa.targets = a.at("targets").get<std::vector<std::size_t>>();
        sa.weights = a.at("weights").get<std::vector<double>>();
        if (sa.targets.size() != sa.weights.size()) {
          throw FormatError("trace: targets and weights differ in length");
        }
        rec.assignments.push_back(std::move(sa));
      }
      if (item.contains("received_mass")) {
        for (const auto& r : item.at("received_mass")) {
          rec.received_mass.emplace_back(r.at("target").get<std::size_t>(), r.at("mass").get<double>());
        }
      }
      trace.push_back(std::move(rec));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed trace: ") + e.what());
  }
  return trace;
}

void write_trace(const std::filesystem::path& path, const ReductionTrace& trace) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << trace_to_json(trace).dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

ReductionTrace read_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trace " + path.string());
  try {
    return trace_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace ficoco
