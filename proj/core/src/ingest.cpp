#include "play/ingest.hpp"

#include <cmath>
#include <fstream>

#include "play/error.hpp"

namespace play {

int quantize(double v, int extent) {
  if (!std::isfinite(v)) throw ValidationError("non-finite coordinate");
  const double cell = std::floor(v * extent);
  if (cell < 0.0) return 0;
  if (cell > extent - 1) return extent - 1;
  return static_cast<int>(cell);
}

namespace {

int grid_field(const nlohmann::json& e, const char* name, const std::string& where) {
  if (!e.contains(name) || !e[name].is_number_integer()) throw SchemaError(where + ": missing integer '" + name + "'", where);
  return e[name].get<int>();
}

double float_field(const nlohmann::json& e, const char* name, const std::string& where) {
  if (!e.contains(name) || !e[name].is_number()) throw SchemaError(where + ": missing number '" + name + "'", where);
  return e[name].get<double>();
}

}  // namespace

Layout normalize_ingest(const nlohmann::json& record, const ClassVocabulary& vocab) {
  if (!record.is_object() || !record.contains("elements") || !record["elements"].is_array()) {
    throw SchemaError("layout record needs an 'elements' array", "elements");
  }
  const auto& elements = record["elements"];
  if (elements.size() > static_cast<std::size_t>(kMaxElements)) {
    throw ValidationError("record has " + std::to_string(elements.size()) + " elements; the limit is 128", "elements");
  }
  Layout layout;
  if (record.contains("id")) {
    if (!record["id"].is_string()) throw SchemaError("'id' must be a string", "id");
    layout.source_id = record["id"].get<std::string>();
  }
  layout.dataset = record.contains("dataset") ? dataset_tag_from_string(record["dataset"].get<std::string>())
                                              : vocab.dataset();
  for (std::size_t i = 0; i < elements.size(); ++i) {
    const auto& e = elements[i];
    const std::string where = "elements[" + std::to_string(i) + "]";
    if (!e.is_object() || !e.contains("class") || !e["class"].is_string()) {
      throw SchemaError(where + ": missing 'class'", where);
    }
    Element el;
    el.class_id = vocab.index_of(e["class"].get<std::string>());
    if (e.contains("ix_min")) {
      el.x_min = grid_field(e, "ix_min", where);
      el.y_min = grid_field(e, "iy_min", where);
      el.x_max = grid_field(e, "ix_max", where);
      el.y_max = grid_field(e, "iy_max", where);
    } else {
      el.x_min = quantize(float_field(e, "x_min", where), kGridWidth);
      el.y_min = quantize(float_field(e, "y_min", where), kGridHeight);
      el.x_max = quantize(float_field(e, "x_max", where), kGridWidth);
      el.y_max = quantize(float_field(e, "y_max", where), kGridHeight);
    }
    layout.elements.push_back(el);
  }
  validate(layout, vocab.size());
  return layout;
}

Layout normalize_ingest_text(std::string_view json_line, const ClassVocabulary& vocab) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_line);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed layout JSON: ") + e.what());
  }
  return normalize_ingest(j, vocab);
}

nlohmann::json to_grid_json(const Layout& layout, const ClassVocabulary& vocab) {
  nlohmann::json out;
  out["id"] = layout.source_id.value_or("");
  out["dataset"] = std::string(to_string(layout.dataset));
  out["elements"] = nlohmann::json::array();
  for (const Element& e : layout.elements) {
    out["elements"].push_back({{"class", vocab.name(e.class_id)},
                               {"ix_min", e.x_min},
                               {"iy_min", e.y_min},
                               {"ix_max", e.x_max},
                               {"iy_max", e.y_max}});
  }
  return out;
}

nlohmann::json to_canonical_json(const Layout& layout, const ClassVocabulary& vocab) {
  nlohmann::json out;
  out["id"] = layout.source_id.value_or("");
  out["dataset"] = std::string(to_string(layout.dataset));
  out["elements"] = nlohmann::json::array();
  for (const Element& e : layout.elements) {
    out["elements"].push_back({{"class", vocab.name(e.class_id)},
                               {"x_min", (e.x_min + 0.5) / kGridWidth},
                               {"y_min", (e.y_min + 0.5) / kGridHeight},
                               {"x_max", (e.x_max + 0.5) / kGridWidth},
                               {"y_max", (e.y_max + 0.5) / kGridHeight}});
  }
  return out;
}

std::vector<Layout> read_jsonl(const std::string& path, const ClassVocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path, "path");
  std::vector<Layout> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(normalize_ingest_text(line, vocab));
    } catch (const Error& e) {
      throw SchemaError(path + ":" + std::to_string(lineno) + ": " + e.what(), e.field());
    }
  }
  return out;
}

void write_jsonl(const std::string& path, const std::vector<Layout>& layouts, const ClassVocabulary& vocab) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path, "path");
  for (const Layout& l : layouts) out << to_grid_json(l, vocab).dump() << '\n';
}

}  // namespace play
