#include "play/vocabulary.hpp"

#include <regex>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "play/error.hpp"

namespace play {

namespace {

// Color legend tables; RICO-Semantic and PublayNet share one color column.
const std::vector<std::string> kClayNames = {
    "IMAGE",         "PICTOGRAM",   "BUTTON",         "TEXT",          "LABEL",       "TEXT_INPUT",
    "MAP",           "CHECK_BOX",   "SWITCH",         "PAGER_INDICATOR", "SLIDER",    "RADIO_BUTTON",
    "SPINNER",       "PROGRESS_BAR", "ADVERTISEMENT", "DRAWER",        "NAVIGATION_BAR", "TOOLBAR",
    "LIST_ITEM",     "CARD_VIEW",   "CONTAINER",      "DATE_PICKER",   "NUMBER_STEPPER"};
const std::vector<std::string> kClayColors = {
    "#a6e3e9", "#bad7df", "#71c9ce", "#cbf1f5", "#dbe2ef", "#f6f6f6", "#e3fdfd", "#ffe2e2",
    "#ffd3b6", "#b4846c", "#8785a3", "#c06c84", "#f38181", "#dcd6f7", "#364f6b", "#d3e0dc",
    "#3f72af", "#a6b1e1", "#bbded6", "#ffb6b9", "#fae3d9", "#99ddcc", "#7d5a50"};

const std::vector<std::string> kRicoNames = {
    "TEXT",         "LIST_ITEM",   "IMAGE",     "TEXT_BUTTON",      "ICON",   "TOOLBAR",  "TEXT_INPUT",
    "ADVERTISEMENT", "CARD_VIEW",  "WEB_VIEW",  "DRAWER",           "BACKGROUND_IMAGE", "RADIO_BUTTON",
    "MODAL",        "MULTI_TAB",   "PAGER_INDICATOR", "SLIDER",     "SWITCH", "MAP",      "BOTTO_NAVIGATION",
    "VIDEO",        "CHECK_BOX",   "BUTTON_BAR", "NUMBER_STEPPER",  "DATE_PICKER"};
const std::vector<std::string> kSharedColors = {
    "#cbf1f5", "#bbded6", "#a6e3e9", "#71c9ce", "#fae3d9", "#a6b1e1", "#f6f6f6", "#364f6b", "#ffb6b9",
    "#f38181", "#d3e0dc", "#e3fdfd", "#c06c84", "#dcd6f7", "#ea5455", "#dbe2ef", "#3f72af", "#bad7df",
    "#ffd3b6", "#b4846c", "#8785a3", "#99ddcc", "#7d5a50", "#ffd460", "#f07b3f"};

const std::vector<std::string> kPublaynetNames = {"TEXT", "TITLE", "LIST", "TABLE", "FIGURE"};

bool is_hex_color(const std::string& s) {
  static const std::regex re("^#[0-9a-f]{6}$");
  return std::regex_match(s, re);
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ClassVocabulary::ClassVocabulary(DatasetTag tag, std::vector<std::string> names, std::vector<std::string> colors)
    : tag_(tag), names_(std::move(names)), colors_(std::move(colors)) {
  if (names_.empty() || names_.size() != colors_.size()) {
    throw ValidationError("vocabulary needs one color per class", "classes");
  }
  std::set<std::string> seen;
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (!seen.insert(names_[i]).second) throw ValidationError("duplicate class name " + names_[i], "classes");
    if (!is_hex_color(colors_[i])) throw ValidationError("bad color " + colors_[i], "classes");
  }
}

const ClassVocabulary& ClassVocabulary::clay() {
  static const ClassVocabulary v(DatasetTag::clay, kClayNames, kClayColors);
  return v;
}

const ClassVocabulary& ClassVocabulary::rico_semantic() {
  static const ClassVocabulary v(DatasetTag::rico_semantic, kRicoNames, kSharedColors);
  return v;
}

const ClassVocabulary& ClassVocabulary::publaynet() {
  static const ClassVocabulary v(DatasetTag::publaynet, kPublaynetNames,
                                 std::vector<std::string>(kSharedColors.begin(), kSharedColors.begin() + 5));
  return v;
}

const ClassVocabulary& ClassVocabulary::for_dataset(DatasetTag tag) {
  switch (tag) {
    case DatasetTag::rico_semantic: return rico_semantic();
    case DatasetTag::publaynet: return publaynet();
    case DatasetTag::clay:
    case DatasetTag::synthetic: return clay();
  }
  return clay();
}

const std::string& ClassVocabulary::name(int class_id) const {
  if (class_id < 0 || class_id >= size()) {
    throw ValidationError("unknown class id " + std::to_string(class_id), "class");
  }
  return names_[class_id];
}

const std::string& ClassVocabulary::color(int class_id) const {
  if (class_id < 0 || class_id >= size()) {
    throw ValidationError("unknown class id " + std::to_string(class_id), "class");
  }
  return colors_[class_id];
}

int ClassVocabulary::index_of(std::string_view name) const {
  for (int i = 0; i < size(); ++i) {
    if (names_[i] == name) return i;
  }
  throw ValidationError("unknown class name '" + std::string(name) + "'", "class");
}

std::string ClassVocabulary::to_json() const {
  std::ostringstream out;
  out << "{\n  \"dataset\": \"" << play::to_string(tag_) << "\",\n  \"classes\": [\n";
  for (int i = 0; i < size(); ++i) {
    out << "    {\"index\": " << i << ", \"name\": \"" << names_[i] << "\", \"color\": \"" << colors_[i] << "\"}"
        << (i + 1 < size() ? ",\n" : "\n");
  }
  out << "  ]\n}\n";
  return out.str();
}

ClassVocabulary ClassVocabulary::from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("vocabulary JSON: ") + e.what());
  }
  if (!j.contains("dataset") || !j.contains("classes") || !j["classes"].is_array()) {
    throw SchemaError("vocabulary JSON needs 'dataset' and 'classes'");
  }
  std::vector<std::string> names, colors;
  for (std::size_t i = 0; i < j["classes"].size(); ++i) {
    const auto& c = j["classes"][i];
    if (c.value("index", -1) != static_cast<int>(i)) throw SchemaError("vocabulary indices must be 0..n-1 in order");
    names.push_back(c.at("name").get<std::string>());
    colors.push_back(c.at("color").get<std::string>());
  }
  return ClassVocabulary(dataset_tag_from_string(j["dataset"].get<std::string>()), std::move(names),
                         std::move(colors));
}

std::uint64_t ClassVocabulary::hash() const { return fnv1a64(to_json()); }

}  // namespace play
