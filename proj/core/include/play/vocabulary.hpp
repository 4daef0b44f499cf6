#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "play/layout.hpp"

namespace play {

// Class names and legend colors of one dataset, index-aligned.
class ClassVocabulary {
public:
  ClassVocabulary(DatasetTag tag, std::vector<std::string> names, std::vector<std::string> colors);

  static const ClassVocabulary& clay();
  static const ClassVocabulary& rico_semantic();
  static const ClassVocabulary& publaynet();
  // Synthetic layouts reuse the CLAY classes.
  static const ClassVocabulary& for_dataset(DatasetTag tag);

  DatasetTag dataset() const { return tag_; }
  int size() const { return static_cast<int>(names_.size()); }
  // Index of the extra padding class used by tokenization.
  int pad_index() const { return size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<std::string>& colors() const { return colors_; }
  const std::string& name(int class_id) const;
  const std::string& color(int class_id) const;
  // Throws ValidationError for an unknown name.
  int index_of(std::string_view name) const;

  // Canonical JSON text (the shipped asset format) and its FNV-1a hash.
  std::string to_json() const;
  static ClassVocabulary from_json(std::string_view text);
  std::uint64_t hash() const;

  bool operator==(const ClassVocabulary&) const = default;

private:
  DatasetTag tag_;
  std::vector<std::string> names_;
  std::vector<std::string> colors_;
};

inline constexpr std::string_view kStrokeColor = "#393e46";

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace play
