#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace play {

inline constexpr int kGridWidth = 36;
inline constexpr int kGridHeight = 64;
inline constexpr int kMaxElements = 128;
inline constexpr int kMaxGuidelines = 128;
inline constexpr int kMaxGuidelinesPerAxis = kMaxGuidelines / 2;

enum class DatasetTag { clay, rico_semantic, publaynet, synthetic };

std::string_view to_string(DatasetTag tag);
DatasetTag dataset_tag_from_string(std::string_view name);

// One typed box. Coordinates are grid columns in [0, 36) and rows in [0, 64).
struct Element {
  int class_id = 0;
  int x_min = 0;
  int y_min = 0;
  int x_max = 0;
  int y_max = 0;

  int width() const { return x_max - x_min; }
  int height() const { return y_max - y_min; }
  auto operator<=>(const Element&) const = default;
};

struct Layout {
  std::vector<Element> elements;
  std::optional<std::string> source_id;
  DatasetTag dataset = DatasetTag::synthetic;

  int size() const { return static_cast<int>(elements.size()); }
  bool empty() const { return elements.empty(); }
  bool operator==(const Layout&) const = default;
};

// Throws ValidationError naming the first offending element. `num_classes`
// bounds class ids; pass 0 to skip that check.
void validate(const Layout& layout, int num_classes = 0);
bool is_valid(const Layout& layout, int num_classes = 0) noexcept;

// Debug printing: {class x_min y_min x_max y_max} per element.
std::ostream& operator<<(std::ostream& os, const Element& e);
std::ostream& operator<<(std::ostream& os, const Layout& layout);

// Probability table p(N) over N in [0, kMaxElements]; index 0 is always 0.
struct CountDistribution {
  std::vector<double> probability;  // size kMaxElements + 1

  double operator()(int n) const;
  // Inverse-CDF draw from a uniform variate in [0, 1).
  int sample(double u) const;
};

CountDistribution element_count_distribution(const std::vector<Layout>& dataset);

}  // namespace play
