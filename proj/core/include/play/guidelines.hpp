#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "play/layout.hpp"
#include "play/rng.hpp"

namespace play {

enum class Axis : int { horizontal = 0, vertical = 1 };

struct Guideline {
  Axis axis = Axis::horizontal;
  int position = 0;

  auto operator<=>(const Guideline&) const = default;
};

inline constexpr int axis_limit(Axis axis) { return axis == Axis::vertical ? kGridWidth : kGridHeight; }

// Sorted (axis-major, then position), deduplicated, at most 64 lines per axis.
class GuidelineSet {
public:
  GuidelineSet() = default;
  // Sorts and deduplicates; throws ValidationError on out-of-range positions
  // and CapacityError past the per-axis limit.
  explicit GuidelineSet(std::vector<Guideline> lines);

  const std::vector<Guideline>& lines() const { return lines_; }
  int size() const { return static_cast<int>(lines_.size()); }
  bool empty() const { return lines_.empty(); }
  bool contains(const Guideline& g) const;
  int count(Axis axis) const;
  auto begin() const { return lines_.begin(); }
  auto end() const { return lines_.end(); }

  bool operator==(const GuidelineSet&) const = default;

private:
  std::vector<Guideline> lines_;
};

std::ostream& operator<<(std::ostream& os, const Guideline& g);
std::ostream& operator<<(std::ostream& os, const GuidelineSet& gs);

struct WeightedGuideline {
  Guideline guideline;
  std::int64_t weight = 0;
  bool operator==(const WeightedGuideline&) const = default;
};

struct ExtractResult {
  GuidelineSet guidelines;
  // Set when an axis exceeded 64 distinct positions and the lightest lines
  // were dropped.
  bool truncated = false;
};

ExtractResult extract_guidelines_checked(const Layout& layout);
GuidelineSet extract_guidelines(const Layout& layout);

std::vector<WeightedGuideline> weigh_guidelines(const Layout& layout, const GuidelineSet& guidelines);

// Keeps at most kMaxGuidelinesPerAxis per axis, dropping the lowest weights.
ExtractResult cap_per_axis(std::vector<WeightedGuideline> weighted);

enum class GuidelineSampling { all, uniform, weighted, weight_tiers };
std::string_view to_string(GuidelineSampling method);
GuidelineSampling guideline_sampling_from_string(std::string_view name);

// Successive draws without replacement, each with probability proportional
// to the remaining weights. Returns indices in draw order.
std::vector<std::size_t> sample_without_replacement(std::span<const double> weights, int count, Rng& rng);

GuidelineSet sample_guidelines(const Layout& layout, GuidelineSampling method, std::uint64_t seed);

// Tier (0 = lightest, 2 = heaviest) of each weighted line, by weight terciles.
std::vector<int> weight_tiers(const std::vector<WeightedGuideline>& weighted);

// |extract(generated) ∩ given| / |given|. Throws InvalidArgument if empty.
double g_usage(const GuidelineSet& given, const Layout& generated);

nlohmann::json to_json(const GuidelineSet& guidelines);
GuidelineSet guidelines_from_json(const nlohmann::json& j);

}  // namespace play
