#include "play/guidelines.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <string>

#include "play/error.hpp"
#include "play/rng.hpp"

namespace play {

GuidelineSet::GuidelineSet(std::vector<Guideline> lines) : lines_(std::move(lines)) {
  for (const Guideline& g : lines_) {
    if (g.position < 0 || g.position > axis_limit(g.axis)) {
      throw ValidationError("guideline position " + std::to_string(g.position) + " outside [0, " +
                                std::to_string(axis_limit(g.axis)) + "]",
                            "pos");
    }
  }
  std::sort(lines_.begin(), lines_.end());
  lines_.erase(std::unique(lines_.begin(), lines_.end()), lines_.end());
  if (count(Axis::horizontal) > kMaxGuidelinesPerAxis || count(Axis::vertical) > kMaxGuidelinesPerAxis) {
    throw CapacityError("more than 64 guidelines on one axis", "guidelines");
  }
}

bool GuidelineSet::contains(const Guideline& g) const { return std::binary_search(lines_.begin(), lines_.end(), g); }

int GuidelineSet::count(Axis axis) const {
  return static_cast<int>(std::count_if(lines_.begin(), lines_.end(), [axis](const Guideline& g) { return g.axis == axis; }));
}

namespace {

std::vector<Guideline> raw_edges(const Layout& layout) {
  std::vector<Guideline> lines;
  lines.reserve(static_cast<std::size_t>(layout.size()) * 4);
  for (const Element& e : layout.elements) {
    lines.push_back({Axis::vertical, e.x_min});
    lines.push_back({Axis::vertical, e.x_max});
    lines.push_back({Axis::horizontal, e.y_min});
    lines.push_back({Axis::horizontal, e.y_max});
  }
  std::sort(lines.begin(), lines.end());
  lines.erase(std::unique(lines.begin(), lines.end()), lines.end());
  return lines;
}

std::int64_t weight_of(const Layout& layout, const Guideline& g) {
  std::int64_t w = 0;
  for (const Element& e : layout.elements) {
    if (g.axis == Axis::vertical) {
      if (e.x_min == g.position || e.x_max == g.position) w += e.y_max - e.y_min;
    } else {
      if (e.y_min == g.position || e.y_max == g.position) w += e.x_max - e.x_min;
    }
  }
  return w;
}

}  // namespace

std::vector<WeightedGuideline> weigh_guidelines(const Layout& layout, const GuidelineSet& guidelines) {
  std::vector<WeightedGuideline> out;
  out.reserve(guidelines.lines().size());
  for (const Guideline& g : guidelines) out.push_back({g, weight_of(layout, g)});
  return out;
}

ExtractResult cap_per_axis(std::vector<WeightedGuideline> weighted) {
  ExtractResult result;
  std::vector<Guideline> kept;
  for (Axis axis : {Axis::horizontal, Axis::vertical}) {
    std::vector<WeightedGuideline> on_axis;
    for (const auto& w : weighted) {
      if (w.guideline.axis == axis) on_axis.push_back(w);
    }
    if (static_cast<int>(on_axis.size()) > kMaxGuidelinesPerAxis) {
      result.truncated = true;
      // Heaviest first; ties keep the lower position.
      std::stable_sort(on_axis.begin(), on_axis.end(),
                       [](const WeightedGuideline& a, const WeightedGuideline& b) { return a.weight > b.weight; });
      on_axis.resize(kMaxGuidelinesPerAxis);
    }
    for (const auto& w : on_axis) kept.push_back(w.guideline);
  }
  result.guidelines = GuidelineSet(std::move(kept));
  return result;
}

ExtractResult extract_guidelines_checked(const Layout& layout) {
  std::vector<Guideline> lines = raw_edges(layout);
  std::vector<WeightedGuideline> weighted;
  weighted.reserve(lines.size());
  for (const Guideline& g : lines) weighted.push_back({g, weight_of(layout, g)});
  return cap_per_axis(std::move(weighted));
}

GuidelineSet extract_guidelines(const Layout& layout) { return extract_guidelines_checked(layout).guidelines; }

std::string_view to_string(GuidelineSampling method) {
  switch (method) {
    case GuidelineSampling::all: return "all";
    case GuidelineSampling::uniform: return "uniform";
    case GuidelineSampling::weighted: return "weighted";
    case GuidelineSampling::weight_tiers: return "weight_tiers";
  }
  return "all";
}

GuidelineSampling guideline_sampling_from_string(std::string_view name) {
  if (name == "all") return GuidelineSampling::all;
  if (name == "uniform") return GuidelineSampling::uniform;
  if (name == "weighted") return GuidelineSampling::weighted;
  if (name == "weight_tiers" || name == "weight-tiers") return GuidelineSampling::weight_tiers;
  throw InvalidArgument("unknown guideline sampling method '" + std::string(name) + "'", "method");
}

std::vector<int> weight_tiers(const std::vector<WeightedGuideline>& weighted) {
  std::vector<std::int64_t> sorted;
  for (const auto& w : weighted) sorted.push_back(w.weight);
  std::sort(sorted.begin(), sorted.end());
  std::vector<int> tiers(weighted.size(), 0);
  if (sorted.empty()) return tiers;
  const std::size_t n = sorted.size();
  const std::int64_t low = sorted[n / 3];
  const std::int64_t high = sorted[(2 * n) / 3];
  for (std::size_t i = 0; i < weighted.size(); ++i) {
    const auto w = weighted[i].weight;
    tiers[i] = w < low ? 0 : (w < high ? 1 : 2);
  }
  return tiers;
}

std::vector<std::size_t> sample_without_replacement(std::span<const double> weights, int count, Rng& rng) {
  std::vector<bool> taken(weights.size(), false);
  std::vector<std::size_t> out;
  for (int k = 0; k < count && out.size() < weights.size(); ++k) {
    double total = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (!taken[i]) total += weights[i];
    }
    double u = rng.uniform() * total;
    std::size_t pick = weights.size();
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (taken[i]) continue;
      pick = i;
      if (u < weights[i]) break;
      u -= weights[i];
    }
    taken[pick] = true;
    out.push_back(pick);
  }
  return out;
}

GuidelineSet sample_guidelines(const Layout& layout, GuidelineSampling method, std::uint64_t seed) {
  const GuidelineSet full = extract_guidelines(layout);
  if (method == GuidelineSampling::all || full.empty()) return full;
  Rng rng(seed);
  const auto& lines = full.lines();
  std::vector<Guideline> kept;

  switch (method) {
    case GuidelineSampling::uniform: {
      const double keep = rng.uniform();
      for (const Guideline& g : lines) {
        if (rng.uniform() < keep) kept.push_back(g);
      }
      break;
    }
    case GuidelineSampling::weighted: {
      auto weighted = weigh_guidelines(layout, full);
      // Zero-weight lines (edges of degenerate boxes) are floored to 1.
      std::vector<double> w;
      for (const auto& x : weighted) w.push_back(static_cast<double>(std::max<std::int64_t>(x.weight, 1)));
      const auto subset = rng.uniform_int(1, static_cast<std::int64_t>(lines.size()));
      for (std::size_t i : sample_without_replacement(w, static_cast<int>(subset), rng)) kept.push_back(lines[i]);
      break;
    }
    case GuidelineSampling::weight_tiers: {
      const auto weighted = weigh_guidelines(layout, full);
      const auto tiers = weight_tiers(weighted);
      std::vector<int> present;
      for (int t = 0; t < 3; ++t) {
        if (std::find(tiers.begin(), tiers.end(), t) != tiers.end()) present.push_back(t);
      }
      // Uniform over the nonempty subsets of present tiers.
      const auto mask = rng.uniform_int(1, (std::int64_t{1} << present.size()) - 1);
      for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto pos = std::find(present.begin(), present.end(), tiers[i]) - present.begin();
        if (mask & (std::int64_t{1} << pos)) kept.push_back(lines[i]);
      }
      break;
    }
    case GuidelineSampling::all: break;
  }
  return GuidelineSet(std::move(kept));
}

double g_usage(const GuidelineSet& given, const Layout& generated) {
  if (given.empty()) throw InvalidArgument("g_usage needs at least one given guideline", "guidelines");
  const GuidelineSet found = extract_guidelines(generated);
  int hit = 0;
  for (const Guideline& g : given) {
    if (found.contains(g)) ++hit;
  }
  return static_cast<double>(hit) / given.size();
}

nlohmann::json to_json(const GuidelineSet& guidelines) {
  nlohmann::json arr = nlohmann::json::array();
  for (const Guideline& g : guidelines) {
    arr.push_back({{"axis", g.axis == Axis::horizontal ? "h" : "v"}, {"pos", g.position}});
  }
  return {{"guidelines", arr}};
}

GuidelineSet guidelines_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("guidelines") || !j["guidelines"].is_array()) {
    throw SchemaError("guideline JSON needs a 'guidelines' array", "guidelines");
  }
  std::vector<Guideline> lines;
  for (std::size_t i = 0; i < j["guidelines"].size(); ++i) {
    const auto& g = j["guidelines"][i];
    const std::string where = "guidelines[" + std::to_string(i) + "]";
    if (!g.is_object() || !g.contains("axis") || !g["axis"].is_string() || !g.contains("pos") ||
        !g["pos"].is_number_integer()) {
      throw SchemaError(where + ": needs 'axis' (\"h\"|\"v\") and integer 'pos'", where);
    }
    const auto axis = g["axis"].get<std::string>();
    if (axis != "h" && axis != "v") throw SchemaError(where + ": axis must be \"h\" or \"v\"", where);
    lines.push_back({axis == "h" ? Axis::horizontal : Axis::vertical, g["pos"].get<int>()});
  }
  return GuidelineSet(std::move(lines));
}

std::ostream& operator<<(std::ostream& os, const Guideline& g) {
  return os << (g.axis == Axis::horizontal ? 'h' : 'v') << g.position;
}

std::ostream& operator<<(std::ostream& os, const GuidelineSet& gs) {
  os << '[';
  bool first = true;
  for (const auto& g : gs) {
    os << (first ? "" : " ") << g;
    first = false;
  }
  return os << ']';
}

}  // namespace play
