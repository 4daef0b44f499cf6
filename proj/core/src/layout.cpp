#include "play/layout.hpp"

#include <ostream>
#include <string>

#include "play/error.hpp"

namespace play {

std::string_view to_string(DatasetTag tag) {
  switch (tag) {
    case DatasetTag::clay: return "clay";
    case DatasetTag::rico_semantic: return "rico_semantic";
    case DatasetTag::publaynet: return "publaynet";
    case DatasetTag::synthetic: return "synthetic";
  }
  return "synthetic";
}

DatasetTag dataset_tag_from_string(std::string_view name) {
  if (name == "clay") return DatasetTag::clay;
  if (name == "rico_semantic") return DatasetTag::rico_semantic;
  if (name == "publaynet") return DatasetTag::publaynet;
  if (name == "synthetic") return DatasetTag::synthetic;
  throw ValidationError("unknown dataset tag '" + std::string(name) + "'", "dataset");
}

void validate(const Layout& layout, int num_classes) {
  if (layout.size() > kMaxElements) {
    throw ValidationError("layout has " + std::to_string(layout.size()) + " elements; the limit is " +
                              std::to_string(kMaxElements),
                          "elements");
  }
  for (int i = 0; i < layout.size(); ++i) {
    const Element& e = layout.elements[i];
    const std::string where = "elements[" + std::to_string(i) + "]";
    if (e.class_id < 0 || (num_classes > 0 && e.class_id >= num_classes)) {
      throw ValidationError(where + ": class id " + std::to_string(e.class_id) + " out of range", where);
    }
    if (e.x_min < 0 || e.x_max >= kGridWidth || e.y_min < 0 || e.y_max >= kGridHeight) {
      throw ValidationError(where + ": coordinate outside the 36x64 grid", where);
    }
    if (e.x_min > e.x_max || e.y_min > e.y_max) {
      throw ValidationError(where + ": inverted box", where);
    }
  }
}

std::ostream& operator<<(std::ostream& os, const Element& e) {
  return os << '{' << e.class_id << ' ' << e.x_min << ' ' << e.y_min << ' ' << e.x_max << ' ' << e.y_max << '}';
}

std::ostream& operator<<(std::ostream& os, const Layout& layout) {
  os << '[';
  for (std::size_t i = 0; i < layout.elements.size(); ++i) os << (i ? " " : "") << layout.elements[i];
  return os << ']';
}

bool is_valid(const Layout& layout, int num_classes) noexcept {
  try {
    validate(layout, num_classes);
    return true;
  } catch (const ValidationError&) {
    return false;
  }
}

double CountDistribution::operator()(int n) const {
  if (n < 0 || n >= static_cast<int>(probability.size())) return 0.0;
  return probability[n];
}

int CountDistribution::sample(double u) const {
  double acc = 0.0;
  int last = 1;
  for (int n = 1; n < static_cast<int>(probability.size()); ++n) {
    if (probability[n] <= 0.0) continue;
    acc += probability[n];
    last = n;
    if (u < acc) return n;
  }
  return last;
}

CountDistribution element_count_distribution(const std::vector<Layout>& dataset) {
  if (dataset.empty()) throw InvalidArgument("element count distribution of an empty dataset", "dataset");
  std::vector<double> counts(kMaxElements + 1, 0.0);
  int used = 0;
  for (const Layout& l : dataset) {
    if (l.size() < 1 || l.size() > kMaxElements) continue;
    counts[l.size()] += 1.0;
    ++used;
  }
  if (used == 0) throw InvalidArgument("dataset has no layout with 1..128 elements", "dataset");
  for (double& c : counts) c /= used;
  return CountDistribution{std::move(counts)};
}

}  // namespace play
