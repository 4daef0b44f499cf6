#pragma once

#include <utility>
#include <vector>

#include "play/layout.hpp"

namespace play {

// Geometric layout statistics. Exact formulas live in docs/metrics.md.
struct GeometricMetrics {
  double iou = 0.0;
  double overlap = 0.0;
  double alignment = 0.0;
};

// Mean IoU over element pairs with positive intersection (0 if none).
double layout_iou(const Layout& layout);
// Fraction of covered cell area that is covered by two or more elements,
// weighted by coverage multiplicity.
double layout_overlap(const Layout& layout);
// Mean over elements of the smallest normalized distance between one of its
// six alignment lines and the same line of another element.
double layout_alignment(const Layout& layout);

GeometricMetrics geometric_metrics(const std::vector<Layout>& layouts);

// Assignment maximizing total weight on a (possibly rectangular) matrix.
// Returns, for each row, the matched column or -1.
std::vector<int> max_weight_assignment(const std::vector<std::vector<double>>& weights);

// Similarity kernel between two boxes of the same class (0 otherwise).
double docsim_kernel(const Element& a, const Element& b);
double docsim(const Layout& a, const Layout& b);
double docsim(const std::vector<std::pair<Layout, Layout>>& pairs);

}  // namespace play
