#include "play/synthetic.hpp"

#include <algorithm>
#include <array>

#include "play/error.hpp"
#include "play/rng.hpp"

namespace play {

namespace {

// CLAY class ids used by the shape heuristics.
enum Clay : int {
  kImage = 0, kPictogram = 1, kButton = 2, kText = 3, kLabel = 4, kTextInput = 5, kMap = 6, kCheckBox = 7,
  kSwitch = 8, kAdvertisement = 14, kNavigationBar = 16, kToolbar = 17, kListItem = 18, kCardView = 19,
  kContainer = 20
};

struct Node {
  int x0, y0, x1, y1;
  int first_child = -1;  // children are stored contiguously
  int child_count = 0;
  bool container = false;
  bool dropped = false;
};

// Lattice positions strictly inside (lo, hi) that leave at least `min_size`
// on both sides.
std::vector<int> split_points(int lo, int hi, int step, int min_size, int gap) {
  std::vector<int> out;
  for (int p = (lo / step + 1) * step; p < hi; p += step) {
    if (p - lo >= min_size && hi - (p + gap) >= min_size) out.push_back(p);
  }
  return out;
}

template <typename T, std::size_t N>
int pick(Rng& rng, const std::array<T, N>& options) {
  return options[static_cast<std::size_t>(rng.uniform_int(0, N - 1))];
}

int class_for(const Node& n, Rng& rng) {
  const int w = n.x1 - n.x0;
  const int h = n.y1 - n.y0;
  if (n.container) return pick(rng, std::array{kContainer, kCardView, kListItem});
  if (h <= 4 && w >= 18) return pick(rng, std::array{kToolbar, kNavigationBar, kText});
  if (h <= 4) return pick(rng, std::array{kText, kButton, kLabel});
  if (w <= 6 && h <= 8) return pick(rng, std::array{kPictogram, kCheckBox, kSwitch});
  if (w * h >= 400) return pick(rng, std::array{kImage, kMap, kAdvertisement});
  return pick(rng, std::array{kText, kImage, kButton, kTextInput});
}

Layout generate_one(int max_elements, Rng& rng, const SyntheticOptions& opt) {
  std::vector<Node> nodes;
  Node root{0, 0, kGridWidth - 1, kGridHeight - 1};
  if (rng.bernoulli(opt.inset_probability)) {
    root = Node{opt.x_step, opt.y_step, kGridWidth - 1 - opt.x_step, kGridHeight - 1 - opt.y_step};
  }
  nodes.push_back(root);
  const int target = static_cast<int>(rng.uniform_int(1, max_elements));
  std::vector<int> leaves{0};
  int containers = 0;

  while (static_cast<int>(leaves.size()) + containers < target) {
    // Candidate (leaf, axis, position, gap) splits, weighted by leaf area.
    struct Option {
      int leaf_slot;
      bool vertical;  // split along x
      std::vector<int> points;
      int gap;
    };
    std::vector<Option> options;
    std::vector<double> weights;
    for (int slot = 0; slot < static_cast<int>(leaves.size()); ++slot) {
      const Node& n = nodes[leaves[slot]];
      const int gap_x = rng.bernoulli(opt.gap_probability) ? opt.x_step : 0;
      const int gap_y = rng.bernoulli(opt.gap_probability) ? opt.y_step : 0;
      auto px = split_points(n.x0, n.x1, opt.x_step, opt.x_step, gap_x);
      auto py = split_points(n.y0, n.y1, opt.y_step, opt.y_step, gap_y);
      const double area = static_cast<double>(n.x1 - n.x0) * (n.y1 - n.y0);
      const double rel_w = static_cast<double>(n.x1 - n.x0) / kGridWidth;
      const double rel_h = static_cast<double>(n.y1 - n.y0) / kGridHeight;
      if (!px.empty()) {
        options.push_back({slot, true, std::move(px), gap_x});
        weights.push_back(area * rel_w);
      }
      if (!py.empty()) {
        options.push_back({slot, false, std::move(py), gap_y});
        weights.push_back(area * rel_h);
      }
    }
    if (options.empty()) break;
    double total = 0.0;
    for (double w : weights) total += w;
    double u = rng.uniform() * total;
    std::size_t chosen = 0;
    while (chosen + 1 < options.size() && u >= weights[chosen]) u -= weights[chosen++];
    const Option& o = options[chosen];

    const int parent = leaves[o.leaf_slot];
    const int p = o.points[static_cast<std::size_t>(rng.uniform_int(0, o.points.size() - 1))];
    Node a = nodes[parent], b = nodes[parent];
    a.first_child = b.first_child = -1;
    a.child_count = b.child_count = 0;
    a.container = b.container = false;
    if (o.vertical) {
      a.x1 = p;
      b.x0 = p + o.gap;
    } else {
      a.y1 = p;
      b.y0 = p + o.gap;
    }
    const int first = static_cast<int>(nodes.size());
    nodes.push_back(a);
    nodes.push_back(b);
    nodes[parent].first_child = first;
    nodes[parent].child_count = 2;
    leaves.erase(leaves.begin() + o.leaf_slot);
    leaves.push_back(first);
    leaves.push_back(first + 1);
    if (parent != 0 && static_cast<int>(leaves.size()) + containers < target &&
        rng.bernoulli(opt.container_probability)) {
      nodes[parent].container = true;
      ++containers;
    }
  }

  int kept = 0;
  for (int leaf : leaves) {
    if (leaves.size() > 1 && rng.bernoulli(opt.drop_leaf_probability)) {
      nodes[leaf].dropped = true;
    } else {
      ++kept;
    }
  }
  if (kept == 0) nodes[leaves.front()].dropped = false;

  // Depth-first emission: containers precede their children.
  Layout layout;
  layout.dataset = DatasetTag::synthetic;
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    const Node& n = nodes[id];
    if (n.child_count == 0) {
      if (!n.dropped) layout.elements.push_back({class_for(n, rng), n.x0, n.y0, n.x1, n.y1});
      continue;
    }
    if (n.container) layout.elements.push_back({class_for(n, rng), n.x0, n.y0, n.x1, n.y1});
    for (int c = n.child_count - 1; c >= 0; --c) stack.push_back(n.first_child + c);
  }
  return layout;
}

}  // namespace

std::vector<Layout> generate_synthetic_dataset(int count, int max_elements, std::uint64_t seed,
                                               const SyntheticOptions& options) {
  if (count < 1) throw InvalidArgument("count must be >= 1", "count");
  if (max_elements < 1 || max_elements > kMaxElements) {
    throw InvalidArgument("max_elements must be in [1, 128]", "max_elements");
  }
  if (options.x_step < 1 || options.y_step < 1) throw InvalidArgument("split steps must be positive");
  std::vector<Layout> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, 0x5e7a, static_cast<std::uint64_t>(i)));
    Layout l = generate_one(max_elements, rng, options);
    l.source_id = "synthetic-" + std::to_string(seed) + "-" + std::to_string(i);
    out.push_back(std::move(l));
  }
  return out;
}

}  // namespace play
