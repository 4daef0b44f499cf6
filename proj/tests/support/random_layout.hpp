#pragma once

#include <random>

#include "play/layout.hpp"

namespace play::testing {

// Arbitrary valid layout (any class, any in-grid box, degenerate allowed).
inline Layout random_layout(std::mt19937_64& gen, int num_classes, int max_elements = kMaxElements) {
  std::uniform_int_distribution<int> count(1, max_elements);
  std::uniform_int_distribution<int> cls(0, num_classes - 1);
  std::uniform_int_distribution<int> xs(0, kGridWidth - 1);
  std::uniform_int_distribution<int> ys(0, kGridHeight - 1);
  Layout l;
  const int n = count(gen);
  for (int i = 0; i < n; ++i) {
    int x0 = xs(gen), x1 = xs(gen), y0 = ys(gen), y1 = ys(gen);
    if (x0 > x1) std::swap(x0, x1);
    if (y0 > y1) std::swap(y0, y1);
    l.elements.push_back({cls(gen), x0, y0, x1, y1});
  }
  return l;
}

}  // namespace play::testing
