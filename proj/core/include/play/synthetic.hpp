#pragma once

#include <cstdint>
#include <vector>

#include "play/layout.hpp"

namespace play {

struct SyntheticOptions {
  // Interior split positions snap to multiples of these steps.
  int x_step = 3;
  int y_step = 4;
  double inset_probability = 0.5;
  double gap_probability = 0.3;
  double container_probability = 0.25;
  double drop_leaf_probability = 0.1;
};

// Recursive axis-aligned splits of the canvas into aligned cells; leaves (and
// some internal cells) become elements with CLAY classes chosen from shape.
std::vector<Layout> generate_synthetic_dataset(int count, int max_elements, std::uint64_t seed,
                                               const SyntheticOptions& options = {});

}  // namespace play
