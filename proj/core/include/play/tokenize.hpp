#pragma once

#include <array>
#include <span>
#include <vector>

#include "play/layout.hpp"
#include "play/vocabulary.hpp"

namespace play {

// Column layout of one token row: [class (+PAD) | x_min | y_min | x_max | y_max].
struct TokenSegments {
  int num_classes = 0;  // excluding PAD

  static constexpr int kCount = 5;
  int class_width() const { return num_classes + 1; }
  int width(int segment) const;
  int offset(int segment) const;
  int row_width() const { return class_width() + 2 * kGridWidth + 2 * kGridHeight; }
};

// Dense row-major matrix. Holds one-hot tokens or real-valued logits.
struct TokenMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<float> data;

  TokenMatrix() = default;
  TokenMatrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0f) {}
  std::span<float> row(int r) { return {data.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)}; }
  std::span<const float> row(int r) const {
    return {data.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)};
  }
  bool operator==(const TokenMatrix&) const = default;
};

struct TokenizedLayout {
  TokenMatrix matrix;  // kMaxElements x D
  int n_real = 0;
  TokenSegments segments;
};

TokenizedLayout tokenize(const Layout& layout, const ClassVocabulary& vocab);

// Per-row class index and the four coordinates, as integers. This is the
// compact form the models train on.
struct TokenIndices {
  std::vector<std::array<int, TokenSegments::kCount>> rows;
  int n_real = 0;
};
TokenIndices token_indices(const Layout& layout, const ClassVocabulary& vocab);

struct UntokenizeOptions {
  // When set, the first `force_real_rows` rows are decoded with the PAD class
  // excluded from the class argmax, and every later row is dropped.
  int force_real_rows = -1;
};

// Argmax per segment; PAD rows are dropped and inverted spans are reordered.
Layout untokenize(const TokenMatrix& tokens, const ClassVocabulary& vocab, UntokenizeOptions options = {});
Layout untokenize(const TokenizedLayout& tok, const ClassVocabulary& vocab);

}  // namespace play
