#include "play/tokenize.hpp"

#include <algorithm>
#include <utility>

#include "play/error.hpp"

namespace play {

int TokenSegments::width(int segment) const {
  switch (segment) {
    case 0: return class_width();
    case 1:
    case 3: return kGridWidth;
    case 2:
    case 4: return kGridHeight;
  }
  throw InvalidArgument("token segment index out of range");
}

int TokenSegments::offset(int segment) const {
  int off = 0;
  for (int s = 0; s < segment; ++s) off += width(s);
  return off;
}

TokenIndices token_indices(const Layout& layout, const ClassVocabulary& vocab) {
  validate(layout, vocab.size());
  TokenIndices out;
  out.n_real = layout.size();
  out.rows.reserve(kMaxElements);
  for (const Element& e : layout.elements) out.rows.push_back({e.class_id, e.x_min, e.y_min, e.x_max, e.y_max});
  while (static_cast<int>(out.rows.size()) < kMaxElements) out.rows.push_back({vocab.pad_index(), 0, 0, 0, 0});
  return out;
}

TokenizedLayout tokenize(const Layout& layout, const ClassVocabulary& vocab) {
  const TokenIndices idx = token_indices(layout, vocab);
  TokenizedLayout tok;
  tok.segments = TokenSegments{vocab.size()};
  tok.n_real = idx.n_real;
  tok.matrix = TokenMatrix(kMaxElements, tok.segments.row_width());
  for (int r = 0; r < kMaxElements; ++r) {
    auto row = tok.matrix.row(r);
    for (int s = 0; s < TokenSegments::kCount; ++s) row[tok.segments.offset(s) + idx.rows[r][s]] = 1.0f;
  }
  return tok;
}

namespace {

int argmax(std::span<const float> values, int begin, int end) {
  int best = begin;
  for (int i = begin + 1; i < end; ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

}  // namespace

Layout untokenize(const TokenMatrix& tokens, const ClassVocabulary& vocab, UntokenizeOptions options) {
  const TokenSegments seg{vocab.size()};
  if (tokens.cols != seg.row_width()) {
    throw InvalidArgument("token matrix has " + std::to_string(tokens.cols) + " columns, vocabulary needs " +
                          std::to_string(seg.row_width()));
  }
  Layout layout;
  layout.dataset = vocab.dataset();
  const int rows = options.force_real_rows >= 0 ? std::min(options.force_real_rows, tokens.rows) : tokens.rows;
  for (int r = 0; r < rows; ++r) {
    const auto row = tokens.row(r);
    int fields[TokenSegments::kCount];
    for (int s = 0; s < TokenSegments::kCount; ++s) {
      const int off = seg.offset(s);
      int end = off + seg.width(s);
      if (s == 0 && options.force_real_rows >= 0) end -= 1;  // exclude PAD
      fields[s] = argmax(row, off, end) - off;
    }
    if (fields[0] == vocab.pad_index()) continue;
    Element e{fields[0], fields[1], fields[2], fields[3], fields[4]};
    if (e.x_min > e.x_max) std::swap(e.x_min, e.x_max);
    if (e.y_min > e.y_max) std::swap(e.y_min, e.y_max);
    layout.elements.push_back(e);
  }
  return layout;
}

Layout untokenize(const TokenizedLayout& tok, const ClassVocabulary& vocab) { return untokenize(tok.matrix, vocab); }

}  // namespace play
