#include "../support/doctest.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "../support/random_layout.hpp"
#include "play/error.hpp"
#include "play/ingest.hpp"
#include "play/synthetic.hpp"
#include "play/tokenize.hpp"

using namespace play;

TEST_CASE("tokenize places five one-hot entries per element row") {
  const auto& vocab = ClassVocabulary::clay();
  Layout l;
  l.elements.push_back({2, 4, 8, 12, 16});
  const auto tok = tokenize(l, vocab);
  CHECK(tok.n_real == 1);
  CHECK(tok.matrix.rows == kMaxElements);
  CHECK(tok.matrix.cols == vocab.size() + 1 + 200);
  const auto& seg = tok.segments;
  const auto row = tok.matrix.row(0);
  std::vector<int> ones;
  for (int c = 0; c < tok.matrix.cols; ++c) {
    if (row[c] == 1.0f) ones.push_back(c);
    else CHECK(row[c] == 0.0f);
  }
  CHECK(ones == std::vector<int>{seg.offset(0) + 2, seg.offset(1) + 4, seg.offset(2) + 8, seg.offset(3) + 12,
                                 seg.offset(4) + 16});
}

TEST_CASE("padding rows use the PAD class and coordinate bin 0") {
  const auto& vocab = ClassVocabulary::clay();
  Layout l;
  l.elements.push_back({0, 1, 1, 2, 2});
  const auto tok = tokenize(l, vocab);
  const auto& seg = tok.segments;
  for (int r = 1; r < kMaxElements; ++r) {
    const auto row = tok.matrix.row(r);
    float sum = 0;
    for (float v : row) sum += v;
    CHECK(sum == 5.0f);
    CHECK(row[seg.offset(0) + vocab.pad_index()] == 1.0f);
    for (int s = 1; s < 5; ++s) CHECK(row[seg.offset(s)] == 1.0f);
  }
}

TEST_CASE("D is |classes| + 1 + 200 for every shipped vocabulary") {
  for (const auto* v : {&ClassVocabulary::clay(), &ClassVocabulary::rico_semantic(), &ClassVocabulary::publaynet()}) {
    CHECK(TokenSegments{v->size()}.row_width() == v->size() + 1 + 200);
  }
}

TEST_CASE("tokenize rejects out-of-grid coordinates naming the element") {
  Layout l;
  l.elements.push_back({0, 1, 1, 2, 2});
  l.elements.push_back({0, 1, 1, 36, 2});
  try {
    tokenize(l, ClassVocabulary::clay());
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(e.field() == "elements[1]");
  }
}

TEST_CASE("untokenize inverts tokenize over 10,000 random layouts") {
  std::mt19937_64 gen(11);
  const auto& vocab = ClassVocabulary::clay();
  int ok = 0;
  for (int i = 0; i < 10000; ++i) {
    Layout l = testing::random_layout(gen, vocab.size(), 40);
    l.dataset = vocab.dataset();
    if (untokenize(tokenize(l, vocab), vocab) == l) ++ok;
  }
  CHECK(ok == 10000);
}

TEST_CASE("untokenize of an all-PAD matrix is empty") {
  const auto tok = tokenize(Layout{}, ClassVocabulary::publaynet());
  CHECK(untokenize(tok, ClassVocabulary::publaynet()).empty());
}

TEST_CASE("untokenize of real-valued rows takes the per-segment argmax") {
  const auto& vocab = ClassVocabulary::publaynet();
  const TokenSegments seg{vocab.size()};
  std::mt19937_64 gen(5);
  std::normal_distribution<float> noise;
  TokenMatrix m(20, seg.row_width());
  for (float& v : m.data) v = noise(gen);
  const Layout out = untokenize(m, vocab);
  // Exhaustive oracle: scan each segment for its maximum.
  std::vector<Element> expected;
  for (int r = 0; r < m.rows; ++r) {
    int field[5];
    for (int s = 0; s < 5; ++s) {
      float best = -1e30f;
      for (int k = 0; k < seg.width(s); ++k) {
        if (m.row(r)[seg.offset(s) + k] > best) {
          best = m.row(r)[seg.offset(s) + k];
          field[s] = k;
        }
      }
    }
    if (field[0] == vocab.pad_index()) continue;
    expected.push_back({field[0], std::min(field[1], field[3]), std::min(field[2], field[4]),
                        std::max(field[1], field[3]), std::max(field[2], field[4])});
  }
  CHECK(out.elements == expected);
  CHECK(is_valid(out, vocab.size()));
}

TEST_CASE("forced real rows never decode to PAD") {
  const auto& vocab = ClassVocabulary::clay();
  const auto tok = tokenize(Layout{}, vocab);
  const Layout out = untokenize(tok.matrix, vocab, {.force_real_rows = 3});
  CHECK(out.size() == 3);
}

TEST_CASE("quantization follows floor and clamps") {
  CHECK(quantize(0.5, kGridWidth) == 18);
  CHECK(quantize(1.0, kGridWidth) == 35);
  CHECK(quantize(1.0, kGridHeight) == 63);
  CHECK(quantize(0.0, kGridHeight) == 0);
  CHECK(quantize(-0.1, kGridHeight) == 0);
}

TEST_CASE("normalize_ingest quantizes a three-element record") {
  const auto rec = R"({"id": "r1", "dataset": "clay", "elements": [
      {"class": "BUTTON", "x_min": 0.1, "y_min": 0.2, "x_max": 0.5, "y_max": 0.3},
      {"class": "TEXT", "x_min": 0.0, "y_min": 0.0, "x_max": 1.0, "y_max": 1.0},
      {"class": "IMAGE", "x_min": 0.26, "y_min": 0.74, "x_max": 0.99, "y_max": 0.999}]})";
  const Layout l = normalize_ingest_text(rec, ClassVocabulary::clay());
  REQUIRE(l.size() == 3);
  // Hand-quantized: floor(v*36), floor(v*64), clamped.
  CHECK(l.elements[0] == Element{2, 3, 12, 18, 19});
  CHECK(l.elements[1] == Element{3, 0, 0, 35, 63});
  CHECK(l.elements[2] == Element{0, 9, 47, 35, 63});
  CHECK(l.source_id == "r1");
  CHECK(l.dataset == DatasetTag::clay);
}

TEST_CASE("normalize_ingest errors") {
  const auto& vocab = ClassVocabulary::clay();
  CHECK_THROWS_AS(normalize_ingest_text(R"({"elements": [{"class": "NOPE", "x_min": 0, "y_min": 0, "x_max": 0, "y_max": 0}]})", vocab),
                  ValidationError);
  CHECK_THROWS_AS(normalize_ingest_text("{not json", vocab), SchemaError);
  nlohmann::json big = {{"elements", nlohmann::json::array()}};
  for (int i = 0; i < 129; ++i) big["elements"].push_back({{"class", "TEXT"}, {"x_min", 0}, {"y_min", 0}, {"x_max", 0}, {"y_max", 0}});
  CHECK_THROWS_AS(normalize_ingest(big, vocab), ValidationError);
}

TEST_CASE("ingesting grid-aligned records is idempotent") {
  std::mt19937_64 gen(3);
  const auto& vocab = ClassVocabulary::rico_semantic();
  for (int i = 0; i < 500; ++i) {
    Layout l = testing::random_layout(gen, vocab.size(), 30);
    l.dataset = DatasetTag::rico_semantic;
    l.source_id = "x";
    CHECK(normalize_ingest(to_canonical_json(l, vocab), vocab) == l);
    CHECK(normalize_ingest(to_grid_json(l, vocab), vocab) == l);
  }
}

TEST_CASE("synthetic generator is deterministic and valid") {
  CHECK(generate_synthetic_dataset(50, 20, 9) == generate_synthetic_dataset(50, 20, 9));
  CHECK(generate_synthetic_dataset(5, 20, 9) != generate_synthetic_dataset(5, 20, 10));
  const auto one = generate_synthetic_dataset(1, 1, 0);
  REQUIRE(one.size() == 1);
  CHECK(one[0].size() == 1);
  for (const Layout& l : generate_synthetic_dataset(2000, 128, 4)) CHECK(is_valid(l, ClassVocabulary::clay().size()));
}

TEST_CASE("synthetic corpus element-count statistic") {
  const auto data = generate_synthetic_dataset(5000, 16, 2024);
  double total = 0;
  for (const Layout& l : data) total += l.size();
  const double mean = total / data.size();
  CHECK(mean >= 4.0);
  CHECK(mean <= 16.0);
  CHECK(mean == doctest::Approx(7.7804).epsilon(1e-9));
}

TEST_CASE("element count distribution") {
  std::vector<Layout> data(4);
  for (int i = 0; i < 2; ++i) data[0].elements.push_back({});
  for (int i = 0; i < 2; ++i) data[1].elements.push_back({});
  for (int i = 0; i < 3; ++i) data[2].elements.push_back({});
  for (int i = 0; i < 5; ++i) data[3].elements.push_back({});
  const auto p = element_count_distribution(data);
  CHECK(p(2) == 0.5);
  CHECK(p(3) == 0.25);
  CHECK(p(5) == 0.25);
  CHECK(p(1) == 0.0);

  const auto point = element_count_distribution({data[2]});
  CHECK(point(3) == 1.0);
  CHECK_THROWS_AS(element_count_distribution({}), InvalidArgument);

  const auto synth = generate_synthetic_dataset(5000, 24, 77);
  const auto q = element_count_distribution(synth);
  std::map<int, int> hist;
  for (const Layout& l : synth) hist[l.size()]++;
  double sum = 0;
  for (int n = 0; n <= kMaxElements; ++n) {
    sum += q(n);
    CHECK(q(n) == doctest::Approx(hist.count(n) ? hist[n] / 5000.0 : 0.0));
  }
  CHECK(sum == doctest::Approx(1.0));
}
