#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "play/layout.hpp"
#include "play/vocabulary.hpp"

namespace play {

// floor(v * extent) clamped to [0, extent - 1].
int quantize(double v, int extent);

// Canonical record: {"id", "dataset", "elements": [{"class", "x_min", ...}]}
// with normalized float coordinates. The grid variant uses "ix_min" etc.
// Throws ValidationError on unknown class or >128 elements, SchemaError on
// malformed input.
Layout normalize_ingest(const nlohmann::json& record, const ClassVocabulary& vocab);
Layout normalize_ingest_text(std::string_view json_line, const ClassVocabulary& vocab);

// Serializes to the grid-space variant (integer ix_* fields).
nlohmann::json to_grid_json(const Layout& layout, const ClassVocabulary& vocab);
// Serializes to the canonical normalized variant using cell centers, so
// re-ingesting reproduces the same cells.
nlohmann::json to_canonical_json(const Layout& layout, const ClassVocabulary& vocab);

// One record per line. Blank lines are skipped.
std::vector<Layout> read_jsonl(const std::string& path, const ClassVocabulary& vocab);
void write_jsonl(const std::string& path, const std::vector<Layout>& layouts, const ClassVocabulary& vocab);

}  // namespace play
