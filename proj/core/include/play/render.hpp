#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "play/guidelines.hpp"
#include "play/layout.hpp"
#include "play/vocabulary.hpp"

namespace play {

struct RenderOptions {
  bool show_guidelines = false;
  GuidelineSet guidelines;
  // Canvas width in pixels; height keeps the 36:64 aspect.
  int canvas_px = 288;
  std::string background = "#ffffff";
  std::string guideline_color = "#ff0000";
};

// SVG 1.1 document. Elements are painted in order; degenerate boxes become
// 1-px lines. Output is byte-stable for fixed inputs.
std::string render_svg(const Layout& layout, const ClassVocabulary& vocab, const RenderOptions& options = {});

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};
Rgb parse_color(std::string_view hex);

struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel

  Image() = default;
  Image(int w, int h, Rgb fill);
  Rgb at(int x, int y) const;
  void set(int x, int y, Rgb c);
  bool operator==(const Image&) const = default;
};

// Rasterizes the subset of SVG that render_svg emits (rect and line).
Image rasterize(std::string_view svg, int width_px);

inline constexpr std::string_view kPaddingColor = "#ffffff";

// Square image of side `size_px`: the layout rendered at full height and
// letterboxed horizontally with kPaddingColor.
Image render_padded(const Layout& layout, const ClassVocabulary& vocab, int size_px);

std::vector<std::uint8_t> encode_png(const Image& image);
void write_png(const std::string& path, const Image& image);
void write_text(const std::string& path, std::string_view text);

}  // namespace play
