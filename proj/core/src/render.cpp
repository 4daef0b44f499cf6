#include "play/render.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>

#include "play/error.hpp"

namespace play {

namespace {

// Fixed 3-decimal formatting with trailing zeros trimmed.
std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  std::string s(buf);
  while (s.back() == '0') s.pop_back();
  if (s.back() == '.') s.pop_back();
  if (s == "-0") s = "0";
  return s;
}

}  // namespace

std::string render_svg(const Layout& layout, const ClassVocabulary& vocab, const RenderOptions& options) {
  if (options.canvas_px < 1) throw InvalidArgument("canvas_px must be positive", "canvas_px");
  validate(layout);
  for (const Element& e : layout.elements) vocab.color(e.class_id);  // throws on unknown class

  const double s = static_cast<double>(options.canvas_px) / kGridWidth;
  const double width = options.canvas_px;
  const double height = s * kGridHeight;
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"no\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << num(width) << "\" height=\""
      << num(height) << "\" viewBox=\"0 0 " << num(width) << " " << num(height) << "\">\n"
      << "  <rect x=\"0\" y=\"0\" width=\"" << num(width) << "\" height=\"" << num(height) << "\" fill=\""
      << options.background << "\"/>\n";
  for (int i = 0; i < layout.size(); ++i) {
    const Element& e = layout.elements[i];
    const std::string meta = "data-index=\"" + std::to_string(i) + "\" data-class=\"" + vocab.name(e.class_id) + "\"";
    if (e.width() == 0 || e.height() == 0) {
      out << "  <line " << meta << " x1=\"" << num(e.x_min * s) << "\" y1=\"" << num(e.y_min * s) << "\" x2=\""
          << num(e.x_max * s) << "\" y2=\"" << num(e.y_max * s) << "\" stroke=\"" << kStrokeColor
          << "\" stroke-width=\"1\" stroke-linecap=\"square\"/>\n";
      continue;
    }
    out << "  <rect " << meta << " x=\"" << num(e.x_min * s) << "\" y=\"" << num(e.y_min * s) << "\" width=\""
        << num(e.width() * s) << "\" height=\"" << num(e.height() * s) << "\" fill=\"" << vocab.color(e.class_id)
        << "\" stroke=\"" << kStrokeColor << "\" stroke-width=\"1\"/>\n";
  }
  if (options.show_guidelines) {
    for (const Guideline& g : options.guidelines) {
      const double p = g.position * s;
      const bool v = g.axis == Axis::vertical;
      out << "  <line class=\"guideline\" x1=\"" << num(v ? p : 0) << "\" y1=\"" << num(v ? 0 : p) << "\" x2=\""
          << num(v ? p : width) << "\" y2=\"" << num(v ? height : p) << "\" stroke=\"" << options.guideline_color
          << "\" stroke-width=\"1\"/>\n";
    }
  }
  out << "</svg>\n";
  return out.str();
}

Rgb parse_color(std::string_view hex) {
  if (hex.size() != 7 || hex[0] != '#') throw ValidationError("bad color '" + std::string(hex) + "'", "color");
  auto byte = [&](int at) {
    unsigned v = 0;
    for (int k = 0; k < 2; ++k) {
      const char c = hex[at + k];
      v <<= 4;
      if (c >= '0' && c <= '9') v |= c - '0';
      else if (c >= 'a' && c <= 'f') v |= c - 'a' + 10;
      else if (c >= 'A' && c <= 'F') v |= c - 'A' + 10;
      else throw ValidationError("bad color '" + std::string(hex) + "'", "color");
    }
    return static_cast<std::uint8_t>(v);
  };
  return {byte(1), byte(3), byte(5)};
}

Image::Image(int w, int h, Rgb fill) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3) {
  for (std::size_t i = 0; i < rgb.size(); i += 3) {
    rgb[i] = fill.r;
    rgb[i + 1] = fill.g;
    rgb[i + 2] = fill.b;
  }
}

Rgb Image::at(int x, int y) const {
  const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
  return {rgb[i], rgb[i + 1], rgb[i + 2]};
}

void Image::set(int x, int y, Rgb c) {
  if (x < 0 || y < 0 || x >= width || y >= height) return;
  const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
  rgb[i] = c.r;
  rgb[i + 1] = c.g;
  rgb[i + 2] = c.b;
}

namespace {

using Attributes = std::map<std::string, std::string>;

Attributes parse_attributes(const std::string& body) {
  static const std::regex attr(R"re(([a-zA-Z_:-]+)="([^"]*)")re");
  Attributes out;
  for (auto it = std::sregex_iterator(body.begin(), body.end(), attr); it != std::sregex_iterator(); ++it) {
    out[(*it)[1]] = (*it)[2];
  }
  return out;
}

double number(const Attributes& a, const char* key, double fallback = 0.0) {
  const auto it = a.find(key);
  return it == a.end() ? fallback : std::stod(it->second);
}

// Pixels whose centers fall in [x0, x1) x [y0, y1).
void fill_box(Image& img, double x0, double y0, double x1, double y1, Rgb c) {
  const int ix0 = std::max(0, static_cast<int>(std::ceil(x0 - 0.5)));
  const int ix1 = std::min(img.width, static_cast<int>(std::ceil(x1 - 0.5)));
  const int iy0 = std::max(0, static_cast<int>(std::ceil(y0 - 0.5)));
  const int iy1 = std::min(img.height, static_cast<int>(std::ceil(y1 - 0.5)));
  for (int y = iy0; y < iy1; ++y) {
    for (int x = ix0; x < ix1; ++x) img.set(x, y, c);
  }
}

}  // namespace

Image rasterize(std::string_view svg_text, int width_px) {
  if (width_px < 1) throw InvalidArgument("width_px must be positive", "width_px");
  const std::string svg(svg_text);
  static const std::regex root(R"re(<svg\s([^>]*)>)re");
  std::smatch m;
  if (!std::regex_search(svg, m, root)) throw SchemaError("not an SVG document");
  const Attributes ra = parse_attributes(m[1]);
  const double sw = number(ra, "width");
  const double sh = number(ra, "height");
  if (sw <= 0 || sh <= 0) throw SchemaError("SVG root needs positive width and height");
  const double k = width_px / sw;
  Image img(width_px, std::max(1, static_cast<int>(std::lround(sh * k))), Rgb{0, 0, 0});

  static const std::regex shape(R"re(<(rect|line)\s([^>]*)/>)re");
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), shape); it != std::sregex_iterator(); ++it) {
    const Attributes a = parse_attributes((*it)[2]);
    const double stroke_w = number(a, "stroke-width", 1.0) * k;
    const double h = stroke_w / 2;
    if ((*it)[1] == "rect") {
      const double x = number(a, "x") * k, y = number(a, "y") * k;
      const double w = number(a, "width") * k, ht = number(a, "height") * k;
      if (a.count("fill") && a.at("fill") != "none") fill_box(img, x, y, x + w, y + ht, parse_color(a.at("fill")));
      if (a.count("stroke")) {
        const Rgb c = parse_color(a.at("stroke"));
        fill_box(img, x - h, y - h, x + w + h, y + h, c);
        fill_box(img, x - h, y + ht - h, x + w + h, y + ht + h, c);
        fill_box(img, x - h, y - h, x + h, y + ht + h, c);
        fill_box(img, x + w - h, y - h, x + w + h, y + ht + h, c);
      }
    } else {
      double x1 = number(a, "x1") * k, y1 = number(a, "y1") * k;
      double x2 = number(a, "x2") * k, y2 = number(a, "y2") * k;
      if (x1 > x2) std::swap(x1, x2);
      if (y1 > y2) std::swap(y1, y2);
      const double cap = a.count("stroke-linecap") && a.at("stroke-linecap") == "square" ? h : 0.0;
      const Rgb c = parse_color(a.count("stroke") ? a.at("stroke") : std::string("#000000"));
      if (x1 == x2) fill_box(img, x1 - h, y1 - cap, x1 + h, y2 + cap, c);
      else if (y1 == y2) fill_box(img, x1 - cap, y1 - h, x2 + cap, y1 + h, c);
      else throw SchemaError("only axis-aligned lines are supported");
    }
  }
  return img;
}

Image render_padded(const Layout& layout, const ClassVocabulary& vocab, int size_px) {
  RenderOptions opt;
  opt.canvas_px = size_px * kGridWidth / kGridHeight;
  const Image inner = rasterize(render_svg(layout, vocab, opt), opt.canvas_px);
  Image out(size_px, size_px, parse_color(kPaddingColor));
  const int x0 = (size_px - inner.width) / 2;
  for (int y = 0; y < std::min(inner.height, size_px); ++y) {
    for (int x = 0; x < inner.width; ++x) out.set(x0 + x, y, inner.at(x, y));
  }
  return out;
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

void put_chunk(std::vector<std::uint8_t>& out, const char* type, const std::vector<std::uint8_t>& data) {
  put_u32(out, static_cast<std::uint32_t>(data.size()));
  const std::size_t start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  const uLong crc = crc32(0L, out.data() + start, static_cast<uInt>(out.size() - start));
  put_u32(out, static_cast<std::uint32_t>(crc));
}

}  // namespace

std::vector<std::uint8_t> encode_png(const Image& image) {
  std::vector<std::uint8_t> out{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  std::vector<std::uint8_t> ihdr;
  put_u32(ihdr, static_cast<std::uint32_t>(image.width));
  put_u32(ihdr, static_cast<std::uint32_t>(image.height));
  ihdr.insert(ihdr.end(), {8, 2, 0, 0, 0});  // 8-bit RGB
  put_chunk(out, "IHDR", ihdr);

  std::vector<std::uint8_t> raw;
  raw.reserve(static_cast<std::size_t>(image.height) * (image.width * 3 + 1));
  for (int y = 0; y < image.height; ++y) {
    raw.push_back(0);
    const auto* row = image.rgb.data() + static_cast<std::size_t>(y) * image.width * 3;
    raw.insert(raw.end(), row, row + image.width * 3);
  }
  uLongf len = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> idat(len);
  if (compress2(idat.data(), &len, raw.data(), static_cast<uLong>(raw.size()), 9) != Z_OK) {
    throw Error("PNG compression failed");
  }
  idat.resize(len);
  put_chunk(out, "IDAT", idat);
  put_chunk(out, "IEND", {});
  return out;
}

void write_png(const std::string& path, const Image& image) {
  const auto bytes = encode_png(image);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path, "path");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void write_text(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path, "path");
  out << text;
}

}  // namespace play
