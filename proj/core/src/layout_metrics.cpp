#include "play/layout_metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "play/error.hpp"

namespace play {

namespace {

double area(const Element& e) { return static_cast<double>(e.width()) * e.height(); }

double intersection(const Element& a, const Element& b) {
  const int w = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const int h = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  return w > 0 && h > 0 ? static_cast<double>(w) * h : 0.0;
}

std::array<double, 6> alignment_lines(const Element& e) {
  const double l = static_cast<double>(e.x_min) / kGridWidth, r = static_cast<double>(e.x_max) / kGridWidth;
  const double t = static_cast<double>(e.y_min) / kGridHeight, b = static_cast<double>(e.y_max) / kGridHeight;
  return {l, (l + r) / 2, r, t, (t + b) / 2, b};
}

}  // namespace

double layout_iou(const Layout& layout) {
  double sum = 0.0;
  int pairs = 0;
  for (int i = 0; i < layout.size(); ++i) {
    for (int j = i + 1; j < layout.size(); ++j) {
      const double inter = intersection(layout.elements[i], layout.elements[j]);
      if (inter <= 0.0) continue;
      sum += inter / (area(layout.elements[i]) + area(layout.elements[j]) - inter);
      ++pairs;
    }
  }
  return pairs ? sum / pairs : 0.0;
}

double layout_overlap(const Layout& layout) {
  std::array<int, kGridWidth * kGridHeight> cover{};
  for (const Element& e : layout.elements) {
    for (int y = e.y_min; y < e.y_max; ++y) {
      for (int x = e.x_min; x < e.x_max; ++x) ++cover[y * kGridWidth + x];
    }
  }
  long total = 0, shared = 0;
  for (int c : cover) {
    total += c;
    if (c >= 2) shared += c;
  }
  return total ? static_cast<double>(shared) / total : 0.0;
}

double layout_alignment(const Layout& layout) {
  if (layout.size() < 2) return 0.0;
  double sum = 0.0;
  for (int i = 0; i < layout.size(); ++i) {
    const auto li = alignment_lines(layout.elements[i]);
    double best = std::numeric_limits<double>::infinity();
    for (int j = 0; j < layout.size(); ++j) {
      if (j == i) continue;
      const auto lj = alignment_lines(layout.elements[j]);
      for (int k = 0; k < 6; ++k) best = std::min(best, std::abs(li[k] - lj[k]));
    }
    sum += best;
  }
  return sum / layout.size();
}

GeometricMetrics geometric_metrics(const std::vector<Layout>& layouts) {
  if (layouts.empty()) throw InvalidArgument("geometric metrics of an empty corpus", "layouts");
  GeometricMetrics m;
  for (const Layout& l : layouts) {
    m.iou += layout_iou(l);
    m.overlap += layout_overlap(l);
    m.alignment += layout_alignment(l);
  }
  const double n = static_cast<double>(layouts.size());
  m.iou /= n;
  m.overlap /= n;
  m.alignment /= n;
  return m;
}

std::vector<int> max_weight_assignment(const std::vector<std::vector<double>>& weights) {
  const int rows = static_cast<int>(weights.size());
  const int cols = rows ? static_cast<int>(weights.front().size()) : 0;
  const int n = std::max(rows, cols);
  if (n == 0) return {};
  double top = 0.0;
  for (const auto& r : weights) {
    for (double w : r) top = std::max(top, w);
  }
  // Hungarian algorithm (potentials form) on the square cost top - w.
  auto cost = [&](int i, int j) { return (i < rows && j < cols) ? top - weights[i][j] : top; };
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> match(rows, -1);
  for (int j = 1; j <= n; ++j) {
    if (p[j] - 1 < rows && j - 1 < cols) match[p[j] - 1] = j - 1;
  }
  return match;
}

double docsim_kernel(const Element& a, const Element& b) {
  if (a.class_id != b.class_id) return 0.0;
  auto norm = [](const Element& e) {
    return std::array<double, 4>{static_cast<double>(e.x_min) / kGridWidth, static_cast<double>(e.y_min) / kGridHeight,
                                 static_cast<double>(e.width()) / kGridWidth,
                                 static_cast<double>(e.height()) / kGridHeight};
  };
  const auto na = norm(a), nb = norm(b);
  const double dcx = (na[0] + na[2] / 2) - (nb[0] + nb[2] / 2);
  const double dcy = (na[1] + na[3] / 2) - (nb[1] + nb[3] / 2);
  const double center = std::sqrt(dcx * dcx + dcy * dcy);
  const double size = std::abs(na[2] - nb[2]) + std::abs(na[3] - nb[3]);
  const double alpha = std::sqrt(std::min(na[2] * na[3], nb[2] * nb[3]));
  return alpha * std::exp2(-center - 2.0 * size);
}

double docsim(const Layout& a, const Layout& b) {
  const int denom = std::max(a.size(), b.size());
  if (denom == 0) return 0.0;
  std::vector<std::vector<double>> w(a.size(), std::vector<double>(b.size(), 0.0));
  for (int i = 0; i < a.size(); ++i) {
    for (int j = 0; j < b.size(); ++j) w[i][j] = docsim_kernel(a.elements[i], b.elements[j]);
  }
  const auto match = max_weight_assignment(w);
  double total = 0.0;
  for (int i = 0; i < a.size(); ++i) {
    if (match[i] >= 0) total += w[i][match[i]];
  }
  return total / denom;
}

double docsim(const std::vector<std::pair<Layout, Layout>>& pairs) {
  if (pairs.empty()) throw InvalidArgument("docsim of an empty pair list", "pairs");
  double sum = 0.0;
  for (const auto& [a, b] : pairs) sum += docsim(a, b);
  return sum / static_cast<double>(pairs.size());
}

}  // namespace play
