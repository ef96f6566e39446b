#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stemtrace::oracle {

std::pair<double, double> matrix_form_point(const std::vector<Point2>& ctrl4, double t) {
  static constexpr long double kM[4][4] = {
      {-1, 3, -3, 1},
      {3, -6, 3, 0},
      {-3, 0, 3, 0},
      {1, 4, 1, 0},
  };
  const long double lt = t;
  const long double powers[4] = {lt * lt * lt, lt * lt, lt, 1.0L};
  long double x = 0;
  long double y = 0;
  for (int k = 0; k < 4; ++k) {
    long double w = 0;
    for (int row = 0; row < 4; ++row) w += powers[row] * kM[row][k];
    w /= 6.0L;
    x += w * ctrl4[static_cast<std::size_t>(k)].x();
    y += w * ctrl4[static_cast<std::size_t>(k)].y();
  }
  return {static_cast<double>(x), static_cast<double>(y)};
}

std::vector<std::pair<long, long>> midpoint_line(long x0, long y0, long x1, long y1) {
  std::vector<std::pair<long, long>> pixels;
  const long dx = std::labs(x1 - x0);
  const long dy = std::labs(y1 - y0);
  const long sx = x1 >= x0 ? 1 : -1;
  const long sy = y1 >= y0 ? 1 : -1;
  long x = x0;
  long y = y0;
  if (dx >= dy) {
    long d = 2 * dy - dx;
    for (long i = 0; i <= dx; ++i) {
      pixels.emplace_back(x, y);
      if (d > 0) {
        y += sy;
        d -= 2 * dx;
      }
      d += 2 * dy;
      x += sx;
    }
  } else {
    long d = 2 * dx - dy;
    for (long i = 0; i <= dy; ++i) {
      pixels.emplace_back(x, y);
      if (d > 0) {
        x += sx;
        d -= 2 * dy;
      }
      d += 2 * dx;
      y += sy;
    }
  }
  return pixels;
}

std::size_t disk_cardinality(int radius) {
  std::size_t n = 0;
  for (int dy = -radius; dy <= radius; ++dy)
    for (int dx = -radius; dx <= radius; ++dx)
      if (dx * dx + dy * dy <= radius * radius) ++n;
  return n;
}

std::vector<Offset> disk_offsets(int radius) {
  std::vector<Offset> out;
  for (int dy = -radius; dy <= radius; ++dy)
    for (int dx = -radius; dx <= radius; ++dx)
      if (dx * dx + dy * dy <= radius * radius) out.push_back({dx, dy});
  return out;
}

BinaryMask brute_dilate(const BinaryMask& mask, const std::vector<Offset>& offsets) {
  BinaryMask out(mask.width(), mask.height());
  const auto w = static_cast<long>(mask.width());
  const auto h = static_cast<long>(mask.height());
  for (long y = 0; y < h; ++y) {
    for (long x = 0; x < w; ++x) {
      for (const Offset& o : offsets) {
        const long sx = x - o.dx;
        const long sy = y - o.dy;
        if (sx < 0 || sy < 0 || sx >= w || sy >= h) continue;
        if (mask.get(static_cast<std::size_t>(sx), static_cast<std::size_t>(sy))) {
          out.set(static_cast<std::size_t>(x), static_cast<std::size_t>(y));
          break;
        }
      }
    }
  }
  return out;
}

ConfusionCounts naive_confusion(const BinaryMask& pred, const BinaryMask& gt) {
  ConfusionCounts c;
  for (std::size_t y = 0; y < pred.height(); ++y) {
    for (std::size_t x = 0; x < pred.width(); ++x) {
      const bool p = pred.get(x, y);
      const bool g = gt.get(x, y);
      if (p && g) ++c.tp;
      else if (p) ++c.fp;
      else if (g) ++c.fn_;
      else ++c.tn;
    }
  }
  return c;
}

BinaryMask random_mask(std::mt19937_64& rng, std::size_t width, std::size_t height, double density) {
  BinaryMask m(width, height);
  std::bernoulli_distribution bit(density);
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x)
      if (bit(rng)) m.set(x, y);
  return m;
}

std::vector<std::pair<double, double>> dense_curve(const StemCurve& curve) {
  std::vector<std::pair<double, double>> out;
  const auto pts = curve.effective_points();
  for (std::size_t s = 0; s + 3 < pts.size(); ++s) {
    double poly = 0.0;
    for (std::size_t k = s + 1; k <= s + 3; ++k) poly += std::hypot(pts[k].x() - pts[k - 1].x(), pts[k].y() - pts[k - 1].y());
    const std::size_t n = 4 * static_cast<std::size_t>(std::ceil(poly)) + 2;
    const std::vector<Point2> ctrl(pts.begin() + static_cast<std::ptrdiff_t>(s),
                                   pts.begin() + static_cast<std::ptrdiff_t>(s) + 4);
    for (std::size_t j = 0; j < n; ++j) {
      out.push_back(matrix_form_point(ctrl, static_cast<double>(j) / static_cast<double>(n - 1)));
    }
  }
  return out;
}

std::vector<double> distance_field(const std::vector<std::pair<double, double>>& polyline, std::size_t width,
                                   std::size_t height, double cap) {
  std::vector<double> best(width * height, std::numeric_limits<double>::infinity());
  const auto update_segment = [&](std::pair<double, double> a, std::pair<double, double> b) {
    const double x_lo = std::max(0.0, std::floor(std::min(a.first, b.first) - cap));
    const double x_hi = std::min(static_cast<double>(width) - 1, std::ceil(std::max(a.first, b.first) + cap));
    const double y_lo = std::max(0.0, std::floor(std::min(a.second, b.second) - cap));
    const double y_hi = std::min(static_cast<double>(height) - 1, std::ceil(std::max(a.second, b.second) + cap));
    if (x_lo > x_hi || y_lo > y_hi) return;
    const double vx = b.first - a.first;
    const double vy = b.second - a.second;
    const double len2 = vx * vx + vy * vy;
    for (auto y = static_cast<std::size_t>(y_lo); y <= static_cast<std::size_t>(y_hi); ++y) {
      for (auto x = static_cast<std::size_t>(x_lo); x <= static_cast<std::size_t>(x_hi); ++x) {
        const double px = static_cast<double>(x) - a.first;
        const double py = static_cast<double>(y) - a.second;
        double t = len2 > 0 ? (px * vx + py * vy) / len2 : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        const double d = std::hypot(px - t * vx, py - t * vy);
        double& slot = best[y * width + x];
        if (d < slot) slot = d;
      }
    }
  };
  if (polyline.size() == 1) update_segment(polyline[0], polyline[0]);
  for (std::size_t i = 1; i < polyline.size(); ++i) update_segment(polyline[i - 1], polyline[i]);
  for (double& d : best)
    if (d > cap) d = std::numeric_limits<double>::infinity();
  return best;
}

GeometryCheck check_geometry(const BinaryMask& mask, const std::vector<double>& distance, int radius) {
  GeometryCheck c;
  const double outer = radius + 1.5;
  const double inner = radius - 1.5;
  for (std::size_t y = 0; y < mask.height(); ++y) {
    for (std::size_t x = 0; x < mask.width(); ++x) {
      const double d = distance[y * mask.width() + x];
      if (mask.get(x, y)) {
        c.worst_set_distance = std::max(c.worst_set_distance, d);
        if (d > outer) ++c.set_too_far;
      } else if (d <= inner) {
        ++c.missing_near;
      }
    }
  }
  return c;
}

StemCurve random_curve(std::mt19937_64& rng, std::size_t points, double lo, double hi) {
  std::uniform_real_distribution<double> coord(lo, hi);
  std::vector<Point2> ctrl;
  for (std::size_t i = 0; i < points; ++i) ctrl.emplace_back(coord(rng), coord(rng));
  return StemCurve(std::move(ctrl));
}

}  // namespace stemtrace::oracle
