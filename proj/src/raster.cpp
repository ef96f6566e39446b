#include "stemtrace/raster.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <thread>

#include "stemtrace/error.hpp"
#include "stemtrace/simd/kernels.hpp"

namespace stemtrace {

namespace {

constexpr double kCoordinateLimit = 1073741824.0;  // 2^30

int isqrt(int v) {
  int r = static_cast<int>(std::sqrt(static_cast<double>(v)));
  while (r * r > v) --r;
  while ((r + 1) * (r + 1) <= v) ++r;
  return r;
}

std::vector<StructuringElement::Run> build_runs(const std::vector<Offset>& offsets) {
  std::map<int, std::vector<int>> by_row;
  for (const Offset& o : offsets) by_row[o.dy].push_back(o.dx);
  std::vector<StructuringElement::Run> runs;
  for (auto& [dy, xs] : by_row) {
    std::sort(xs.begin(), xs.end());
    int begin = xs.front();
    int prev = begin;
    for (std::size_t i = 1; i < xs.size(); ++i) {
      if (xs[i] != prev + 1) {
        runs.push_back({dy, begin, prev});
        begin = xs[i];
      }
      prev = xs[i];
    }
    runs.push_back({dy, begin, prev});
  }
  return runs;
}

struct PixelPoint {
  std::int64_t x;
  std::int64_t y;
  bool operator==(const PixelPoint&) const = default;
};

std::int64_t round_coordinate(double v) {
  return static_cast<std::int64_t>(std::round(std::clamp(v, -kCoordinateLimit, kCoordinateLimit)));
}

// floor(num / den) for den > 0.
std::int64_t floor_div(__int128 num, __int128 den) {
  __int128 q = num / den;
  if ((num % den != 0) && (num < 0)) --q;
  return static_cast<std::int64_t>(q);
}

// Integer line from a to b. Step i along the major axis moves the minor axis
// by round(i * d_minor / d_major), ties toward the start point, which is the
// pixel choice of the incremental midpoint algorithm. Only the steps whose
// major coordinate lands on the canvas are visited.
void draw_line(BinaryMask& canvas, PixelPoint a, PixelPoint b) {
  const auto width = static_cast<std::int64_t>(canvas.width());
  const auto height = static_cast<std::int64_t>(canvas.height());
  const std::int64_t dx = b.x - a.x;
  const std::int64_t dy = b.y - a.y;
  const std::int64_t adx = dx < 0 ? -dx : dx;
  const std::int64_t ady = dy < 0 ? -dy : dy;
  const bool x_major = adx >= ady;

  const std::int64_t major0 = x_major ? a.x : a.y;
  const std::int64_t minor0 = x_major ? a.y : a.x;
  const std::int64_t major_step = (x_major ? dx : dy) < 0 ? -1 : 1;
  const std::int64_t minor_step = (x_major ? dy : dx) < 0 ? -1 : 1;
  const std::int64_t d_major = x_major ? adx : ady;
  const std::int64_t d_minor = x_major ? ady : adx;
  const std::int64_t major_limit = x_major ? width : height;
  const std::int64_t minor_limit = x_major ? height : width;

  // i such that 0 <= major0 + major_step * i < major_limit.
  std::int64_t lo = 0;
  std::int64_t hi = d_major;
  if (major_step > 0) {
    lo = std::max(lo, -major0);
    hi = std::min(hi, major_limit - 1 - major0);
  } else {
    lo = std::max(lo, major0 - (major_limit - 1));
    hi = std::min(hi, major0);
  }
  for (std::int64_t i = lo; i <= hi; ++i) {
    std::int64_t offset = 0;
    if (d_major > 0) {
      offset = floor_div(static_cast<__int128>(2) * i * d_minor + d_major - 1,
                         static_cast<__int128>(2) * d_major);
    }
    const std::int64_t major = major0 + major_step * i;
    const std::int64_t minor = minor0 + minor_step * offset;
    if (minor < 0 || minor >= minor_limit) continue;
    const auto px = static_cast<std::size_t>(x_major ? major : minor);
    const auto py = static_cast<std::size_t>(x_major ? minor : major);
    canvas.set(px, py);
  }
}

// Scratch rows for one worker: the source row embedded with margins on both
// sides so no shifted bit is lost before it can come back into range.
class RunDilator {
 public:
  RunDilator(std::size_t row_words, int max_reach, const simd::Kernels& kernels)
      : row_words_(row_words),
        margin_(static_cast<std::size_t>(max_reach) / 64 + 1),
        wide_words_(row_words + 2 * margin_),
        kernels_(kernels),
        window_(wide_words_),
        scratch_(wide_words_),
        result_(wide_words_) {}

  void load(std::span<const std::uint64_t> row) {
    std::fill(window_.begin(), window_.end(), 0);
    std::copy(row.begin(), row.end(), window_.begin() + static_cast<std::ptrdiff_t>(margin_));
    source_ = window_;
  }

  // OR over dx in [x_begin, x_end] of the loaded row shifted by dx.
  std::span<const std::uint64_t> run(int x_begin, int x_end) {
    window_ = source_;
    const std::ptrdiff_t length = x_end - x_begin + 1;
    std::ptrdiff_t covered = 1;
    while (covered * 2 <= length) {
      scratch_ = window_;
      kernels_.or_shifted(window_.data(), scratch_.data(), wide_words_, covered);
      covered *= 2;
    }
    if (covered < length) {
      // Windows [0, covered) and [length - covered, length) overlap.
      scratch_ = window_;
      kernels_.or_shifted(window_.data(), scratch_.data(), wide_words_, length - covered);
    }
    std::fill(result_.begin(), result_.end(), 0);
    kernels_.or_shifted(result_.data(), window_.data(), wide_words_, x_begin);
    return std::span<const std::uint64_t>(result_).subspan(margin_, row_words_);
  }

 private:
  std::size_t row_words_;
  std::size_t margin_;
  std::size_t wide_words_;
  const simd::Kernels& kernels_;
  std::vector<std::uint64_t> source_;
  std::vector<std::uint64_t> window_;
  std::vector<std::uint64_t> scratch_;
  std::vector<std::uint64_t> result_;
};

struct RunGroup {
  int x_begin;
  int x_end;
  std::vector<int> dys;
};

void dilate_rows(const BinaryMask& in, BinaryMask& out, const std::vector<RunGroup>& groups,
                 int min_dy, int max_dy, int max_reach, const std::vector<char>& nonempty,
                 std::size_t y_begin, std::size_t y_end, const simd::Kernels& kernels) {
  const auto height = static_cast<std::ptrdiff_t>(in.height());
  RunDilator dilator(in.words_per_row(), max_reach, kernels);
  const std::ptrdiff_t src_begin = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(y_begin) - max_dy);
  const std::ptrdiff_t src_end = std::min<std::ptrdiff_t>(height, static_cast<std::ptrdiff_t>(y_end) - min_dy);
  for (std::ptrdiff_t s = src_begin; s < src_end; ++s) {
    if (!nonempty[static_cast<std::size_t>(s)]) continue;
    dilator.load(in.row(static_cast<std::size_t>(s)));
    for (const RunGroup& g : groups) {
      std::span<const std::uint64_t> spread;
      for (int dy : g.dys) {
        const std::ptrdiff_t y = s + dy;
        if (y < static_cast<std::ptrdiff_t>(y_begin) || y >= static_cast<std::ptrdiff_t>(y_end)) continue;
        if (spread.empty()) spread = dilator.run(g.x_begin, g.x_end);
        kernels.or_words(out.row(static_cast<std::size_t>(y)).data(), spread.data(), spread.size());
      }
    }
  }
}

}  // namespace

StructuringElement::StructuringElement(int radius, std::vector<Offset> offsets)
    : radius_(radius), offsets_(std::move(offsets)) {
  std::sort(offsets_.begin(), offsets_.end());
  offsets_.erase(std::unique(offsets_.begin(), offsets_.end()), offsets_.end());
  runs_ = build_runs(offsets_);
}

StructuringElement StructuringElement::disk(int radius) {
  if (radius < 0) throw Error(ErrorCode::domain, "structuring element radius must be >= 0");
  std::vector<Offset> offsets;
  for (int dy = -radius; dy <= radius; ++dy) {
    const int half = isqrt(radius * radius - dy * dy);
    for (int dx = -half; dx <= half; ++dx) offsets.push_back({dx, dy});
  }
  return StructuringElement(radius, std::move(offsets));
}

StructuringElement StructuringElement::from_offsets(int radius, std::vector<Offset> offsets) {
  if (radius < 0) throw Error(ErrorCode::domain, "structuring element radius must be >= 0");
  std::sort(offsets.begin(), offsets.end());
  offsets.erase(std::unique(offsets.begin(), offsets.end()), offsets.end());
  const auto contains = [&](Offset o) { return std::binary_search(offsets.begin(), offsets.end(), o); };
  if (!contains({0, 0})) throw Error(ErrorCode::domain, "structuring element must contain (0,0)");
  for (const Offset& o : offsets) {
    if (static_cast<long>(o.dx) * o.dx + static_cast<long>(o.dy) * o.dy >
        static_cast<long>(radius) * radius) {
      throw Error(ErrorCode::domain, "offset (" + std::to_string(o.dx) + "," + std::to_string(o.dy) +
                                         ") lies outside radius " + std::to_string(radius));
    }
    if (!contains({-o.dx, -o.dy})) {
      throw Error(ErrorCode::domain, "structuring element must be symmetric under negation");
    }
  }
  return StructuringElement(radius, std::move(offsets));
}

namespace {

// Rasterizes with every rounded pixel moved by (shift, shift).
void draw_polyline_shifted(BinaryMask& canvas, std::span<const Point2> samples, std::int64_t shift) {
  if (samples.empty()) throw Error(ErrorCode::domain, "cannot rasterize an empty sample list");
  const auto pixel = [shift](const Point2& p) {
    return PixelPoint{round_coordinate(p.x()) + shift, round_coordinate(p.y()) + shift};
  };
  PixelPoint prev = pixel(samples[0]);
  draw_line(canvas, prev, prev);
  for (std::size_t i = 1; i < samples.size(); ++i) {
    const PixelPoint cur = pixel(samples[i]);
    if (cur == prev) continue;
    draw_line(canvas, prev, cur);
    prev = cur;
  }
}

// The width x height window of `padded` starting at (offset, offset).
BinaryMask crop(const BinaryMask& padded, std::size_t offset, std::size_t width, std::size_t height) {
  BinaryMask out(width, height);
  const std::size_t word_shift = offset / 64;
  const unsigned bit_shift = offset % 64;
  const std::size_t src_words = padded.words_per_row();
  for (std::size_t y = 0; y < height; ++y) {
    const auto src = padded.row(y + offset);
    const auto dst = out.row(y);
    for (std::size_t i = 0; i < dst.size(); ++i) {
      const std::size_t w = i + word_shift;
      std::uint64_t v = src[w] >> bit_shift;
      if (bit_shift != 0 && w + 1 < src_words) v |= src[w + 1] << (64 - bit_shift);
      dst[i] = v;
    }
  }
  out.clear_padding();
  return out;
}

// Centrelines just outside the canvas still paint its edge, so the
// centreline is drawn on a canvas padded by the dilation radius.
UnionMask render_union(std::span<const StemCurve> curves, std::size_t width, std::size_t height, int tau,
                       const std::function<std::size_t(const StemCurve&)>& samples_for, const ExecPolicy& policy) {
  const int radius = dilation_radius(tau);
  const auto pad = static_cast<std::size_t>(radius);
  BinaryMask canvas(width + 2 * pad, height + 2 * pad);
  std::vector<std::size_t> used;
  used.reserve(curves.size());
  std::vector<Point2> points;
  for (const StemCurve& curve : curves) {
    const std::size_t n = samples_for(curve);
    used.push_back(n);
    const auto samples = sample_curve(curve, n);
    points.clear();
    for (const auto& s : samples) points.push_back(s.position);
    draw_polyline_shifted(canvas, points, radius);
  }
  BinaryMask dilated = dilate(canvas, StructuringElement::disk(radius), policy);
  if (pad == 0) return {std::move(dilated), std::move(used)};
  return {crop(dilated, pad, width, height), std::move(used)};
}

}  // namespace

void draw_polyline(BinaryMask& canvas, std::span<const Point2> samples) { draw_polyline_shifted(canvas, samples, 0); }

BinaryMask rasterize_polyline(std::span<const Point2> samples, std::size_t width, std::size_t height) {
  if (samples.empty()) throw Error(ErrorCode::domain, "cannot rasterize an empty sample list");
  BinaryMask canvas(width, height);
  draw_polyline(canvas, samples);
  return canvas;
}

BinaryMask dilate(const BinaryMask& mask, const StructuringElement& element, const ExecPolicy& policy) {
  const simd::Kernels& kernels = policy.resolved_kernels();
  BinaryMask out(mask.width(), mask.height());

  std::vector<RunGroup> groups;
  int min_dy = 0;
  int max_dy = 0;
  int max_reach = 0;
  for (const auto& r : element.runs()) {
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const RunGroup& g) { return g.x_begin == r.x_begin && g.x_end == r.x_end; });
    if (it == groups.end()) {
      groups.push_back({r.x_begin, r.x_end, {}});
      it = std::prev(groups.end());
    }
    it->dys.push_back(r.dy);
    min_dy = std::min(min_dy, r.dy);
    max_dy = std::max(max_dy, r.dy);
    max_reach = std::max({max_reach, std::abs(r.x_begin), std::abs(r.x_end), r.x_end - r.x_begin + 1});
  }

  std::vector<char> nonempty(mask.height());
  for (std::size_t y = 0; y < mask.height(); ++y) {
    const auto row = mask.row(y);
    nonempty[y] = std::any_of(row.begin(), row.end(), [](std::uint64_t w) { return w != 0; });
  }

  const std::size_t threads = std::clamp<std::size_t>(policy.threads, 1, mask.height());
  if (threads == 1) {
    dilate_rows(mask, out, groups, min_dy, max_dy, max_reach, nonempty, 0, mask.height(), kernels);
  } else {
    // Disjoint output row bands; each worker only writes its own band.
    std::vector<std::jthread> workers;
    const std::size_t band = (mask.height() + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
      const std::size_t y0 = t * band;
      const std::size_t y1 = std::min(mask.height(), y0 + band);
      if (y0 >= y1) break;
      workers.emplace_back([&, y0, y1] {
        dilate_rows(mask, out, groups, min_dy, max_dy, max_reach, nonempty, y0, y1, kernels);
      });
    }
  }
  out.clear_padding();
  return out;
}

int dilation_radius(int tau) {
  if (tau < 1) throw Error(ErrorCode::domain, "tau must be >= 1, got " + std::to_string(tau));
  return tau / 2;
}

BinaryMask generate_stem_mask(const StemCurve& curve, int tau, std::size_t width, std::size_t height,
                              std::size_t samples_per_segment, const ExecPolicy& policy) {
  return render_union(std::span(&curve, 1), width, height, tau,
                      [samples_per_segment](const StemCurve&) { return samples_per_segment; }, policy)
      .mask;
}

UnionMask generate_union_mask(std::span<const StemCurve> curves, std::size_t width,
                              std::size_t height, const MaskParams& params) {
  return render_union(
      curves, width, height, params.tau,
      [&params](const StemCurve& c) { return params.samples_per_segment.value_or(default_samples_per_segment(c)); },
      params.exec);
}

}  // namespace stemtrace
