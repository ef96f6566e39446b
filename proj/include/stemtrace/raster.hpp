#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "stemtrace/mask.hpp"
#include "stemtrace/spline.hpp"

namespace stemtrace {

inline constexpr int kDefaultTau = 30;

struct Offset {
  int dx = 0;
  int dy = 0;
  friend auto operator<=>(const Offset&, const Offset&) = default;
};

/// Dilation footprint. Contains (0,0) and is symmetric under negation.
class StructuringElement {
 public:
  /// Horizontal run [x_begin, x_end] (inclusive) of offsets on one row.
  struct Run {
    int dy = 0;
    int x_begin = 0;
    int x_end = 0;
  };

  /// All offsets with dx^2 + dy^2 <= radius^2.
  static StructuringElement disk(int radius);

  /// Arbitrary footprint; throws Error(domain) if it misses the origin or is
  /// not symmetric, or if an offset lies outside the stated radius.
  static StructuringElement from_offsets(int radius, std::vector<Offset> offsets);

  int radius() const noexcept { return radius_; }
  /// Sorted by (dx, dy).
  const std::vector<Offset>& offsets() const noexcept { return offsets_; }
  /// Maximal horizontal runs, sorted by (dy, x_begin).
  const std::vector<Run>& runs() const noexcept { return runs_; }

 private:
  StructuringElement(int radius, std::vector<Offset> offsets);

  int radius_;
  std::vector<Offset> offsets_;
  std::vector<Run> runs_;
};

/// Rounds each sample to the nearest pixel (halves away from zero) and joins
/// consecutive pixels with integer line stepping. Anything outside the canvas
/// is clipped; an all-outside polyline yields an empty mask.
/// Coordinates saturate at +-2^30 before rounding.
BinaryMask rasterize_polyline(std::span<const Point2> samples, std::size_t width, std::size_t height);

/// Draws into an existing canvas (union with what is already there).
void draw_polyline(BinaryMask& canvas, std::span<const Point2> samples);

/// Output (x,y) is set iff some (dx,dy) in the element has (x-dx, y-dy) set.
/// Canvas size is unchanged; the footprint clips at the border.
BinaryMask dilate(const BinaryMask& mask, const StructuringElement& element,
                  const ExecPolicy& policy = {});

struct MaskParams {
  int tau = kDefaultTau;
  /// Unset uses default_samples_per_segment() per curve.
  std::optional<std::size_t> samples_per_segment;
  ExecPolicy exec;
};

/// Radius floor(tau/2); throws Error(domain) for tau < 1.
int dilation_radius(int tau);

/// dilate(rasterize_polyline(sample_curve(curve, n)), disk(floor(tau/2))), except
/// that centreline pixels up to the radius outside the canvas still paint it.
BinaryMask generate_stem_mask(const StemCurve& curve, int tau, std::size_t width, std::size_t height,
                              std::size_t samples_per_segment, const ExecPolicy& policy = {});

struct UnionMask {
  BinaryMask mask;
  /// Sampling actually used, one entry per curve.
  std::vector<std::size_t> samples_per_segment;
};

/// Union over curves of generate_stem_mask. Dilation distributes over union,
/// so all curves are drawn onto one canvas and dilated once.
UnionMask generate_union_mask(std::span<const StemCurve> curves, std::size_t width,
                              std::size_t height, const MaskParams& params = {});

}  // namespace stemtrace
