#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "stemtrace/raster.hpp"
#include "stemtrace/spline.hpp"

namespace stemtrace {

/// One image's worth of control points, base-to-tip per stem.
struct ControlPointAnnotation {
  std::string image_id;
  std::size_t image_width = 0;
  std::size_t image_height = 0;
  std::vector<std::vector<Point2>> stems;
  int tau = kDefaultTau;

  friend bool operator==(const ControlPointAnnotation&, const ControlPointAnnotation&) = default;
};

/// Throws Error(validation) / Error(insufficient_control_points) /
/// Error(no_stems) when the invariants do not hold: positive dimensions,
/// 1 <= tau <= max(width, height), at least one stem, >= 4 points per stem, every point within
/// one image diagonal of the canvas.
void validate(const ControlPointAnnotation& annotation);

struct ParseDiagnostics {
  /// Shapes that are not stems (other labels or shape types).
  std::size_t ignored_shapes = 0;
};

/// Reads a LabelMe document. Stems are shapes labelled "stem" of type
/// "linestrip", or "point" shapes labelled "stem" sharing a group_id (in
/// order of occurrence). image_id comes from the imagePath file stem, else
/// from fallback_image_id. A top-level "tau" wins over per-shape "tau".
ControlPointAnnotation parse_annotation(std::string_view json_text,
                                        std::string_view fallback_image_id = {},
                                        ParseDiagnostics* diagnostics = nullptr);

/// LabelMe document with one "linestrip" per stem and a top-level "tau".
std::string write_annotation(const ControlPointAnnotation& annotation);

std::vector<StemCurve> to_curves(const ControlPointAnnotation& annotation, EndMode ends = EndMode::open);

}  // namespace stemtrace
