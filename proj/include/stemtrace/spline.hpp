#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace stemtrace {

/// Sub-pixel image coordinate. Always finite.
class Point2 {
 public:
  Point2() = default;
  /// Throws Error(domain) for NaN or infinite coordinates.
  Point2(double x, double y);

  double x() const noexcept { return x_; }
  double y() const noexcept { return y_; }

  friend bool operator==(const Point2&, const Point2&) = default;

 private:
  double x_ = 0.0;
  double y_ = 0.0;
};

/// Plain 2-vector for derivatives (pixels per unit t, or per unit t^2).
struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline constexpr int kSplineOrder = 4;

/// Uniform cubic B-spline weight B_k(t), k in [0,3], t in [0,1].
/// The four weights are non-negative and sum to one.
double basis(int k, double t);

/// dB_k/dt (order 1) or d2B_k/dt2 (order 2).
double basis_derivative(int k, double t, int derivative_order);

/// Q(t) = sum_k ctrl[k] * B_k(t). Requires exactly four points.
Point2 eval_segment(std::span<const Point2> ctrl, double t);

Vec2 eval_segment_derivative(std::span<const Point2> ctrl, double t, int derivative_order);

/// n - 3; throws Error(insufficient_control_points) below four points.
std::size_t num_segments(std::size_t n_control_points);

enum class EndMode {
  /// Plain uniform B-spline: the curve starts near, not at, the first point.
  open,
  /// First and last points are tripled so the curve reaches both ends.
  clamped,
};

/// Ordered base-to-tip control polygon of one stem.
class StemCurve {
 public:
  explicit StemCurve(std::vector<Point2> control_points, EndMode ends = EndMode::open);

  /// Points as given by the annotator.
  const std::vector<Point2>& control_points() const noexcept { return given_; }
  /// Points the segments are built from (tripled ends in clamped mode).
  std::span<const Point2> effective_points() const noexcept { return effective_; }
  EndMode end_mode() const noexcept { return ends_; }
  int order() const noexcept { return kSplineOrder; }
  std::size_t segment_count() const noexcept { return effective_.size() - 3; }
  std::span<const Point2> segment(std::size_t i) const;

  /// Sum of edge lengths of the effective control polygon.
  double polygon_length() const noexcept;

 private:
  std::vector<Point2> given_;
  std::vector<Point2> effective_;
  EndMode ends_;
};

struct CurveSample {
  std::size_t segment_index = 0;
  double t = 0.0;
  Point2 position;
};

/// Samples each segment at t = j/(n-1), dropping the repeated joint where
/// consecutive segments meet. Requires samples_per_segment >= 2.
std::vector<CurveSample> sample_curve(const StemCurve& curve, std::size_t samples_per_segment);

/// Upper bound on per-segment sampling accepted anywhere in the toolkit.
inline constexpr std::size_t kMaxSamplesPerSegment = std::size_t{1} << 20;

/// max(32, 2 * ceil(polygon_length / segment_count)), saturated at
/// kMaxSamplesPerSegment.
std::size_t default_samples_per_segment(const StemCurve& curve);

}  // namespace stemtrace
