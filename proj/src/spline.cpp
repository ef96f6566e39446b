#include "stemtrace/spline.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "stemtrace/error.hpp"

namespace stemtrace {

namespace {

void check_t(double t) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw Error(ErrorCode::domain, "spline parameter t must lie in [0, 1], got " + std::to_string(t));
  }
}

void check_k(int k) {
  if (k < 0 || k > 3) {
    throw Error(ErrorCode::domain, "basis index must be in {0,1,2,3}, got " + std::to_string(k));
  }
}

void check_arity(std::span<const Point2> ctrl) {
  if (ctrl.size() != 4) {
    throw Error(ErrorCode::domain,
                "a cubic segment needs exactly 4 control points, got " + std::to_string(ctrl.size()));
  }
}

// Unchecked weights; callers validate t.
std::array<double, 4> weights(double t) {
  const double s = 1.0 - t;
  const double t2 = t * t;
  const double t3 = t2 * t;
  return {s * s * s / 6.0, (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0,
          (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0, t3 / 6.0};
}

std::array<double, 4> first_derivative_weights(double t) {
  const double s = 1.0 - t;
  const double t2 = t * t;
  return {-0.5 * s * s, 1.5 * t2 - 2.0 * t, -1.5 * t2 + t + 0.5, 0.5 * t2};
}

std::array<double, 4> second_derivative_weights(double t) {
  return {1.0 - t, 3.0 * t - 2.0, 1.0 - 3.0 * t, t};
}

}  // namespace

Point2::Point2(double x, double y) : x_(x), y_(y) {
  if (!std::isfinite(x) || !std::isfinite(y)) {
    throw Error(ErrorCode::domain, "point coordinates must be finite");
  }
}

double basis(int k, double t) {
  check_k(k);
  check_t(t);
  return weights(t)[static_cast<std::size_t>(k)];
}

double basis_derivative(int k, double t, int derivative_order) {
  check_k(k);
  check_t(t);
  switch (derivative_order) {
    case 1: return first_derivative_weights(t)[static_cast<std::size_t>(k)];
    case 2: return second_derivative_weights(t)[static_cast<std::size_t>(k)];
    default:
      throw Error(ErrorCode::domain,
                  "derivative order must be 1 or 2, got " + std::to_string(derivative_order));
  }
}

Point2 eval_segment(std::span<const Point2> ctrl, double t) {
  check_arity(ctrl);
  check_t(t);
  // Offsets from the first point, so coincident points come back exactly.
  const auto w = weights(t);
  double x = 0.0;
  double y = 0.0;
  for (std::size_t k = 1; k < 4; ++k) {
    x += w[k] * (ctrl[k].x() - ctrl[0].x());
    y += w[k] * (ctrl[k].y() - ctrl[0].y());
  }
  return {ctrl[0].x() + x, ctrl[0].y() + y};
}

Vec2 eval_segment_derivative(std::span<const Point2> ctrl, double t, int derivative_order) {
  check_arity(ctrl);
  check_t(t);
  std::array<double, 4> w{};
  if (derivative_order == 1) {
    w = first_derivative_weights(t);
  } else if (derivative_order == 2) {
    w = second_derivative_weights(t);
  } else {
    throw Error(ErrorCode::domain,
                "derivative order must be 1 or 2, got " + std::to_string(derivative_order));
  }
  // Derivative weights sum to zero, so differences against ctrl[0] give the
  // same value and an exact zero for coincident points.
  Vec2 d;
  for (std::size_t k = 1; k < 4; ++k) {
    d.x += w[k] * (ctrl[k].x() - ctrl[0].x());
    d.y += w[k] * (ctrl[k].y() - ctrl[0].y());
  }
  return d;
}

std::size_t num_segments(std::size_t n_control_points) {
  if (n_control_points < 4) {
    throw Error(ErrorCode::insufficient_control_points,
                "insufficient control points: a cubic B-spline needs at least 4, got " +
                    std::to_string(n_control_points));
  }
  return n_control_points - 3;
}

StemCurve::StemCurve(std::vector<Point2> control_points, EndMode ends)
    : given_(std::move(control_points)), ends_(ends) {
  num_segments(given_.size());
  if (ends_ == EndMode::clamped) {
    effective_.reserve(given_.size() + 4);
    effective_.insert(effective_.end(), 2, given_.front());
    effective_.insert(effective_.end(), given_.begin(), given_.end());
    effective_.insert(effective_.end(), 2, given_.back());
  } else {
    effective_ = given_;
  }
}

std::span<const Point2> StemCurve::segment(std::size_t i) const {
  if (i >= segment_count()) {
    throw Error(ErrorCode::domain, "segment index " + std::to_string(i) + " out of range");
  }
  return std::span<const Point2>(effective_).subspan(i, 4);
}

double StemCurve::polygon_length() const noexcept {
  double len = 0.0;
  for (std::size_t i = 1; i < effective_.size(); ++i) {
    len += std::hypot(effective_[i].x() - effective_[i - 1].x(),
                      effective_[i].y() - effective_[i - 1].y());
  }
  return len;
}

std::vector<CurveSample> sample_curve(const StemCurve& curve, std::size_t samples_per_segment) {
  if (samples_per_segment < 2) {
    throw Error(ErrorCode::domain, "samples_per_segment must be at least 2");
  }
  const std::size_t segments = curve.segment_count();
  std::vector<CurveSample> out;
  out.reserve(segments * (samples_per_segment - 1) + 1);
  const double step = 1.0 / static_cast<double>(samples_per_segment - 1);
  for (std::size_t s = 0; s < segments; ++s) {
    const auto ctrl = curve.segment(s);
    // Sample j = 0 of every segment after the first is the previous joint.
    for (std::size_t j = (s == 0 ? 0 : 1); j < samples_per_segment; ++j) {
      const double t = (j + 1 == samples_per_segment) ? 1.0 : static_cast<double>(j) * step;
      out.push_back({s, t, eval_segment(ctrl, t)});
    }
  }
  return out;
}

std::size_t default_samples_per_segment(const StemCurve& curve) {
  const double per_segment = curve.polygon_length() / static_cast<double>(curve.segment_count());
  const double dense = std::min(2.0 * std::ceil(per_segment), static_cast<double>(kMaxSamplesPerSegment));
  return std::max<std::size_t>(32, static_cast<std::size_t>(dense));
}

}  // namespace stemtrace
