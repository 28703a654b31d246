#include "diffdraw/distance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace diffdraw {

CurveMethod CurveMethod::polyline(int segments) {
  if (segments < 1) throw std::invalid_argument("polyline: segments must be >= 1");
  return {Kind::Polyline, segments, 3, 16};
}

CurveMethod CurveMethod::recursive(int iters, int slices) {
  if (iters < 1) throw std::invalid_argument("recursive: iters must be >= 1");
  if (slices < 2) throw std::invalid_argument("recursive: slices must be >= 2");
  return {Kind::Recursive, 10, iters, slices};
}

DistanceField::DistanceField(Canvas canvas, std::vector<double> values, std::vector<double> argmin_t)
    : canvas_(canvas), values_(std::move(values)), argmin_t_(std::move(argmin_t)) {
  if (values_.size() != canvas_.pixels()) throw std::invalid_argument("DistanceField: size does not match canvas");
  if (!argmin_t_.empty() && argmin_t_.size() != canvas_.pixels()) {
    throw std::invalid_argument("DistanceField: argmin size does not match canvas");
  }
}

double sqdist_point(Vec2 n, ImagePoint p) { return norm2(n - Vec2{p.x - 0.5, p.y - 0.5}); }

ClosestPoint sqdist_line_segment(Vec2 n, Vec2 s, Vec2 e) {
  const Vec2 m = e - s;
  const double mm = dot(m, m);
  if (mm == 0.0) return {norm2(n - s), 0.0};
  const double t = dot(n - s, m) / mm;
  if (t <= 0.0) return {norm2(n - s), 0.0};
  if (t >= 1.0) return {norm2(n - e), 1.0};
  return {norm2(n - (s + t * m)), t};
}

namespace {

void check_kind_size(PrimitiveKind kind, std::span<const Vec2> ctrl) {
  if (ctrl.size() != control_count(kind)) throw std::invalid_argument("curve distance: wrong control point count");
}

std::vector<Vec2> polyline_vertices(PrimitiveKind kind, std::span<const Vec2> ctrl, int segments) {
  std::vector<Vec2> v(static_cast<std::size_t>(segments) + 1);
  for (int i = 0; i <= segments; ++i) {
    const double t = static_cast<double>(i) / segments;
    v[i] = eval_curve(kind, ctrl, t);
  }
  return v;
}

struct PolylineHit {
  ClosestPoint cp;
  int chord;
};

PolylineHit closest_on_polyline(Vec2 n, std::span<const Vec2> verts) {
  const int segments = static_cast<int>(verts.size()) - 1;
  double best = std::numeric_limits<double>::infinity();
  double best_local = 0.0;
  int best_chord = 0;
  for (int i = 0; i < segments; ++i) {
    const ClosestPoint c = sqdist_line_segment(n, verts[i], verts[i + 1]);
    if (c.d2 < best) {
      best = c.d2;
      best_local = c.t;
      best_chord = i;
    }
  }
  return {{best, (best_chord + best_local) / segments}, best_chord};
}

ClosestPoint recursive_search(Vec2 n, PrimitiveKind kind, std::span<const Vec2> ctrl, double tmin, double tmax,
                              int iters, int slices, double mindist, double tbest_in) {
  double tbest = tbest_in;
  double width = (tmax - tmin) / slices;
  for (; iters > 0; --iters) {
    width = (tmax - tmin) / slices;
    for (int k = 0; k <= slices; ++k) {
      const double t = (k == slices) ? tmax : tmin + k * width;
      const double dist = norm2(eval_curve(kind, ctrl, t) - n);
      if (dist < mindist) {
        mindist = dist;
        tbest = t;
      }
    }
    tmin = std::max(0.0, tbest - width);
    tmax = std::min(1.0, tbest + width);
  }
  return {mindist, tbest};
}

}  // namespace

ClosestPoint sqdist_curve_polyline(Vec2 n, PrimitiveKind kind, std::span<const Vec2> ctrl, int segments) {
  if (segments < 1) throw std::invalid_argument("sqdist_curve_polyline: segments must be >= 1");
  check_kind_size(kind, ctrl);
  const auto verts = polyline_vertices(kind, ctrl, segments);
  return closest_on_polyline(n, verts).cp;
}

ClosestPoint sqdist_curve_recursive(Vec2 n, PrimitiveKind kind, std::span<const Vec2> ctrl, int iters, int slices) {
  if (iters < 1) throw std::invalid_argument("sqdist_curve_recursive: iters must be >= 1");
  if (slices < 2) throw std::invalid_argument("sqdist_curve_recursive: slices must be >= 2");
  check_kind_size(kind, ctrl);
  return recursive_search(n, kind, ctrl, 0.0, 1.0, iters, slices, std::numeric_limits<double>::infinity(), 0.0);
}

ClosestPoint sqdist_curve_polyline(Vec2 n, const Primitive& prim, const Canvas& canvas, int segments) {
  return sqdist_curve_polyline(n, prim.kind(), image_controls(prim, canvas), segments);
}

ClosestPoint sqdist_curve_recursive(Vec2 n, const Primitive& prim, const Canvas& canvas, int iters, int slices) {
  return sqdist_curve_recursive(n, prim.kind(), image_controls(prim, canvas), iters, slices);
}

PrimitiveDistance::PrimitiveDistance(PrimitiveKind kind, std::vector<Vec2> image_ctrl, CurveMethod method)
    : kind_(kind), ctrl_(std::move(image_ctrl)), method_(method) {
  check_kind_size(kind_, ctrl_);
  if (is_curve(kind_) && method_.kind == CurveMethod::Kind::Polyline) {
    if (method_.segments < 1) throw std::invalid_argument("polyline: segments must be >= 1");
    samples_ = polyline_vertices(kind_, ctrl_, method_.segments);
  }
  if (is_curve(kind_) && method_.kind == CurveMethod::Kind::Recursive && (method_.iters < 1 || method_.slices < 2)) {
    throw std::invalid_argument("recursive: need iters >= 1 and slices >= 2");
  }
}

PrimitiveDistance::PrimitiveDistance(const Primitive& prim, const Canvas& canvas, CurveMethod method)
    : PrimitiveDistance(prim.kind(), image_controls(prim, canvas), method) {}

PrimitiveDistance::Result PrimitiveDistance::query(Vec2 n) const {
  switch (kind_) {
    case PrimitiveKind::Point: return {norm2(n - ctrl_[0]), 0.0, -1};
    case PrimitiveKind::Line: {
      const auto c = sqdist_line_segment(n, ctrl_[0], ctrl_[1]);
      return {c.d2, c.t, -1};
    }
    default: break;
  }
  if (method_.kind == CurveMethod::Kind::Polyline) {
    const auto hit = closest_on_polyline(n, samples_);
    return {hit.cp.d2, hit.cp.t, hit.chord};
  }
  const auto c = recursive_search(n, kind_, ctrl_, 0.0, 1.0, method_.iters, method_.slices,
                                  std::numeric_limits<double>::infinity(), 0.0);
  return {c.d2, c.t, -1};
}

void PrimitiveDistance::bounds(Vec2& lo, Vec2& hi) const {
  std::vector<Vec2> hull(ctrl_.begin(), ctrl_.end());
  double margin = 0.0;
  if (kind_ == PrimitiveKind::CatmullRom) {
    // The span is a cubic polynomial in u; its Bezier control points bound it.
    const Vec2 q0 = eval_curve(kind_, ctrl_, 0.0);
    const Vec2 q3 = eval_curve(kind_, ctrl_, 1.0);
    const Vec2 a = 27.0 * eval_curve(kind_, ctrl_, 1.0 / 3.0) - 8.0 * q0 - q3;
    const Vec2 b = 27.0 * eval_curve(kind_, ctrl_, 2.0 / 3.0) - q0 - 8.0 * q3;
    hull = {q0, (1.0 / 18.0) * (2.0 * a - b), (1.0 / 18.0) * (2.0 * b - a), q3};
    margin = 1.0;  // absorbs rounding in the conversion
  }
  lo = hi = hull[0];
  for (const auto& p : hull) {
    lo.x = std::min(lo.x, p.x);
    lo.y = std::min(lo.y, p.y);
    hi.x = std::max(hi.x, p.x);
    hi.y = std::max(hi.y, p.y);
  }
  lo = lo - Vec2{margin, margin};
  hi = hi + Vec2{margin, margin};
}

PixelRect support_rect(const PrimitiveDistance& dist, double radius2, const Canvas& canvas) {
  Vec2 lo, hi;
  dist.bounds(lo, hi);
  const double r = std::sqrt(radius2);
  auto clampi = [](double v, int lo_i, int hi_i) {
    if (!(v > lo_i)) return lo_i;  // also catches NaN
    if (v > hi_i) return hi_i;
    return static_cast<int>(v);
  };
  PixelRect rect;
  rect.x0 = clampi(std::floor(lo.x - r), 0, canvas.width);
  rect.y0 = clampi(std::floor(lo.y - r), 0, canvas.height);
  rect.x1 = clampi(std::ceil(hi.x + r) + 1.0, 0, canvas.width);
  rect.y1 = clampi(std::ceil(hi.y + r) + 1.0, 0, canvas.height);
  return rect;
}

DistanceField distance_field(const Primitive& prim, const Canvas& canvas, CurveMethod method) {
  const PrimitiveDistance dist(prim, canvas, method);
  std::vector<double> values(canvas.pixels());
  std::vector<double> argmin(canvas.pixels());
  for (int y = 0; y < canvas.height; ++y) {
    for (int x = 0; x < canvas.width; ++x) {
      const auto r = dist.query(Vec2{static_cast<double>(x), static_cast<double>(y)});
      const std::size_t i = static_cast<std::size_t>(y) * canvas.width + x;
      values[i] = r.d2;
      argmin[i] = r.t;
    }
  }
  return {canvas, std::move(values), std::move(argmin)};
}

}  // namespace diffdraw
