#pragma once

#include <span>
#include <vector>

#include "diffdraw/primitives.hpp"

namespace diffdraw {

/// Squared distance paired with the parameter of the closest point.
struct ClosestPoint {
  double d2 = 0.0;
  double t = 0.0;
};

struct CurveMethod {
  enum class Kind { Polyline, Recursive };
  Kind kind = Kind::Polyline;
  int segments = 10;
  int iters = 3;
  int slices = 16;

  static CurveMethod polyline(int segments);
  static CurveMethod recursive(int iters, int slices);
  bool operator==(const CurveMethod&) const = default;
};

/// Half-open pixel rectangle [x0,x1) x [y0,y1).
struct PixelRect {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  bool empty() const { return x1 <= x0 || y1 <= y0; }
  std::size_t area() const { return empty() ? 0 : static_cast<std::size_t>(width()) * static_cast<std::size_t>(height()); }
  bool operator==(const PixelRect&) const = default;
};

class DistanceField {
public:
  DistanceField(Canvas canvas, std::vector<double> values, std::vector<double> argmin_t = {});

  const Canvas& canvas() const { return canvas_; }
  double at(int x, int y) const { return values_[index(x, y)]; }
  bool has_argmin() const { return !argmin_t_.empty(); }
  double argmin_at(int x, int y) const { return argmin_t_.at(index(x, y)); }
  std::span<const double> values() const { return values_; }
  std::span<const double> argmin() const { return argmin_t_; }

private:
  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * canvas_.width + x; }

  Canvas canvas_;
  std::vector<double> values_;
  std::vector<double> argmin_t_;
};

/// ||n - (p - 0.5)||^2: the pixel-centre offset is applied here, once.
double sqdist_point(Vec2 n, ImagePoint p);

/// Squared distance from n to segment s-e with the clamped projection
/// parameter. s == e degenerates to the point distance with t = 0.
ClosestPoint sqdist_line_segment(Vec2 n, Vec2 s, Vec2 e);

/// Closest point on a polyline of `segments` uniform-t chords.
ClosestPoint sqdist_curve_polyline(Vec2 n, PrimitiveKind kind, std::span<const Vec2> ctrl, int segments);
/// Recursive brute-force parameter search. Each level samples slices+1
/// points across its interval; the next level brackets the best sample.
ClosestPoint sqdist_curve_recursive(Vec2 n, PrimitiveKind kind, std::span<const Vec2> ctrl, int iters, int slices);

// Convenience overloads taking a world-space primitive; controls are mapped
// with image_controls() so n is an integer pixel index.
ClosestPoint sqdist_curve_polyline(Vec2 n, const Primitive& prim, const Canvas& canvas, int segments);
ClosestPoint sqdist_curve_recursive(Vec2 n, const Primitive& prim, const Canvas& canvas, int iters, int slices);

/// Per-primitive distance evaluator with precomputed curve samples. Points
/// and lines ignore the method; curves use it.
class PrimitiveDistance {
public:
  PrimitiveDistance(PrimitiveKind kind, std::vector<Vec2> image_ctrl, CurveMethod method);
  PrimitiveDistance(const Primitive& prim, const Canvas& canvas, CurveMethod method);

  struct Result {
    double d2 = 0.0;
    double t = 0.0;
    int chord = 0;  // winning polyline chord, or -1 when unused
  };

  Result query(Vec2 n) const;

  PrimitiveKind kind() const { return kind_; }
  const CurveMethod& method() const { return method_; }
  std::span<const Vec2> controls() const { return ctrl_; }
  std::span<const Vec2> samples() const { return samples_; }
  /// Axis-aligned box guaranteed to contain every point the distance can
  /// be measured to (control hull, or Bezier hull of the spline span).
  void bounds(Vec2& lo, Vec2& hi) const;

private:
  PrimitiveKind kind_;
  std::vector<Vec2> ctrl_;
  CurveMethod method_;
  std::vector<Vec2> samples_;  // polyline vertices C(i/S)
};

/// Pixels whose squared distance to the primitive can be below radius2.
/// Everything outside is at least sqrt(radius2) away.
PixelRect support_rect(const PrimitiveDistance& dist, double radius2, const Canvas& canvas);

DistanceField distance_field(const Primitive& prim, const Canvas& canvas, CurveMethod method = {});

}  // namespace diffdraw
