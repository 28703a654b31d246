#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace diffdraw {

/// 2-vector used for both world-space and image-space coordinates.
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr Vec2& operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr bool operator==(const Vec2&) const = default;
};

constexpr Vec2 operator*(double s, Vec2 v) { return v * s; }
constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double norm2(Vec2 a) { return dot(a, a); }

/// A point in world space. The vertical extent of the canvas is [-1, 1].
struct WorldPoint : Vec2 {
  WorldPoint() = default;
  WorldPoint(double px, double py);
  explicit WorldPoint(Vec2 v) : WorldPoint(v.x, v.y) {}
};

/// A real-valued point in image space (pixel units, x = column, y = row).
struct ImagePoint : Vec2 {
  constexpr ImagePoint() = default;
  constexpr ImagePoint(double px, double py) : Vec2{px, py} {}
  constexpr explicit ImagePoint(Vec2 v) : Vec2{v} {}
};

struct Canvas {
  int width = 1;
  int height = 1;

  Canvas() = default;
  Canvas(int w, int h);

  std::size_t pixels() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
  /// Pixels per world unit on both axes.
  double scale() const { return 0.5 * height; }
  bool operator==(const Canvas&) const = default;
};

struct Rgb {
  double r = 1.0;
  double g = 1.0;
  double b = 1.0;

  double operator[](int c) const { return c == 0 ? r : (c == 1 ? g : b); }
  double& operator[](int c) { return c == 0 ? r : (c == 1 ? g : b); }
  bool operator==(const Rgb&) const = default;
};

/// Stroke appearance. sigma2 is the squared fuzziness in pixels^2.
struct StrokeStyle {
  double sigma2 = 0.54925 * 0.54925;  // 1-pixel thickness
  std::optional<Rgb> color;
  std::optional<double> alpha;

  /// Throws std::invalid_argument on out-of-range values.
  void validate() const;
  bool operator==(const StrokeStyle&) const = default;
};

enum class PrimitiveKind { Point, Line, QuadBezier, CubicBezier, CatmullRom };

std::size_t control_count(PrimitiveKind kind);
std::string_view kind_name(PrimitiveKind kind);
std::optional<PrimitiveKind> kind_from_name(std::string_view name);
inline bool is_curve(PrimitiveKind k) {
  return k == PrimitiveKind::QuadBezier || k == PrimitiveKind::CubicBezier || k == PrimitiveKind::CatmullRom;
}

class Primitive {
public:
  Primitive(PrimitiveKind kind, std::vector<WorldPoint> control, StrokeStyle style = {});

  static Primitive point(WorldPoint p, StrokeStyle style = {});
  static Primitive line(WorldPoint s, WorldPoint e, StrokeStyle style = {});
  static Primitive quad_bezier(WorldPoint p0, WorldPoint p1, WorldPoint p2, StrokeStyle style = {});
  static Primitive cubic_bezier(WorldPoint p0, WorldPoint p1, WorldPoint p2, WorldPoint p3, StrokeStyle style = {});
  static Primitive catmull_rom(WorldPoint p0, WorldPoint p1, WorldPoint p2, WorldPoint p3, StrokeStyle style = {});

  PrimitiveKind kind() const { return kind_; }
  std::span<const WorldPoint> control() const { return control_; }
  const StrokeStyle& style() const { return style_; }

  // Mutators keep the control-point count fixed.
  void set_control(std::size_t i, WorldPoint p) { control_.at(i) = p; }
  StrokeStyle& style() { return style_; }

  bool operator==(const Primitive&) const = default;

private:
  PrimitiveKind kind_;
  std::vector<WorldPoint> control_;
  StrokeStyle style_;
};

enum class OverMode { Recursive, Unrolled, LogStable };

struct Composition {
  enum class Kind { SoftOr, Over, Smoothmax };
  Kind kind = Kind::SoftOr;
  double tau = 0.1;
  OverMode over_mode = OverMode::LogStable;
  double epsilon = 1e-7;

  static Composition soft_or() { return {}; }
  static Composition over(OverMode mode = OverMode::LogStable) { return {Kind::Over, 0.1, mode, 1e-7}; }
  static Composition smoothmax(double tau) { return {Kind::Smoothmax, tau, OverMode::LogStable, 1e-7}; }

  bool operator==(const Composition&) const = default;
};

std::string_view composition_name(Composition::Kind kind);

struct Scene {
  std::vector<Primitive> primitives;
  Composition composition;
  Canvas canvas;

  Scene(std::vector<Primitive> prims, Composition comp, Canvas c);

  /// True when any primitive carries a colour; such scenes render to RGB.
  bool is_color() const;
  bool operator==(const Scene&) const = default;
};

/// Maps world y in [-1,1] onto rows [0,height]; x uses the same scale, centred.
ImagePoint world_to_image(const WorldPoint& p, const Canvas& c);
WorldPoint image_to_world(const ImagePoint& p, const Canvas& c);

WorldPoint eval_quad_bezier(const Primitive& prim, double t);
WorldPoint eval_cubic_bezier(const Primitive& prim, double t);
/// Centripetal Catmull-Rom over the P1->P2 span, u in [0,1].
WorldPoint eval_catmull_rom(const Primitive& prim, double u);
/// Dispatches on kind; lines interpolate, points are constant.
WorldPoint eval_primitive(const Primitive& prim, double t);

/// 2x2 block of a curve Jacobian: d(C.x, C.y) / d(P.x, P.y).
struct Mat2 {
  double xx = 0, xy = 0, yx = 0, yy = 0;
  /// J^T v
  Vec2 transpose_apply(Vec2 v) const { return {xx * v.x + yx * v.y, xy * v.x + yy * v.y}; }
};

struct CurveSample {
  Vec2 point;
  std::array<Mat2, 4> jacobian;  // one block per control point; unused entries are zero
};

/// Evaluates a curve over arbitrary-space control points, plus the exact
/// Jacobian of the result with respect to every control point. Catmull-Rom
/// knots are differentiated too. Control points must already be free of
/// degenerate adjacent pairs (see separate_coincident).
CurveSample eval_curve_with_jacobian(PrimitiveKind kind, std::span<const Vec2> ctrl, double t);
Vec2 eval_curve(PrimitiveKind kind, std::span<const Vec2> ctrl, double t);

/// Nudges Catmull-Rom points so that adjacent pairs are at least 1e-9 apart.
std::array<Vec2, 4> separate_coincident(std::span<const Vec2> ctrl);

/// Control points of a primitive mapped to image space with the half-pixel
/// centre offset already subtracted, ready to compare against integer
/// pixel indices. Catmull-Rom degeneracies are resolved in world space first.
std::vector<Vec2> image_controls(const Primitive& prim, const Canvas& canvas);

}  // namespace diffdraw
