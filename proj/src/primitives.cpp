#include "diffdraw/primitives.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace diffdraw {

namespace {

constexpr double kCoincidentTol = 1e-9;

// Forward-mode dual number carrying derivatives w.r.t. the 8 control
// coordinates of a 4-point curve.
struct Dual {
  double v = 0.0;
  std::array<double, 8> d{};

  Dual() = default;
  Dual(double value) : v(value) {}  // NOLINT: implicit lift of constants

  friend Dual operator+(const Dual& a, const Dual& b) {
    Dual r(a.v + b.v);
    for (int i = 0; i < 8; ++i) r.d[i] = a.d[i] + b.d[i];
    return r;
  }
  friend Dual operator-(const Dual& a, const Dual& b) {
    Dual r(a.v - b.v);
    for (int i = 0; i < 8; ++i) r.d[i] = a.d[i] - b.d[i];
    return r;
  }
  friend Dual operator*(const Dual& a, const Dual& b) {
    Dual r(a.v * b.v);
    for (int i = 0; i < 8; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
    return r;
  }
  friend Dual operator/(const Dual& a, const Dual& b) {
    Dual r(a.v / b.v);
    const double inv = 1.0 / b.v;
    for (int i = 0; i < 8; ++i) r.d[i] = (a.d[i] - r.v * b.d[i]) * inv;
    return r;
  }
};

// x^0.25 for x > 0
double quarter_root(double x) { return std::sqrt(std::sqrt(x)); }
Dual quarter_root(const Dual& x) {
  Dual r(quarter_root(x.v));
  const double k = 0.25 * r.v / x.v;
  for (int i = 0; i < 8; ++i) r.d[i] = k * x.d[i];
  return r;
}

template <class T>
struct P2 {
  T x, y;
};

template <class T>
P2<T> lerp_knots(const P2<T>& a, const P2<T>& b, const T& ta, const T& tb, const T& t) {
  const T span = tb - ta;
  const T wa = (tb - t) / span;
  const T wb = (t - ta) / span;
  return {wa * a.x + wb * b.x, wa * a.y + wb * b.y};
}

// Barry-Goldman pyramid for the centripetal spline, drawn between P1 and P2.
template <class T>
P2<T> catmull_rom_pyramid(const std::array<P2<T>, 4>& p, double u) {
  auto seg = [](const P2<T>& a, const P2<T>& b) {
    const T dx = b.x - a.x;
    const T dy = b.y - a.y;
    return quarter_root(dx * dx + dy * dy);
  };
  const T t0(0.0);
  const T t1 = t0 + seg(p[0], p[1]);
  const T t2 = t1 + seg(p[1], p[2]);
  const T t3 = t2 + seg(p[2], p[3]);
  const T t = t1 + T(u) * (t2 - t1);

  const P2<T> a1 = lerp_knots(p[0], p[1], t0, t1, t);
  const P2<T> a2 = lerp_knots(p[1], p[2], t1, t2, t);
  const P2<T> a3 = lerp_knots(p[2], p[3], t2, t3, t);
  const P2<T> b1 = lerp_knots(a1, a2, t0, t2, t);
  const P2<T> b2 = lerp_knots(a2, a3, t1, t3, t);
  return lerp_knots(b1, b2, t1, t2, t);
}

void check_unit(double t, const char* what) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw std::invalid_argument(std::string(what) + ": parameter " + std::to_string(t) + " outside [0,1]");
  }
}

const Primitive& expect_kind(const Primitive& prim, PrimitiveKind kind) {
  if (prim.kind() != kind) {
    throw std::invalid_argument("primitive is a " + std::string(kind_name(prim.kind())) + ", expected " +
                                std::string(kind_name(kind)));
  }
  return prim;
}

std::vector<Vec2> as_vec(std::span<const WorldPoint> pts) { return {pts.begin(), pts.end()}; }

}  // namespace

WorldPoint::WorldPoint(double px, double py) : Vec2{px, py} {
  if (!std::isfinite(px) || !std::isfinite(py)) throw std::invalid_argument("WorldPoint: non-finite coordinate");
}

Canvas::Canvas(int w, int h) : width(w), height(h) {
  if (w < 1 || h < 1) throw std::invalid_argument("Canvas: width and height must be >= 1");
}

void StrokeStyle::validate() const {
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw std::invalid_argument("StrokeStyle: sigma2 must be > 0");
  if (color) {
    for (int c = 0; c < 3; ++c) {
      if (!((*color)[c] >= 0.0 && (*color)[c] <= 1.0)) throw std::invalid_argument("StrokeStyle: colour outside [0,1]");
    }
  }
  if (alpha && !(*alpha >= 0.0 && *alpha <= 1.0)) throw std::invalid_argument("StrokeStyle: alpha outside [0,1]");
}

std::size_t control_count(PrimitiveKind kind) {
  switch (kind) {
    case PrimitiveKind::Point: return 1;
    case PrimitiveKind::Line: return 2;
    case PrimitiveKind::QuadBezier: return 3;
    case PrimitiveKind::CubicBezier:
    case PrimitiveKind::CatmullRom: return 4;
  }
  return 0;
}

std::string_view kind_name(PrimitiveKind kind) {
  switch (kind) {
    case PrimitiveKind::Point: return "point";
    case PrimitiveKind::Line: return "line";
    case PrimitiveKind::QuadBezier: return "bezier2";
    case PrimitiveKind::CubicBezier: return "bezier3";
    case PrimitiveKind::CatmullRom: return "crs";
  }
  return "?";
}

std::optional<PrimitiveKind> kind_from_name(std::string_view name) {
  for (auto k : {PrimitiveKind::Point, PrimitiveKind::Line, PrimitiveKind::QuadBezier, PrimitiveKind::CubicBezier,
                 PrimitiveKind::CatmullRom}) {
    if (kind_name(k) == name) return k;
  }
  return std::nullopt;
}

std::string_view composition_name(Composition::Kind kind) {
  switch (kind) {
    case Composition::Kind::SoftOr: return "softor";
    case Composition::Kind::Over: return "over";
    case Composition::Kind::Smoothmax: return "smoothmax";
  }
  return "?";
}

Primitive::Primitive(PrimitiveKind kind, std::vector<WorldPoint> control, StrokeStyle style)
    : kind_(kind), control_(std::move(control)), style_(style) {
  if (control_.size() != control_count(kind)) {
    throw std::invalid_argument("Primitive: " + std::string(kind_name(kind)) + " needs " +
                                std::to_string(control_count(kind)) + " control points, got " +
                                std::to_string(control_.size()));
  }
  style_.validate();
}

Primitive Primitive::point(WorldPoint p, StrokeStyle style) { return {PrimitiveKind::Point, {p}, style}; }
Primitive Primitive::line(WorldPoint s, WorldPoint e, StrokeStyle style) { return {PrimitiveKind::Line, {s, e}, style}; }
Primitive Primitive::quad_bezier(WorldPoint p0, WorldPoint p1, WorldPoint p2, StrokeStyle style) {
  return {PrimitiveKind::QuadBezier, {p0, p1, p2}, style};
}
Primitive Primitive::cubic_bezier(WorldPoint p0, WorldPoint p1, WorldPoint p2, WorldPoint p3, StrokeStyle style) {
  return {PrimitiveKind::CubicBezier, {p0, p1, p2, p3}, style};
}
Primitive Primitive::catmull_rom(WorldPoint p0, WorldPoint p1, WorldPoint p2, WorldPoint p3, StrokeStyle style) {
  return {PrimitiveKind::CatmullRom, {p0, p1, p2, p3}, style};
}

Scene::Scene(std::vector<Primitive> prims, Composition comp, Canvas c)
    : primitives(std::move(prims)), composition(comp), canvas(c) {
  if (primitives.empty()) throw std::invalid_argument("Scene: at least one primitive is required");
  if (composition.kind == Composition::Kind::Smoothmax && !(composition.tau > 0.0)) {
    throw std::invalid_argument("Scene: smoothmax temperature must be > 0");
  }
  if (!(composition.epsilon > 0.0 && composition.epsilon < 1.0)) {
    throw std::invalid_argument("Scene: over epsilon must be in (0,1)");
  }
}

bool Scene::is_color() const {
  return std::any_of(primitives.begin(), primitives.end(), [](const Primitive& p) { return p.style().color.has_value(); });
}

ImagePoint world_to_image(const WorldPoint& p, const Canvas& c) {
  const double s = c.scale();
  return {0.5 * c.width + p.x * s, 0.5 * c.height + p.y * s};
}

WorldPoint image_to_world(const ImagePoint& p, const Canvas& c) {
  const double s = c.scale();
  return {(p.x - 0.5 * c.width) / s, (p.y - 0.5 * c.height) / s};
}

std::array<Vec2, 4> separate_coincident(std::span<const Vec2> ctrl) {
  std::array<Vec2, 4> p{};
  std::copy_n(ctrl.begin(), std::min<std::size_t>(4, ctrl.size()), p.begin());
  for (std::size_t i = 1; i < 4; ++i) {
    if (norm2(p[i] - p[i - 1]) < kCoincidentTol * kCoincidentTol) p[i].x += kCoincidentTol;
  }
  return p;
}

Vec2 eval_curve(PrimitiveKind kind, std::span<const Vec2> c, double t) {
  const double s = 1.0 - t;
  switch (kind) {
    case PrimitiveKind::Point: return c[0];
    case PrimitiveKind::Line: return s * c[0] + t * c[1];
    case PrimitiveKind::QuadBezier: return (s * s) * c[0] + (2.0 * s * t) * c[1] + (t * t) * c[2];
    case PrimitiveKind::CubicBezier:
      return (s * s * s) * c[0] + (3.0 * s * s * t) * c[1] + (3.0 * s * t * t) * c[2] + (t * t * t) * c[3];
    case PrimitiveKind::CatmullRom: {
      std::array<P2<double>, 4> p{};
      for (int i = 0; i < 4; ++i) p[i] = {c[i].x, c[i].y};
      const auto r = catmull_rom_pyramid(p, t);
      return {r.x, r.y};
    }
  }
  return {};
}

CurveSample eval_curve_with_jacobian(PrimitiveKind kind, std::span<const Vec2> c, double t) {
  CurveSample out;
  auto diag = [](double w) { return Mat2{w, 0.0, 0.0, w}; };
  const double s = 1.0 - t;
  switch (kind) {
    case PrimitiveKind::Point:
      out.point = c[0];
      out.jacobian[0] = diag(1.0);
      break;
    case PrimitiveKind::Line:
      out.point = eval_curve(kind, c, t);
      out.jacobian[0] = diag(s);
      out.jacobian[1] = diag(t);
      break;
    case PrimitiveKind::QuadBezier:
      out.point = eval_curve(kind, c, t);
      out.jacobian[0] = diag(s * s);
      out.jacobian[1] = diag(2.0 * s * t);
      out.jacobian[2] = diag(t * t);
      break;
    case PrimitiveKind::CubicBezier:
      out.point = eval_curve(kind, c, t);
      out.jacobian[0] = diag(s * s * s);
      out.jacobian[1] = diag(3.0 * s * s * t);
      out.jacobian[2] = diag(3.0 * s * t * t);
      out.jacobian[3] = diag(t * t * t);
      break;
    case PrimitiveKind::CatmullRom: {
      std::array<P2<Dual>, 4> p{};
      for (int i = 0; i < 4; ++i) {
        p[i].x = Dual(c[i].x);
        p[i].y = Dual(c[i].y);
        p[i].x.d[2 * i] = 1.0;
        p[i].y.d[2 * i + 1] = 1.0;
      }
      const auto r = catmull_rom_pyramid(p, t);
      out.point = {r.x.v, r.y.v};
      for (int i = 0; i < 4; ++i) {
        out.jacobian[i] = Mat2{r.x.d[2 * i], r.x.d[2 * i + 1], r.y.d[2 * i], r.y.d[2 * i + 1]};
      }
      break;
    }
  }
  return out;
}

WorldPoint eval_quad_bezier(const Primitive& prim, double t) {
  check_unit(t, "eval_quad_bezier");
  const auto c = as_vec(expect_kind(prim, PrimitiveKind::QuadBezier).control());
  return WorldPoint(eval_curve(PrimitiveKind::QuadBezier, c, t));
}

WorldPoint eval_cubic_bezier(const Primitive& prim, double t) {
  check_unit(t, "eval_cubic_bezier");
  const auto c = as_vec(expect_kind(prim, PrimitiveKind::CubicBezier).control());
  return WorldPoint(eval_curve(PrimitiveKind::CubicBezier, c, t));
}

WorldPoint eval_catmull_rom(const Primitive& prim, double u) {
  check_unit(u, "eval_catmull_rom");
  const auto c = separate_coincident(as_vec(expect_kind(prim, PrimitiveKind::CatmullRom).control()));
  // Exact interpolation at the span ends, independent of pyramid rounding.
  if (u == 0.0) return WorldPoint(c[1]);
  if (u == 1.0) return WorldPoint(c[2]);
  return WorldPoint(eval_curve(PrimitiveKind::CatmullRom, c, u));
}

WorldPoint eval_primitive(const Primitive& prim, double t) {
  check_unit(t, "eval_primitive");
  if (prim.kind() == PrimitiveKind::CatmullRom) return eval_catmull_rom(prim, t);
  return WorldPoint(eval_curve(prim.kind(), as_vec(prim.control()), t));
}

std::vector<Vec2> image_controls(const Primitive& prim, const Canvas& canvas) {
  std::vector<Vec2> world = as_vec(prim.control());
  if (prim.kind() == PrimitiveKind::CatmullRom) {
    const auto sep = separate_coincident(world);
    world.assign(sep.begin(), sep.end());
  }
  std::vector<Vec2> out;
  out.reserve(world.size());
  for (const auto& w : world) {
    const ImagePoint ip = world_to_image(WorldPoint(w), canvas);
    out.push_back(Vec2{ip.x - 0.5, ip.y - 0.5});
  }
  return out;
}

}  // namespace diffdraw
