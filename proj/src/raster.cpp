#include "diffdraw/raster.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace diffdraw {

Raster::Raster(Canvas canvas, double fill) : canvas_(canvas), data_(canvas.pixels(), fill) {}

Raster::Raster(Canvas canvas, std::vector<double> values) : canvas_(canvas), data_(std::move(values)) {
  if (data_.size() != canvas_.pixels()) throw std::invalid_argument("Raster: size does not match canvas");
}

double Raster::sum() const { return std::accumulate(data_.begin(), data_.end(), 0.0); }

double nn_weight(int n, double p) { return std::floor(p) == n ? 1.0 : 0.0; }

double aa_weight(int n, double p) {
  const double lo = std::floor(p - 0.5);
  const double hi = std::ceil(p - 0.5);
  if (lo == n) return 1.5 - p + lo;
  if (hi == n) return 0.5 + p - hi;
  return 0.0;
}

Raster raster_nn_point(const Canvas& canvas, ImagePoint p) {
  Raster out(canvas);
  const double fx = std::floor(p.x);
  const double fy = std::floor(p.y);
  if (fx >= 0 && fx < canvas.width && fy >= 0 && fy < canvas.height) {
    out.at(static_cast<int>(fx), static_cast<int>(fy)) = 1.0;
  }
  return out;
}

Raster raster_aa_point(const Canvas& canvas, ImagePoint p) {
  Raster out(canvas);
  const int cx = static_cast<int>(std::floor(p.x - 0.5));
  const int cy = static_cast<int>(std::floor(p.y - 0.5));
  for (int y = cy; y <= cy + 1; ++y) {
    if (y < 0 || y >= canvas.height) continue;
    const double wy = aa_weight(y, p.y);
    for (int x = cx; x <= cx + 1; ++x) {
      if (x < 0 || x >= canvas.width) continue;
      out.at(x, y) = aa_weight(x, p.x) * wy;
    }
  }
  return out;
}

Raster raster_exp(const DistanceField& field, double sigma2) {
  if (!(sigma2 > 0.0)) throw std::invalid_argument("raster_exp: sigma2 must be > 0");
  Raster out(field.canvas());
  const auto d = field.values();
  for (std::size_t i = 0; i < d.size(); ++i) out[i] = std::exp(-d[i] / sigma2);
  return out;
}

Raster raster_exp(const DistanceField& field, const std::function<double(double)>& sigma2_at_t) {
  if (!field.has_argmin()) throw std::invalid_argument("raster_exp: field carries no closest-point parameters");
  Raster out(field.canvas());
  const auto d = field.values();
  const auto t = field.argmin();
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double s2 = sigma2_at_t(t[i]);
    if (!(s2 > 0.0)) throw std::invalid_argument("raster_exp: sigma2(t) must be > 0");
    out[i] = std::exp(-d[i] / s2);
  }
  return out;
}

namespace {

// Same three-case distance, arranged as |n-s|^2 - (w.m)^2/(m.m) so that
// integer-aligned inputs evaluate ties exactly.
double hard_sqdist(Vec2 n, Vec2 s, Vec2 e) {
  const Vec2 m = e - s;
  const Vec2 w = n - s;
  const double mm = dot(m, m);
  const double wm = dot(w, m);
  if (mm == 0.0 || wm <= 0.0) return norm2(w);
  if (wm >= mm) return norm2(n - e);
  return norm2(w) - wm * wm / mm;
}

}  // namespace

Raster raster_hard_line(const Canvas& canvas, ImagePoint s, ImagePoint e, double delta2) {
  if (!(delta2 > 0.0)) throw std::invalid_argument("raster_hard_line: delta2 must be > 0");
  const Vec2 sc{s.x - 0.5, s.y - 0.5};
  const Vec2 ec{e.x - 0.5, e.y - 0.5};
  Raster out(canvas);
  for (int y = 0; y < canvas.height; ++y) {
    for (int x = 0; x < canvas.width; ++x) {
      if (hard_sqdist(Vec2{double(x), double(y)}, sc, ec) < delta2) out.at(x, y) = 1.0;
    }
  }
  return out;
}

Raster raster_hard(const Primitive& prim, const Canvas& canvas, double delta2, CurveMethod method) {
  if (!(delta2 > 0.0)) throw std::invalid_argument("raster_hard: delta2 must be > 0");
  if (prim.kind() == PrimitiveKind::Line) {
    return raster_hard_line(canvas, world_to_image(prim.control()[0], canvas), world_to_image(prim.control()[1], canvas),
                            delta2);
  }
  const PrimitiveDistance dist(prim, canvas, method);
  Raster out(canvas);
  for (int y = 0; y < canvas.height; ++y) {
    for (int x = 0; x < canvas.width; ++x) {
      if (dist.query(Vec2{double(x), double(y)}).d2 < delta2) out.at(x, y) = 1.0;
    }
  }
  return out;
}

double sigma_from_thickness(double thickness) {
  if (!(thickness > 0.0)) throw std::invalid_argument("sigma_from_thickness: thickness must be > 0");
  return kSigmaPerThickness * thickness;
}

double thickness_from_sigma(double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("thickness_from_sigma: sigma must be > 0");
  return sigma / kSigmaPerThickness;
}

}  // namespace diffdraw
