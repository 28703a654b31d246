#pragma once

#include <functional>
#include <span>
#include <vector>

#include "diffdraw/distance.hpp"
#include "diffdraw/primitives.hpp"

namespace diffdraw {

/// Ratio between the relaxation width sigma and the stroke thickness.
inline constexpr double kSigmaPerThickness = 0.54925;

/// Single-channel image, row-major, values nominally in [0,1].
class Raster {
public:
  explicit Raster(Canvas canvas, double fill = 0.0);
  Raster(Canvas canvas, std::vector<double> values);

  const Canvas& canvas() const { return canvas_; }
  int width() const { return canvas_.width; }
  int height() const { return canvas_.height; }

  double at(int x, int y) const { return data_[index(x, y)]; }
  double& at(int x, int y) { return data_[index(x, y)]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }
  std::span<const double> values() const { return data_; }
  std::span<double> values() { return data_; }
  std::size_t size() const { return data_.size(); }

  double sum() const;
  bool operator==(const Raster&) const = default;

private:
  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * canvas_.width + x; }

  Canvas canvas_;
  std::vector<double> data_;
};

/// Nearest-neighbour weight of pixel n for a 1-D point p (floor rule).
double nn_weight(int n, double p);
/// Two-pixel linear interpolation weight, maximal at the pixel midpoint.
double aa_weight(int n, double p);

Raster raster_nn_point(const Canvas& canvas, ImagePoint p);
/// Separable product of the 1-D anti-aliased weights.
Raster raster_aa_point(const Canvas& canvas, ImagePoint p);

/// exp(-d2 / sigma2) per pixel. Results below the double range flush to 0.
Raster raster_exp(const DistanceField& field, double sigma2);
/// Variable-width stroke: sigma2 evaluated at the closest curve parameter.
Raster raster_exp(const DistanceField& field, const std::function<double(double)>& sigma2_at_t);

/// Binary line raster: pixel set when its squared distance to the segment
/// is below delta2. s and e are image-space points.
Raster raster_hard_line(const Canvas& canvas, ImagePoint s, ImagePoint e, double delta2);
/// Binary raster of any primitive with the same threshold rule.
Raster raster_hard(const Primitive& prim, const Canvas& canvas, double delta2, CurveMethod method = {});

double sigma_from_thickness(double thickness);
double thickness_from_sigma(double sigma);

}  // namespace diffdraw
