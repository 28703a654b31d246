#pragma once

#include <span>
#include <vector>

#include "diffdraw/primitives.hpp"
#include "diffdraw/raster.hpp"

namespace diffdraw {

/// Three RGB planes, or four planes holding premultiplied RGBA.
class ColorRaster {
public:
  ColorRaster(Canvas canvas, int channels);
  explicit ColorRaster(std::vector<Raster> planes);

  const Canvas& canvas() const { return canvas_; }
  int channels() const { return static_cast<int>(planes_.size()); }
  bool has_alpha() const { return planes_.size() == 4; }
  const Raster& plane(int c) const { return planes_.at(c); }
  Raster& plane(int c) { return planes_.at(c); }
  const Raster& alpha() const { return planes_.at(3); }
  std::span<const Raster> planes() const { return planes_; }

  /// RGB result of compositing over an opaque black background.
  ColorRaster rgb() const;
  bool operator==(const ColorRaster&) const = default;

private:
  Canvas canvas_;
  std::vector<Raster> planes_;
};

/// 1 - prod(1 - I_i), order invariant.
Raster soft_or(std::span<const Raster> rasters);
/// Ordered composition, index 0 is the foreground.
Raster over(std::span<const Raster> rasters, OverMode mode = OverMode::LogStable, double epsilon = 1e-7);
/// Per-pixel softmax(x/tau)^T x over the stacked intensities.
Raster smoothmax_compose(std::span<const Raster> rasters, double tau);
Raster compose(std::span<const Raster> rasters, const Composition& composition);

/// Premultiplied RGBA: colour planes are raster*rgb*alpha, alpha plane is raster*alpha.
ColorRaster colorize(const Raster& raster, const Rgb& rgb, double alpha = 1.0);
/// Porter-Duff over on premultiplied RGBA.
ColorRaster alpha_over(const ColorRaster& a, const ColorRaster& b);

}  // namespace diffdraw
