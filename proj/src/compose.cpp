#include "diffdraw/compose.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace diffdraw {

namespace {

const Canvas& common_canvas(std::span<const Raster> rasters, const char* op) {
  if (rasters.empty()) throw std::invalid_argument(std::string(op) + ": at least one raster is required");
  for (const auto& r : rasters) {
    if (!(r.canvas() == rasters[0].canvas())) throw std::invalid_argument(std::string(op) + ": canvas mismatch");
  }
  return rasters[0].canvas();
}

}  // namespace

ColorRaster::ColorRaster(Canvas canvas, int channels) : canvas_(canvas) {
  if (channels != 3 && channels != 4) throw std::invalid_argument("ColorRaster: channels must be 3 or 4");
  planes_.assign(static_cast<std::size_t>(channels), Raster(canvas));
}

ColorRaster::ColorRaster(std::vector<Raster> planes) : planes_(std::move(planes)) {
  if (planes_.size() != 3 && planes_.size() != 4) throw std::invalid_argument("ColorRaster: channels must be 3 or 4");
  canvas_ = common_canvas(planes_, "ColorRaster");
}

ColorRaster ColorRaster::rgb() const {
  return ColorRaster(std::vector<Raster>(planes_.begin(), planes_.begin() + 3));
}

Raster soft_or(std::span<const Raster> rasters) {
  const Canvas& canvas = common_canvas(rasters, "soft_or");
  Raster keep(canvas, 1.0);
  for (const auto& r : rasters) {
    for (std::size_t i = 0; i < keep.size(); ++i) keep[i] *= 1.0 - r[i];
  }
  for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = 1.0 - keep[i];
  return keep;
}

Raster over(std::span<const Raster> rasters, OverMode mode, double epsilon) {
  const Canvas& canvas = common_canvas(rasters, "over");
  const std::size_t k = rasters.size();
  switch (mode) {
    case OverMode::Recursive: {
      Raster acc = rasters[k - 1];
      for (std::size_t layer = k - 1; layer-- > 0;) {
        const Raster& a = rasters[layer];
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] = a[i] + acc[i] * (1.0 - a[i]);
      }
      return acc;
    }
    case OverMode::Unrolled: {
      Raster out(canvas);
      Raster transmit(canvas, 1.0);
      for (const auto& r : rasters) {
        for (std::size_t i = 0; i < out.size(); ++i) {
          out[i] += r[i] * transmit[i];
          transmit[i] *= 1.0 - r[i];
        }
      }
      return out;
    }
    case OverMode::LogStable: {
      if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("over: epsilon must be in (0,1)");
      Raster out(canvas);
      Raster log_transmit(canvas, 0.0);
      for (const auto& r : rasters) {
        for (std::size_t i = 0; i < out.size(); ++i) {
          out[i] += r[i] * std::exp(log_transmit[i]);
          // log(1 - I + I*eps): a fully opaque layer contributes log(eps)
          log_transmit[i] += std::log1p(-r[i] * (1.0 - epsilon));
        }
      }
      return out;
    }
  }
  return Raster(canvas);
}

Raster smoothmax_compose(std::span<const Raster> rasters, double tau) {
  const Canvas& canvas = common_canvas(rasters, "smoothmax_compose");
  if (!(tau > 0.0)) throw std::invalid_argument("smoothmax_compose: tau must be > 0");
  Raster out(canvas);
  for (std::size_t i = 0; i < out.size(); ++i) {
    double m = rasters[0][i];
    for (const auto& r : rasters) m = std::max(m, r[i]);
    double num = 0.0;
    double den = 0.0;
    for (const auto& r : rasters) {
      const double w = std::exp((r[i] - m) / tau);
      num += w * r[i];
      den += w;
    }
    out[i] = num / den;
  }
  return out;
}

Raster compose(std::span<const Raster> rasters, const Composition& composition) {
  switch (composition.kind) {
    case Composition::Kind::SoftOr: return soft_or(rasters);
    case Composition::Kind::Over: return over(rasters, composition.over_mode, composition.epsilon);
    case Composition::Kind::Smoothmax: return smoothmax_compose(rasters, composition.tau);
  }
  throw std::invalid_argument("compose: unknown composition");
}

ColorRaster colorize(const Raster& raster, const Rgb& rgb, double alpha) {
  for (int c = 0; c < 3; ++c) {
    if (!(rgb[c] >= 0.0 && rgb[c] <= 1.0)) throw std::invalid_argument("colorize: colour outside [0,1]");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("colorize: alpha outside [0,1]");
  ColorRaster out(raster.canvas(), 4);
  for (std::size_t i = 0; i < raster.size(); ++i) {
    const double a = raster[i] * alpha;
    for (int c = 0; c < 3; ++c) out.plane(c)[i] = a * rgb[c];
    out.plane(3)[i] = a;
  }
  return out;
}

ColorRaster alpha_over(const ColorRaster& a, const ColorRaster& b) {
  if (!a.has_alpha() || !b.has_alpha()) throw std::invalid_argument("alpha_over: premultiplied RGBA required");
  if (!(a.canvas() == b.canvas())) throw std::invalid_argument("alpha_over: canvas mismatch");
  ColorRaster out(a.canvas(), 4);
  const Raster& aa = a.alpha();
  for (int c = 0; c < 4; ++c) {
    const Raster& ca = a.plane(c);
    const Raster& cb = b.plane(c);
    Raster& co = out.plane(c);
    for (std::size_t i = 0; i < co.size(); ++i) co[i] = ca[i] + cb[i] * (1.0 - aa[i]);
  }
  return out;
}

}  // namespace diffdraw
