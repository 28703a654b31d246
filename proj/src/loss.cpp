#include "diffdraw/loss.hpp"

#include <cmath>
#include <stdexcept>

namespace diffdraw {

LossSpec LossSpec::blur_mse(double sigma, bool blur_target) {
  LossSpec s;
  s.kind = Kind::BlurMSE;
  s.blur_sigma = sigma;
  s.blur_target = blur_target;
  s.validate();
  return s;
}

LossSpec LossSpec::ssmse(int octaves, int intervals) {
  LossSpec s;
  s.kind = Kind::SSMSE;
  s.octaves = octaves;
  s.intervals = intervals;
  s.validate();
  return s;
}

void LossSpec::validate() const {
  if (kind == Kind::BlurMSE && !(blur_sigma > 0.0)) throw std::invalid_argument("LossSpec: blur sigma must be > 0");
  if (kind == Kind::SSMSE) {
    if (octaves < 1) throw std::invalid_argument("LossSpec: octaves must be >= 1");
    if (intervals < 1) throw std::invalid_argument("LossSpec: intervals must be >= 1");
    if (!(base_sigma > 0.0)) throw std::invalid_argument("LossSpec: base sigma must be > 0");
  }
}

namespace {

void check_same(const Raster& a, const Raster& b, const char* op) {
  if (!(a.canvas() == b.canvas())) throw std::invalid_argument(std::string(op) + ": canvas mismatch");
}

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_blur: sigma must be > 0");
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * static_cast<std::size_t>(radius) + 1);
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double w = std::exp(-0.5 * i * i / (sigma * sigma));
    k[i + radius] = w;
    total += w;
  }
  for (auto& w : k) w /= total;
  return k;
}

// Half-sample symmetric reflection: ... b a | a b c ... z | z y ...
int reflect(int i, int n) {
  const int period = 2 * n;
  int m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - 1 - m;
}

// One 1-D pass along x (axis 0) or y (axis 1). Adjoint scatters instead of gathers.
Raster blur_pass(const Raster& in, const std::vector<double>& kernel, int axis, bool adjoint) {
  const int w = in.width();
  const int h = in.height();
  const int radius = static_cast<int>(kernel.size() / 2);
  const int n = axis == 0 ? w : h;
  Raster out(in.canvas());
  // Tap source indices are identical for every row/column along the axis.
  std::vector<int> src(static_cast<std::size_t>(n) * kernel.size());
  for (int o = 0; o < n; ++o) {
    for (int k = -radius; k <= radius; ++k) src[static_cast<std::size_t>(o) * kernel.size() + (k + radius)] = reflect(o + k, n);
  }
  const int lines = axis == 0 ? h : w;
  for (int line = 0; line < lines; ++line) {
    auto idx = [&](int pos) -> std::size_t {
      return axis == 0 ? static_cast<std::size_t>(line) * w + pos : static_cast<std::size_t>(pos) * w + line;
    };
    for (int o = 0; o < n; ++o) {
      const int* s = &src[static_cast<std::size_t>(o) * kernel.size()];
      if (!adjoint) {
        double acc = 0.0;
        for (std::size_t k = 0; k < kernel.size(); ++k) acc += kernel[k] * in[idx(s[k])];
        out[idx(o)] = acc;
      } else {
        const double v = in[idx(o)];
        for (std::size_t k = 0; k < kernel.size(); ++k) out[idx(s[k])] += kernel[k] * v;
      }
    }
  }
  return out;
}

void mse_grad_into(const Raster& image, const Raster& target, double scale, Raster& grad) {
  const double k = 2.0 * scale / static_cast<double>(image.size());
  for (std::size_t i = 0; i < image.size(); ++i) grad[i] += k * (image[i] - target[i]);
}

}  // namespace

double mse(const Raster& image, const Raster& target) {
  check_same(image, target, "mse");
  double acc = 0.0;
  for (std::size_t i = 0; i < image.size(); ++i) {
    const double d = image[i] - target[i];
    acc += d * d;
  }
  return acc / static_cast<double>(image.size());
}

Raster gaussian_blur(const Raster& image, double sigma) {
  const auto k = gaussian_kernel(sigma);
  return blur_pass(blur_pass(image, k, 0, false), k, 1, false);
}

Raster gaussian_blur_adjoint(const Raster& image, double sigma) {
  const auto k = gaussian_kernel(sigma);
  return blur_pass(blur_pass(image, k, 1, true), k, 0, true);
}

double blur_mse(const Raster& image, const Raster& target, const LossSpec& spec) {
  check_same(image, target, "blur_mse");
  spec.validate();
  const Raster bi = gaussian_blur(image, spec.blur_sigma);
  return spec.blur_target ? mse(bi, gaussian_blur(target, spec.blur_sigma)) : mse(bi, target);
}

std::vector<double> scale_space_sigmas(int octaves, int intervals, double base_sigma) {
  if (octaves < 1 || intervals < 1) throw std::invalid_argument("scale_space: octaves and intervals must be >= 1");
  std::vector<double> s;
  for (int o = 0; o < octaves; ++o) {
    for (int i = 0; i < intervals; ++i) s.push_back(base_sigma * std::exp2(o + static_cast<double>(i) / intervals));
  }
  return s;
}

std::vector<Raster> scale_space(const Raster& image, int octaves, int intervals, double base_sigma) {
  std::vector<Raster> levels;
  for (double s : scale_space_sigmas(octaves, intervals, base_sigma)) levels.push_back(gaussian_blur(image, s));
  return levels;
}

double ssmse(const Raster& image, const Raster& target, const LossSpec& spec) {
  check_same(image, target, "ssmse");
  spec.validate();
  double total = mse(image, target);
  for (double s : scale_space_sigmas(spec.octaves, spec.intervals, spec.base_sigma)) {
    total += mse(gaussian_blur(image, s), gaussian_blur(target, s));
  }
  return total;
}

double loss_value(const Raster& image, const Raster& target, const LossSpec& spec) {
  switch (spec.kind) {
    case LossSpec::Kind::MSE: return mse(image, target);
    case LossSpec::Kind::BlurMSE: return blur_mse(image, target, spec);
    case LossSpec::Kind::SSMSE: return ssmse(image, target, spec);
  }
  throw std::invalid_argument("loss_value: unknown loss");
}

LossGradient loss_with_grad(std::span<const Raster> image, std::span<const Raster> target, const LossSpec& spec) {
  if (image.empty() || image.size() != target.size()) throw std::invalid_argument("loss: channel count mismatch");
  spec.validate();
  LossGradient out;
  const double channel_weight = 1.0 / static_cast<double>(image.size());
  for (std::size_t c = 0; c < image.size(); ++c) {
    const Raster& x = image[c];
    const Raster& y = target[c];
    check_same(x, y, "loss");
    Raster g(x.canvas());
    switch (spec.kind) {
      case LossSpec::Kind::MSE:
        out.value += channel_weight * mse(x, y);
        mse_grad_into(x, y, channel_weight, g);
        break;
      case LossSpec::Kind::BlurMSE: {
        const Raster bx = gaussian_blur(x, spec.blur_sigma);
        const Raster by = spec.blur_target ? gaussian_blur(y, spec.blur_sigma) : y;
        out.value += channel_weight * mse(bx, by);
        Raster gb(x.canvas());
        mse_grad_into(bx, by, channel_weight, gb);
        g = gaussian_blur_adjoint(gb, spec.blur_sigma);
        break;
      }
      case LossSpec::Kind::SSMSE: {
        out.value += channel_weight * mse(x, y);
        mse_grad_into(x, y, channel_weight, g);
        for (double s : scale_space_sigmas(spec.octaves, spec.intervals, spec.base_sigma)) {
          const Raster bx = gaussian_blur(x, s);
          const Raster by = gaussian_blur(y, s);
          out.value += channel_weight * mse(bx, by);
          Raster gb(x.canvas());
          mse_grad_into(bx, by, channel_weight, gb);
          const Raster back = gaussian_blur_adjoint(gb, s);
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += back[i];
        }
        break;
      }
    }
    out.grad.push_back(std::move(g));
  }
  return out;
}

}  // namespace diffdraw
