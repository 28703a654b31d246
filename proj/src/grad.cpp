#include "diffdraw/grad.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

namespace diffdraw {

namespace {

// exp(-x) is exactly zero in double precision for x >= 745.2; pixels
// farther than this many sigma^2 contribute neither value nor gradient.
constexpr double kUnderflowRatio = 750.0;

template <class Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) fn(i);
    });
  }
}

struct Layer {
  PrimitiveDistance dist;
  PixelRect rect;
  double sigma2 = 1.0;
  double alpha = 1.0;
  std::array<double, 3> rgb{1.0, 1.0, 1.0};
  std::vector<double> intensity;  // within rect, row-major
  std::vector<double> transmit;   // over: transmittance in front of this layer
};

struct LayerGrad {
  std::vector<double> g_intensity;
  double alpha = 0.0;
  std::array<double, 3> rgb{};
};

class Pipeline {
public:
  Pipeline(const Scene& scene, const RenderOptions& options)
      : scene_(scene), options_(options), channels_(scene.is_color() ? 3 : 1) {}

  std::vector<Raster> forward();
  ParamGradients backward(std::span<const Raster> grad_out) const;
  std::size_t tile_bytes() const;

private:
  double coef(const Layer& l, int c) const { return channels_ == 1 ? l.alpha : l.alpha * l.rgb[c]; }
  std::size_t pix(int x, int y) const { return static_cast<std::size_t>(y) * scene_.canvas.width + x; }

  template <class Fn>
  void for_rect(const Layer& l, Fn&& fn) const {
    std::size_t local = 0;
    for (int y = l.rect.y0; y < l.rect.y1; ++y) {
      for (int x = l.rect.x0; x < l.rect.x1; ++x, ++local) fn(x, y, local, pix(x, y));
    }
  }

  void build_layer(std::size_t i);
  void compose_soft_or();
  void compose_over();
  void compose_smoothmax();
  std::vector<LayerGrad> compose_backward(std::span<const Raster> g) const;
  PrimitiveGrad geometry_backward(const Layer& l, const LayerGrad& lg) const;

  const Scene& scene_;
  RenderOptions options_;
  int channels_;
  std::vector<Layer> layers_;
  std::vector<Raster> out_;

  // soft-or state: product of non-zero (1 - v) factors, and count of zero factors
  std::vector<std::vector<double>> keep_;
  std::vector<std::vector<int>> zeros_;
  // smoothmax state
  std::vector<std::vector<double>> max_;
  std::vector<std::vector<double>> denom_;
};

void Pipeline::build_layer(std::size_t i) {
  const Primitive& prim = scene_.primitives[i];
  const StrokeStyle& st = prim.style();
  if (!(st.sigma2 > 0.0) || !std::isfinite(st.sigma2)) {
    throw std::invalid_argument("primitive " + std::to_string(i) + ": sigma2 must be > 0");
  }
  Layer& l = layers_[i];
  l.sigma2 = st.sigma2;
  l.alpha = st.alpha.value_or(1.0);
  if (st.color) l.rgb = {st.color->r, st.color->g, st.color->b};
  l.rect = support_rect(l.dist, kUnderflowRatio * l.sigma2, scene_.canvas);
  l.intensity.assign(l.rect.area(), 0.0);
  const double inv = 1.0 / l.sigma2;
  for_rect(l, [&](int x, int y, std::size_t local, std::size_t) {
    l.intensity[local] = std::exp(-l.dist.query(Vec2{double(x), double(y)}).d2 * inv);
  });
}

std::vector<Raster> Pipeline::forward() {
  layers_.clear();
  layers_.reserve(scene_.primitives.size());
  for (const auto& prim : scene_.primitives) {
    layers_.push_back(Layer{PrimitiveDistance(prim, scene_.canvas, options_.method), {}, 1.0, 1.0, {1, 1, 1}, {}, {}});
  }
  parallel_for(layers_.size(), options_.threads, [&](std::size_t i) { build_layer(i); });

  out_.assign(static_cast<std::size_t>(channels_), Raster(scene_.canvas));
  switch (scene_.composition.kind) {
    case Composition::Kind::SoftOr: compose_soft_or(); break;
    case Composition::Kind::Over: compose_over(); break;
    case Composition::Kind::Smoothmax: compose_smoothmax(); break;
  }
  return out_;
}

void Pipeline::compose_soft_or() {
  const std::size_t n = scene_.canvas.pixels();
  keep_.assign(channels_, std::vector<double>(n, 1.0));
  zeros_.assign(channels_, std::vector<int>(n, 0));
  for (const auto& l : layers_) {
    for (int c = 0; c < channels_; ++c) {
      const double k = coef(l, c);
      for_rect(l, [&](int, int, std::size_t local, std::size_t p) {
        const double f = 1.0 - k * l.intensity[local];
        if (f == 0.0) {
          ++zeros_[c][p];
        } else {
          keep_[c][p] *= f;
        }
      });
    }
  }
  for (int c = 0; c < channels_; ++c) {
    for (std::size_t p = 0; p < n; ++p) out_[c][p] = zeros_[c][p] > 0 ? 1.0 : 1.0 - keep_[c][p];
  }
}

void Pipeline::compose_over() {
  const std::size_t n = scene_.canvas.pixels();
  const bool log_mode = scene_.composition.over_mode == OverMode::LogStable;
  const double eps = scene_.composition.epsilon;
  std::vector<double> transmit(n, 1.0);
  std::vector<double> log_transmit(log_mode ? n : 0, 0.0);
  for (auto& l : layers_) {
    l.transmit.assign(l.rect.area(), 0.0);
    for_rect(l, [&](int, int, std::size_t local, std::size_t p) {
      const double t = transmit[p];
      l.transmit[local] = t;
      const double a = l.alpha * l.intensity[local];
      for (int c = 0; c < channels_; ++c) out_[c][p] += coef(l, c) * l.intensity[local] * t;
      if (log_mode) {
        log_transmit[p] += std::log1p(-a * (1.0 - eps));
        transmit[p] = std::exp(log_transmit[p]);
      } else {
        transmit[p] = t * (1.0 - a);
      }
    });
  }
}

void Pipeline::compose_smoothmax() {
  const std::size_t n = scene_.canvas.pixels();
  const double tau = scene_.composition.tau;
  const int k = static_cast<int>(layers_.size());
  std::vector<int> covered(n, 0);
  for (const auto& l : layers_) for_rect(l, [&](int, int, std::size_t, std::size_t p) { ++covered[p]; });

  max_.assign(channels_, std::vector<double>(n, -std::numeric_limits<double>::infinity()));
  denom_.assign(channels_, std::vector<double>(n, 0.0));
  for (int c = 0; c < channels_; ++c) {
    auto& m = max_[c];
    for (const auto& l : layers_) {
      const double kc = coef(l, c);
      for_rect(l, [&](int, int, std::size_t local, std::size_t p) { m[p] = std::max(m[p], kc * l.intensity[local]); });
    }
    // layers whose tile misses a pixel contribute an exact zero there
    for (std::size_t p = 0; p < n; ++p) {
      if (covered[p] < k) m[p] = std::max(m[p], 0.0);
    }
    auto& den = denom_[c];
    auto& num = out_[c];
    for (std::size_t p = 0; p < n; ++p) den[p] = (k - covered[p]) * std::exp(-m[p] / tau);
    for (const auto& l : layers_) {
      const double kc = coef(l, c);
      for_rect(l, [&](int, int, std::size_t local, std::size_t p) {
        const double x = kc * l.intensity[local];
        const double w = std::exp((x - m[p]) / tau);
        den[p] += w;
        num[p] += w * x;
      });
    }
    for (std::size_t p = 0; p < n; ++p) num[p] /= den[p];
  }
}

std::vector<LayerGrad> Pipeline::compose_backward(std::span<const Raster> g) const {
  const std::size_t n = scene_.canvas.pixels();
  std::vector<LayerGrad> grads(layers_.size());
  for (std::size_t i = 0; i < layers_.size(); ++i) grads[i].g_intensity.assign(layers_[i].rect.area(), 0.0);

  // Accumulates d/dI, d/dalpha and d/drgb from per-channel value and coverage adjoints.
  auto accumulate = [&](const Layer& l, LayerGrad& lg, std::size_t local, const double* g_value, double g_cover) {
    const double intensity = l.intensity[local];
    double weighted = g_cover;
    for (int c = 0; c < channels_; ++c) {
      const double col = channels_ == 1 ? 1.0 : l.rgb[c];
      weighted += col * g_value[c];
      lg.rgb[c] += l.alpha * intensity * g_value[c];
    }
    lg.g_intensity[local] += l.alpha * weighted;
    lg.alpha += intensity * weighted;
  };

  switch (scene_.composition.kind) {
    case Composition::Kind::SoftOr: {
      for (std::size_t i = 0; i < layers_.size(); ++i) {
        const Layer& l = layers_[i];
        for_rect(l, [&](int, int, std::size_t local, std::size_t p) {
          double gv[3] = {0, 0, 0};
          for (int c = 0; c < channels_; ++c) {
            const double f = 1.0 - coef(l, c) * l.intensity[local];
            const int z = zeros_[c][p];
            double others;
            if (f == 0.0) {
              others = z == 1 ? keep_[c][p] : 0.0;
            } else {
              others = z > 0 ? 0.0 : keep_[c][p] / f;
            }
            gv[c] = g[c][p] * others;
          }
          accumulate(l, grads[i], local, gv, 0.0);
        });
      }
      break;
    }
    case Composition::Kind::Over: {
      const bool log_mode = scene_.composition.over_mode == OverMode::LogStable;
      const double db = log_mode ? 1.0 - scene_.composition.epsilon : 1.0;
      std::vector<std::vector<double>> behind(channels_, std::vector<double>(n, 0.0));
      for (std::size_t i = layers_.size(); i-- > 0;) {
        const Layer& l = layers_[i];
        for_rect(l, [&](int, int, std::size_t local, std::size_t p) {
          const double t = l.transmit[local];
          const double a = l.alpha * l.intensity[local];
          double gv[3] = {0, 0, 0};
          double gb = 0.0;
          for (int c = 0; c < channels_; ++c) {
            gv[c] = g[c][p] * t;
            gb += g[c][p] * t * behind[c][p];
          }
          accumulate(l, grads[i], local, gv, -db * gb);
          const double b = 1.0 - a * db;
          for (int c = 0; c < channels_; ++c) behind[c][p] = coef(l, c) * l.intensity[local] + b * behind[c][p];
        });
      }
      break;
    }
    case Composition::Kind::Smoothmax: {
      const double tau = scene_.composition.tau;
      for (std::size_t i = 0; i < layers_.size(); ++i) {
        const Layer& l = layers_[i];
        for_rect(l, [&](int, int, std::size_t local, std::size_t p) {
          double gv[3] = {0, 0, 0};
          for (int c = 0; c < channels_; ++c) {
            const double x = coef(l, c) * l.intensity[local];
            const double w = std::exp((x - max_[c][p]) / tau) / denom_[c][p];
            gv[c] = g[c][p] * w * (1.0 + (x - out_[c][p]) / tau);
          }
          accumulate(l, grads[i], local, gv, 0.0);
        });
      }
      break;
    }
  }
  return grads;
}

// Adjoint of the three-case segment distance w.r.t. its endpoints.
void segment_adjoint(Vec2 n, Vec2 s, Vec2 e, double g, Vec2& ds, Vec2& de) {
  const ClosestPoint cp = sqdist_line_segment(n, s, e);
  if (cp.t == 0.0) {
    ds += (2.0 * g) * (s - n);
  } else if (cp.t == 1.0) {
    de += (2.0 * g) * (e - n);
  } else {
    const Vec2 r = n - (s + cp.t * (e - s));
    ds += (-2.0 * g * (1.0 - cp.t)) * r;
    de += (-2.0 * g * cp.t) * r;
  }
}

PrimitiveGrad Pipeline::geometry_backward(const Layer& l, const LayerGrad& lg) const {
  const PrimitiveKind kind = l.dist.kind();
  const auto ctrl = l.dist.controls();
  std::vector<Vec2> adj(ctrl.size());
  PrimitiveGrad out;
  const bool polyline = is_curve(kind) && l.dist.method().kind == CurveMethod::Kind::Polyline;
  std::vector<Vec2> adj_vertex(polyline ? l.dist.samples().size() : 0);
  const double inv = 1.0 / l.sigma2;

  for_rect(l, [&](int x, int y, std::size_t local, std::size_t) {
    const double intensity = l.intensity[local];
    const double gi = lg.g_intensity[local];
    if (intensity == 0.0 || gi == 0.0) return;
    const Vec2 n{double(x), double(y)};
    const auto q = l.dist.query(n);
    out.sigma2 += gi * intensity * q.d2 * inv * inv;
    const double gd = -gi * intensity * inv;
    switch (kind) {
      case PrimitiveKind::Point: adj[0] += (2.0 * gd) * (ctrl[0] - n); break;
      case PrimitiveKind::Line: segment_adjoint(n, ctrl[0], ctrl[1], gd, adj[0], adj[1]); break;
      default:
        if (polyline) {
          const auto v = l.dist.samples();
          segment_adjoint(n, v[q.chord], v[q.chord + 1], gd, adj_vertex[q.chord], adj_vertex[q.chord + 1]);
        } else {
          // envelope rule: the located parameter is held fixed
          const CurveSample cs = eval_curve_with_jacobian(kind, ctrl, q.t);
          const Vec2 a = (2.0 * gd) * (cs.point - n);
          for (std::size_t j = 0; j < ctrl.size(); ++j) adj[j] += cs.jacobian[j].transpose_apply(a);
        }
    }
  });

  if (polyline) {
    const int segments = static_cast<int>(adj_vertex.size()) - 1;
    for (int k = 0; k <= segments; ++k) {
      if (adj_vertex[k] == Vec2{}) continue;
      const CurveSample cs = eval_curve_with_jacobian(kind, ctrl, static_cast<double>(k) / segments);
      for (std::size_t j = 0; j < ctrl.size(); ++j) adj[j] += cs.jacobian[j].transpose_apply(adj_vertex[k]);
    }
  }

  const double scale = scene_.canvas.scale();
  out.control.resize(ctrl.size());
  for (std::size_t j = 0; j < ctrl.size(); ++j) out.control[j] = scale * adj[j];
  return out;
}

ParamGradients Pipeline::backward(std::span<const Raster> grad_out) const {
  const auto lgrads = compose_backward(grad_out);
  ParamGradients grads;
  grads.primitives.resize(layers_.size());
  parallel_for(layers_.size(), options_.threads, [&](std::size_t i) {
    PrimitiveGrad pg = geometry_backward(layers_[i], lgrads[i]);
    const StrokeStyle& st = scene_.primitives[i].style();
    if (st.alpha) pg.alpha = lgrads[i].alpha;
    if (st.color) pg.color = Rgb{lgrads[i].rgb[0], lgrads[i].rgb[1], lgrads[i].rgb[2]};
    grads.primitives[i] = std::move(pg);
  });
  return grads;
}

std::size_t Pipeline::tile_bytes() const {
  std::size_t total = 0;
  for (const auto& l : layers_) total += (l.intensity.size() + l.transmit.size()) * sizeof(double);
  return total;
}

void check_target(const Scene& scene, std::span<const Raster> target) {
  const std::size_t want = scene.is_color() ? 3 : 1;
  if (target.size() != want) {
    throw std::invalid_argument("target has " + std::to_string(target.size()) + " channel(s), scene renders " +
                                std::to_string(want));
  }
  for (const auto& t : target) {
    if (!(t.canvas() == scene.canvas)) throw std::invalid_argument("target canvas does not match scene canvas");
  }
}

}  // namespace

std::vector<Raster> render(const Scene& scene, const RenderOptions& options) {
  Pipeline p(scene, options);
  return p.forward();
}

std::size_t field_memory_bytes(const Scene& scene, const RenderOptions& options) {
  Pipeline p(scene, options);
  p.forward();
  return p.tile_bytes();
}

BackwardResult backward(const Scene& scene, std::span<const Raster> target, const LossSpec& loss,
                        const RenderOptions& options) {
  check_target(scene, target);
  Pipeline p(scene, options);
  BackwardResult result;
  result.image = p.forward();
  LossGradient lg = loss_with_grad(result.image, target, loss);
  result.loss = lg.value;
  result.grads = p.backward(lg.grad);
  return result;
}

std::string ParamId::describe() const {
  std::string s = "prim[" + std::to_string(primitive) + "].";
  switch (field) {
    case Field::ControlX: return s + "p" + std::to_string(point) + ".x";
    case Field::ControlY: return s + "p" + std::to_string(point) + ".y";
    case Field::Sigma2: return s + "sigma2";
    case Field::ColorR: return s + "r";
    case Field::ColorG: return s + "g";
    case Field::ColorB: return s + "b";
    case Field::Alpha: return s + "alpha";
  }
  return s;
}

std::vector<ParamId> enumerate_params(const Scene& scene, ParamSelection selection) {
  using F = ParamId::Field;
  std::vector<ParamId> ids;
  for (std::size_t i = 0; i < scene.primitives.size(); ++i) {
    const Primitive& p = scene.primitives[i];
    for (std::size_t j = 0; j < p.control().size(); ++j) {
      ids.push_back({i, F::ControlX, j});
      ids.push_back({i, F::ControlY, j});
    }
    if (selection.sigma2) ids.push_back({i, F::Sigma2, 0});
    if (selection.color && p.style().color) {
      ids.push_back({i, F::ColorR, 0});
      ids.push_back({i, F::ColorG, 0});
      ids.push_back({i, F::ColorB, 0});
    }
    if (selection.color && p.style().alpha) ids.push_back({i, F::Alpha, 0});
  }
  return ids;
}

double param_value(const Scene& scene, const ParamId& id) {
  using F = ParamId::Field;
  const Primitive& p = scene.primitives.at(id.primitive);
  switch (id.field) {
    case F::ControlX: return p.control()[id.point].x;
    case F::ControlY: return p.control()[id.point].y;
    case F::Sigma2: return p.style().sigma2;
    case F::ColorR: return p.style().color.value().r;
    case F::ColorG: return p.style().color.value().g;
    case F::ColorB: return p.style().color.value().b;
    case F::Alpha: return p.style().alpha.value();
  }
  return 0.0;
}

void set_param(Scene& scene, const ParamId& id, double value) {
  using F = ParamId::Field;
  Primitive& p = scene.primitives.at(id.primitive);
  switch (id.field) {
    case F::ControlX: p.set_control(id.point, WorldPoint(value, p.control()[id.point].y)); break;
    case F::ControlY: p.set_control(id.point, WorldPoint(p.control()[id.point].x, value)); break;
    case F::Sigma2: p.style().sigma2 = value; break;
    case F::ColorR: p.style().color.value().r = value; break;
    case F::ColorG: p.style().color.value().g = value; break;
    case F::ColorB: p.style().color.value().b = value; break;
    case F::Alpha: p.style().alpha.value() = value; break;
  }
}

double grad_value(const ParamGradients& grads, const ParamId& id) {
  using F = ParamId::Field;
  const PrimitiveGrad& g = grads.primitives.at(id.primitive);
  switch (id.field) {
    case F::ControlX: return g.control.at(id.point).x;
    case F::ControlY: return g.control.at(id.point).y;
    case F::Sigma2: return g.sigma2;
    case F::ColorR: return g.color.value().r;
    case F::ColorG: return g.color.value().g;
    case F::ColorB: return g.color.value().b;
    case F::Alpha: return g.alpha.value();
  }
  return 0.0;
}

GradCheckReport grad_check(const Scene& scene, std::span<const Raster> target, const LossSpec& loss, double h,
                           const RenderOptions& options) {
  if (!(h > 0.0)) throw std::invalid_argument("grad_check: step h must be > 0");
  const BackwardResult exact = backward(scene, target, loss, options);
  auto loss_at = [&](const Scene& s) {
    const auto img = render(s, options);
    return loss_with_grad(img, target, loss).value;
  };

  GradCheckReport report;
  Scene probe = scene;
  for (const ParamId& id : enumerate_params(scene, {true, true})) {
    const double x0 = param_value(scene, id);
    set_param(probe, id, x0 + h);
    const double up = loss_at(probe);
    set_param(probe, id, x0 - h);
    const double down = loss_at(probe);
    set_param(probe, id, x0);

    GradCheckEntry e;
    e.param = id;
    e.analytic = grad_value(exact.grads, id);
    e.numeric = (up - down) / (2.0 * h);
    e.rel_error = std::abs(e.analytic - e.numeric) / std::max({std::abs(e.analytic), std::abs(e.numeric), 1e-8});
    e.underflow = std::abs(e.analytic) < 1e-10 && std::abs(e.numeric) < 1e-10;
    if (e.underflow) {
      ++report.underflowed;
    } else {
      report.max_rel_error = std::max(report.max_rel_error, e.rel_error);
    }
    report.entries.push_back(e);
  }
  return report;
}

}  // namespace diffdraw
