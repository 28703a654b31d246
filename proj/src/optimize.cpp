#include "diffdraw/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numbers>
#include <random>
#include <stdexcept>

namespace diffdraw {

AdamState::AdamState(std::size_t n, double learning_rate) : lr(learning_rate), m(n, 0.0), v(n, 0.0) {}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw std::invalid_argument("adam_step: parameter, gradient and moment sizes differ");
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    params[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
  }
}

Scene init_scene(PrimitiveKind kind, int count, const Canvas& canvas, std::uint64_t seed, Composition composition,
                 const InitOptions& options) {
  if (count < 1) throw std::invalid_argument("init_scene: count must be >= 1");
  std::mt19937_64 rng(seed);
  const double xr = static_cast<double>(canvas.width) / canvas.height;
  std::uniform_real_distribution<double> ux(-xr, xr);
  std::uniform_real_distribution<double> uy(-1.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);

  auto clamp_point = [&](double x, double y) { return WorldPoint(std::clamp(x, -xr, xr), std::clamp(y, -1.0, 1.0)); };

  std::vector<Primitive> prims;
  prims.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    StrokeStyle style;
    style.sigma2 = options.sigma2;
    std::vector<WorldPoint> ctrl;
    const double cx = ux(rng);
    const double cy = uy(rng);
    if (kind == PrimitiveKind::Point) {
      ctrl.emplace_back(cx, cy);
    } else if (kind == PrimitiveKind::Line) {
      const double len = options.max_line_length * unit(rng);
      const double a = angle(rng);
      ctrl.push_back(WorldPoint(cx, cy));
      ctrl.push_back(clamp_point(cx + len * std::cos(a), cy + len * std::sin(a)));
    } else {
      ctrl.push_back(WorldPoint(cx, cy));
      for (std::size_t j = 1; j < control_count(kind); ++j) {
        const double r = options.curve_radius * std::sqrt(unit(rng));
        const double a = angle(rng);
        ctrl.push_back(clamp_point(cx + r * std::cos(a), cy + r * std::sin(a)));
      }
    }
    if (options.color) style.color = Rgb{unit(rng), unit(rng), unit(rng)};
    prims.emplace_back(kind, std::move(ctrl), style);
  }
  return Scene(std::move(prims), composition, canvas);
}

void FitConfig::validate() const {
  if (iterations < 1) throw std::invalid_argument("FitConfig: iterations must be >= 1");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw std::invalid_argument("FitConfig: lr must be finite and >= 0");
  if (threads < 1) throw std::invalid_argument("FitConfig: threads must be >= 1");
  loss.validate();
}

FitResult fit(const Scene& initial, std::span<const Raster> target, const FitConfig& config) {
  config.validate();
  std::ostream& log = config.log ? *config.log : std::cout;
  const RenderOptions opts{config.method, config.threads};
  Scene scene = initial;
  const auto ids = enumerate_params(scene, {config.learn_sigma, config.learn_color});

  std::vector<double> params(ids.size());
  std::vector<double> grads(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) params[i] = param_value(scene, ids[i]);
  AdamState adam(ids.size(), config.lr);

  FitResult result{scene, {}, {}};
  result.history.reserve(static_cast<std::size_t>(config.iterations) + 1);
  for (int it = 0; it < config.iterations; ++it) {
    const BackwardResult br = backward(scene, target, config.loss, opts);
    result.history.push_back(br.loss);
    if (config.log_every > 0 && it % config.log_every == 0) log << "iter=" << it << " loss=" << br.loss << '\n';
    for (std::size_t i = 0; i < ids.size(); ++i) grads[i] = grad_value(br.grads, ids[i]);
    if (!std::all_of(grads.begin(), grads.end(), [](double g) { return std::isfinite(g); })) {
      throw std::runtime_error("fit: non-finite gradient at iteration " + std::to_string(it));
    }
    adam_step(adam, params, grads);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      double& p = params[i];
      if (!std::isfinite(p)) {
        throw std::runtime_error("fit: parameter " + ids[i].describe() + " became non-finite at iteration " +
                                 std::to_string(it));
      }
      switch (ids[i].field) {
        case ParamId::Field::Sigma2: p = std::max(p, 1e-6); break;
        case ParamId::Field::ColorR:
        case ParamId::Field::ColorG:
        case ParamId::Field::ColorB:
        case ParamId::Field::Alpha: p = std::clamp(p, 0.0, 1.0); break;
        default: break;
      }
      set_param(scene, ids[i], p);
    }
  }
  result.image = render(scene, opts);
  result.history.push_back(loss_with_grad(result.image, target, config.loss).value);
  const int last = config.iterations;
  if (config.log_every > 0) log << "iter=" << last << " loss=" << result.history.back() << '\n';
  result.scene = std::move(scene);
  return result;
}

Scene gradcheck_scene(PrimitiveKind kind, int count, const Canvas& canvas, const Composition& composition,
                      bool color, std::uint64_t seed) {
  InitOptions init;
  init.color = color;
  init.max_line_length = 0.8;
  init.curve_radius = 0.5;
  Scene scene = init_scene(kind, count, canvas, seed, composition, init);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> thick(1.0, 3.0);
  for (auto& p : scene.primitives) {
    const double s = sigma_from_thickness(thick(rng));
    p.style().sigma2 = s * s;
  }
  return scene;
}

}  // namespace diffdraw
