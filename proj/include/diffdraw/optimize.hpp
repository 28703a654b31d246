#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "diffdraw/distance.hpp"
#include "diffdraw/grad.hpp"
#include "diffdraw/loss.hpp"
#include "diffdraw/primitives.hpp"
#include "diffdraw/raster.hpp"

namespace diffdraw {

/// Adam moments for a flat parameter vector.
struct AdamState {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;
  std::vector<double> m;
  std::vector<double> v;

  explicit AdamState(std::size_t n = 0, double learning_rate = 0.01);
};

/// One bias-corrected Adam update of params in place.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads);

struct InitOptions {
  double sigma2 = 0.54925 * 0.54925;
  bool color = false;  // random per-primitive colour, initialised uniformly in [0,1]
  double max_line_length = 0.4;
  double curve_radius = 0.2;  // curve control points lie within this distance of a random centre
};

/// Random scene: points uniform over the canvas in world units (y in [-1,1],
/// x in +-width/height); lines are short random strokes.
Scene init_scene(PrimitiveKind kind, int count, const Canvas& canvas, std::uint64_t seed,
                 Composition composition = {}, const InitOptions& options = {});

/// Small random scene used for gradient checks: long strokes, wide curves and
/// thicknesses uniform in [1,3] px.
Scene gradcheck_scene(PrimitiveKind kind, int count, const Canvas& canvas, const Composition& composition,
                      bool color, std::uint64_t seed);

struct FitConfig {
  int iterations = 500;
  double lr = 0.01;
  std::uint64_t seed = 0;
  bool learn_sigma = false;
  bool learn_color = false;
  LossSpec loss{};
  CurveMethod method{};
  int log_every = 0;
  int threads = 1;
  std::ostream* log = nullptr;  // progress sink; std::cout when null

  void validate() const;
};

struct FitResult {
  Scene scene;
  std::vector<double> history;  // iterations + 1 entries, pre-update losses then the final one
  std::vector<Raster> image;    // render of the final scene
};

/// Adam fit of every control point (and optionally sigma^2, colour, alpha)
/// to the target. Throws std::runtime_error if a parameter turns non-finite.
FitResult fit(const Scene& initial, std::span<const Raster> target, const FitConfig& config);

}  // namespace diffdraw
