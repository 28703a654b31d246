#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "diffdraw/distance.hpp"
#include "diffdraw/loss.hpp"
#include "diffdraw/primitives.hpp"
#include "diffdraw/raster.hpp"

namespace diffdraw {

struct RenderOptions {
  CurveMethod method{};
  int threads = 1;
};

/// Relaxed render of a scene. Returns one channel for grey scenes, or three
/// (RGB composited over black) when any primitive carries a colour.
std::vector<Raster> render(const Scene& scene, const RenderOptions& options = {});

/// Bytes held by per-primitive intensity tiles during the last render of
/// this scene; what `bench` reports as field memory.
std::size_t field_memory_bytes(const Scene& scene, const RenderOptions& options = {});

struct PrimitiveGrad {
  std::vector<Vec2> control;  // loss per world unit
  double sigma2 = 0.0;
  std::optional<Rgb> color;
  std::optional<double> alpha;
};

struct ParamGradients {
  std::vector<PrimitiveGrad> primitives;
};

struct BackwardResult {
  double loss = 0.0;
  ParamGradients grads;
  std::vector<Raster> image;
};

/// Loss of the rendered scene against `target` and its exact gradient with
/// respect to every primitive parameter. Polyline curves differentiate
/// through the winning chord; recursive search holds the found parameter
/// fixed.
BackwardResult backward(const Scene& scene, std::span<const Raster> target, const LossSpec& loss,
                        const RenderOptions& options = {});

/// Addresses one scalar parameter of a scene.
struct ParamId {
  enum class Field { ControlX, ControlY, Sigma2, ColorR, ColorG, ColorB, Alpha };
  std::size_t primitive = 0;
  Field field = Field::ControlX;
  std::size_t point = 0;

  std::string describe() const;
  bool operator==(const ParamId&) const = default;
};

struct ParamSelection {
  bool sigma2 = true;
  bool color = true;  // colour and alpha, where the primitive has them
};

std::vector<ParamId> enumerate_params(const Scene& scene, ParamSelection selection);
double param_value(const Scene& scene, const ParamId& id);
void set_param(Scene& scene, const ParamId& id, double value);
double grad_value(const ParamGradients& grads, const ParamId& id);

struct GradCheckEntry {
  ParamId param;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
  bool underflow = false;  // both estimates below 1e-10; excluded from the summary
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_error = 0.0;
  std::size_t underflowed = 0;
};

/// Compares backward() with central differences of the full forward pass.
GradCheckReport grad_check(const Scene& scene, std::span<const Raster> target, const LossSpec& loss, double h,
                           const RenderOptions& options = {});

}  // namespace diffdraw
