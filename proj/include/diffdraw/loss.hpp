#pragma once

#include <span>
#include <vector>

#include "diffdraw/raster.hpp"

namespace diffdraw {

struct LossSpec {
  enum class Kind { MSE, BlurMSE, SSMSE };
  Kind kind = Kind::MSE;
  double blur_sigma = 1.0;
  bool blur_target = true;
  int octaves = 5;
  int intervals = 1;
  double base_sigma = 1.0;  // scale-space sigma of the first blurred level

  static LossSpec mse() { return {}; }
  static LossSpec blur_mse(double sigma, bool blur_target = true);
  static LossSpec ssmse(int octaves, int intervals);

  void validate() const;
  bool operator==(const LossSpec&) const = default;
};

/// Mean of squared per-pixel differences.
double mse(const Raster& image, const Raster& target);

/// Separable Gaussian, kernel truncated at ceil(3 sigma) and renormalised,
/// half-sample symmetric reflection at the borders.
Raster gaussian_blur(const Raster& image, double sigma);
/// Transpose of gaussian_blur as a linear map (border reflection included).
Raster gaussian_blur_adjoint(const Raster& image, double sigma);

double blur_mse(const Raster& image, const Raster& target, const LossSpec& spec);

/// sigma_0 * 2^(o + i/intervals) for o in [0,octaves), i in [0,intervals).
std::vector<double> scale_space_sigmas(int octaves, int intervals, double base_sigma = 1.0);
/// Constant-resolution scale space; each level is blurred directly from the input.
std::vector<Raster> scale_space(const Raster& image, int octaves, int intervals, double base_sigma = 1.0);
/// Sum of MSE over the unblurred level and every scale-space level.
double ssmse(const Raster& image, const Raster& target, const LossSpec& spec);

double loss_value(const Raster& image, const Raster& target, const LossSpec& spec);

struct LossGradient {
  double value = 0.0;
  std::vector<Raster> grad;  // d value / d image, one per channel
};

/// Loss averaged over channels, with its gradient w.r.t. every image channel.
LossGradient loss_with_grad(std::span<const Raster> image, std::span<const Raster> target, const LossSpec& spec);

}  // namespace diffdraw
