#pragma once

#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "diffdraw/primitives.hpp"
#include "diffdraw/raster.hpp"

namespace diffdraw {

/// File could not be read or written, or holds an unsupported image layout.
class IoError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Scene document violates the schema; the message names the line or field.
class ParseError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr int kSceneFormatVersion = 1;

/// 8-bit PNG, PGM or PPM. Returns one plane for grey files and three for
/// colour, each scaled to [0,1] by /255.
std::vector<Raster> load_image(const std::filesystem::path& path);
/// 0.299 R + 0.587 G + 0.114 B; a single plane is returned unchanged.
Raster to_luma(std::span<const Raster> planes);
Raster load_gray(const std::filesystem::path& path);

/// Writes one (grey) or three (RGB) planes, choosing the encoder from the
/// extension (.png, .pgm, .ppm). Values are quantised as round(v*255), clamped.
void save_image(std::span<const Raster> planes, const std::filesystem::path& path);
void save_image(const Raster& raster, const std::filesystem::path& path);

/// Pretty-printed JSON with a fixed field order; doubles keep full precision.
std::string serialize_scene(const Scene& scene);
/// Accepts either "sigma2" or "thickness" (pixels) per primitive.
Scene parse_scene(std::string_view text);
void save_scene(const Scene& scene, const std::filesystem::path& path);
Scene load_scene(const std::filesystem::path& path);

/// SVG with a black background; stroke widths are the primitive thickness in pixels.
std::string svg_document(const Scene& scene);
void export_svg(const Scene& scene, const std::filesystem::path& path);

}  // namespace diffdraw
