#include "diffdraw/imageio.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include "json.hpp"
#include <sstream>

namespace diffdraw {

namespace {

using Json = nlohmann::ordered_json;

std::string lower_ext(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

std::uint8_t quantize(double v) {
  if (std::isnan(v)) return 0;
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

std::vector<Raster> planes_from_bytes(const Canvas& canvas, int channels, const std::uint8_t* bytes, double maxval) {
  std::vector<Raster> planes(static_cast<std::size_t>(channels), Raster(canvas));
  const std::size_t n = canvas.pixels();
  for (std::size_t i = 0; i < n; ++i) {
    for (int c = 0; c < channels; ++c) planes[c][i] = bytes[i * channels + c] / maxval;
  }
  return planes;
}

std::vector<std::uint8_t> interleave(std::span<const Raster> planes) {
  const std::size_t n = planes[0].size();
  const std::size_t ch = planes.size();
  std::vector<std::uint8_t> bytes(n * ch);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < ch; ++c) bytes[i * ch + c] = quantize(planes[c][i]);
  }
  return bytes;
}

std::vector<Raster> load_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
    throw IoError("cannot read PNG " + path.string() + ": " + image.message);
  }
  if (image.format & PNG_FORMAT_FLAG_LINEAR) {
    png_image_free(&image);
    throw IoError("unsupported bit depth (16-bit) in " + path.string());
  }
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    throw IoError("cannot decode PNG " + path.string() + ": " + image.message);
  }
  const Canvas canvas(static_cast<int>(image.width), static_cast<int>(image.height));
  return planes_from_bytes(canvas, color ? 3 : 1, buf.data(), 255.0);
}

void save_png(std::span<const Raster> planes, const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(planes[0].width());
  image.height = static_cast<png_uint_32>(planes[0].height());
  image.format = planes.size() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const auto bytes = interleave(planes);
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, bytes.data(), 0, nullptr)) {
    throw IoError("cannot write PNG " + path.string() + ": " + image.message);
  }
}

// Netpbm header token reader that skips whitespace and '#' comments.
class PnmReader {
public:
  explicit PnmReader(const std::string& data) : data_(data) {}

  std::string token() {
    skip();
    const std::size_t start = pos_;
    while (pos_ < data_.size() && !std::isspace(static_cast<unsigned char>(data_[pos_]))) ++pos_;
    return data_.substr(start, pos_ - start);
  }
  int integer(const char* what) {
    const std::string t = token();
    try {
      std::size_t used = 0;
      const int v = std::stoi(t, &used);
      if (used != t.size()) throw std::invalid_argument(t);
      return v;
    } catch (const std::exception&) {
      throw IoError(std::string("malformed netpbm ") + what + ": '" + t + "'");
    }
  }
  // Binary payloads start after exactly one whitespace byte.
  std::size_t raster_start() const { return pos_ + 1; }

private:
  void skip() {
    while (pos_ < data_.size()) {
      if (data_[pos_] == '#') {
        while (pos_ < data_.size() && data_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(data_[pos_]))) {
        ++pos_;
      } else {
        break;
      }
    }
  }
  const std::string& data_;
  std::size_t pos_ = 0;
};

std::vector<Raster> load_pnm(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  PnmReader r(data);
  const std::string magic = r.token();
  if (magic != "P2" && magic != "P3" && magic != "P5" && magic != "P6") {
    throw IoError("unsupported netpbm type '" + magic + "' in " + path.string());
  }
  const int w = r.integer("width");
  const int h = r.integer("height");
  const int maxval = r.integer("maxval");
  if (w <= 0 || h <= 0) throw IoError("invalid netpbm dimensions in " + path.string());
  if (maxval <= 0 || maxval > 255) throw IoError("unsupported bit depth (maxval " + std::to_string(maxval) + ") in " + path.string());
  const int channels = (magic == "P3" || magic == "P6") ? 3 : 1;
  const std::size_t count = static_cast<std::size_t>(w) * h * channels;
  std::vector<std::uint8_t> bytes(count);
  if (magic == "P5" || magic == "P6") {
    const std::size_t start = r.raster_start();
    if (data.size() < start + count) throw IoError("truncated netpbm payload in " + path.string());
    std::copy_n(reinterpret_cast<const std::uint8_t*>(data.data()) + start, count, bytes.begin());
  } else {
    for (auto& b : bytes) {
      const int v = r.integer("sample");
      if (v < 0 || v > maxval) throw IoError("netpbm sample out of range in " + path.string());
      b = static_cast<std::uint8_t>(v);
    }
  }
  return planes_from_bytes(Canvas(w, h), channels, bytes.data(), maxval);
}

void save_pnm(std::span<const Raster> planes, const std::filesystem::path& path, bool color) {
  std::vector<Raster> out(planes.begin(), planes.end());
  if (color && out.size() == 1) out = {planes[0], planes[0], planes[0]};
  if (!color && out.size() == 3) out = {to_luma(planes)};
  std::ostringstream ss;
  ss << (color ? "P6" : "P5") << '\n' << out[0].width() << ' ' << out[0].height() << "\n255\n";
  const auto bytes = interleave(out);
  ss.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  write_file(path, ss.str());
}

std::string_view over_mode_name(OverMode m) {
  switch (m) {
    case OverMode::Recursive: return "recursive";
    case OverMode::Unrolled: return "unrolled";
    case OverMode::LogStable: return "logstable";
  }
  return "logstable";
}

// Schema helpers: every failure names the JSON path of the offending field.
[[noreturn]] void fail(const std::string& where, const std::string& what) { throw ParseError(where + ": " + what); }

const Json& field(const Json& obj, const std::string& key, const std::string& where) {
  if (!obj.is_object()) fail(where, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) fail(where, "missing field '" + key + "'");
  return *it;
}

double number(const Json& v, const std::string& where) {
  if (!v.is_number()) fail(where, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(where, "value must be finite");
  return d;
}

int integer(const Json& v, const std::string& where) {
  if (!v.is_number_integer()) fail(where, "expected an integer");
  return v.get<int>();
}

std::string text(const Json& v, const std::string& where) {
  if (!v.is_string()) fail(where, "expected a string");
  return v.get<std::string>();
}

Primitive parse_primitive(const Json& rec, const std::string& where) {
  const std::string kind_text = text(field(rec, "kind", where), where + ".kind");
  const auto kind = kind_from_name(kind_text);
  if (!kind) fail(where, "unknown primitive kind '" + kind_text + "'");
  const Json& pts = field(rec, "points", where);
  if (!pts.is_array()) fail(where + ".points", "expected an array");
  const std::size_t need = 2 * control_count(*kind);
  if (pts.size() != need) {
    fail(where + ".points", "kind '" + kind_text + "' needs " + std::to_string(need) + " coordinates, got " +
                                std::to_string(pts.size()));
  }
  std::vector<WorldPoint> ctrl;
  for (std::size_t i = 0; i < need; i += 2) {
    const std::string at = where + ".points[" + std::to_string(i) + "]";
    ctrl.emplace_back(number(pts[i], at), number(pts[i + 1], where + ".points[" + std::to_string(i + 1) + "]"));
  }

  StrokeStyle style;
  const bool has_sigma = rec.contains("sigma2");
  const bool has_thick = rec.contains("thickness");
  if (has_sigma && has_thick) fail(where, "give either 'sigma2' or 'thickness', not both");
  if (has_sigma) {
    style.sigma2 = number(rec["sigma2"], where + ".sigma2");
  } else if (has_thick) {
    const double t = number(rec["thickness"], where + ".thickness");
    if (!(t > 0.0)) fail(where + ".thickness", "must be > 0");
    const double s = sigma_from_thickness(t);
    style.sigma2 = s * s;
  }
  if (rec.contains("color")) {
    const Json& c = rec["color"];
    if (!c.is_array() || c.size() != 3) fail(where + ".color", "expected [r, g, b]");
    style.color = Rgb{number(c[0], where + ".color[0]"), number(c[1], where + ".color[1]"),
                      number(c[2], where + ".color[2]")};
  }
  if (rec.contains("alpha")) style.alpha = number(rec["alpha"], where + ".alpha");
  try {
    return Primitive(*kind, std::move(ctrl), style);
  } catch (const std::invalid_argument& e) {
    fail(where, e.what());
  }
}

int line_of(std::string_view text, std::size_t byte) {
  const std::size_t end = std::min(byte, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(end), '\n'));
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss << std::setprecision(10) << v;
  return ss.str();
}

std::string svg_color(const Primitive& p) {
  if (!p.style().color) return "#ffffff";
  const Rgb& c = *p.style().color;
  std::ostringstream ss;
  ss << "rgb(" << int(quantize(c.r)) << ',' << int(quantize(c.g)) << ',' << int(quantize(c.b)) << ')';
  return ss.str();
}

std::string svg_xy(const WorldPoint& p, const Canvas& c) {
  const ImagePoint q = world_to_image(p, c);
  return fmt(q.x) + "," + fmt(q.y);
}

}  // namespace

std::vector<Raster> load_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("no such file: " + path.string());
  const std::string ext = lower_ext(path);
  if (ext == ".png") return load_png(path);
  if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") return load_pnm(path);
  throw IoError("unsupported image extension '" + ext + "' (expected .png, .pgm or .ppm)");
}

Raster to_luma(std::span<const Raster> planes) {
  if (planes.size() == 1) return planes[0];
  if (planes.size() < 3) throw std::invalid_argument("to_luma: expected 1 or 3 planes");
  Raster out(planes[0].canvas());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 0.299 * planes[0][i] + 0.587 * planes[1][i] + 0.114 * planes[2][i];
  return out;
}

Raster load_gray(const std::filesystem::path& path) { return to_luma(load_image(path)); }

void save_image(std::span<const Raster> planes, const std::filesystem::path& path) {
  if (planes.size() != 1 && planes.size() != 3) throw std::invalid_argument("save_image: expected 1 or 3 planes");
  for (const auto& p : planes) {
    if (!(p.canvas() == planes[0].canvas())) throw std::invalid_argument("save_image: plane sizes differ");
  }
  const std::string ext = lower_ext(path);
  if (ext == ".png") return save_png(planes, path);
  if (ext == ".pgm") return save_pnm(planes, path, false);
  if (ext == ".ppm") return save_pnm(planes, path, true);
  throw IoError("unsupported image extension '" + ext + "' (expected .png, .pgm or .ppm)");
}

void save_image(const Raster& raster, const std::filesystem::path& path) {
  save_image(std::span<const Raster>(&raster, 1), path);
}

std::string serialize_scene(const Scene& scene) {
  Json doc;
  doc["format"] = "diffdraw-scene";
  doc["version"] = kSceneFormatVersion;
  doc["canvas"] = {{"width", scene.canvas.width}, {"height", scene.canvas.height}};
  Json comp;
  comp["kind"] = std::string(composition_name(scene.composition.kind));
  comp["tau"] = scene.composition.tau;
  comp["epsilon"] = scene.composition.epsilon;
  comp["over_mode"] = std::string(over_mode_name(scene.composition.over_mode));
  doc["composition"] = comp;
  Json prims = Json::array();
  for (const auto& p : scene.primitives) {
    Json rec;
    rec["kind"] = std::string(kind_name(p.kind()));
    Json pts = Json::array();
    for (const auto& c : p.control()) {
      pts.push_back(c.x);
      pts.push_back(c.y);
    }
    rec["points"] = pts;
    rec["sigma2"] = p.style().sigma2;
    if (p.style().color) rec["color"] = {p.style().color->r, p.style().color->g, p.style().color->b};
    if (p.style().alpha) rec["alpha"] = *p.style().alpha;
    prims.push_back(rec);
  }
  doc["primitives"] = prims;
  return doc.dump(2) + "\n";
}

Scene parse_scene(std::string_view input) {
  Json doc;
  try {
    doc = Json::parse(input.begin(), input.end());
  } catch (const Json::parse_error& e) {
    throw ParseError("line " + std::to_string(line_of(input, e.byte)) + ": " + e.what());
  } catch (const Json::out_of_range& e) {
    // numeric overflow such as 1e999; nlohmann reports no position for it
    throw ParseError(std::string("number out of range: ") + e.what());
  }
  if (!doc.is_object()) fail("document", "expected an object");
  if (doc.contains("format") && text(doc["format"], "format") != "diffdraw-scene") {
    fail("format", "expected 'diffdraw-scene'");
  }
  const int version = integer(field(doc, "version", "document"), "version");
  if (version > kSceneFormatVersion) {
    throw ParseError("unsupported scene format version " + std::to_string(version) + " (this build reads up to " +
                     std::to_string(kSceneFormatVersion) + ")");
  }
  if (version < 1) fail("version", "must be >= 1");

  const Json& cv = field(doc, "canvas", "document");
  const int w = integer(field(cv, "width", "canvas"), "canvas.width");
  const int h = integer(field(cv, "height", "canvas"), "canvas.height");
  if (w <= 0 || h <= 0) fail("canvas", "width and height must be positive");

  Composition comp;
  if (doc.contains("composition")) {
    const Json& c = doc["composition"];
    const std::string kind = text(field(c, "kind", "composition"), "composition.kind");
    if (kind == "softor") {
      comp.kind = Composition::Kind::SoftOr;
    } else if (kind == "over") {
      comp.kind = Composition::Kind::Over;
    } else if (kind == "smoothmax") {
      comp.kind = Composition::Kind::Smoothmax;
    } else {
      fail("composition.kind", "unknown composition '" + kind + "'");
    }
    if (c.contains("tau")) comp.tau = number(c["tau"], "composition.tau");
    if (c.contains("epsilon")) comp.epsilon = number(c["epsilon"], "composition.epsilon");
    if (c.contains("over_mode")) {
      const std::string m = text(c["over_mode"], "composition.over_mode");
      if (m == "recursive") {
        comp.over_mode = OverMode::Recursive;
      } else if (m == "unrolled") {
        comp.over_mode = OverMode::Unrolled;
      } else if (m == "logstable") {
        comp.over_mode = OverMode::LogStable;
      } else {
        fail("composition.over_mode", "unknown over mode '" + m + "'");
      }
    }
  }

  const Json& prims = field(doc, "primitives", "document");
  if (!prims.is_array()) fail("primitives", "expected an array");
  std::vector<Primitive> out;
  for (std::size_t i = 0; i < prims.size(); ++i) out.push_back(parse_primitive(prims[i], "primitives[" + std::to_string(i) + "]"));
  try {
    return Scene(std::move(out), comp, Canvas(w, h));
  } catch (const std::invalid_argument& e) {
    fail("document", e.what());
  }
}

void save_scene(const Scene& scene, const std::filesystem::path& path) { write_file(path, serialize_scene(scene)); }

Scene load_scene(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  try {
    return parse_scene(data);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string svg_document(const Scene& scene) {
  const Canvas& c = scene.canvas;
  std::ostringstream ss;
  ss << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << c.width << "\" height=\"" << c.height
     << "\" viewBox=\"0 0 " << c.width << ' ' << c.height << "\">\n";
  ss << "  <rect width=\"100%\" height=\"100%\" fill=\"#000000\"/>\n";
  for (const auto& p : scene.primitives) {
    const double thickness = thickness_from_sigma(std::sqrt(p.style().sigma2));
    const auto ctrl = p.control();
    std::string paint = "stroke=\"" + svg_color(p) + "\" stroke-width=\"" + fmt(thickness) + "\" stroke-linecap=\"round\"";
    if (p.style().alpha) paint += " stroke-opacity=\"" + fmt(*p.style().alpha) + "\"";
    switch (p.kind()) {
      case PrimitiveKind::Point: {
        const ImagePoint q = world_to_image(ctrl[0], c);
        ss << "  <circle cx=\"" << fmt(q.x) << "\" cy=\"" << fmt(q.y) << "\" r=\"" << fmt(0.5 * thickness)
           << "\" fill=\"" << svg_color(p) << "\"";
        if (p.style().alpha) ss << " fill-opacity=\"" << fmt(*p.style().alpha) << "\"";
        ss << "/>\n";
        break;
      }
      case PrimitiveKind::Line: {
        const ImagePoint a = world_to_image(ctrl[0], c);
        const ImagePoint b = world_to_image(ctrl[1], c);
        ss << "  <line x1=\"" << fmt(a.x) << "\" y1=\"" << fmt(a.y) << "\" x2=\"" << fmt(b.x) << "\" y2=\"" << fmt(b.y)
           << "\" " << paint << "/>\n";
        break;
      }
      case PrimitiveKind::QuadBezier:
        ss << "  <path d=\"M " << svg_xy(ctrl[0], c) << " Q " << svg_xy(ctrl[1], c) << ' ' << svg_xy(ctrl[2], c)
           << "\" fill=\"none\" " << paint << "/>\n";
        break;
      case PrimitiveKind::CubicBezier:
        ss << "  <path d=\"M " << svg_xy(ctrl[0], c) << " C " << svg_xy(ctrl[1], c) << ' ' << svg_xy(ctrl[2], c) << ' '
           << svg_xy(ctrl[3], c) << "\" fill=\"none\" " << paint << "/>\n";
        break;
      case PrimitiveKind::CatmullRom: {
        ss << "  <polyline points=\"";
        constexpr int kSamples = 32;
        for (int i = 0; i < kSamples; ++i) {
          if (i) ss << ' ';
          ss << svg_xy(eval_catmull_rom(p, static_cast<double>(i) / (kSamples - 1)), c);
        }
        ss << "\" fill=\"none\" " << paint << " stroke-linejoin=\"round\"/>\n";
        break;
      }
    }
  }
  ss << "</svg>\n";
  return ss.str();
}

void export_svg(const Scene& scene, const std::filesystem::path& path) { write_file(path, svg_document(scene)); }

}  // namespace diffdraw
