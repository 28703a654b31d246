#include <filesystem>
#include <fstream>
#include <random>

#include "diffdraw/imageio.hpp"
#include "diffdraw/optimize.hpp"
#include "doctest.h"

using namespace diffdraw;
using doctest::Approx;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "diffdraw_tests";
  fs::create_directories(dir);
  return dir / name;
}

void write_text(const fs::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("image save/load round-trips within one quantisation step") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 1);
  Raster r(Canvas(13, 7));
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = u(rng);
  for (const char* ext : {".png", ".pgm"}) {
    const fs::path p = scratch(std::string("rt") + ext);
    save_image(r, p);
    const auto back = load_image(p);
    REQUIRE(back.size() == 1);
    for (std::size_t i = 0; i < r.size(); ++i) CHECK(std::abs(back[0][i] - r[i]) <= 1.0 / 255 + 1e-12);
  }
  std::vector<Raster> rgb{r, r, r};
  for (std::size_t i = 0; i < r.size(); ++i) rgb[1][i] = 1 - r[i];
  for (const char* ext : {".png", ".ppm"}) {
    const fs::path p = scratch(std::string("rgb") + ext);
    save_image(rgb, p);
    const auto back = load_image(p);
    REQUIRE(back.size() == 3);
    for (int ch = 0; ch < 3; ++ch) {
      for (std::size_t i = 0; i < r.size(); ++i) CHECK(std::abs(back[ch][i] - rgb[ch][i]) <= 1.0 / 255 + 1e-12);
    }
  }
}

TEST_CASE("image values map linearly") {
  const fs::path p = scratch("v128.pgm");
  write_text(p, "P2\n# comment\n2 1\n255\n128 0\n");
  const auto img = load_image(p);
  CHECK(img[0][0] == Approx(128.0 / 255.0));
  CHECK(img[0][1] == 0.0);
  const fs::path black = scratch("black.png");
  save_image(Raster(Canvas(4, 4), 0.0), black);
  CHECK(load_image(black)[0].sum() == 0.0);
  const fs::path clip = scratch("clip.pgm");
  save_image(Raster(Canvas(2, 2), 1.7), clip);
  CHECK(load_image(clip)[0][0] == 1.0);
}

TEST_CASE("luma conversion") {
  const Canvas c(1, 1);
  const std::vector<Raster> rgb{Raster(c, 1.0), Raster(c, 0.5), Raster(c, 0.0)};
  CHECK(to_luma(rgb)[0] == Approx(0.299 + 0.5 * 0.587));
}

TEST_CASE("image loading errors") {
  CHECK_THROWS_AS(load_image(scratch("missing.png")), IoError);
  const fs::path deep = scratch("deep.pgm");
  write_text(deep, "P2\n1 1\n65535\n1000\n");
  CHECK_THROWS_AS(load_image(deep), IoError);
  const fs::path junk = scratch("junk.png");
  write_text(junk, "not a png");
  CHECK_THROWS_AS(load_image(junk), IoError);
  CHECK_THROWS_AS(save_image(Raster(Canvas(1, 1)), scratch("x.bmp")), IoError);
}

TEST_CASE("scene round-trip is exact") {
  InitOptions init;
  init.color = true;
  Scene s = init_scene(PrimitiveKind::CatmullRom, 5, Canvas(40, 30), 9, Composition::smoothmax(0.037), init);
  s.primitives[2].style().alpha = 0.3;
  s.primitives[1].style().sigma2 = 1.0 / 3.0;
  const fs::path p = scratch("scene.json");
  save_scene(s, p);
  CHECK(load_scene(p) == s);
  for (PrimitiveKind k : {PrimitiveKind::Point, PrimitiveKind::Line, PrimitiveKind::QuadBezier, PrimitiveKind::CubicBezier}) {
    const Scene g = init_scene(k, 3, Canvas(17, 23), 4, Composition::over(OverMode::Unrolled));
    CHECK(parse_scene(serialize_scene(g)) == g);
  }
}

TEST_CASE("scene documents list fields in a fixed order") {
  const Scene s({Primitive::line({0, 0}, {0.5, 0.25})}, Composition::soft_or(), Canvas(8, 8));
  const std::string text = serialize_scene(s);
  const auto f = text.find("\"format\""), v = text.find("\"version\""), c = text.find("\"canvas\""),
             m = text.find("\"composition\""), pr = text.find("\"primitives\"");
  CHECK(f < v);
  CHECK(v < c);
  CHECK(c < m);
  CHECK(m < pr);
  CHECK(text == serialize_scene(parse_scene(text)));
}

TEST_CASE("scene parse errors name the problem") {
  const std::string head = R"({"version": 1, "canvas": {"width": 8, "height": 8}, "primitives": [)";
  auto message = [](const std::string& text) {
    try {
      parse_scene(text);
    } catch (const ParseError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  const std::string unknown = message(head + R"({"kind": "line", "points": [0,0,1,1]}, {"kind": "spiral", "points": [0,0]}]})");
  CHECK(unknown.find("primitives[1]") != std::string::npos);
  CHECK(unknown.find("spiral") != std::string::npos);
  const std::string future = message(R"({"version": 2, "canvas": {"width": 8, "height": 8}, "primitives": []})");
  CHECK(future.find("unsupported scene format version 2") != std::string::npos);
  CHECK(message(head + R"({"kind": "point", "points": [NaN, 0]}]})").find("line 1") != std::string::npos);
  CHECK(message(head + R"({"kind": "point", "points": [1e999, 0]}]})") != "no error");
  CHECK(message(head + R"({"kind": "point", "points": [0]}]})").find("primitives[0].points") != std::string::npos);
  CHECK(message(head + "]}").find("at least one primitive") != std::string::npos);
  const std::string multiline = "{\n\"version\": 1,\n\"canvas\": {\"width\": 8 \"height\": 8}}";
  CHECK(message(multiline).find("line 3") != std::string::npos);
}

TEST_CASE("scene files may give thickness instead of sigma squared") {
  const Scene s = parse_scene(
      R"({"version": 1, "canvas": {"width": 8, "height": 8}, "primitives": [{"kind": "point", "points": [0, 0], "thickness": 2}]})");
  CHECK(s.primitives[0].style().sigma2 == Approx(1.0985 * 1.0985));
  CHECK(s.composition == Composition::soft_or());
}

TEST_CASE("SVG export") {
  const Canvas c(100, 100);
  const Scene one({Primitive::line({-0.5, 0}, {0.5, 0.5})}, Composition::soft_or(), c);
  const std::string svg = svg_document(one);
  CHECK(count(svg, "<line ") == 1);
  CHECK(svg.find("x1=\"25\" y1=\"50\" x2=\"75\" y2=\"75\"") != std::string::npos);
  CHECK(svg.find("stroke-width=\"1\"") != std::string::npos);
  const Scene mixed({Primitive::quad_bezier({0, 0}, {0.1, 0.1}, {0.2, 0}), Primitive::cubic_bezier({0, 0}, {0.1, 0.1}, {0.2, 0}, {0.3, 0.3}),
                     Primitive::catmull_rom({0, 0}, {0.1, 0.1}, {0.2, 0}, {0.3, 0.3}), Primitive::point({0, 0})},
                    Composition::soft_or(), c);
  const std::string m = svg_document(mixed);
  CHECK(count(m, " Q ") == 1);
  CHECK(count(m, " C ") == 1);
  CHECK(count(m, "<polyline") == 1);
  CHECK(count(m, "<circle") == 1);
  const auto pl = m.find("<polyline points=\"");
  const auto end = m.find('"', pl + 18);
  CHECK(count(m.substr(pl, end - pl), ",") == 32);
  const fs::path p = scratch("one.svg");
  export_svg(one, p);
  CHECK(fs::file_size(p) == svg.size());
}
