#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "diffdraw/grad.hpp"
#include "diffdraw/imageio.hpp"
#include "diffdraw/optimize.hpp"
#include "doctest.h"

using namespace diffdraw;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "diffdraw");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path dir() {
  const fs::path d = fs::temp_directory_path() / "diffdraw_cli_tests";
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("help exits cleanly everywhere") {
  CHECK(run({"--help"}).code == kExitOk);
  for (const char* sub : {"optimize", "render", "gradcheck", "bench"}) {
    const Run r = run({sub, "--help"});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("Usage") != std::string::npos);
  }
}

TEST_CASE("usage errors exit 1") {
  CHECK(run({}).code == kExitUsage);
  CHECK(run({"optimize"}).code == kExitUsage);
  CHECK(run({"frobnicate"}).code == kExitUsage);
  CHECK(run({"optimize", "x.png", "--kind", "spiral"}).code == kExitUsage);
  const fs::path target = dir() / "t.pgm";
  save_image(Raster(Canvas(8, 8), 0.5), target);
  const Run tau = run({"optimize", target.string(), "--tau", "0.2"});
  CHECK(tau.code == kExitUsage);
  CHECK(tau.err.find("smoothmax") != std::string::npos);
}

TEST_CASE("runtime failures exit 2") {
  CHECK(run({"optimize", (dir() / "nope.png").string(), "--iters", "1"}).code == kExitRuntime);
  const fs::path bad = dir() / "bad.json";
  std::ofstream(bad) << "{\"version\": 1, \"canvas\": {\"width\": 4, \"height\": 4}, \"primitives\": [{\"kind\": \"blob\"}]}";
  const Run r = run({"render", bad.string(), (dir() / "bad.png").string()});
  CHECK(r.code == kExitRuntime);
  CHECK(r.err.find("primitives[0]") != std::string::npos);
}

TEST_CASE("default gradcheck passes") {
  const Run r = run({"gradcheck"});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("PASS") != std::string::npos);
}

TEST_CASE("optimize writes its outputs and render reproduces the image") {
  const fs::path d = dir();
  const Scene truth = init_scene(PrimitiveKind::Line, 6, Canvas(24, 20), 5);
  const fs::path target = d / "target.png";
  save_image(render(truth), target);
  const fs::path scene = d / "fit.json", image = d / "fit.pgm", csv = d / "fit.csv", svg = d / "fit.svg";
  const Run r = run({"optimize", target.string(), "--count", "6", "--iters", "20", "--log-every", "10", "--out-scene",
                     scene.string(), "--out-image", image.string(), "--out-csv", csv.string(), "--out-svg", svg.string()});
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.find("iter=10 loss=") != std::string::npos);
  CHECK(fs::exists(svg));
  std::ifstream in(csv);
  std::string line;
  int rows = 0;
  std::getline(in, line);
  CHECK(line == "iter,loss");
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 21);

  const fs::path again = d / "again.pgm";
  REQUIRE(run({"render", scene.string(), again.string(), "--svg"}).code == kExitOk);
  CHECK(load_image(again)[0] == load_image(image)[0]);
  CHECK(fs::exists(d / "again.svg"));

  const fs::path hard = d / "hard.pgm";
  REQUIRE(run({"render", scene.string(), hard.string(), "--hard"}).code == kExitOk);
  const auto planes = load_image(hard);
  for (double v : planes[0].values()) CHECK((v == 0.0 || v == 1.0));
}

TEST_CASE("bench prints a table row") {
  const Run r = run({"bench", "--count", "5", "--size", "16", "--repeats", "1"});
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.find("render_ms") != std::string::npos);
  CHECK(r.out.find("line") != std::string::npos);
}
