#include <random>

#include "diffdraw/raster.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace diffdraw;
using doctest::Approx;

namespace {

std::set<std::pair<int, int>> lit(const Raster& r) {
  std::set<std::pair<int, int>> s;
  for (int y = 0; y < r.height(); ++y) {
    for (int x = 0; x < r.width(); ++x) {
      if (r.at(x, y) > 0.5) s.insert({x, y});
    }
  }
  return s;
}

Raster hard_between_pixels(const Canvas& c, int x0, int y0, int x1, int y1) {
  return raster_hard_line(c, ImagePoint(x0 + 0.5, y0 + 0.5), ImagePoint(x1 + 0.5, y1 + 0.5), 0.5);
}

}  // namespace

TEST_CASE("nearest-neighbour point uses the floor") {
  CHECK(nn_weight(2, 2.3) == 1.0);
  CHECK(nn_weight(3, 2.3) == 0.0);
  CHECK(nn_weight(3, 3.0) == 1.0);
  const Raster r = raster_nn_point(Canvas(4, 3), ImagePoint(1.9, 0.2));
  CHECK(r.at(1, 0) == 1.0);
  CHECK(r.sum() == 1.0);
  CHECK(raster_nn_point(Canvas(4, 3), ImagePoint(-0.5, 1)).sum() == 0.0);
}

TEST_CASE("anti-aliased point weights") {
  CHECK(aa_weight(2, 2.5) == 1.0);
  CHECK(aa_weight(2, 2.75) == Approx(0.75));
  CHECK(aa_weight(3, 2.75) == Approx(0.25));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(1, 8);
  for (int i = 0; i < 100; ++i) {
    const double p = u(rng);
    double total = 0;
    for (int n = 0; n < 10; ++n) {
      total += aa_weight(n, p);
      if (aa_weight(n, p) > 0) CHECK(std::abs(n + 0.5 - p) <= 1.0);
    }
    CHECK(total == Approx(1.0));
    const Raster r = raster_aa_point(Canvas(10, 10), ImagePoint(p, u(rng)));
    CHECK(r.sum() == Approx(1.0));
  }
}

TEST_CASE("exponential relaxation values") {
  const Canvas c(3, 1);
  const DistanceField f(c, {0.0, 2.0, 4000.0});
  const Raster r = raster_exp(f, 2.0);
  CHECK(r[0] == 1.0);
  CHECK(r[1] == Approx(std::exp(-1.0)));
  CHECK(r[2] == 0.0);  // flushed to zero
  CHECK_THROWS(raster_exp(f, 0.0));
  CHECK_THROWS(raster_exp(f, -1.0));
}

TEST_CASE("a line through a pixel centre lights it fully") {
  const Canvas c(16, 16);
  for (double s2 : {0.01, 0.3, 4.0}) {
    const Raster r = raster_exp(distance_field(Primitive::line({-0.5, 0.0625}, {0.5, 0.0625}), c), s2);
    CHECK(r.at(7, 8) == 1.0);
  }
}

TEST_CASE("relaxation is monotone in distance and in sigma") {
  const Canvas c(20, 20);
  const auto field = distance_field(Primitive::quad_bezier({-0.7, 0.5}, {0.0, -0.9}, {0.8, 0.6}), c);
  const Raster r = raster_exp(field, 1.5);
  for (std::size_t i = 0; i + 1 < r.size(); ++i) {
    if (field.values()[i] < field.values()[i + 1]) CHECK(r[i] >= r[i + 1]);
  }
  double prev = 0;
  for (double s2 : {0.1, 0.5, 1.0, 4.0}) {
    const double total = raster_exp(field, s2).sum();
    CHECK(total >= prev);
    prev = total;
  }
}

TEST_CASE("variable width strokes read sigma at the closest parameter") {
  const Canvas c(32, 8);
  const auto field = distance_field(Primitive::line({-1.8, 0.0}, {1.8, 0.0}), c);
  const Raster r = raster_exp(field, [](double t) { return 0.1 + 2.0 * t; });
  // same distance from the stroke, wider at the far end
  CHECK(r.at(29, 5) > r.at(2, 5));
}

TEST_CASE("thickness conversion") {
  CHECK(sigma_from_thickness(1.0) == Approx(0.54925));
  CHECK(sigma_from_thickness(2.0) == Approx(1.0985));
  CHECK(thickness_from_sigma(sigma_from_thickness(3.7)) == Approx(3.7));
  CHECK_THROWS(sigma_from_thickness(0.0));
  CHECK_THROWS(sigma_from_thickness(-1.0));
}

TEST_CASE("thickness constant matches quadrature plus golden-section search") {
  const double t = 2.0;
  const double s = oracle::golden_min([&](double sg) { return oracle::thickness_objective(sg, t); }, 0.2 * t, 1.0 * t);
  CHECK(s / t >= 0.5485);
  CHECK(s / t <= 0.5500);
  CHECK(std::abs(s / t - kSigmaPerThickness) <= 1e-3);
}

TEST_CASE("hard raster matches Bresenham on axis-aligned and diagonal lines") {
  const Canvas c(24, 24);
  const std::vector<std::array<int, 4>> lines{{2, 5, 20, 5}, {7, 1, 7, 22}, {3, 3, 18, 18}, {20, 2, 4, 18}, {12, 12, 12, 12}};
  for (const auto& l : lines) {
    CHECK(lit(hard_between_pixels(c, l[0], l[1], l[2], l[3])) == oracle::bresenham(l[0], l[1], l[2], l[3]));
  }
}

TEST_CASE("hard raster with a vanishing threshold misses off-centre lines") {
  const Canvas c(10, 10);
  const Raster r = raster_hard_line(c, ImagePoint(1.0, 1.2), ImagePoint(9.0, 1.2), 1e-6);
  CHECK(r.sum() == 0.0);
  CHECK_THROWS(raster_hard_line(c, ImagePoint(1, 1), ImagePoint(2, 2), 0.0));
}

TEST_CASE("hard raster of curves thresholds the same distance") {
  const Canvas c(16, 16);
  const auto p = Primitive::quad_bezier({-0.6, 0.6}, {0.0, -1.0}, {0.6, 0.6});
  const Raster r = raster_hard(p, c, 0.5);
  const auto f = distance_field(p, c);
  for (std::size_t i = 0; i < r.size(); ++i) CHECK(r[i] == (f.values()[i] < 0.5 ? 1.0 : 0.0));
}
