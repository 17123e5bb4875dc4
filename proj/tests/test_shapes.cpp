#include <doctest.h>

#include <string>

#include "sirinv/shapes.hpp"

using namespace sirinv;

TEST_CASE("plain and raw PBM parse to the same bitmap") {
  const std::string plain = "P1\n# comment\n3 2\n1 0 1\n0 1 0\n";
  const Bitmap a = parse_pbm(plain);
  CHECK(a.width == 3);
  CHECK(a.height == 2);
  CHECK(a.at(0, 0));
  CHECK_FALSE(a.at(0, 1));
  CHECK(a.at(1, 1));

  std::string raw = "P4\n3 2\n";
  raw.push_back(static_cast<char>(0b10100000));
  raw.push_back(static_cast<char>(0b01000000));
  CHECK(parse_pbm(raw).bits == a.bits);

  CHECK_THROWS(parse_pbm("P2\n1 1\n0\n"));
  CHECK_THROWS(parse_pbm("P1\n2 2\n1 0 1\n"));
}

TEST_CASE("shipped masks load") {
  for (const char* name : {"A", "B", "D", "Omega"}) {
    const Bitmap b = load_pbm(std::string(SIRINV_SOURCE_DIR) + "/data/masks/" + name + ".pbm");
    CHECK(b.width > 0);
    CHECK(b.height > 0);
    int on = 0;
    for (auto v : b.bits) on += v;
    CHECK(on > 0);
    CHECK(on < b.width * b.height);
  }
}

TEST_CASE("rasterize places the glyph with row 0 at the top") {
  const Bitmap top_row = parse_pbm("P1\n1 2\n1\n0\n");
  const Grid g = build_grid(0.0, 1.0, 0.5, 1.0, 10, 10, 2);
  const auto m = rasterize(top_row, Placement{0.0, 1.0, -0.5, 0.5}, g);
  CHECK(m(9, 5) == 1.0);
  CHECK(m(1, 5) == 0.0);
  for (double v : m.values) CHECK((v == 0.0 || v == 1.0));

  const auto smooth = rasterize(top_row, Placement{0.0, 1.0, -0.5, 0.5}, g, 0.05);
  for (double v : smooth.values) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  CHECK(smooth(9, 5) > 0.9);
  CHECK(smooth(5, 5) == doctest::Approx(0.5).epsilon(0.05));

  const auto coef = piecewise_coefficient(m, 0.6, 0.1);
  CHECK(coef(9, 5) == doctest::Approx(0.6));
  CHECK(coef(1, 5) == doctest::Approx(0.1));
}
