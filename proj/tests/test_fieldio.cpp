#include <doctest.h>

#include <cmath>
#include <sstream>

#include "sirinv/errors.hpp"
#include "sirinv/fieldio.hpp"

using namespace sirinv;

namespace {

FieldFile sample_file() {
  const Grid g = build_grid(0.1, 1.1, 0.5, 1.0, 4, 6, 4);
  const auto a = sample(g, [](double x, double y, double t) { return std::sin(x) * std::exp(y) + t / 3.0; });
  const auto b = sample(g, [](double x, double y, double t) { return 1e-300 * x - y * t + M_PI; });
  return make_field_file({&a, &b});
}

}  // namespace

TEST_CASE("binary round trip is bit-exact") {
  const FieldFile f = sample_file();
  CHECK(f.ncomp == 2);
  CHECK(f.nt1 == 5);
  CHECK(f.ny1 == 7);
  CHECK(f.nx1 == 5);
  std::stringstream ss;
  write_field(ss, f);
  CHECK(ss.str().size() == 8 + 4 * 4 + 6 * 8 + f.values.size() * 8);
  CHECK(read_field(ss) == f);
}

TEST_CASE("CSV round trip is bit-exact") {
  const FieldFile f = sample_file();
  std::stringstream ss;
  write_csv(ss, f);
  CHECK(read_csv(ss) == f);
}

TEST_CASE("empty export writes only the header") {
  const FieldFile empty = make_field_file(std::vector<const ScalarField*>{});
  std::ostringstream csv;
  write_csv(csv, empty);
  CHECK(csv.str() == "# SIRFLD01 0 0 0 0 0 0 0 0\ncomponent,k,j,i,t,y,x,value\n");
  std::istringstream back(csv.str());
  CHECK(read_csv(back) == empty);
  std::ostringstream vtk;
  write_vtk(vtk, empty);
  CHECK(vtk.str().find("POINT_DATA") == std::string::npos);
}

TEST_CASE("time slices and fields") {
  const FieldFile f = sample_file();
  const auto k = nearest_time_index(f, 0.75);
  CHECK(k == 3);
  const FieldFile s = time_slice(f, k);
  CHECK(s.nt1 == 1);
  CHECK(s.values[s.index(1, 0, 2, 3)] == f.values[f.index(1, 3, 2, 3)]);
  CHECK_THROWS_AS(time_slice(f, 9), std::invalid_argument);

  const Grid g = build_grid(0.1, 1.1, 0.5, 1.0, 4, 6, 4);
  const auto comps = scalar_fields(f, g);
  REQUIRE(comps.size() == 2);
  CHECK(comps[1](3, 2, 3) == f.values[f.index(1, 3, 2, 3)]);
  CHECK_THROWS_AS(scalar_fields(f, build_grid(0.1, 1.1, 0.5, 1.0, 4, 4, 4)), ConfigError);

  const SpatialField p = sample_spatial(g, [](double x, double y) { return x - y; });
  const auto sf = make_field_file({&p});
  CHECK(spatial_fields(sf, g)[0].values == p.values);
}

TEST_CASE("corrupt input is rejected") {
  std::istringstream bad_magic("NOTAFILE");
  CHECK_THROWS_AS(read_field(bad_magic), ConfigError);
  std::stringstream ss;
  write_field(ss, sample_file());
  std::string bytes = ss.str();
  bytes.resize(bytes.size() - 3);
  std::istringstream truncated(bytes);
  CHECK_THROWS_AS(read_field(truncated), ConfigError);

  std::istringstream short_csv("# SIRFLD01 1 1 1 2 0 1 0.5 1\ncomponent,k,j,i,t,y,x,value\n0,0,0,0,0,0,0,1\n");
  CHECK_THROWS_AS(read_csv(short_csv), ConfigError);
}

TEST_CASE("VTK header") {
  std::ostringstream os;
  write_vtk(os, sample_file(), "rho");
  const std::string s = os.str();
  CHECK(s.rfind("# vtk DataFile Version 3.0\nrho\nASCII\n", 0) == 0);
  CHECK(s.find("DIMENSIONS 5 7 5") != std::string::npos);
  CHECK(s.find("SCALARS c1 double 1") != std::string::npos);
}
