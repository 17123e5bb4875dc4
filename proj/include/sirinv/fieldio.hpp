#pragma once

#include <cstdint>
#include <initializer_list>
#include <iosfwd>
#include <string>
#include <vector>

#include "sirinv/grid.hpp"

namespace sirinv {

inline constexpr char kFieldMagic[8] = {'S', 'I', 'R', 'F', 'L', 'D', '0', '1'};

/// Multi-component block of values in (component, k, j, i) order.
///
/// Spatial fields use nt1 = 1; boundary traces use nx1 = 1 (x-sides) or
/// ny1 = 1 (y-sides). The domain box travels with the data.
struct FieldFile {
  std::uint32_t ncomp = 0, nt1 = 0, ny1 = 0, nx1 = 0;
  double a = 0.0, b = 0.0, A = 0.0, T = 0.0;
  std::vector<double> values;

  std::size_t block_size() const {
    return static_cast<std::size_t>(nt1) * ny1 * nx1;
  }
  std::size_t index(std::uint32_t c, std::uint32_t k, std::uint32_t j, std::uint32_t i) const {
    return ((static_cast<std::size_t>(c) * nt1 + k) * ny1 + j) * nx1 + i;
  }
  /// Throws std::invalid_argument when values.size() disagrees with the shape.
  void check() const;
  bool operator==(const FieldFile&) const = default;
};

FieldFile make_field_file(const std::vector<const ScalarField*>& comps);
FieldFile make_field_file(const std::vector<const SpatialField*>& comps);
inline FieldFile make_field_file(std::initializer_list<const ScalarField*> comps) {
  return make_field_file(std::vector<const ScalarField*>(comps));
}
inline FieldFile make_field_file(std::initializer_list<const SpatialField*> comps) {
  return make_field_file(std::vector<const SpatialField*>(comps));
}
/// Components of a full space-time file as fields on `g`.
std::vector<ScalarField> scalar_fields(const FieldFile& f, const Grid& g);
std::vector<SpatialField> spatial_fields(const FieldFile& f, const Grid& g);

void write_field(std::ostream& os, const FieldFile& f);
FieldFile read_field(std::istream& is);
void save_field(const std::string& path, const FieldFile& f);
FieldFile load_field(const std::string& path);

/// Slice k of every component (nt1 becomes 1).
FieldFile time_slice(const FieldFile& f, std::uint32_t k);
/// Nearest time index to t for a file spanning [0, T].
std::uint32_t nearest_time_index(const FieldFile& f, double t);

/// Lossless text form: a '#' header line with the shape and box, a column
/// line, then one row per value with 17 significant digits.
void write_csv(std::ostream& os, const FieldFile& f);
FieldFile read_csv(std::istream& is);

/// Legacy VTK structured points, time as the third axis, one scalar array per component.
void write_vtk(std::ostream& os, const FieldFile& f, const std::string& title = "sirinv");

}  // namespace sirinv
