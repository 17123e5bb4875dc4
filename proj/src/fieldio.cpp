#include "sirinv/fieldio.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "sirinv/errors.hpp"

namespace sirinv {

namespace {

template <class T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &v, sizeof(T));
    std::reverse(bytes, bytes + sizeof(T));
    std::memcpy(&v, bytes, sizeof(T));
  }
  return v;
}

template <class T>
void put(std::ostream& os, T v) {
  v = to_little(v);
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T)))
    throw std::runtime_error("field file: truncated");
  return to_little(v);
}

void set_box(FieldFile& f, const Grid& g) {
  f.a = g.a;
  f.b = g.b;
  f.A = g.A;
  f.T = g.T;
}

}  // namespace

void FieldFile::check() const {
  if (values.size() != static_cast<std::size_t>(ncomp) * block_size())
    throw std::invalid_argument("field file: value count does not match the shape");
}

FieldFile make_field_file(const std::vector<const ScalarField*>& comps) {
  FieldFile f;
  if (comps.empty()) return f;
  const Grid& g = comps.front()->grid;
  set_box(f, g);
  f.ncomp = static_cast<std::uint32_t>(comps.size());
  f.nt1 = static_cast<std::uint32_t>(g.nodes_t());
  f.ny1 = static_cast<std::uint32_t>(g.nodes_y());
  f.nx1 = static_cast<std::uint32_t>(g.nodes_x());
  for (const auto* c : comps) {
    if (!(c->grid == g)) throw std::invalid_argument("field file: components on different grids");
    f.values.insert(f.values.end(), c->values.begin(), c->values.end());
  }
  return f;
}

FieldFile make_field_file(const std::vector<const SpatialField*>& comps) {
  FieldFile f;
  if (comps.empty()) return f;
  const Grid& g = comps.front()->grid;
  set_box(f, g);
  f.ncomp = static_cast<std::uint32_t>(comps.size());
  f.nt1 = 1;
  f.ny1 = static_cast<std::uint32_t>(g.nodes_y());
  f.nx1 = static_cast<std::uint32_t>(g.nodes_x());
  for (const auto* c : comps) {
    if (!(c->grid == g)) throw std::invalid_argument("field file: components on different grids");
    f.values.insert(f.values.end(), c->values.begin(), c->values.end());
  }
  return f;
}

std::vector<ScalarField> scalar_fields(const FieldFile& f, const Grid& g) {
  f.check();
  if (f.nt1 != g.nodes_t() || f.ny1 != g.nodes_y() || f.nx1 != g.nodes_x())
    throw ConfigError("field file shape does not match the expected grid");
  std::vector<ScalarField> out;
  for (std::uint32_t c = 0; c < f.ncomp; ++c) {
    ScalarField s(g);
    std::copy_n(f.values.begin() + static_cast<std::ptrdiff_t>(c * f.block_size()), s.values.size(),
                s.values.begin());
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<SpatialField> spatial_fields(const FieldFile& f, const Grid& g) {
  f.check();
  if (f.nt1 != 1 || f.ny1 != g.nodes_y() || f.nx1 != g.nodes_x())
    throw ConfigError("field file shape does not match the expected spatial grid");
  std::vector<SpatialField> out;
  for (std::uint32_t c = 0; c < f.ncomp; ++c) {
    SpatialField s(g);
    std::copy_n(f.values.begin() + static_cast<std::ptrdiff_t>(c * f.block_size()), s.values.size(),
                s.values.begin());
    out.push_back(std::move(s));
  }
  return out;
}

void write_field(std::ostream& os, const FieldFile& f) {
  f.check();
  os.write(kFieldMagic, sizeof(kFieldMagic));
  for (std::uint32_t v : {f.ncomp, f.nt1, f.ny1, f.nx1}) put(os, v);
  for (double v : {f.a, f.b, f.A, f.T, 0.0, 0.0}) put(os, v);
  for (double v : f.values) put(os, v);
  if (!os) throw std::runtime_error("field file: write failed");
}

FieldFile read_field(std::istream& is) {
  char magic[8];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kFieldMagic, sizeof(magic)) != 0)
    throw ConfigError("field file: bad magic");
  FieldFile f;
  try {
    f.ncomp = get<std::uint32_t>(is);
    f.nt1 = get<std::uint32_t>(is);
    f.ny1 = get<std::uint32_t>(is);
    f.nx1 = get<std::uint32_t>(is);
    f.a = get<double>(is);
    f.b = get<double>(is);
    f.A = get<double>(is);
    f.T = get<double>(is);
    get<double>(is);
    get<double>(is);
    f.values.resize(static_cast<std::size_t>(f.ncomp) * f.block_size());
    for (double& v : f.values) v = get<double>(is);
  } catch (const std::runtime_error& e) {
    throw ConfigError(e.what());
  }
  return f;
}

void save_field(const std::string& path, const FieldFile& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write '" + path + "'");
  write_field(os, f);
}

FieldFile load_field(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open field file '" + path + "'");
  return read_field(is);
}

FieldFile time_slice(const FieldFile& f, std::uint32_t k) {
  f.check();
  if (k >= f.nt1) throw std::invalid_argument("field file: time index out of range");
  FieldFile out = f;
  out.nt1 = 1;
  out.values.clear();
  const std::size_t plane = static_cast<std::size_t>(f.ny1) * f.nx1;
  for (std::uint32_t c = 0; c < f.ncomp; ++c) {
    const auto first = f.values.begin() + static_cast<std::ptrdiff_t>(f.index(c, k, 0, 0));
    out.values.insert(out.values.end(), first, first + static_cast<std::ptrdiff_t>(plane));
  }
  return out;
}

std::uint32_t nearest_time_index(const FieldFile& f, double t) {
  if (f.nt1 <= 1) return 0;
  const double ht = f.T / (f.nt1 - 1);
  const double k = std::round(t / ht);
  return static_cast<std::uint32_t>(std::clamp(k, 0.0, static_cast<double>(f.nt1 - 1)));
}

void write_csv(std::ostream& os, const FieldFile& f) {
  f.check();
  os << std::setprecision(17);
  os << "# SIRFLD01 " << f.ncomp << ' ' << f.nt1 << ' ' << f.ny1 << ' ' << f.nx1 << ' ' << f.a
     << ' ' << f.b << ' ' << f.A << ' ' << f.T << '\n';
  os << "component,k,j,i,t,y,x,value\n";
  const double hx = f.nx1 > 1 ? (f.b - f.a) / (f.nx1 - 1) : 0.0;
  const double hy = f.ny1 > 1 ? 2.0 * f.A / (f.ny1 - 1) : 0.0;
  const double ht = f.nt1 > 1 ? f.T / (f.nt1 - 1) : 0.0;
  for (std::uint32_t c = 0; c < f.ncomp; ++c)
    for (std::uint32_t k = 0; k < f.nt1; ++k)
      for (std::uint32_t j = 0; j < f.ny1; ++j)
        for (std::uint32_t i = 0; i < f.nx1; ++i)
          os << c << ',' << k << ',' << j << ',' << i << ',' << k * ht << ',' << -f.A + j * hy << ','
             << f.a + i * hx << ',' << f.values[f.index(c, k, j, i)] << '\n';
}

FieldFile read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("csv: empty input");
  std::istringstream head(line);
  std::string hash, magic;
  FieldFile f;
  head >> hash >> magic >> f.ncomp >> f.nt1 >> f.ny1 >> f.nx1 >> f.a >> f.b >> f.A >> f.T;
  if (!head || hash != "#" || magic != "SIRFLD01") throw ConfigError("csv: missing shape header");
  if (!std::getline(is, line)) throw ConfigError("csv: missing column line");
  f.values.assign(static_cast<std::size_t>(f.ncomp) * f.block_size(), 0.0);
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::array<std::string, 8> cells;
    std::istringstream row(line);
    for (auto& cell : cells)
      if (!std::getline(row, cell, ',')) throw ConfigError("csv: short row " + std::to_string(rows + 3));
    const auto c = static_cast<std::uint32_t>(std::stoul(cells[0]));
    const auto k = static_cast<std::uint32_t>(std::stoul(cells[1]));
    const auto j = static_cast<std::uint32_t>(std::stoul(cells[2]));
    const auto i = static_cast<std::uint32_t>(std::stoul(cells[3]));
    if (c >= f.ncomp || k >= f.nt1 || j >= f.ny1 || i >= f.nx1)
      throw ConfigError("csv: index out of range on line " + std::to_string(rows + 3));
    f.values[f.index(c, k, j, i)] = std::strtod(cells[7].c_str(), nullptr);
    ++rows;
  }
  if (rows != f.values.size()) throw ConfigError("csv: row count does not match the header");
  return f;
}

void write_vtk(std::ostream& os, const FieldFile& f, const std::string& title) {
  f.check();
  os << std::setprecision(17);
  os << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET STRUCTURED_POINTS\n";
  os << "DIMENSIONS " << f.nx1 << ' ' << f.ny1 << ' ' << f.nt1 << '\n';
  os << "ORIGIN " << f.a << ' ' << -f.A << ' ' << 0.0 << '\n';
  const double hx = f.nx1 > 1 ? (f.b - f.a) / (f.nx1 - 1) : 1.0;
  const double hy = f.ny1 > 1 ? 2.0 * f.A / (f.ny1 - 1) : 1.0;
  const double ht = f.nt1 > 1 ? f.T / (f.nt1 - 1) : 1.0;
  os << "SPACING " << hx << ' ' << hy << ' ' << ht << '\n';
  if (f.ncomp == 0) return;
  os << "POINT_DATA " << f.block_size() << '\n';
  for (std::uint32_t c = 0; c < f.ncomp; ++c) {
    os << "SCALARS c" << c << " double 1\nLOOKUP_TABLE default\n";
    const auto first = f.values.begin() + static_cast<std::ptrdiff_t>(c * f.block_size());
    for (std::size_t n = 0; n < f.block_size(); ++n) os << first[static_cast<std::ptrdiff_t>(n)] << '\n';
  }
}

}  // namespace sirinv
