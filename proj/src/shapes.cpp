#include "sirinv/shapes.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "sirinv/errors.hpp"

namespace sirinv {

namespace {

/// Reads the next header token, skipping whitespace and '#' comments.
std::string next_token(std::istream& in) {
  std::string tok;
  char ch;
  while (in.get(ch)) {
    if (ch == '#') {
      std::string rest;
      std::getline(in, rest);
      if (!tok.empty()) break;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(ch);
  }
  return tok;
}

}  // namespace

Bitmap parse_pbm(const std::string& bytes) {
  std::istringstream in(bytes);
  const std::string magic = next_token(in);
  if (magic != "P1" && magic != "P4") throw ConfigError("pbm: unsupported magic '" + magic + "'");
  Bitmap bm;
  try {
    bm.width = std::stoi(next_token(in));
    bm.height = std::stoi(next_token(in));
  } catch (const std::exception&) {
    throw ConfigError("pbm: malformed header");
  }
  if (bm.width <= 0 || bm.height <= 0) throw ConfigError("pbm: non-positive dimensions");
  bm.bits.assign(static_cast<std::size_t>(bm.width) * static_cast<std::size_t>(bm.height), 0);
  if (magic == "P1") {
    std::size_t n = 0;
    char ch;
    while (n < bm.bits.size() && in.get(ch)) {
      if (ch == '#') {
        std::string rest;
        std::getline(in, rest);
      } else if (ch == '0' || ch == '1') {
        bm.bits[n++] = ch == '1';
      } else if (!std::isspace(static_cast<unsigned char>(ch))) {
        throw ConfigError("pbm: unexpected character in pixel data");
      }
    }
    if (n != bm.bits.size()) throw ConfigError("pbm: truncated pixel data");
  } else {
    const std::size_t row_bytes = (static_cast<std::size_t>(bm.width) + 7) / 8;
    std::string row(row_bytes, '\0');
    for (int r = 0; r < bm.height; ++r) {
      if (!in.read(row.data(), static_cast<std::streamsize>(row_bytes)))
        throw ConfigError("pbm: truncated pixel data");
      for (int c = 0; c < bm.width; ++c)
        bm.bits[static_cast<std::size_t>(r * bm.width + c)] =
            (static_cast<unsigned char>(row[static_cast<std::size_t>(c / 8)]) >> (7 - c % 8)) & 1u;
    }
  }
  return bm;
}

Bitmap load_pbm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open mask file '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_pbm(ss.str());
}

SpatialField rasterize(const Bitmap& glyph, const Placement& box, const Grid& grid,
                       double smooth_width) {
  if (!(box.x1 > box.x0 && box.y1 > box.y0)) throw ConfigError("mask placement box is empty");
  if (!(smooth_width >= 0.0)) throw ConfigError("mask smoothing width must be >= 0");
  const double pw = (box.x1 - box.x0) / glyph.width;
  const double ph = (box.y1 - box.y0) / glyph.height;
  SpatialField out(grid);
  for (int j = 0; j <= grid.ny; ++j)
    for (int i = 0; i <= grid.nx; ++i) {
      const double x = grid.x(i), y = grid.y(j);
      double v = 0.0;
      if (smooth_width == 0.0) {
        const double u = (x - box.x0) / pw, w = (box.y1 - y) / ph;
        const int col = static_cast<int>(std::floor(u)), row = static_cast<int>(std::floor(w));
        if (col >= 0 && col < glyph.width && row >= 0 && row < glyph.height && glyph.at(row, col))
          v = 1.0;
      } else {
        // Exact convolution of the glyph indicator with a Gaussian of std smooth_width.
        const double inv = 1.0 / (std::sqrt(2.0) * smooth_width);
        for (int row = 0; row < glyph.height; ++row) {
          const double py1 = box.y1 - row * ph, py0 = py1 - ph;
          const double fy = 0.5 * (std::erf((py1 - y) * inv) - std::erf((py0 - y) * inv));
          if (fy < 1e-300) continue;
          for (int col = 0; col < glyph.width; ++col) {
            if (!glyph.at(row, col)) continue;
            const double px0 = box.x0 + col * pw, px1 = px0 + pw;
            v += fy * 0.5 * (std::erf((px1 - x) * inv) - std::erf((px0 - x) * inv));
          }
        }
      }
      out(j, i) = v;
    }
  return out;
}

SpatialField piecewise_coefficient(const SpatialField& mask, double inside, double outside) {
  SpatialField out(mask.grid);
  for (std::size_t n = 0; n < out.values.size(); ++n)
    out.values[n] = outside + (inside - outside) * mask.values[n];
  return out;
}

}  // namespace sirinv
