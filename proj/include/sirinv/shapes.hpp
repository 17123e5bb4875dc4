#pragma once

#include <string>
#include <vector>

#include "sirinv/grid.hpp"

namespace sirinv {

/// Binary glyph; row 0 is the top of the picture.
struct Bitmap {
  int width = 0;
  int height = 0;
  std::vector<unsigned char> bits;  // row-major, 1 = inside

  bool at(int row, int col) const {
    return bits[static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
                static_cast<std::size_t>(col)] != 0;
  }
};

/// Plain (P1) and raw (P4) portable bitmaps.
Bitmap parse_pbm(const std::string& bytes);
Bitmap load_pbm(const std::string& path);

/// Axis-aligned box the glyph is stretched onto.
struct Placement {
  double x0 = 0.0, x1 = 1.0, y0 = -0.5, y1 = 0.5;
};

/// Glyph indicator convolved with a Gaussian of standard deviation
/// `smooth_width`, evaluated exactly at each node. A zero width gives the 0/1
/// indicator of the pixel containing the node.
SpatialField rasterize(const Bitmap& glyph, const Placement& box, const Grid& grid,
                       double smooth_width = 0.0);

/// outside + (inside - outside) * mask.
SpatialField piecewise_coefficient(const SpatialField& mask, double inside, double outside);

}  // namespace sirinv
