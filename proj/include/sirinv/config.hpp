#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sirinv/convexification.hpp"
#include "sirinv/optimizer.hpp"
#include "sirinv/recovery.hpp"
#include "sirinv/shapes.hpp"

namespace sirinv {

/// background + amplitude * exp(-rate ((x - cx)^2 + (y - cy)^2)).
struct GaussianBump {
  double amplitude = 0.0;
  double cx = 0.0, cy = 0.0;
  double rate = 1.0;
  double background = 0.0;

  double operator()(double x, double y) const;
};

/// Piecewise-constant coefficient: `inside` on a glyph mask, `outside` elsewhere.
/// Without a mask file the coefficient is the constant `outside`.
struct CoefficientShape {
  std::string mask;  // resolved path, empty for none
  Placement box{0.3, 0.9, -0.35, 0.35};
  double smoothing = 0.0;
  double inside = 0.0;
  double outside = 0.0;
};

struct DomainConfig {
  double a = 0.1, b = 1.1, A = 0.5, T = 1.0;
};

struct ForwardConfig {
  int nx = 80, ny = 80, nt = 320;
  double c = 5e-5;
  std::array<std::array<double, 2>, 3> velocity{{{0.2, 0.2}, {0.2, 0.2}, {0.2, 0.2}}};
  std::array<GaussianBump, 3> initial{};
  CoefficientShape beta, gamma;
  int picard_iterations = 1;
};

struct ObservationConfig {
  int nx = 20, ny = 20, nt = 10;
  double sigma = 0.0;
  std::uint64_t seed = 1;
  double kappa_floor = 1e-3;
};

struct InversionConfig {
  CarlemanParams carleman;
  OptimizerConfig optimizer;
  bool volume_gradient_scale = true;  // gradient_scale = 1/(hx hy ht)
  bool time_averaged = false;
};

struct OutputConfig {
  std::string dir = "run";
  std::string forward, data, inversion;  // default to dir/forward, dir/data, dir/invert
};

struct RunConfig {
  DomainConfig domain;
  ForwardConfig forward;
  ObservationConfig observation;
  InversionConfig inversion;
  MetricOptions metrics;
  OutputConfig output;

  std::string source;  // file the config came from
  std::string text;    // normalized TOML after overrides, embedded in every archive

  Grid fine_grid() const;
  Grid coarse_grid() const;
};

/// Parses TOML text. `base_dir` resolves relative mask paths. Each override is
/// "dotted.key=value" with a TOML value (bare words are taken as strings).
/// Throws ConfigError with "source:line:col:" context on invalid input.
RunConfig parse_config(const std::string& text, const std::string& source,
                       const std::string& base_dir, const std::vector<std::string>& overrides = {});
RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});

}  // namespace sirinv
