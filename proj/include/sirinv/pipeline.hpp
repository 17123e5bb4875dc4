#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>

#include "sirinv/config.hpp"
#include "sirinv/forward.hpp"
#include "sirinv/observation.hpp"
#include "sirinv/optimizer.hpp"
#include "sirinv/recovery.hpp"

namespace sirinv {

/// The true coefficients and the inclusion masks that produced them.
struct TruthCoefficients {
  SpatialField beta, gamma;
  std::optional<SpatialField> beta_mask, gamma_mask;
};

/// Coefficient field and its mask for one shape on grid `g`.
SpatialField shape_coefficient(const CoefficientShape& shape, const Grid& g,
                               std::optional<SpatialField>* mask = nullptr);

SirParams build_forward_problem(const RunConfig& cfg, const Grid& fine, TruthCoefficients* truth);

std::array<VelocityField, 3> observation_velocities(const RunConfig& cfg, const Grid& g);

struct ForwardOutput {
  SirParams params;
  SirFields fields;
  TruthCoefficients truth;
  ForwardReport report;
  double snapshot_kappa = 0.0;  // min(|rho_S|, |rho_I|) at t = T/2
};

ForwardOutput run_forward(const RunConfig& cfg);

/// Restriction to the observation grid followed by the configured noise.
RawObservations make_raw_data(const SirFields& fields, const std::array<BoundaryTrace, 3>& flux,
                              const RunConfig& cfg);

ObservationSet make_observation_set(const RawObservations& raw, const RunConfig& cfg);

struct InversionOutput {
  ConstraintSet constraints;
  WField W0;
  InversionRun run;
  Reconstruction reconstruction;
};

/// Initial guess, minimization and recovery for the configured lambda and xi.
InversionOutput run_inversion(const ObservationSet& obs, const RunConfig& cfg);

/// Ground truth restricted to the observation grid.
GroundTruth restrict_truth(const TruthCoefficients& truth, const SirFields& fields, const Grid& coarse);

// Archives: one directory per stage, field files plus meta.json (which embeds
// the run config) and a copy of the config as config.toml.

void write_forward_archive(const std::string& dir, const ForwardOutput& out, const RunConfig& cfg);
struct ForwardArchive {
  SirFields fields;
  std::array<BoundaryTrace, 3> flux;
  TruthCoefficients truth;
};
ForwardArchive read_forward_archive(const std::string& dir, const RunConfig& cfg);

void write_data_archive(const std::string& dir, const RawObservations& raw, const ObservationSet& obs,
                        const RunConfig& cfg);
RawObservations read_data_archive(const std::string& dir, const RunConfig& cfg);

void write_inversion_archive(const std::string& dir, const InversionOutput& out,
                             const ObservationSet& obs, const RunConfig& cfg,
                             const std::optional<Metrics>& metrics);
Reconstruction read_reconstruction(const std::string& dir, const RunConfig& cfg);

void write_metrics_csv(std::ostream& os, const Metrics& m);
std::string metrics_json(const Metrics& m);

}  // namespace sirinv
