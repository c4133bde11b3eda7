#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tdrom/tensor.hpp"

namespace tdrom {

/// Per-latitude weights w_i = cos(lat_i) / mean_j cos(lat_j); mean(w) == 1.
struct LatitudeWeights {
  std::vector<double> w;
};

LatitudeWeights latitude_weights(std::span<const double> lat_deg);

/// Pole-inclusive latitude grid: H points from -90 to 90 degrees.
std::vector<double> latitude_grid(std::size_t nlat);
/// W points 360*j/W degrees, j = 0..W-1.
std::vector<double> longitude_grid(std::size_t nlon);

struct DatasetDescriptor {
  std::vector<std::string> variables{"u10", "v10", "T2m", "Pmsl"};
  std::vector<double> lat;
  std::vector<double> lon;
  double dt_hours = 6.0;
  // Filled by normalize(); empty until then.
  std::vector<double> mean;
  std::vector<double> stddev;

  std::size_t channels() const { return variables.size(); }
  std::size_t nlat() const { return lat.size(); }
  std::size_t nlon() const { return lon.size(); }
  /// Checks grid monotonicity/ranges and (if present) positive std.
  void validate() const;
};

struct GridSnapshot {
  double timestamp = 0.0;  // hours since sequence start
  Tensor values;           // [C,H,W]
};

struct Dataset {
  DatasetDescriptor desc;
  std::vector<GridSnapshot> snapshots;
};

/// Computes global per-variable mean and (population) std from `train`,
/// stores them in the returned descriptor, and returns normalized copies.
struct Normalized {
  std::vector<GridSnapshot> snapshots;
  DatasetDescriptor desc;
};
Normalized normalize(std::span<const GridSnapshot> train, DatasetDescriptor desc);

/// (x - mean) / std using the statistics already stored in `desc`.
std::vector<GridSnapshot> apply_normalization(std::span<const GridSnapshot> snaps,
                                              const DatasetDescriptor& desc);
std::vector<GridSnapshot> denormalize(std::span<const GridSnapshot> snaps,
                                      const DatasetDescriptor& desc);
/// Per-channel inverse on a bare [C,H,W] or [B,C,H,W] tensor.
Tensor denormalize(const Tensor& values, const DatasetDescriptor& desc);

/// Train: timestamp < boundary; test: timestamp >= boundary.
std::pair<std::vector<GridSnapshot>, std::vector<GridSnapshot>> split(
    std::span<const GridSnapshot> snaps, double boundary);

/// Index of the first held-out snapshot when the final `fraction` of a
/// sequence of length `count` is held out.
std::size_t holdout_boundary(std::size_t count, double fraction);

// ---- synthetic atmosphere ------------------------------------------------

struct SynthConfig {
  std::size_t nlat = 33;
  std::size_t nlon = 48;
  std::size_t steps = 2000;
  double dt_hours = 6.0;
  std::uint64_t seed = 7;
};

/// One travelling or stationary-noise streamfunction component:
///   amp * cos(lat) * cos(meridional * lat + lat_phase)
///       * cos(zonal * lon - omega * (1 + speed_mod * sin^2 lat) * t + phase)
/// with t measured in steps and angles in radians.
struct SynthMode {
  double amp;
  int zonal;
  double meridional;
  double lat_phase;
  double omega;
  double speed_mod;
  double phase;
};

/// Every random draw of the generator; the fields are closed-form in t given
/// these parameters.
struct SynthParams {
  std::vector<SynthMode> waves;
  std::vector<SynthMode> noise;      // streamfunction noise
  std::vector<SynthMode> temp_noise; // additive on T2m
  std::vector<SynthMode> pres_noise; // additive on Pmsl
  double jet_amp;
  double season_period;  // steps
  double season_phase;
  double psi_scale;
};

SynthParams synth_params(const SynthConfig& cfg);

/// Streamfunction value at (lat, lon) radians and time t (steps).
double synth_streamfunction(const SynthParams& p, double lat, double lon, double t);
double synth_season(const SynthParams& p, double t);
double synth_mode(const SynthMode& m, double lat, double lon, double t);

/// Deterministic four-variable sequence (u10, v10, T2m, Pmsl). Winds are
/// centred differences of the streamfunction on the grid (ghost rows beyond
/// the poles are evaluated in closed form), so the centred discrete
/// divergence vanishes identically.
Dataset synth_generate(const SynthConfig& cfg);
/// One snapshot at an arbitrary (possibly fractional) step t.
Tensor synth_snapshot(const SynthParams& p, std::span<const double> lat_deg,
                      std::span<const double> lon_deg, double t);

/// Centred discrete divergence of (u,v) on interior rows, in the same grid
/// metric the generator uses. Returns [H-2, W].
std::vector<double> discrete_divergence(const Tensor& snapshot, std::span<const double> lat_deg,
                                        std::span<const double> lon_deg);

// ---- ROMDAT1 files ---------------------------------------------------------

/// Layout: "ROMDAT1"; u32 C,H,W,T; C x (u32 length, ASCII name); H lat f64;
/// W lon f64; T*C*H*W f64 values, time-major then channel-major. All
/// little-endian. Timestamps are implicit (k * dt_hours).
void write_snapshots(const std::string& path, const Dataset& data);
Dataset read_snapshots(const std::string& path, double dt_hours = 6.0);
std::vector<std::uint8_t> encode_snapshots(const Dataset& data);
Dataset decode_snapshots(std::vector<std::uint8_t> bytes, double dt_hours = 6.0);

struct ManifestEntry {
  std::string path;
  double t_begin = 0.0;
  double t_end = 0.0;
};
/// CSV with header "path,t_begin_hours,t_end_hours".
void write_manifest(const std::string& path, std::span<const ManifestEntry> entries);
std::vector<ManifestEntry> read_manifest(const std::string& path);

}  // namespace tdrom
