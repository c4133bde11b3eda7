#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "tdrom/cae.hpp"
#include "tdrom/data.hpp"
#include "tdrom/metrics.hpp"

namespace tdrom {

/// Every tunable of the command-line workflows. Parsed from an INI file
/// (`key = value` under `[section]` headers, '#' or ';' comments). Keys are
/// addressed as section.key; unknown keys are rejected.
struct RunConfig {
  SynthConfig data;               // [data] nlat nlon steps dt_hours seed
  double holdout_fraction = 0.1;  // [data] holdout_fraction
  CaeArch arch;                   // [cae] stem stages latent_channels cbam reduction
  TrainConfig train;              // [train] learning_rate batch_size epochs patience decay lr_floor seed
  double val_fraction = 0.1;      // [train] val_fraction
  std::size_t pod_k = 20;         // [pod] k
  std::vector<std::size_t> pod_sweep{1, 2, 5, 10, 20, 50, 100};  // [pod] sweep
  std::size_t rom_d = 2;          // [rom] d
  double rom_lambda = 0.0;        // [rom] lambda
  ExperimentKind kind = ExperimentKind::in_window;  // [experiment] kind
  ExperimentConfig experiment;    // [experiment] num_starts spacing horizon
  bool physical_units = false;    // [experiment] units = normalized | physical
  std::vector<std::size_t> delay_list{1, 2};  // [experiment] delay_list
  std::size_t threads = 1;        // [run] threads

  /// Cross-key checks; messages name the offending key.
  void validate() const;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
/// INI text that parses back to `cfg`.
std::string format_config(const RunConfig& cfg);

}  // namespace tdrom
