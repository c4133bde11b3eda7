#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tdrom/codec.hpp"
#include "tdrom/data.hpp"
#include "tdrom/rom.hpp"
#include "tdrom/tensor.hpp"

namespace tdrom {

/// The initial snapshot repeated `steps` times.
std::vector<Tensor> persistence_baseline(const Tensor& initial, std::size_t steps);

enum class ExperimentKind { in_window, out_of_window, transition };

const char* to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(const std::string& s);

struct ExperimentConfig {
  std::size_t num_starts = 10;
  std::size_t spacing = 0;  // steps between starts; 0 spreads them evenly over the admissible range
  std::size_t horizon = 32;
  std::size_t threads = 1;
};

/// Start indices s (the newest snapshot of each initial window; leads
/// 1..horizon forecast s+1..s+horizon) for a sequence of `count` fields whose
/// first held-out index is `boundary`.
///   in_window:     s >= d-1 and s + horizon < boundary
///   out_of_window: s >= boundary and s + horizon < count
///   transition:    s + 1 < boundary <= s + horizon, so both sides are forecast
/// Starts are returned in increasing order. Throws DataError when the range
/// cannot hold num_starts starts at the requested spacing.
std::vector<std::size_t> experiment_starts(ExperimentKind kind, std::size_t count, std::size_t boundary,
                                           std::size_t d, const ExperimentConfig& cfg);

/// Per-lead, per-variable LW-RMSE curves averaged over starts.
struct ForecastReport {
  ExperimentKind kind = ExperimentKind::in_window;
  std::vector<std::string> variables;
  std::size_t horizon = 0;
  std::size_t d = 0;
  std::size_t n = 0;
  std::size_t boundary = 0;
  std::string model_id;
  std::uint64_t seed = 0;
  bool physical_units = false;
  std::vector<std::size_t> starts;

  // [lead-1][variable], arithmetic means over starts
  std::vector<std::vector<double>> model;
  std::vector<std::vector<double>> persistence;
  std::vector<std::vector<double>> floor;  // LW-RMSE of decode(encode(truth))
  // [start][lead-1][variable] before averaging
  std::vector<std::vector<std::vector<double>>> per_start;

  /// Mean over variables at each lead.
  std::vector<double> model_curve() const;
  std::vector<double> persistence_curve() const;
  std::vector<double> floor_curve() const;
  /// Mean model error over every (start, lead) cell whose target index lies
  /// before / at-or-after the boundary. NaN when a side has no cells.
  double mean_before_boundary() const;
  double mean_after_boundary() const;
  void validate() const;
};

/// Runs the forecast for every start and averages. `latents` is the encoded
/// sequence (latents[i] = codec.encode(fields[i])). With `physical` set, both
/// truth and forecast are denormalized before scoring.
ForecastReport run_experiment(ExperimentKind kind, const Codec& codec, const DelayRom& rom,
                              std::span<const Tensor> fields, std::span<const Eigen::VectorXd> latents,
                              std::size_t boundary, const LatitudeWeights& weights, const ExperimentConfig& cfg,
                              const DatasetDescriptor* physical = nullptr);

/// Columns: variable,lead_steps,lw_rmse,baseline_lw_rmse,floor. Leading
/// '#' lines echo the configuration (kind, d, n, model, seed, boundary,
/// units, starts) and are skipped by CSV readers that honour comments.
void write_report_csv(const std::string& path, const ForecastReport& report);
ForecastReport read_report_csv(const std::string& path);

struct DelaySweepRow {
  std::size_t d = 0;
  double lw_rmse = 0.0;  // mean in-window model error over leads and variables
};

/// For each d (strictly ascending), fits an operator on the latent states
/// before `boundary`, then scores an in_window experiment.
std::vector<DelaySweepRow> delay_sweep(const Codec& codec, std::span<const Tensor> fields,
                                       std::span<const Eigen::VectorXd> latents, std::size_t boundary,
                                       const LatitudeWeights& weights, std::span<const std::size_t> d_list,
                                       const ExperimentConfig& cfg, double lambda = 0.0);

/// Columns: d,lw_rmse.
void write_delay_sweep_csv(const std::string& path, std::span<const DelaySweepRow> rows);
std::vector<DelaySweepRow> read_delay_sweep_csv(const std::string& path);

}  // namespace tdrom
