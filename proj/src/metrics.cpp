#include "tdrom/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "tdrom/error.hpp"
#include "tdrom/loss.hpp"
#include "tdrom/parallel.hpp"

namespace tdrom {
namespace {

constexpr char kReportHeader[] = "variable,lead_steps,lw_rmse,baseline_lw_rmse,floor";
constexpr char kSweepHeader[] = "d,lw_rmse";

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& s, const std::string& line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw FormatError("csv: bad number '" + s + "' in row '" + line + "'");
}

std::size_t parse_size(const std::string& s, const std::string& line) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
    throw FormatError("csv: bad integer '" + s + "' in row '" + line + "'");
  return std::stoull(s);
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::vector<double> variable_mean(const std::vector<std::vector<double>>& m) {
  std::vector<double> out;
  out.reserve(m.size());
  for (const auto& row : m) {
    double acc = 0.0;
    for (double v : row) acc += v;
    out.push_back(acc / static_cast<double>(row.size()));
  }
  return out;
}

/// Leads whose target index s+lead is before / at-or-after the boundary.
double boundary_mean(const ForecastReport& r, bool after) {
  double acc = 0.0;
  std::size_t cells = 0;
  for (std::size_t i = 0; i < r.per_start.size(); ++i)
    for (std::size_t l = 0; l < r.per_start[i].size(); ++l) {
      const bool is_after = r.starts[i] + l + 1 >= r.boundary;
      if (is_after != after) continue;
      for (double v : r.per_start[i][l]) acc += v;
      cells += r.per_start[i][l].size();
    }
  return cells ? acc / static_cast<double>(cells) : std::numeric_limits<double>::quiet_NaN();
}

ForecastReport run_at_starts(ExperimentKind kind, const Codec& codec, const DelayRom& rom,
                             std::span<const Tensor> fields, std::span<const Eigen::VectorXd> latents,
                             std::size_t boundary, const LatitudeWeights& weights, const ExperimentConfig& cfg,
                             const DatasetDescriptor* physical, std::vector<std::size_t> starts) {
  if (rom.n != codec.latent_dim())
    throw ShapeError("experiment: operator dimension " + std::to_string(rom.n) + " but codec latent dimension " +
                     std::to_string(codec.latent_dim()));
  if (latents.size() != fields.size())
    throw ShapeError("experiment: " + std::to_string(latents.size()) + " latent states for " +
                     std::to_string(fields.size()) + " fields");
  const std::size_t T = cfg.horizon;
  const std::size_t C = codec.field_shape().at(0);
  ForecastReport r;
  r.kind = kind;
  r.horizon = T;
  r.d = rom.d;
  r.n = rom.n;
  r.boundary = boundary;
  r.physical_units = physical != nullptr;
  r.starts = std::move(starts);
  if (physical) {
    if (physical->channels() != C) throw ShapeError("experiment: descriptor has " + std::to_string(physical->channels()) + " variables");
    r.variables = physical->variables;
  } else {
    for (std::size_t c = 0; c < C; ++c) r.variables.push_back("var" + std::to_string(c));
  }
  auto score = [&](const Tensor& truth, const Tensor& pred) {
    if (!physical) return lw_rmse_per_variable(truth, pred, weights);
    return lw_rmse_per_variable(denormalize(truth, *physical), denormalize(pred, *physical), weights);
  };

  const std::size_t S = r.starts.size();
  std::vector<std::vector<std::vector<double>>> model(S), base(S), floor(S);
  parallel_for(S, cfg.threads, [&](std::size_t i) {
    const std::size_t s = r.starts[i];
    const auto pred = rollout(rom, latents.subspan(s + 1 - rom.d, rom.d), T);
    for (std::size_t l = 0; l < T; ++l) {
      const Tensor& truth = fields[s + l + 1];
      model[i].push_back(score(truth, codec.decode(pred[l])));
      base[i].push_back(score(truth, fields[s]));
      floor[i].push_back(score(truth, codec.decode(latents[s + l + 1])));
    }
  });

  auto average = [&](const std::vector<std::vector<std::vector<double>>>& cells) {
    std::vector<std::vector<double>> out(T, std::vector<double>(C, 0.0));
    for (std::size_t i = 0; i < S; ++i)
      for (std::size_t l = 0; l < T; ++l)
        for (std::size_t c = 0; c < C; ++c) out[l][c] += cells[i][l][c];
    for (auto& row : out)
      for (auto& v : row) v /= static_cast<double>(S);
    return out;
  };
  r.model = average(model);
  r.persistence = average(base);
  r.floor = average(floor);
  r.per_start = std::move(model);
  r.validate();
  return r;
}

}  // namespace

std::vector<Tensor> persistence_baseline(const Tensor& initial, std::size_t steps) {
  return std::vector<Tensor>(steps, initial);
}

const char* to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::in_window: return "in_window";
    case ExperimentKind::out_of_window: return "out_of_window";
    case ExperimentKind::transition: return "transition";
  }
  return "?";
}

ExperimentKind parse_experiment_kind(const std::string& s) {
  for (auto k : {ExperimentKind::in_window, ExperimentKind::out_of_window, ExperimentKind::transition})
    if (s == to_string(k)) return k;
  throw ConfigError("experiment kind must be in_window, out_of_window or transition, got '" + s + "'");
}

std::vector<std::size_t> experiment_starts(ExperimentKind kind, std::size_t count, std::size_t boundary,
                                           std::size_t d, const ExperimentConfig& cfg) {
  if (cfg.num_starts == 0) throw ConfigError("experiment: num_starts must be positive");
  if (cfg.horizon == 0) throw ConfigError("experiment: horizon must be positive");
  if (d == 0) throw ConfigError("experiment: delay depth must be positive");
  if (boundary == 0 || boundary > count) throw DataError("experiment: boundary " + std::to_string(boundary) + " outside a sequence of " + std::to_string(count));
  const std::size_t T = cfg.horizon;
  // admissible range [lo, hi] for s
  long long lo = static_cast<long long>(d) - 1, hi = -1;
  switch (kind) {
    case ExperimentKind::in_window:
      hi = static_cast<long long>(boundary) - 1 - static_cast<long long>(T);
      break;
    case ExperimentKind::out_of_window:
      lo = std::max(lo, static_cast<long long>(boundary));
      hi = static_cast<long long>(count) - 1 - static_cast<long long>(T);
      break;
    case ExperimentKind::transition:
      lo = std::max(lo, static_cast<long long>(boundary) - static_cast<long long>(T));
      hi = std::min(static_cast<long long>(boundary) - 2, static_cast<long long>(count) - 1 - static_cast<long long>(T));
      break;
  }
  const long long want = static_cast<long long>(cfg.num_starts);
  if (hi < lo || hi - lo + 1 < want)
    throw DataError(std::string("insufficient data for ") + to_string(kind) + ": " + std::to_string(cfg.num_starts) +
                    " starts need " + std::to_string(cfg.num_starts) + " admissible indices, found " +
                    std::to_string(std::max(0LL, hi - lo + 1)) + " (d = " + std::to_string(d) +
                    ", horizon = " + std::to_string(T) + ")");
  std::vector<std::size_t> starts;
  if (cfg.spacing == 0) {
    // evenly spread, both ends included
    for (long long i = 0; i < want; ++i)
      starts.push_back(static_cast<std::size_t>(want == 1 ? lo : lo + (hi - lo) * i / (want - 1)));
  } else {
    const long long span = static_cast<long long>(cfg.spacing) * (want - 1);
    if (lo + span > hi)
      throw DataError(std::string("insufficient data for ") + to_string(kind) + ": spacing " +
                      std::to_string(cfg.spacing) + " x " + std::to_string(cfg.num_starts - 1) +
                      " exceeds the admissible range of " + std::to_string(hi - lo + 1) + " indices");
    // transition starts hug the boundary; the others fill from the front
    const long long first = kind == ExperimentKind::transition ? hi - span : lo;
    for (long long i = 0; i < want; ++i) starts.push_back(static_cast<std::size_t>(first + i * static_cast<long long>(cfg.spacing)));
  }
  return starts;
}

std::vector<double> ForecastReport::model_curve() const { return variable_mean(model); }
std::vector<double> ForecastReport::persistence_curve() const { return variable_mean(persistence); }
std::vector<double> ForecastReport::floor_curve() const { return variable_mean(floor); }
double ForecastReport::mean_before_boundary() const { return boundary_mean(*this, false); }
double ForecastReport::mean_after_boundary() const { return boundary_mean(*this, true); }

void ForecastReport::validate() const {
  for (const auto* m : {&model, &persistence, &floor}) {
    if (m->size() != horizon) throw ShapeError("report: curve length " + std::to_string(m->size()) + " != horizon " + std::to_string(horizon));
    for (const auto& row : *m) {
      if (row.size() != variables.size()) throw ShapeError("report: row has " + std::to_string(row.size()) + " variables");
      for (double v : row)
        if (!(v >= 0.0) || !std::isfinite(v)) throw NumericalError("report: LW-RMSE value " + fmt(v) + " is not a finite non-negative number");
    }
  }
}

ForecastReport run_experiment(ExperimentKind kind, const Codec& codec, const DelayRom& rom,
                              std::span<const Tensor> fields, std::span<const Eigen::VectorXd> latents,
                              std::size_t boundary, const LatitudeWeights& weights, const ExperimentConfig& cfg,
                              const DatasetDescriptor* physical) {
  rom.validate();
  auto starts = experiment_starts(kind, fields.size(), boundary, rom.d, cfg);
  return run_at_starts(kind, codec, rom, fields, latents, boundary, weights, cfg, physical, std::move(starts));
}

void write_report_csv(const std::string& path, const ForecastReport& r) {
  r.validate();
  std::ofstream os(path);
  if (!os) throw FormatError("report: cannot write '" + path + "'");
  os << "# kind=" << to_string(r.kind) << '\n';
  os << "# d=" << r.d << '\n';
  os << "# n=" << r.n << '\n';
  os << "# horizon=" << r.horizon << '\n';
  os << "# boundary=" << r.boundary << '\n';
  os << "# model=" << r.model_id << '\n';
  os << "# seed=" << r.seed << '\n';
  os << "# units=" << (r.physical_units ? "physical" : "normalized") << '\n';
  os << "# starts=";
  for (std::size_t i = 0; i < r.starts.size(); ++i) os << (i ? " " : "") << r.starts[i];
  os << '\n' << kReportHeader << '\n';
  for (std::size_t c = 0; c < r.variables.size(); ++c)
    for (std::size_t l = 0; l < r.horizon; ++l)
      os << r.variables[c] << ',' << l + 1 << ',' << fmt(r.model[l][c]) << ',' << fmt(r.persistence[l][c]) << ','
         << fmt(r.floor[l][c]) << '\n';
  if (!os) throw FormatError("report: write failed for '" + path + "'");
}

ForecastReport read_report_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("report: cannot open '" + path + "'");
  ForecastReport r;
  std::string line;
  bool header = false;
  struct Row {
    std::string var;
    std::size_t lead;
    double m, b, f;
  };
  std::vector<Row> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line.rfind("# ", 0) == 0) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(2, eq - 2), val = line.substr(eq + 1);
      if (key == "kind") r.kind = parse_experiment_kind(val);
      else if (key == "d") r.d = parse_size(val, line);
      else if (key == "n") r.n = parse_size(val, line);
      else if (key == "boundary") r.boundary = parse_size(val, line);
      else if (key == "model") r.model_id = val;
      else if (key == "seed") r.seed = parse_size(val, line);
      else if (key == "units") r.physical_units = val == "physical";
      else if (key == "starts") {
        std::istringstream ss(val);
        std::size_t s;
        while (ss >> s) r.starts.push_back(s);
      }
      continue;
    }
    if (!header) {
      if (line != kReportHeader) throw FormatError("report: unexpected header '" + line + "'");
      header = true;
      continue;
    }
    const auto cells = split_commas(line);
    if (cells.size() != 5) throw FormatError("report: expected 5 columns in row '" + line + "'");
    rows.push_back({cells[0], parse_size(cells[1], line), parse_double(cells[2], line), parse_double(cells[3], line),
                    parse_double(cells[4], line)});
  }
  if (!header) throw FormatError("report: missing header in '" + path + "'");
  for (const auto& row : rows) {
    if (std::find(r.variables.begin(), r.variables.end(), row.var) == r.variables.end()) r.variables.push_back(row.var);
    r.horizon = std::max(r.horizon, row.lead);
  }
  const std::size_t C = r.variables.size();
  if (rows.size() != C * r.horizon) throw FormatError("report: " + std::to_string(rows.size()) + " rows do not fill " + std::to_string(C) + " variables x " + std::to_string(r.horizon) + " leads");
  r.model.assign(r.horizon, std::vector<double>(C, std::numeric_limits<double>::quiet_NaN()));
  r.persistence = r.model;
  r.floor = r.model;
  for (const auto& row : rows) {
    if (row.lead == 0) throw FormatError("report: lead_steps starts at 1");
    const std::size_t c = static_cast<std::size_t>(std::find(r.variables.begin(), r.variables.end(), row.var) - r.variables.begin());
    if (!std::isnan(r.model[row.lead - 1][c])) throw FormatError("report: duplicate cell " + row.var + " lead " + std::to_string(row.lead));
    r.model[row.lead - 1][c] = row.m;
    r.persistence[row.lead - 1][c] = row.b;
    r.floor[row.lead - 1][c] = row.f;
  }
  r.validate();
  return r;
}

std::vector<DelaySweepRow> delay_sweep(const Codec& codec, std::span<const Tensor> fields,
                                       std::span<const Eigen::VectorXd> latents, std::size_t boundary,
                                       const LatitudeWeights& weights, std::span<const std::size_t> d_list,
                                       const ExperimentConfig& cfg, double lambda) {
  if (d_list.empty()) throw ConfigError("delay sweep: empty d list");
  for (std::size_t i = 0; i < d_list.size(); ++i)
    if (d_list[i] == 0 || (i && d_list[i] <= d_list[i - 1])) throw ConfigError("delay sweep: d list must be positive and strictly ascending");
  if (boundary > latents.size()) throw DataError("delay sweep: boundary beyond the sequence");
  // every d is scored on the same starts, chosen for the deepest window
  const auto starts = experiment_starts(ExperimentKind::in_window, fields.size(), boundary, d_list.back(), cfg);
  LatentSequence train{codec.latent_dim(), std::vector<Eigen::VectorXd>(latents.begin(), latents.begin() + static_cast<std::ptrdiff_t>(boundary)), 6.0};
  std::vector<DelaySweepRow> rows;
  for (std::size_t d : d_list) {
    const auto m = build_delay_matrices(train, d);
    const DelayRom rom = fit_operator(m.past, m.future, lambda);
    const auto rep = run_at_starts(ExperimentKind::in_window, codec, rom, fields, latents, boundary, weights, cfg, nullptr, starts);
    const auto curve = rep.model_curve();
    double acc = 0.0;
    for (double v : curve) acc += v;
    rows.push_back({d, acc / static_cast<double>(curve.size())});
  }
  return rows;
}

void write_delay_sweep_csv(const std::string& path, std::span<const DelaySweepRow> rows) {
  std::ofstream os(path);
  if (!os) throw FormatError("delay sweep: cannot write '" + path + "'");
  os << kSweepHeader << '\n';
  for (const auto& r : rows) os << r.d << ',' << fmt(r.lw_rmse) << '\n';
  if (!os) throw FormatError("delay sweep: write failed for '" + path + "'");
}

std::vector<DelaySweepRow> read_delay_sweep_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("delay sweep: cannot open '" + path + "'");
  std::string line;
  std::getline(is, line);
  if (line != kSweepHeader) throw FormatError("delay sweep: unexpected header '" + line + "'");
  std::vector<DelaySweepRow> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto cells = split_commas(line);
    if (cells.size() != 2) throw FormatError("delay sweep: expected 2 columns in row '" + line + "'");
    out.push_back({parse_size(cells[0], line), parse_double(cells[1], line)});
  }
  return out;
}

}  // namespace tdrom
