#include "tdrom/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>

#include <CLI11.hpp>

#include "tdrom/cae.hpp"
#include "tdrom/codec.hpp"
#include "tdrom/config.hpp"
#include "tdrom/error.hpp"
#include "tdrom/loss.hpp"
#include "tdrom/metrics.hpp"
#include "tdrom/pod.hpp"
#include "tdrom/rom.hpp"

namespace tdrom {
namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
};

struct Args {
  Common common;
  std::string data, out, trace, resume, cae, pod, op, dump, kind, k_list, d_list;
  bool no_cbam = false;
  std::optional<std::size_t> epochs, k, d, start, steps;
  std::optional<double> lambda;
};

RunConfig effective_config(const Common& c) {
  RunConfig cfg = c.config_path.empty() ? RunConfig{} : load_config(c.config_path);
  if (c.threads) {
    if (*c.threads == 0) throw ConfigError("--threads must be positive");
    cfg.threads = *c.threads;
  }
  cfg.train.threads = cfg.threads;
  cfg.experiment.threads = cfg.threads;
  return cfg;
}

/// Normalized fields of a ROMDAT1 file with statistics from the snapshots
/// before the holdout boundary.
struct Prepared {
  DatasetDescriptor desc;
  std::vector<Tensor> fields;
  std::size_t boundary = 0;
  LatitudeWeights weights;

  std::span<const Tensor> train() const { return std::span(fields).first(boundary); }
  std::span<const Tensor> test() const { return std::span(fields).subspan(boundary); }
};

Prepared prepare(const std::string& path, const RunConfig& cfg) {
  if (path.empty()) throw ConfigError("--data is required");
  Dataset ds = read_snapshots(path, cfg.data.dt_hours);
  if (ds.snapshots.size() < 2) throw DataError("data: need at least 2 snapshots, file has " + std::to_string(ds.snapshots.size()));
  Prepared p;
  p.boundary = holdout_boundary(ds.snapshots.size(), cfg.holdout_fraction);
  const auto nz = normalize(std::span(ds.snapshots).first(p.boundary), ds.desc);
  p.desc = nz.desc;
  for (auto& g : apply_normalization(ds.snapshots, p.desc)) p.fields.push_back(std::move(g.values));
  p.weights = latitude_weights(p.desc.lat);
  return p;
}

/// The codec named by --cae or --pod (exactly one).
struct LoadedCodec {
  std::optional<CaeCheckpoint> cae;
  std::optional<PodBasis> pod;
  std::unique_ptr<Codec> codec;
  std::string id;
};

LoadedCodec load_codec(const Args& a, const Prepared& p) {
  if (a.cae.empty() == a.pod.empty()) throw ConfigError("exactly one of --cae or --pod is required");
  LoadedCodec lc;
  if (!a.cae.empty()) {
    lc.cae.emplace(read_cae_checkpoint(a.cae));
    lc.codec = std::make_unique<CaeCodec>(lc.cae->model);
    lc.id = "cae:" + std::filesystem::path(a.cae).filename().string();
  } else {
    lc.pod.emplace(read_pod(a.pod));
    lc.codec = std::make_unique<PodCodec>(*lc.pod);
    lc.id = "pod:" + std::filesystem::path(a.pod).filename().string();
  }
  const Shape want{p.desc.channels(), p.desc.nlat(), p.desc.nlon()};
  if (lc.codec->field_shape() != want)
    throw ShapeError("model grid " + shape_str(lc.codec->field_shape()) + " does not match data grid " + shape_str(want));
  return lc;
}

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void require_out(const Args& a) {
  if (a.out.empty()) throw ConfigError("--out is required");
}

// ---- subcommands -----------------------------------------------------------

int cmd_gen_data(const Args& a, std::ostream& out) {
  RunConfig cfg = effective_config(a.common);
  if (a.common.seed) cfg.data.seed = *a.common.seed;
  require_out(a);
  const Dataset ds = synth_generate(cfg.data);
  write_snapshots(a.out, ds);
  out << "wrote " << ds.snapshots.size() << " snapshots of " << ds.desc.channels() << "x" << ds.desc.nlat() << "x"
      << ds.desc.nlon() << " (seed " << cfg.data.seed << ") to " << a.out << '\n';
  return exit_ok;
}

int cmd_train_cae(const Args& a, std::ostream& out) {
  RunConfig cfg = effective_config(a.common);
  if (a.common.seed) cfg.train.seed = *a.common.seed;
  if (a.epochs) cfg.train.epochs = *a.epochs;
  require_out(a);
  const Prepared p = prepare(a.data, cfg);
  const std::string trace = a.trace.empty() ? a.out + ".trace.csv" : a.trace;

  std::optional<CaeModel> model;
  TrainConfig tc = cfg.train;
  if (!a.resume.empty()) {
    CaeCheckpoint ck = read_cae_checkpoint(a.resume);
    tc.start_epoch = ck.epochs_completed;
    tc.learning_rate = ck.learning_rate;
    model.emplace(std::move(ck.model));
    if (a.no_cbam && model->arch().cbam) throw ConfigError("--no-cbam conflicts with a checkpoint trained with CBAM");
  } else {
    CaeArch arch = cfg.arch;
    arch.channels = p.desc.channels();
    arch.nlat = p.desc.nlat();
    arch.nlon = p.desc.nlon();
    if (a.no_cbam) arch.cbam = false;
    model.emplace(arch, tc.seed);
  }
  const std::size_t n_val = static_cast<std::size_t>(std::floor(cfg.val_fraction * static_cast<double>(p.boundary)));
  if (n_val >= p.boundary) throw DataError("train: validation fraction leaves no training snapshots");
  const auto train_set = p.train().first(p.boundary - n_val);
  const auto val_set = p.train().subspan(p.boundary - n_val);
  out << "training " << model->parameter_count() << " parameters, cbam " << (model->arch().cbam ? "on" : "off")
      << ", latent " << model->arch().latent_dim() << ", " << train_set.size() << " train / " << val_set.size()
      << " val snapshots, epochs " << tc.start_epoch << ".." << tc.start_epoch + tc.epochs << '\n';

  if (a.resume.empty()) write_trace_csv(trace, {}, false);
  const TrainResult res = train(*model, train_set, val_set, p.weights, tc, [&](const EpochRecord& r) {
    write_trace_csv(trace, std::span(&r, 1), true);
    out << "epoch " << r.epoch << " train " << fixed(r.train_loss) << " val " << fixed(r.val_loss) << " lr " << r.lr
        << '\n';
  });
  write_cae_checkpoint(a.out, *model, tc.start_epoch + tc.epochs, res.final_lr);
  out << "checkpoint " << a.out << ", trace " << trace << '\n';
  return exit_ok;
}

int cmd_fit_pod(const Args& a, std::ostream& out) {
  RunConfig cfg = effective_config(a.common);
  require_out(a);
  const Prepared p = prepare(a.data, cfg);
  const std::size_t k = a.k.value_or(cfg.pod_k);
  const PodBasis b = fit_pod(p.train(), k);
  for (const auto& w : b.warnings) out << "warning: " << w << '\n';
  write_pod(a.out, b);
  const PodCodec codec(b);
  double test = 0.0;
  for (const auto& f : p.test()) test += lw_rmse(f, codec.reconstruct(f), p.weights);
  out << "POD " << k << " modes, compression ratio " << fixed(b.compression_ratio(), 2) << ":1, test LW-RMSE "
      << fixed(test / static_cast<double>(p.test().size())) << ", basis " << a.out << '\n';
  return exit_ok;
}

int cmd_pod_sweep(const Args& a, std::ostream& out) {
  RunConfig cfg = effective_config(a.common);
  require_out(a);
  const Prepared p = prepare(a.data, cfg);
  std::vector<std::size_t> ks = cfg.pod_sweep;
  if (!a.k_list.empty()) {
    RunConfig tmp = parse_config("[pod]\nsweep = " + a.k_list + "\n");
    ks = tmp.pod_sweep;
  }
  const auto rows = pod_sweep(p.train(), p.test(), ks, p.weights, cfg.threads);
  std::ofstream os(a.out);
  if (!os) throw FormatError("pod-sweep: cannot write '" + a.out + "'");
  os << "k,ratio,train_frobenius,train_lw_rmse,test_lw_rmse\n";
  const double D = static_cast<double>(p.fields[0].size());
  for (const auto& r : rows) {
    char line[160];
    std::snprintf(line, sizeof line, "%zu,%.17g,%.17g,%.17g,%.17g\n", r.k, D / static_cast<double>(r.k),
                  r.train_frobenius, r.train_lw_rmse, r.test_lw_rmse);
    os << line;
  }
  out << "sweep of " << rows.size() << " truncations written to " << a.out << '\n';
  return exit_ok;
}

int cmd_compare(const Args& a, std::ostream& out) {
  RunConfig cfg = effective_config(a.common);
  require_out(a);
  if (a.cae.empty() || a.pod.empty()) throw ConfigError("compare needs both --cae and --pod");
  const Prepared p = prepare(a.data, cfg);
  const CaeCheckpoint ck = read_cae_checkpoint(a.cae);
  const PodBasis basis = read_pod(a.pod);
  const CaeCodec cae(ck.model);
  const PodCodec pod(basis);
  std::ofstream os(a.out);
  if (!os) throw FormatError("compare: cannot write '" + a.out + "'");
  os << "model,ratio";
  for (const auto& v : p.desc.variables) os << ',' << v;
  os << '\n';
  const double D = static_cast<double>(p.fields[0].size());
  auto row = [&](const std::string& name, const Codec& c) {
    if (c.field_shape() != p.fields[0].shape()) throw ShapeError("compare: " + name + " grid does not match the data");
    std::vector<double> acc(p.desc.channels(), 0.0);
    for (const auto& f : p.test()) {
      const Tensor rec = c.reconstruct(f);
      const auto e = cfg.physical_units ? lw_rmse_per_variable(denormalize(f, p.desc), denormalize(rec, p.desc), p.weights)
                                        : lw_rmse_per_variable(f, rec, p.weights);
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += e[i];
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f:1", D / static_cast<double>(c.latent_dim()));
    os << name << ',' << buf;
    out << name << "  " << buf;
    for (std::size_t i = 0; i < acc.size(); ++i) {
      const double v = acc[i] / static_cast<double>(p.test().size());
      char cell[32];
      std::snprintf(cell, sizeof cell, "%.17g", v);
      os << ',' << cell;
      out << "  " << p.desc.variables[i] << ' ' << fixed(v);
    }
    os << '\n';
    out << '\n';
  };
  row("POD (" + std::to_string(basis.k()) + " modes)", pod);
  row("CAE (" + std::to_string(ck.model.arch().latent_dim()) + " latent dimensions)", cae);
  out << "held-out LW-RMSE in " << (cfg.physical_units ? "physical" : "normalized") << " units, table " << a.out << '\n';
  return exit_ok;
}

int cmd_ratio(const Args& a, std::ostream& out) {
  RunConfig cfg = effective_config(a.common);
  const CaeArch full = CaeArch::full_scale();
  const std::size_t D = full.channels * full.nlat * full.nlon;
  out << "full-scale grid " << full.channels << "x" << full.nlat << "x" << full.nlon << " = " << D << " values\n";
  out << "CAE latent " << full.latent_channels << "x" << full.latent_h() << "x" << full.latent_w() << " = "
      << full.latent_dim() << ", compression ratio " << fixed(full.compression_ratio(), 2) << ":1\n";
  out << "CAE trainable parameters " << full.parameter_count()
      << " (31.72M is the quoted total; this layout is counted as built)\n";
  const double pod_ratio = static_cast<double>(D) / 1000.0;
  out << "POD 1000 modes, compression ratio " << fixed(pod_ratio, 2)
      << ":1 (tabulated as 121:1; exactly 121:1 would need 960 modes)\n";
  CaeArch desk = cfg.arch;
  desk.nlat = cfg.data.nlat;
  desk.nlon = cfg.data.nlon;
  out << "configured grid " << desk.channels << "x" << desk.nlat << "x" << desk.nlon << ": CAE latent "
      << desk.latent_dim() << ", ratio " << fixed(desk.compression_ratio(), 2) << ":1, " << desk.parameter_count()
      << " parameters; POD " << cfg.pod_k << " modes, ratio "
      << fixed(static_cast<double>(desk.channels * desk.nlat * desk.nlon) / static_cast<double>(cfg.pod_k), 2)
      << ":1\n";
  (void)a;
  return exit_ok;
}

int cmd_fit_rom(const Args& a, std::ostream& out) {
  RunConfig cfg = effective_config(a.common);
  require_out(a);
  const std::size_t d = a.d.value_or(cfg.rom_d);
  const double lambda = a.lambda.value_or(cfg.rom_lambda);
  const Prepared p = prepare(a.data, cfg);
  const LoadedCodec lc = load_codec(a, p);
  if (d >= p.boundary)
    throw DataError("sequence too short: delay depth d = " + std::to_string(d) + " needs more than " +
                    std::to_string(p.boundary) + " training snapshots");
  const LatentSequence seq = encode_sequence(*lc.codec, p.train(), p.desc.dt_hours, cfg.threads);
  const EquationCount ec = equation_count(seq.n, d, seq.size());
  out << "latent n = " << seq.n << ", d = " << d << ": " << ec.unknowns_per_row << " unknowns per row vs "
      << ec.equations << " equations (ratio " << fixed(ec.ratio(), 3) << ")"
      << (ec.underdetermined() ? ", UNDERDETERMINED: minimum-norm solution" : "") << '\n';
  const auto m = build_delay_matrices(seq, d);
  const DelayRom rom = fit_operator(m.past, m.future, lambda);
  const double res = operator_residual(rom, m.past, m.future);
  out << "lambda " << lambda << ", relative one-step residual " << fixed(res / m.future.norm(), 6) << '\n';
  write_operator(a.out, rom);
  out << "operator " << a.out << '\n';
  return exit_ok;
}

DelayRom load_operator(const Args& a, const Codec& codec) {
  if (a.op.empty()) throw ConfigError("--op is required");
  DelayRom rom = read_operator(a.op);
  if (rom.n != codec.latent_dim())
    throw ShapeError("operator dimension " + std::to_string(rom.n) + " does not match the codec latent dimension " +
                     std::to_string(codec.latent_dim()));
  return rom;
}

void dump_fields(const std::string& path, const Prepared& p, std::span<const Tensor> fields) {
  Dataset ds;
  ds.desc = p.desc;
  for (std::size_t i = 0; i < fields.size(); ++i)
    ds.snapshots.push_back({static_cast<double>(i + 1) * p.desc.dt_hours, denormalize(fields[i], p.desc)});
  write_snapshots(path, ds);
}

int cmd_forecast(const Args& a, std::ostream& out) {
  RunConfig cfg = effective_config(a.common);
  require_out(a);
  const Prepared p = prepare(a.data, cfg);
  const LoadedCodec lc = load_codec(a, p);
  const DelayRom rom = load_operator(a, *lc.codec);
  const std::size_t steps = a.steps.value_or(cfg.experiment.horizon);
  const std::size_t s = a.start.value_or(rom.d - 1);
  if (s + 1 < rom.d || s >= p.fields.size())
    throw DataError("forecast: start " + std::to_string(s) + " cannot hold a window of " + std::to_string(rom.d));
  const auto pred = forecast(*lc.codec, rom, std::span(p.fields).subspan(s + 1 - rom.d, rom.d), steps, cfg.threads);
  dump_fields(a.out, p, pred);
  out << "forecast of " << steps << " steps from snapshot " << s << " (physical units) written to " << a.out << '\n';
  for (std::size_t l = 0; l < steps && s + l + 1 < p.fields.size(); ++l)
    out << "lead " << l + 1 << " LW-RMSE " << fixed(lw_rmse(p.fields[s + l + 1], pred[l], p.weights)) << '\n';
  return exit_ok;
}

int cmd_experiment(const Args& a, std::ostream& out) {
  RunConfig cfg = effective_config(a.common);
  require_out(a);
  const ExperimentKind kind = a.kind.empty() ? cfg.kind : parse_experiment_kind(a.kind);
  const Prepared p = prepare(a.data, cfg);
  const LoadedCodec lc = load_codec(a, p);
  const DelayRom rom = load_operator(a, *lc.codec);
  const auto zs = lc.codec->encode_all(p.fields, cfg.threads);
  ForecastReport rep = run_experiment(kind, *lc.codec, rom, p.fields, zs, p.boundary, p.weights, cfg.experiment,
                                      cfg.physical_units ? &p.desc : nullptr);
  rep.variables = p.desc.variables;
  rep.model_id = lc.id;
  rep.seed = a.common.seed.value_or(cfg.train.seed);
  write_report_csv(a.out, rep);
  const auto mc = rep.model_curve(), pc = rep.persistence_curve(), fc = rep.floor_curve();
  out << to_string(kind) << " with d = " << rom.d << ", " << rep.starts.size() << " starts, horizon " << rep.horizon
      << '\n';
  out << "lead 1: model " << fixed(mc.front()) << ", persistence " << fixed(pc.front()) << ", floor "
      << fixed(fc.front()) << '\n';
  out << "lead " << rep.horizon << ": model " << fixed(mc.back()) << ", persistence " << fixed(pc.back())
      << ", floor " << fixed(fc.back()) << '\n';
  if (kind == ExperimentKind::transition)
    out << "mean before boundary " << fixed(rep.mean_before_boundary()) << ", after "
        << fixed(rep.mean_after_boundary()) << '\n';
  if (!a.dump.empty()) {
    const std::size_t s = rep.starts.front();
    const auto pred = forecast(*lc.codec, rom, std::span(p.fields).subspan(s + 1 - rom.d, rom.d), rep.horizon);
    dump_fields(a.dump, p, pred);
    out << "decoded forecast of the first start written to " << a.dump << '\n';
  }
  out << "report " << a.out << '\n';
  return exit_ok;
}

int cmd_delay_sweep(const Args& a, std::ostream& out) {
  RunConfig cfg = effective_config(a.common);
  require_out(a);
  std::vector<std::size_t> ds = cfg.delay_list;
  if (!a.d_list.empty()) ds = parse_config("[experiment]\ndelay_list = " + a.d_list + "\n").delay_list;
  const double lambda = a.lambda.value_or(cfg.rom_lambda);
  const Prepared p = prepare(a.data, cfg);
  const LoadedCodec lc = load_codec(a, p);
  const auto zs = lc.codec->encode_all(p.fields, cfg.threads);
  const auto rows = delay_sweep(*lc.codec, p.fields, zs, p.boundary, p.weights, ds, cfg.experiment, lambda);
  write_delay_sweep_csv(a.out, rows);
  for (const auto& r : rows) out << "d = " << r.d << "  in-window LW-RMSE " << fixed(r.lw_rmse) << '\n';
  out << "table " << a.out << '\n';
  return exit_ok;
}

int cmd_print_config(const Args& a, std::ostream& out) {
  out << format_config(effective_config(a.common));
  return exit_ok;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Time-delay reduced-order weather model: data, autoencoder, POD, operator and experiments"};
  app.require_subcommand(1);
  Args a;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", a.common.config_path, "INI configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", a.common.seed, "seed override");
    sub->add_option("--threads", a.common.threads, "worker threads (1 = single-threaded)");
  };
  auto data_in = [&](CLI::App* sub) { sub->add_option("--data", a.data, "ROMDAT1 snapshot file")->required(); };
  auto codec_in = [&](CLI::App* sub) {
    sub->add_option("--cae", a.cae, "ROMCAE1 checkpoint");
    sub->add_option("--pod", a.pod, "ROMPOD1 basis");
  };
  auto out_opt = [&](CLI::App* sub, const char* what) { sub->add_option("--out", a.out, what)->required(); };

  struct Entry {
    CLI::App* app;
    int (*run)(const Args&, std::ostream&);
  };
  std::vector<Entry> cmds;

  auto* gen = app.add_subcommand("gen-data", "write a synthetic ROMDAT1 sequence");
  common(gen);
  out_opt(gen, "output ROMDAT1 file");
  cmds.push_back({gen, cmd_gen_data});

  auto* tr = app.add_subcommand("train-cae", "train the autoencoder; writes a checkpoint and a loss trace CSV");
  common(tr);
  data_in(tr);
  out_opt(tr, "output ROMCAE1 checkpoint");
  tr->add_option("--trace", a.trace, "loss trace CSV (default <out>.trace.csv)");
  tr->add_option("--resume", a.resume, "continue from this checkpoint, appending to the trace");
  tr->add_option("--epochs", a.epochs, "epoch count override");
  tr->add_flag("--no-cbam", a.no_cbam, "build the autoencoder without attention blocks");
  cmds.push_back({tr, cmd_train_cae});

  auto* fp = app.add_subcommand("fit-pod", "fit a POD basis on the training split");
  common(fp);
  data_in(fp);
  out_opt(fp, "output ROMPOD1 basis");
  fp->add_option("--k", a.k, "mode count override");
  cmds.push_back({fp, cmd_fit_pod});

  auto* ps = app.add_subcommand("pod-sweep", "POD reconstruction error against mode count");
  common(ps);
  data_in(ps);
  out_opt(ps, "output CSV");
  ps->add_option("--k-list", a.k_list, "comma-separated ascending mode counts");
  cmds.push_back({ps, cmd_pod_sweep});

  auto* cmp = app.add_subcommand("compare", "held-out reconstruction table for a CAE and a POD basis");
  common(cmp);
  data_in(cmp);
  codec_in(cmp);
  out_opt(cmp, "output CSV (model,ratio,per-variable LW-RMSE)");
  cmds.push_back({cmp, cmd_compare});

  auto* ratio = app.add_subcommand("ratio", "compression ratios and parameter counts");
  common(ratio);
  cmds.push_back({ratio, cmd_ratio});

  auto* fr = app.add_subcommand("fit-rom", "fit the delayed linear operator on encoded training snapshots");
  common(fr);
  data_in(fr);
  codec_in(fr);
  out_opt(fr, "output ROMOP1 operator");
  fr->add_option("--d", a.d, "delay depth override");
  fr->add_option("--lambda", a.lambda, "ridge parameter override");
  cmds.push_back({fr, cmd_fit_rom});

  auto* fc = app.add_subcommand("forecast", "encode a window, roll out and decode");
  common(fc);
  data_in(fc);
  codec_in(fc);
  fc->add_option("--op", a.op, "ROMOP1 operator")->required();
  out_opt(fc, "output ROMDAT1 file of decoded fields (physical units)");
  fc->add_option("--start", a.start, "index of the newest window snapshot (default d-1)");
  fc->add_option("--steps", a.steps, "forecast steps (default experiment.horizon)");
  cmds.push_back({fc, cmd_forecast});

  auto* ex = app.add_subcommand("experiment", "averaged forecast curves against persistence and the floor");
  common(ex);
  data_in(ex);
  codec_in(ex);
  ex->add_option("--op", a.op, "ROMOP1 operator")->required();
  out_opt(ex, "output report CSV");
  ex->add_option("--kind", a.kind, "in_window | out_of_window | transition");
  ex->add_option("--dump", a.dump, "ROMDAT1 file for the decoded forecast of the first start");
  cmds.push_back({ex, cmd_experiment});

  auto* dsw = app.add_subcommand("delay-sweep", "in-window error against delay depth");
  common(dsw);
  data_in(dsw);
  codec_in(dsw);
  out_opt(dsw, "output CSV (d,lw_rmse)");
  dsw->add_option("--d-list", a.d_list, "comma-separated ascending delay depths");
  dsw->add_option("--lambda", a.lambda, "ridge parameter override");
  cmds.push_back({dsw, cmd_delay_sweep});

  auto* pc = app.add_subcommand("print-config", "print the effective configuration as INI");
  common(pc);
  cmds.push_back({pc, cmd_print_config});

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_config;
  }
  try {
    for (const auto& c : cmds)
      if (c.app->parsed()) return c.run(a, out);
    return exit_config;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return exit_config;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return exit_numerical;
  } catch (const Error& e) {
    err << "data error: " << e.what() << '\n';
    return exit_data;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_failure;
  }
}

}  // namespace tdrom
