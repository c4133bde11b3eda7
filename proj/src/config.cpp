#include "tdrom/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "tdrom/error.hpp"

namespace tdrom {
namespace {

using Setter = std::function<void(RunConfig&, const std::string&)>;

[[noreturn]] void bad(const std::string& key, const std::string& value, const std::string& want) {
  throw ConfigError("config key '" + key + "': expected " + want + ", got '" + value + "'");
}

std::size_t as_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty()) bad(key, v, "a non-negative integer");
  return out;
}

double as_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used == v.size() && std::isfinite(out)) return out;
  } catch (const std::exception&) {
  }
  bad(key, v, "a finite number");
}

bool as_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "on" || v == "1") return true;
  if (v == "false" || v == "off" || v == "0") return false;
  bad(key, v, "true or false");
}

std::vector<std::size_t> as_list(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto a = item.find_first_not_of(" \t"), b = item.find_last_not_of(" \t");
    if (a == std::string::npos) bad(key, v, "a comma-separated list of integers");
    out.push_back(as_size(key, item.substr(a, b - a + 1)));
  }
  if (out.empty()) bad(key, v, "a non-empty list");
  return out;
}

std::string list_str(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + std::to_string(v[i]);
  return s;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const std::map<std::string, Setter>& schema() {
  static const std::map<std::string, Setter> keys = {
      {"data.nlat", [](RunConfig& c, const std::string& v) { c.data.nlat = as_size("data.nlat", v); }},
      {"data.nlon", [](RunConfig& c, const std::string& v) { c.data.nlon = as_size("data.nlon", v); }},
      {"data.steps", [](RunConfig& c, const std::string& v) { c.data.steps = as_size("data.steps", v); }},
      {"data.dt_hours", [](RunConfig& c, const std::string& v) { c.data.dt_hours = as_double("data.dt_hours", v); }},
      {"data.seed", [](RunConfig& c, const std::string& v) { c.data.seed = as_size("data.seed", v); }},
      {"data.holdout_fraction",
       [](RunConfig& c, const std::string& v) { c.holdout_fraction = as_double("data.holdout_fraction", v); }},
      {"cae.stem", [](RunConfig& c, const std::string& v) { c.arch.stem_channels = as_size("cae.stem", v); }},
      {"cae.stages", [](RunConfig& c, const std::string& v) { c.arch.stage_channels = as_list("cae.stages", v); }},
      {"cae.latent_channels",
       [](RunConfig& c, const std::string& v) { c.arch.latent_channels = as_size("cae.latent_channels", v); }},
      {"cae.cbam", [](RunConfig& c, const std::string& v) { c.arch.cbam = as_bool("cae.cbam", v); }},
      {"cae.reduction", [](RunConfig& c, const std::string& v) { c.arch.reduction = as_size("cae.reduction", v); }},
      {"train.learning_rate",
       [](RunConfig& c, const std::string& v) { c.train.learning_rate = as_double("train.learning_rate", v); }},
      {"train.batch_size", [](RunConfig& c, const std::string& v) { c.train.batch_size = as_size("train.batch_size", v); }},
      {"train.epochs", [](RunConfig& c, const std::string& v) { c.train.epochs = as_size("train.epochs", v); }},
      {"train.patience", [](RunConfig& c, const std::string& v) { c.train.patience = as_size("train.patience", v); }},
      {"train.decay", [](RunConfig& c, const std::string& v) { c.train.decay = as_double("train.decay", v); }},
      {"train.lr_floor", [](RunConfig& c, const std::string& v) { c.train.lr_floor = as_double("train.lr_floor", v); }},
      {"train.seed", [](RunConfig& c, const std::string& v) { c.train.seed = as_size("train.seed", v); }},
      {"train.val_fraction",
       [](RunConfig& c, const std::string& v) { c.val_fraction = as_double("train.val_fraction", v); }},
      {"pod.k", [](RunConfig& c, const std::string& v) { c.pod_k = as_size("pod.k", v); }},
      {"pod.sweep", [](RunConfig& c, const std::string& v) { c.pod_sweep = as_list("pod.sweep", v); }},
      {"rom.d", [](RunConfig& c, const std::string& v) { c.rom_d = as_size("rom.d", v); }},
      {"rom.lambda", [](RunConfig& c, const std::string& v) { c.rom_lambda = as_double("rom.lambda", v); }},
      {"experiment.kind", [](RunConfig& c, const std::string& v) { c.kind = parse_experiment_kind(v); }},
      {"experiment.num_starts",
       [](RunConfig& c, const std::string& v) { c.experiment.num_starts = as_size("experiment.num_starts", v); }},
      {"experiment.spacing",
       [](RunConfig& c, const std::string& v) { c.experiment.spacing = as_size("experiment.spacing", v); }},
      {"experiment.horizon",
       [](RunConfig& c, const std::string& v) { c.experiment.horizon = as_size("experiment.horizon", v); }},
      {"experiment.units",
       [](RunConfig& c, const std::string& v) {
         if (v != "normalized" && v != "physical") bad("experiment.units", v, "normalized or physical");
         c.physical_units = v == "physical";
       }},
      {"experiment.delay_list",
       [](RunConfig& c, const std::string& v) { c.delay_list = as_list("experiment.delay_list", v); }},
      {"run.threads", [](RunConfig& c, const std::string& v) { c.threads = as_size("run.threads", v); }},
  };
  return keys;
}

}  // namespace

void RunConfig::validate() const {
  if (data.nlat < 8) throw ConfigError("config key 'data.nlat': must be at least 8, got " + std::to_string(data.nlat));
  if (data.nlon < 8) throw ConfigError("config key 'data.nlon': must be at least 8, got " + std::to_string(data.nlon));
  if (data.steps < 1) throw ConfigError("config key 'data.steps': must be at least 1");
  if (!(data.dt_hours > 0.0)) throw ConfigError("config key 'data.dt_hours': must be positive");
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0))
    throw ConfigError("config key 'data.holdout_fraction': must lie in (0,1)");
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) throw ConfigError("config key 'train.val_fraction': must lie in [0,1)");
  if (pod_k == 0) throw ConfigError("config key 'pod.k': must be positive");
  for (std::size_t i = 0; i < pod_sweep.size(); ++i)
    if (pod_sweep[i] == 0 || (i && pod_sweep[i] <= pod_sweep[i - 1]))
      throw ConfigError("config key 'pod.sweep': must be positive and strictly ascending");
  if (rom_d == 0) throw ConfigError("config key 'rom.d': must be at least 1");
  if (!(rom_lambda >= 0.0)) throw ConfigError("config key 'rom.lambda': must be >= 0");
  if (experiment.num_starts == 0) throw ConfigError("config key 'experiment.num_starts': must be positive");
  if (experiment.horizon == 0) throw ConfigError("config key 'experiment.horizon': must be positive");
  for (std::size_t i = 0; i < delay_list.size(); ++i)
    if (delay_list[i] == 0 || (i && delay_list[i] <= delay_list[i - 1]))
      throw ConfigError("config key 'experiment.delay_list': must be positive and strictly ascending");
  if (threads == 0) throw ConfigError("config key 'run.threads': must be positive");
  CaeArch a = arch;
  a.nlat = data.nlat;
  a.nlon = data.nlon;
  try {
    a.validate();
    train.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

RunConfig parse_config(const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream is(text);
  try {
    boost::property_tree::ini_parser::read_ini(is, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("config: " + e.message() + " at line " + std::to_string(e.line()));
  }
  RunConfig cfg;
  const auto& keys = schema();
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("config key '" + section + "': keys must sit inside a [section]");
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      const auto it = keys.find(full);
      if (it == keys.end()) throw ConfigError("config key '" + full + "': unknown key");
      it->second(cfg, value.get_value<std::string>());
    }
  }
  cfg.arch.nlat = cfg.data.nlat;
  cfg.arch.nlon = cfg.data.nlon;
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

std::string format_config(const RunConfig& c) {
  std::ostringstream os;
  os << "[data]\n"
     << "nlat = " << c.data.nlat << "\nnlon = " << c.data.nlon << "\nsteps = " << c.data.steps
     << "\ndt_hours = " << num(c.data.dt_hours) << "\nseed = " << c.data.seed
     << "\nholdout_fraction = " << num(c.holdout_fraction) << "\n\n[cae]\n"
     << "stem = " << c.arch.stem_channels << "\nstages = " << list_str(c.arch.stage_channels)
     << "\nlatent_channels = " << c.arch.latent_channels << "\ncbam = " << (c.arch.cbam ? "true" : "false")
     << "\nreduction = " << c.arch.reduction << "\n\n[train]\n"
     << "learning_rate = " << num(c.train.learning_rate) << "\nbatch_size = " << c.train.batch_size
     << "\nepochs = " << c.train.epochs << "\npatience = " << c.train.patience << "\ndecay = " << num(c.train.decay)
     << "\nlr_floor = " << num(c.train.lr_floor) << "\nseed = " << c.train.seed
     << "\nval_fraction = " << num(c.val_fraction) << "\n\n[pod]\n"
     << "k = " << c.pod_k << "\nsweep = " << list_str(c.pod_sweep) << "\n\n[rom]\n"
     << "d = " << c.rom_d << "\nlambda = " << num(c.rom_lambda) << "\n\n[experiment]\n"
     << "kind = " << to_string(c.kind) << "\nnum_starts = " << c.experiment.num_starts
     << "\nspacing = " << c.experiment.spacing << "\nhorizon = " << c.experiment.horizon
     << "\nunits = " << (c.physical_units ? "physical" : "normalized") << "\ndelay_list = " << list_str(c.delay_list)
     << "\n\n[run]\nthreads = " << c.threads << '\n';
  return os.str();
}

}  // namespace tdrom
