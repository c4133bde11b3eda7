#include "tdrom/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "tdrom/binary_io.hpp"
#include "tdrom/error.hpp"

namespace tdrom {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr char kMagic[] = "ROMDAT1";

}  // namespace

LatitudeWeights latitude_weights(std::span<const double> lat_deg) {
  if (lat_deg.empty()) throw DataError("latitude_weights: empty latitude grid");
  std::vector<double> c(lat_deg.size());
  double total = 0.0;
  for (std::size_t i = 0; i < lat_deg.size(); ++i) {
    if (!(std::abs(lat_deg[i]) <= 90.0))
      throw DataError("latitude_weights: |lat| > 90 at index " + std::to_string(i));
    // cos(90 deg) evaluates to ~6e-17; poles get exactly zero weight.
    c[i] = std::abs(lat_deg[i]) == 90.0 ? 0.0 : std::cos(lat_deg[i] * kDeg);
    total += c[i];
  }
  if (!(total > 0.0)) throw DataError("latitude_weights: cosine sum is zero (grid contains only poles)");
  const double mean = total / static_cast<double>(c.size());
  LatitudeWeights w;
  w.w.resize(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) w.w[i] = c[i] / mean;
  return w;
}

std::vector<double> latitude_grid(std::size_t nlat) {
  if (nlat == 0) throw DataError("latitude_grid: nlat must be positive");
  if (nlat == 1) return {0.0};
  std::vector<double> lat(nlat);
  for (std::size_t i = 0; i < nlat; ++i)
    lat[i] = -90.0 + 180.0 * static_cast<double>(i) / static_cast<double>(nlat - 1);
  lat.back() = 90.0;
  return lat;
}

std::vector<double> longitude_grid(std::size_t nlon) {
  if (nlon == 0) throw DataError("longitude_grid: nlon must be positive");
  std::vector<double> lon(nlon);
  for (std::size_t j = 0; j < nlon; ++j)
    lon[j] = 360.0 * static_cast<double>(j) / static_cast<double>(nlon);
  return lon;
}

void DatasetDescriptor::validate() const {
  if (variables.empty()) throw DataError("descriptor: no variables");
  if (lat.empty() || lon.empty()) throw DataError("descriptor: empty grid");
  for (std::size_t i = 0; i < lat.size(); ++i) {
    if (!(std::abs(lat[i]) <= 90.0)) throw DataError("descriptor: |lat| > 90");
    if (i > 0 && (lat[i] - lat[i - 1]) * (lat[1] - lat[0]) <= 0.0)
      throw DataError("descriptor: latitudes not strictly monotone");
  }
  for (std::size_t j = 0; j < lon.size(); ++j) {
    if (!(lon[j] >= 0.0 && lon[j] < 360.0)) throw DataError("descriptor: lon outside [0,360)");
    if (j > 0 && !(lon[j] > lon[j - 1])) throw DataError("descriptor: longitudes not strictly increasing");
  }
  if (!mean.empty() || !stddev.empty()) {
    if (mean.size() != variables.size() || stddev.size() != variables.size())
      throw DataError("descriptor: statistics length differs from variable count");
    for (std::size_t c = 0; c < stddev.size(); ++c)
      if (!(stddev[c] > 0.0)) throw DataError("descriptor: std of '" + variables[c] + "' is not positive");
  }
}

Normalized normalize(std::span<const GridSnapshot> train, DatasetDescriptor desc) {
  if (train.empty()) throw DataError("normalize: empty training split");
  const std::size_t C = desc.channels();
  const std::size_t P = train[0].values.size() / C;
  std::vector<double> mean(C, 0.0), var(C, 0.0);
  for (std::size_t c = 0; c < C; ++c) {
    double acc = 0.0;
    for (const auto& s : train) {
      if (s.values.size() != C * P) throw ShapeError("normalize: snapshot extent mismatch");
      const double* p = s.values.data().data() + c * P;
      for (std::size_t i = 0; i < P; ++i) acc += p[i];
    }
    const double n = static_cast<double>(P * train.size());
    mean[c] = acc / n;
    // second pass: correct the mean by the average residual, then the variance
    double corr = 0.0;
    for (const auto& s : train) {
      const double* p = s.values.data().data() + c * P;
      for (std::size_t i = 0; i < P; ++i) corr += p[i] - mean[c];
    }
    mean[c] += corr / n;
    double sq = 0.0;
    for (const auto& s : train) {
      const double* p = s.values.data().data() + c * P;
      for (std::size_t i = 0; i < P; ++i) sq += (p[i] - mean[c]) * (p[i] - mean[c]);
    }
    var[c] = sq / n;
    if (!(var[c] > 0.0) || !(std::sqrt(var[c]) > 1e-300))
      throw DataError("normalize: variable '" + (c < desc.variables.size() ? desc.variables[c] : std::to_string(c)) +
                      "' has zero variance on the training split");
  }
  desc.mean = mean;
  desc.stddev.resize(C);
  for (std::size_t c = 0; c < C; ++c) desc.stddev[c] = std::sqrt(var[c]);
  Normalized out;
  out.snapshots = apply_normalization(train, desc);
  out.desc = std::move(desc);
  return out;
}

namespace {

std::vector<GridSnapshot> map_channels(std::span<const GridSnapshot> snaps, const DatasetDescriptor& desc,
                                       bool inverse) {
  const std::size_t C = desc.channels();
  if (desc.mean.size() != C || desc.stddev.size() != C)
    throw DataError("normalization statistics missing from descriptor");
  std::vector<GridSnapshot> out(snaps.begin(), snaps.end());
  for (auto& s : out) {
    const std::size_t P = s.values.size() / C;
    if (P * C != s.values.size()) throw ShapeError("normalization: snapshot extent mismatch");
    for (std::size_t c = 0; c < C; ++c) {
      double* p = s.values.data().data() + c * P;
      for (std::size_t i = 0; i < P; ++i)
        p[i] = inverse ? p[i] * desc.stddev[c] + desc.mean[c] : (p[i] - desc.mean[c]) / desc.stddev[c];
    }
  }
  return out;
}

}  // namespace

std::vector<GridSnapshot> apply_normalization(std::span<const GridSnapshot> snaps,
                                              const DatasetDescriptor& desc) {
  return map_channels(snaps, desc, false);
}

std::vector<GridSnapshot> denormalize(std::span<const GridSnapshot> snaps, const DatasetDescriptor& desc) {
  return map_channels(snaps, desc, true);
}

Tensor denormalize(const Tensor& values, const DatasetDescriptor& desc) {
  const std::size_t C = desc.channels();
  const std::size_t axis = values.rank() == 4 ? 1 : 0;
  if (values.dim(axis) != C) throw ShapeError("denormalize: channel count mismatch");
  Tensor out = values;
  const std::size_t outer = axis == 1 ? values.dim(0) : 1;
  const std::size_t P = values.size() / (outer * C);
  for (std::size_t b = 0; b < outer; ++b)
    for (std::size_t c = 0; c < C; ++c) {
      double* p = out.data().data() + (b * C + c) * P;
      for (std::size_t i = 0; i < P; ++i) p[i] = p[i] * desc.stddev[c] + desc.mean[c];
    }
  return out;
}

std::pair<std::vector<GridSnapshot>, std::vector<GridSnapshot>> split(std::span<const GridSnapshot> snaps,
                                                                      double boundary) {
  std::pair<std::vector<GridSnapshot>, std::vector<GridSnapshot>> out;
  for (std::size_t i = 0; i < snaps.size(); ++i) {
    if (i > 0 && !(snaps[i].timestamp > snaps[i - 1].timestamp))
      throw DataError("split: snapshots are not time-ordered at index " + std::to_string(i));
    (snaps[i].timestamp < boundary ? out.first : out.second).push_back(snaps[i]);
  }
  if (out.first.empty()) throw DataError("split: boundary leaves the training side empty");
  if (out.second.empty()) throw DataError("split: boundary leaves the test side empty");
  return out;
}

std::size_t holdout_boundary(std::size_t count, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw DataError("holdout fraction must lie in (0,1)");
  const auto held = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(count * fraction)));
  if (held >= count) throw DataError("holdout leaves no training snapshots");
  return count - held;
}

// ---- synthetic atmosphere --------------------------------------------------

SynthParams synth_params(const SynthConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto uni = [&](double a, double b) { return a + (b - a) * u01(rng); };
  auto sign = [&] { return u01(rng) < 0.5 ? -1.0 : 1.0; };
  auto draw = [&](double amp_lo, double amp_hi, int zlo, int zhi, double mlo, double mhi, double wlo,
                  double whi, double smod) {
    SynthMode m{};
    m.amp = uni(amp_lo, amp_hi);
    m.zonal = zlo + static_cast<int>(u01(rng) * (zhi - zlo + 1));
    m.zonal = std::min(m.zonal, zhi);
    m.meridional = uni(mlo, mhi);
    m.lat_phase = uni(0.0, 2.0 * std::numbers::pi);
    m.omega = sign() * uni(wlo, whi);
    m.speed_mod = uni(-smod, smod);
    m.phase = uni(0.0, 2.0 * std::numbers::pi);
    return m;
  };
  SynthParams p{};
  for (int k = 0; k < 4; ++k) p.waves.push_back(draw(3.0, 6.0, 1, 4, 0.5, 2.5, 0.15, 0.5, 0.5));
  for (int k = 0; k < 6; ++k) p.noise.push_back(draw(0.2, 0.5, 2, 8, 2.0, 5.0, 0.05, 1.0, 0.0));
  for (int k = 0; k < 3; ++k) p.temp_noise.push_back(draw(0.3, 0.8, 2, 8, 2.0, 5.0, 0.05, 1.0, 0.0));
  for (int k = 0; k < 3; ++k) p.pres_noise.push_back(draw(20.0, 60.0, 2, 8, 2.0, 5.0, 0.05, 1.0, 0.0));
  p.jet_amp = uni(8.0, 12.0);
  p.season_period = 240.0;
  p.season_phase = uni(0.0, 2.0 * std::numbers::pi);
  p.psi_scale = 0.0;
  for (const auto& w : p.waves) p.psi_scale += w.amp;
  return p;
}

double synth_mode(const SynthMode& m, double lat, double lon, double t) {
  const double s = std::sin(lat);
  return m.amp * std::cos(lat) * std::cos(m.meridional * lat + m.lat_phase) *
         std::cos(m.zonal * lon - m.omega * (1.0 + m.speed_mod * s * s) * t + m.phase);
}

double synth_season(const SynthParams& p, double t) {
  return std::sin(2.0 * std::numbers::pi * t / p.season_period + p.season_phase);
}

namespace {

double wave_part(const SynthParams& p, double lat, double lon, double t) {
  double acc = 0.0;
  for (const auto& m : p.waves) acc += synth_mode(m, lat, lon, t);
  for (const auto& m : p.noise) acc += synth_mode(m, lat, lon, t);
  return acc;
}

double jet_part(const SynthParams& p, double lat, double t) {
  const double c = std::cos(lat);
  return p.jet_amp * (1.0 + 0.3 * synth_season(p, t)) * std::sin(lat) * c * c;
}

}  // namespace

double synth_streamfunction(const SynthParams& p, double lat, double lon, double t) {
  return jet_part(p, lat, t) + wave_part(p, lat, lon, t);
}

Tensor synth_snapshot(const SynthParams& p, std::span<const double> lat_deg, std::span<const double> lon_deg,
                      double t) {
  const std::size_t H = lat_deg.size(), W = lon_deg.size();
  if (H < 2 || W < 3) throw DataError("synth_snapshot: grid too small");
  const double dphi = (lat_deg[1] - lat_deg[0]) * kDeg;
  const double dlam = (lon_deg[1] - lon_deg[0]) * kDeg;
  const double season = synth_season(p, t);

  // psi on rows -1..H (ghost rows outside the grid), wave part on 0..H-1
  std::vector<double> psi((H + 2) * W), wave(H * W);
  for (std::size_t r = 0; r < H + 2; ++r) {
    const double lat = (lat_deg[0] + (static_cast<double>(r) - 1.0) * (lat_deg[1] - lat_deg[0])) * kDeg;
    const double lat_r = (r >= 1 && r <= H) ? lat_deg[r - 1] * kDeg : lat;
    for (std::size_t j = 0; j < W; ++j) {
      const double lon = lon_deg[j] * kDeg;
      const double wv = wave_part(p, lat_r, lon, t);
      psi[r * W + j] = jet_part(p, lat_r, t) + wv;
      if (r >= 1 && r <= H) wave[(r - 1) * W + j] = wv;
    }
  }

  Tensor out(Shape{4, H, W});
  for (std::size_t i = 0; i < H; ++i) {
    const double lat = lat_deg[i] * kDeg;
    const double s = std::sin(lat), c = std::cos(lat);
    for (std::size_t j = 0; j < W; ++j) {
      const std::size_t jp = (j + 1) % W, jm = (j + W - 1) % W;
      const double* row = psi.data() + (i + 1) * W;
      const double u = -(psi[(i + 2) * W + j] - psi[i * W + j]) / (2.0 * dphi);
      const double v = (row[jp] - row[jm]) / (2.0 * dlam);
      const double q = wave[i * W + j] / p.psi_scale;
      const double lon = lon_deg[j] * kDeg;
      double temp = 288.0 - 40.0 * s * s + 6.0 * season * s + 3.0 * q + 1.5 * q * q;
      for (const auto& m : p.temp_noise) temp += synth_mode(m, lat, lon, t);
      double pres = 101325.0 + 800.0 * q + 200.0 * std::sin(2.0 * q) + 300.0 * season * c * c;
      for (const auto& m : p.pres_noise) pres += synth_mode(m, lat, lon, t);
      out.at(0, i, j) = u;
      out.at(1, i, j) = v;
      out.at(2, i, j) = temp;
      out.at(3, i, j) = pres;
    }
  }
  return out;
}

Dataset synth_generate(const SynthConfig& cfg) {
  if (cfg.nlat < 8 || cfg.nlon < 8) throw DataError("synth_generate: grid extents must be at least 8x8");
  if (cfg.steps < 1) throw DataError("synth_generate: steps must be >= 1");
  const SynthParams p = synth_params(cfg);
  Dataset d;
  d.desc.lat = latitude_grid(cfg.nlat);
  d.desc.lon = longitude_grid(cfg.nlon);
  d.desc.dt_hours = cfg.dt_hours;
  d.snapshots.reserve(cfg.steps);
  for (std::size_t k = 0; k < cfg.steps; ++k) {
    GridSnapshot s;
    s.timestamp = static_cast<double>(k) * cfg.dt_hours;
    s.values = synth_snapshot(p, d.desc.lat, d.desc.lon, static_cast<double>(k));
    d.snapshots.push_back(std::move(s));
  }
  return d;
}

std::vector<double> discrete_divergence(const Tensor& snap, std::span<const double> lat_deg,
                                        std::span<const double> lon_deg) {
  const std::size_t H = lat_deg.size(), W = lon_deg.size();
  const double dphi = (lat_deg[1] - lat_deg[0]) * kDeg;
  const double dlam = (lon_deg[1] - lon_deg[0]) * kDeg;
  std::vector<double> div((H - 2) * W);
  for (std::size_t i = 1; i + 1 < H; ++i)
    for (std::size_t j = 0; j < W; ++j) {
      const std::size_t jp = (j + 1) % W, jm = (j + W - 1) % W;
      const double du = (snap.at(0, i, jp) - snap.at(0, i, jm)) / (2.0 * dlam);
      const double dv = (snap.at(1, i + 1, j) - snap.at(1, i - 1, j)) / (2.0 * dphi);
      div[(i - 1) * W + j] = du + dv;
    }
  return div;
}

// ---- ROMDAT1 ---------------------------------------------------------------

std::vector<std::uint8_t> encode_snapshots(const Dataset& data) {
  const auto& d = data.desc;
  const std::size_t C = d.channels(), H = d.nlat(), W = d.nlon();
  binio::Writer w;
  w.bytes(std::string_view(kMagic, 7));
  w.u32(static_cast<std::uint32_t>(C));
  w.u32(static_cast<std::uint32_t>(H));
  w.u32(static_cast<std::uint32_t>(W));
  w.u32(static_cast<std::uint32_t>(data.snapshots.size()));
  for (const auto& name : d.variables) {
    w.u32(static_cast<std::uint32_t>(name.size()));
    w.bytes(name);
  }
  w.f64s(d.lat);
  w.f64s(d.lon);
  for (const auto& s : data.snapshots) {
    if (s.values.size() != C * H * W)
      throw ShapeError("write_snapshots: snapshot shape " + shape_str(s.values.shape()) +
                       " does not match descriptor");
    w.f64s(s.values.data());
  }
  return w.buffer();
}

void write_snapshots(const std::string& path, const Dataset& data) {
  const auto bytes = encode_snapshots(data);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError("ROMDAT1: cannot open '" + path + "' for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw FormatError("ROMDAT1: short write to '" + path + "'");
}

namespace {

Dataset decode_from(binio::Reader& r, double dt_hours) {
  r.expect_magic(std::string_view(kMagic, 7));
  const std::uint32_t C = r.u32("C"), H = r.u32("H"), W = r.u32("W"), T = r.u32("T");
  if (C == 0 || H == 0 || W == 0) throw FormatError("ROMDAT1: extent mismatch, zero C/H/W in header");
  Dataset d;
  d.desc.variables.clear();
  for (std::uint32_t c = 0; c < C; ++c) {
    const std::uint32_t len = r.u32("variable name length");
    d.desc.variables.push_back(r.bytes(len, "variable name"));
  }
  d.desc.lat = r.f64s(H, "latitudes");
  d.desc.lon = r.f64s(W, "longitudes");
  d.desc.dt_hours = dt_hours;
  const std::size_t per = static_cast<std::size_t>(C) * H * W;
  if (r.remaining() != per * T * 8)
    throw FormatError("ROMDAT1: payload length mismatch, header declares " + std::to_string(T) + " snapshots of " +
                      std::to_string(per) + " values but payload holds " + std::to_string(r.remaining()) +
                      " bytes");
  d.snapshots.reserve(T);
  for (std::uint32_t t = 0; t < T; ++t) {
    GridSnapshot s;
    s.timestamp = static_cast<double>(t) * dt_hours;
    s.values = Tensor(Shape{C, H, W}, r.f64s(per, "values"));
    d.snapshots.push_back(std::move(s));
  }
  r.expect_end();
  return d;
}

}  // namespace

Dataset decode_snapshots(std::vector<std::uint8_t> bytes, double dt_hours) {
  binio::Reader r(std::move(bytes), "ROMDAT1");
  return decode_from(r, dt_hours);
}

Dataset read_snapshots(const std::string& path, double dt_hours) {
  auto r = binio::Reader::open(path, "ROMDAT1");
  return decode_from(r, dt_hours);
}

void write_manifest(const std::string& path, std::span<const ManifestEntry> entries) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw FormatError("manifest: cannot open '" + path + "' for writing");
  os.precision(17);
  os << "path,t_begin_hours,t_end_hours\n";
  for (const auto& e : entries) os << e.path << ',' << e.t_begin << ',' << e.t_end << '\n';
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("manifest: cannot open '" + path + "'");
  std::string line;
  std::getline(is, line);
  if (line != "path,t_begin_hours,t_end_hours") throw FormatError("manifest: unexpected header '" + line + "'");
  std::vector<ManifestEntry> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto a = line.rfind(',');
    const auto b = a == std::string::npos ? a : line.rfind(',', a - 1);
    if (a == std::string::npos || b == std::string::npos) throw FormatError("manifest: malformed row '" + line + "'");
    ManifestEntry e;
    e.path = line.substr(0, b);
    e.t_begin = std::stod(line.substr(b + 1, a - b - 1));
    e.t_end = std::stod(line.substr(a + 1));
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace tdrom
