#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "tdrom/error.hpp"
#include "tdrom/data.hpp"
#include "test_support.hpp"

using namespace tdrom;
using tdrom::testing::random_tensor;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("tdrom_test_" + name)).string();
}

std::vector<GridSnapshot> random_snaps(std::size_t T, std::size_t C, std::size_t H, std::size_t W,
                                       std::mt19937_64& rng) {
  std::vector<GridSnapshot> out;
  for (std::size_t k = 0; k < T; ++k)
    out.push_back({6.0 * static_cast<double>(k), random_tensor(Shape{C, H, W}, rng, -3.0, 5.0)});
  return out;
}

// Closed-form streamfunction written out from the parameter record alone.
double psi_oracle(const SynthParams& p, double lat, double lon, double t) {
  const double s = std::sin(lat), c = std::cos(lat);
  double v = p.jet_amp * (1.0 + 0.3 * std::sin(2.0 * std::numbers::pi * t / p.season_period + p.season_phase)) * s * c * c;
  for (const auto* group : {&p.waves, &p.noise})
    for (const auto& m : *group)
      v += m.amp * c * std::cos(m.meridional * lat + m.lat_phase) *
           std::cos(m.zonal * lon - m.omega * (1.0 + m.speed_mod * s * s) * t + m.phase);
  return v;
}

}  // namespace

TEST_CASE("latitude weights") {
  const std::vector<double> eq{0.0};
  CHECK(latitude_weights(eq).w == std::vector<double>{1.0});
  const std::vector<double> sym{-60.0, 60.0};
  const auto ws = latitude_weights(sym).w;
  CHECK(ws[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(ws[1] == doctest::Approx(1.0).epsilon(1e-15));

  const auto lat = latitude_grid(121);
  REQUIRE(lat.size() == 121);
  CHECK(lat.front() == -90.0);
  CHECK(lat.back() == 90.0);
  CHECK(lat[60] == 0.0);
  CHECK(lat[1] - lat[0] == doctest::Approx(1.5));
  double csum = 0.0;
  for (double l : lat) csum += std::cos(l * kDeg);
  const auto w = latitude_weights(lat).w;
  CHECK(w[60] == doctest::Approx(121.0 / csum).epsilon(1e-14));
  CHECK(w.front() == 0.0);
  CHECK(w.back() == 0.0);

  const std::vector<double> poles{-90.0, 90.0};
  CHECK_THROWS_AS(latitude_weights(poles), DataError);
  const std::vector<double> bad{0.0, 91.0};
  CHECK_THROWS_AS(latitude_weights(bad), DataError);
}

TEST_CASE("latitude weights average to one on every grid") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-90.0, 90.0);
  for (std::size_t n = 3; n <= 130; n += 7) {
    const auto w = latitude_weights(latitude_grid(n)).w;
    double m = 0.0;
    for (double v : w) {
      CHECK(v >= 0.0);
      m += v;
    }
    CHECK(m / static_cast<double>(n) == doctest::Approx(1.0).epsilon(1e-12));
    std::vector<double> r(n);
    for (auto& v : r) v = u(rng);
    const auto wr = latitude_weights(r).w;
    m = 0.0;
    for (double v : wr) m += v;
    CHECK(m / static_cast<double>(n) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("grids and descriptor validation") {
  const auto lon = longitude_grid(48);
  CHECK(lon.front() == 0.0);
  CHECK(lon.back() == doctest::Approx(352.5));
  DatasetDescriptor d;
  d.lat = latitude_grid(5);
  d.lon = lon;
  CHECK_NOTHROW(d.validate());
  d.lat[2] = d.lat[1];
  CHECK_THROWS_AS(d.validate(), DataError);
  d.lat = latitude_grid(5);
  d.lon.back() = 360.0;
  CHECK_THROWS_AS(d.validate(), DataError);
  d.lon = lon;
  d.mean = {0, 0, 0, 0};
  d.stddev = {1, 1, 0, 1};
  CHECK_THROWS_AS(d.validate(), DataError);
}

TEST_CASE("normalization uses training statistics and inverts exactly") {
  std::mt19937_64 rng(9);
  auto snaps = random_snaps(40, 4, 5, 6, rng);
  // constant plus noise on channel 2
  for (auto& s : snaps)
    for (std::size_t k = 0; k < 30; ++k) s.values[2 * 30 + k] += 1000.0;
  const auto [train, test] = split(snaps, 6.0 * 30);
  DatasetDescriptor d;
  d.lat = latitude_grid(5);
  d.lon = longitude_grid(6);
  const auto norm = normalize(train, d);
  REQUIRE(norm.desc.mean.size() == 4);
  for (std::size_t c = 0; c < 4; ++c) {
    double m = 0.0, v = 0.0, n = 0.0;
    for (const auto& s : norm.snapshots)
      for (std::size_t k = 0; k < 30; ++k) {
        m += s.values[c * 30 + k];
        n += 1.0;
      }
    m /= n;
    for (const auto& s : norm.snapshots)
      for (std::size_t k = 0; k < 30; ++k) v += (s.values[c * 30 + k] - m) * (s.values[c * 30 + k] - m);
    v /= n;
    CHECK(std::abs(m) <= 1e-12);
    CHECK(std::abs(v - 1.0) <= 1e-12);
  }

  // test split uses the stored training statistics, not its own
  const auto tn = apply_normalization(test, norm.desc);
  const auto own = normalize(test, d);
  CHECK(own.desc.mean != norm.desc.mean);
  for (std::size_t i = 0; i < test.size(); ++i)
    for (std::size_t k = 0; k < 120; ++k) {
      const std::size_t c = k / 30;
      CHECK(tn[i].values[k] == doctest::Approx((test[i].values[k] - norm.desc.mean[c]) / norm.desc.stddev[c]));
    }

  const auto back = denormalize(norm.snapshots, norm.desc);
  double worst = 0.0;
  for (std::size_t i = 0; i < train.size(); ++i)
    for (std::size_t k = 0; k < 120; ++k)
      worst = std::max(worst, std::abs(back[i].values[k] - train[i].values[k]) / std::max(1.0, std::abs(train[i].values[k])));
  CHECK(worst <= 1e-12);
  const Tensor b = denormalize(norm.snapshots[0].values, norm.desc);
  CHECK(b == back[0].values);

  auto flat = snaps;
  for (auto& s : flat)
    for (std::size_t k = 0; k < 30; ++k) s.values[30 + k] = 5.0;
  CHECK_THROWS_AS(normalize(flat, d), DataError);
}

TEST_CASE("split partitions by timestamp") {
  std::mt19937_64 rng(10);
  auto three = random_snaps(3, 1, 2, 2, rng);
  const auto [a, b] = split(three, 7.0);
  CHECK(a.size() == 2);
  CHECK(b.size() == 1);
  CHECK_THROWS_AS(split(three, -1.0), DataError);
  CHECK_THROWS_AS(split(three, 100.0), DataError);

  for (int trial = 0; trial < 20; ++trial) {
    std::vector<GridSnapshot> s;
    double t = 0.0;
    std::exponential_distribution<double> gap(0.3);
    for (int k = 0; k < 50; ++k) {
      t += gap(rng) + 1e-6;
      s.push_back({t, Tensor(Shape{1, 1, 1}, t)});
    }
    const double boundary = s[10].timestamp + 0.5 * (s[40].timestamp - s[10].timestamp);
    const auto [tr, te] = split(s, boundary);
    std::vector<double> want_tr, want_te;
    for (const auto& x : s) (x.timestamp < boundary ? want_tr : want_te).push_back(x.timestamp);
    REQUIRE(tr.size() == want_tr.size());
    REQUIRE(te.size() == want_te.size());
    for (std::size_t i = 0; i < tr.size(); ++i) CHECK(tr[i].timestamp == want_tr[i]);
    for (std::size_t i = 0; i < te.size(); ++i) CHECK(te[i].timestamp == want_te[i]);
  }
  std::swap(three[0], three[2]);
  CHECK_THROWS_AS(split(three, 7.0), DataError);
  CHECK(holdout_boundary(2000, 0.1) == 1800);
}

TEST_CASE("synthetic generator is deterministic and seed dependent") {
  SynthConfig cfg;
  cfg.nlat = 9;
  cfg.nlon = 12;
  cfg.steps = 30;
  const auto a = synth_generate(cfg), b = synth_generate(cfg);
  REQUIRE(a.snapshots.size() == 30);
  for (std::size_t k = 0; k < 30; ++k) {
    CHECK(a.snapshots[k].values == b.snapshots[k].values);
    CHECK(a.snapshots[k].timestamp == 6.0 * static_cast<double>(k));
    CHECK(a.snapshots[k].values.all_finite());
  }
  cfg.seed = 8;
  CHECK_FALSE(synth_generate(cfg).snapshots[3].values == a.snapshots[3].values);
  cfg.nlat = 7;
  CHECK_THROWS_AS(synth_generate(cfg), DataError);
  cfg.nlat = 9;
  cfg.steps = 0;
  CHECK_THROWS_AS(synth_generate(cfg), DataError);
}

TEST_CASE("synthetic winds are discretely divergence free") {
  SynthConfig cfg;
  cfg.steps = 25;
  const auto d = synth_generate(cfg);
  for (const auto& s : d.snapshots)
    for (double v : discrete_divergence(s.values, d.desc.lat, d.desc.lon)) CHECK(std::abs(v) <= 1e-10);
}

TEST_CASE("generator agrees with an independent closed-form evaluator") {
  SynthConfig cfg;
  cfg.nlat = 17;
  cfg.nlon = 24;
  cfg.steps = 60;
  const auto d = synth_generate(cfg);
  const SynthParams p = synth_params(cfg);
  const double dphi = (d.desc.lat[1] - d.desc.lat[0]) * kDeg;
  const double dlam = (d.desc.lon[1] - d.desc.lon[0]) * kDeg;
  auto check_at = [&](const Tensor& got, double t) {
    double worst = 0.0;
    for (std::size_t i = 0; i < cfg.nlat; ++i)
      for (std::size_t j = 0; j < cfg.nlon; ++j) {
        const double lat = d.desc.lat[i] * kDeg, lon = d.desc.lon[j] * kDeg;
        const double u = -(psi_oracle(p, lat + dphi, lon, t) - psi_oracle(p, lat - dphi, lon, t)) / (2.0 * dphi);
        const double v = (psi_oracle(p, lat, lon + dlam, t) - psi_oracle(p, lat, lon - dlam, t)) / (2.0 * dlam);
        worst = std::max(worst, std::abs(got.at(0, i, j) - u));
        worst = std::max(worst, std::abs(got.at(1, i, j) - v));
      }
    return worst;
  };
  for (std::size_t k : {0, 7, 59}) CHECK(check_at(d.snapshots[k].values, static_cast<double>(k)) <= 1e-9);
  for (double t : {0.37, 123.25, 4567.5}) CHECK(check_at(synth_snapshot(p, d.desc.lat, d.desc.lon, t), t) <= 1e-9);
  // integer t through the snapshot evaluator reproduces the sequence bit for bit
  CHECK(synth_snapshot(p, d.desc.lat, d.desc.lon, 42.0) == d.snapshots[42].values);
}

TEST_CASE("generator statistics are stationary across long disjoint windows") {
  SynthConfig cfg;
  cfg.nlat = 17;
  cfg.nlon = 24;
  cfg.steps = 4800;  // two windows of ten seasonal periods
  const auto d = synth_generate(cfg);
  const std::size_t half = cfg.steps / 2, P = cfg.nlat * cfg.nlon;
  for (std::size_t c = 0; c < 4; ++c) {
    double m[2] = {0, 0}, s[2] = {0, 0};
    for (int h = 0; h < 2; ++h) {
      double acc = 0.0, acc2 = 0.0;
      for (std::size_t k = h * half; k < (h + 1) * half; ++k)
        for (std::size_t i = 0; i < P; ++i) {
          const double v = d.snapshots[k].values[c * P + i];
          acc += v;
          acc2 += v * v;
        }
      const double n = static_cast<double>(half * P);
      m[h] = acc / n;
      s[h] = std::sqrt(std::max(0.0, acc2 / n - m[h] * m[h]));
    }
    CAPTURE(c);
    // means are compared on the scale of the spread since u and v have mean near 0
    CHECK(std::abs(m[0] - m[1]) <= 0.05 * std::max(std::abs(m[0]), s[0]));
    CHECK(std::abs(s[0] - s[1]) <= 0.05 * s[0]);
  }
}

TEST_CASE("ROMDAT1 round trip is bit exact") {
  std::mt19937_64 rng(12);
  Dataset d;
  d.desc.lat = latitude_grid(5);
  d.desc.lon = longitude_grid(7);
  d.snapshots = random_snaps(6, 4, 5, 7, rng);
  const std::string path = temp_path("roundtrip.romdat");
  write_snapshots(path, d);
  const Dataset r = read_snapshots(path);
  CHECK(r.desc.variables == d.desc.variables);
  CHECK(r.desc.lat == d.desc.lat);
  CHECK(r.desc.lon == d.desc.lon);
  REQUIRE(r.snapshots.size() == 6);
  for (std::size_t k = 0; k < 6; ++k) {
    CHECK(r.snapshots[k].values == d.snapshots[k].values);
    CHECK(r.snapshots[k].timestamp == d.snapshots[k].timestamp);
  }
  std::remove(path.c_str());

  const auto bytes = encode_snapshots(d);
  // 7 magic + 16 header + 4 names (4 + len) + lat/lon + payload
  std::size_t expect = 7 + 16 + 5 * 8 + 7 * 8 + 6 * 4 * 5 * 7 * 8;
  for (const auto& n : d.desc.variables) expect += 4 + n.size();
  CHECK(bytes.size() == expect);
  CHECK(std::string(bytes.begin(), bytes.begin() + 7) == "ROMDAT1");
  CHECK(bytes[7] == 4);  // little-endian C
}

TEST_CASE("ROMDAT1 corruption is rejected with named errors") {
  std::mt19937_64 rng(13);
  Dataset d;
  d.desc.lat = latitude_grid(4);
  d.desc.lon = longitude_grid(4);
  d.snapshots = random_snaps(3, 4, 4, 4, rng);
  const auto good = encode_snapshots(d);

  auto expect_error = [](std::vector<std::uint8_t> b, const std::string& needle) {
    try {
      decode_snapshots(std::move(b));
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK_MESSAGE(std::string(e.what()).find(needle) != std::string::npos, std::string(e.what()));
    }
  };
  auto bad_magic = good;
  bad_magic[3] = 'X';
  expect_error(bad_magic, "bad magic");
  auto truncated = good;
  truncated.resize(good.size() - 5);
  expect_error(truncated, "payload length mismatch");
  auto extra = good;
  extra.push_back(0);
  expect_error(extra, "payload length mismatch");
  auto more_steps = good;
  more_steps[7 + 12] = 4;  // T declared as 4, payload holds 3
  expect_error(more_steps, "payload length mismatch");
  auto fewer_steps = good;
  fewer_steps[7 + 12] = 2;
  expect_error(fewer_steps, "payload length mismatch");
  auto zero = good;
  zero[7 + 4] = 0;
  expect_error(zero, "extent");
  expect_error({}, "bad magic");
  auto header_cut = good;
  header_cut.resize(9);
  expect_error(header_cut, "truncated");
  CHECK_THROWS_AS(read_snapshots(temp_path("does_not_exist")), FormatError);
}

TEST_CASE("manifest round trip") {
  const std::vector<ManifestEntry> e{{"a.romdat", 0.0, 594.0}, {"dir,with,commas/b.romdat", 600.0, 1194.0}};
  const std::string path = temp_path("manifest.csv");
  write_manifest(path, e);
  const auto r = read_manifest(path);
  REQUIRE(r.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(r[i].path == e[i].path);
    CHECK(r[i].t_begin == e[i].t_begin);
    CHECK(r[i].t_end == e[i].t_end);
  }
  {
    std::ofstream os(path);
    os << "file,begin,end\n";
  }
  CHECK_THROWS_AS(read_manifest(path), FormatError);
  std::remove(path.c_str());
}
