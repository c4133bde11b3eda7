#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include <Eigen/SVD>

#include "tdrom/error.hpp"
#include "tdrom/linalg.hpp"
#include "tdrom/pod.hpp"
#include "test_support.hpp"

using namespace tdrom;

namespace {

Eigen::MatrixXd gaussian(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

double orthonormality_error(const Eigen::MatrixXd& u) {
  return (u.transpose() * u - Eigen::MatrixXd::Identity(u.cols(), u.cols())).cwiseAbs().maxCoeff();
}

std::vector<Tensor> as_fields(const Eigen::MatrixXd& x, std::size_t C, std::size_t H, std::size_t W) {
  std::vector<Tensor> out;
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    out.emplace_back(Shape{C, H, W}, std::vector<double>(x.col(j).data(), x.col(j).data() + x.rows()));
  return out;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("tdrom_test_" + name)).string();
}

}  // namespace

TEST_CASE("thin SVD agrees with an independent full SVD") {
  std::mt19937_64 rng(1);
  for (auto [r, c] : {std::pair<int, int>{200, 50}, {50, 200}, {37, 37}, {300, 1}, {1, 9}}) {
    const Eigen::MatrixXd a = gaussian(r, c, rng);
    const ThinSvd s = thin_svd(a);
    const Eigen::BDCSVD<Eigen::MatrixXd> ref(a, Eigen::ComputeThinU);
    REQUIRE(s.S.size() == ref.singularValues().size());
    CHECK((s.S - ref.singularValues()).cwiseAbs().maxCoeff() <= 1e-12 * ref.singularValues()(0));
    CHECK(orthonormality_error(s.U) <= 1e-12);
    // U spans the column space: projecting A onto it is lossless
    CHECK((a - s.U * (s.U.transpose() * a)).norm() <= 1e-12 * a.norm());
    CHECK(s.sweeps < 80);
    // and U^T A has row norms equal to the singular values
    const Eigen::VectorXd rn = (s.U.transpose() * a).rowwise().norm();
    CHECK((rn - s.S).cwiseAbs().maxCoeff() <= 1e-11 * s.S(0));
  }
}

TEST_CASE("thin SVD resolves graded singular values with relative accuracy") {
  std::mt19937_64 rng(2);
  const int n = 12;
  Eigen::VectorXd sv(n);
  for (int i = 0; i < n; ++i) sv(i) = std::pow(10.0, -i);
  const Eigen::MatrixXd q1 = Eigen::HouseholderQR<Eigen::MatrixXd>(gaussian(60, n, rng)).householderQ() *
                             Eigen::MatrixXd::Identity(60, n);
  const Eigen::MatrixXd q2 = Eigen::HouseholderQR<Eigen::MatrixXd>(gaussian(n, n, rng)).householderQ();
  const Eigen::MatrixXd a = q1 * sv.asDiagonal() * q2.transpose();
  const ThinSvd s = thin_svd(a);
  for (int i = 0; i < 6; ++i) CHECK(std::abs(s.S(i) - sv(i)) <= 1e-12 * sv(0));
  CHECK(orthonormality_error(s.U) <= 1e-12);
}

TEST_CASE("thin SVD stays orthonormal on rank-deficient input") {
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd a = gaussian(80, 4, rng) * gaussian(4, 30, rng);
  const ThinSvd s = thin_svd(a);
  CHECK(s.S(4) <= 1e-12 * s.S(0));
  CHECK(orthonormality_error(s.U) <= 1e-12);
  CHECK_THROWS_AS(thin_svd(Eigen::MatrixXd(0, 3)), ShapeError);
  Eigen::MatrixXd bad = a;
  bad(3, 3) = std::nan("");
  CHECK_THROWS_AS(thin_svd(bad), DataError);
}

TEST_CASE("exact-rank snapshots are recovered") {
  std::mt19937_64 rng(4);
  const int D = 2 * 5 * 30, M = 40, r = 5;
  // centred rank r: the mean of the factor product is removed by fit_pod,
  // so build r-dimensional fluctuations around a fixed mean
  Eigen::MatrixXd coeff = gaussian(r, M, rng);
  coeff = coeff.colwise() - coeff.rowwise().mean();
  const Eigen::VectorXd mu = gaussian(D, 1, rng);
  const Eigen::MatrixXd x = (gaussian(D, r, rng) * coeff).colwise() + mu;
  const PodBasis b = fit_pod(x, r, 2, 5, 30);
  CHECK(b.warnings.empty());
  CHECK(orthonormality_error(b.modes) <= 1e-10);
  const Eigen::MatrixXd xc = x.colwise() - b.mean;
  CHECK((xc - b.modes * (b.modes.transpose() * xc)).norm() <= 1e-10);
  const PodBasis over = fit_pod(x, r + 2, 2, 5, 30);
  CHECK_FALSE(over.warnings.empty());
  CHECK(orthonormality_error(over.modes) <= 1e-10);
}

TEST_CASE("two antipodal snapshots give a zero mean and one mode along v") {
  std::mt19937_64 rng(5);
  const Eigen::VectorXd v = gaussian(24, 1, rng);
  Eigen::MatrixXd x(24, 2);
  x.col(0) = v;
  x.col(1) = -v;
  const PodBasis b = fit_pod(x, 1, 1, 4, 6);
  CHECK(b.mean.cwiseAbs().maxCoeff() == 0.0);
  CHECK(std::abs(std::abs(b.modes.col(0).dot(v.normalized())) - 1.0) <= 1e-12);
  CHECK(b.singular_values(0) == doctest::Approx(std::sqrt(2.0) * v.norm()).epsilon(1e-12));
  CHECK_THROWS_AS(fit_pod(x, 0, 1, 4, 6), ConfigError);
  CHECK_THROWS_AS(fit_pod(x, 3, 1, 4, 6), ConfigError);
  CHECK_THROWS_AS(fit_pod(x, 1, 1, 4, 5), ShapeError);
}

TEST_CASE("discarded energy matches a full-SVD oracle") {
  std::mt19937_64 rng(6);
  const Eigen::MatrixXd x = gaussian(200, 50, rng);  // 50 snapshots of length 200
  const Eigen::MatrixXd xc = x.colwise() - x.rowwise().mean();
  const Eigen::BDCSVD<Eigen::MatrixXd> ref(xc);
  const Eigen::VectorXd sref = ref.singularValues();
  const PodBasis full = fit_pod(x, 49, 2, 10, 10);
  CHECK(std::abs(full.singular_values.squaredNorm() - xc.squaredNorm()) <= 1e-8 * xc.squaredNorm());
  for (std::size_t k : {1, 5, 17, 30, 48, 49}) {
    const PodBasis b = fit_pod(x, k, 2, 10, 10);
    CHECK(orthonormality_error(b.modes) <= 1e-10);
    for (Eigen::Index i = 1; i < b.singular_values.size(); ++i)
      CHECK(b.singular_values(i) <= b.singular_values(i - 1));
    const double err = (xc - b.modes * (b.modes.transpose() * xc)).norm();
    const double want = std::sqrt(sref.tail(sref.size() - static_cast<Eigen::Index>(k)).squaredNorm());
    CHECK(std::abs(err - want) <= 1e-8 * std::max(want, 1e-300) + 1e-10);
  }
}

TEST_CASE("projection and reconstruction") {
  std::mt19937_64 rng(7);
  const Eigen::MatrixXd x = gaussian(3 * 4 * 5, 30, rng);
  const PodBasis b = fit_pod(x, 8, 3, 4, 5);
  CHECK(pod_project(b, b.mean).cwiseAbs().maxCoeff() == 0.0);
  const Eigen::VectorXd c1 = pod_project(b, Eigen::VectorXd(b.mean + b.singular_values(0) * b.modes.col(0)));
  CHECK(std::abs(c1(0) - b.singular_values(0)) <= 1e-10 * b.singular_values(0));
  CHECK(c1.tail(7).cwiseAbs().maxCoeff() <= 1e-10 * b.singular_values(0));
  CHECK(pod_reconstruct(b, Eigen::VectorXd::Zero(8)) == b.mean);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::VectorXd v = gaussian(60, 1, rng);
    const Eigen::VectorXd c = pod_project(b, v);
    const Eigen::VectorXd resid = v - pod_reconstruct(b, c);
    CHECK((b.modes.transpose() * resid).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((pod_project(b, pod_reconstruct(b, c)) - c).cwiseAbs().maxCoeff() <= 1e-10);
  }
  // every training snapshot is reproduced by the full-rank basis
  const PodBasis full = fit_pod(x, 29, 3, 4, 5);
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    CHECK((pod_reconstruct(full, pod_project(full, Eigen::VectorXd(x.col(j)))) - x.col(j)).cwiseAbs().maxCoeff() <= 1e-10);
  // tensor overloads
  const auto fields = as_fields(x, 3, 4, 5);
  const Tensor rec = pod_reconstruct_field(full, pod_project(full, fields[3]));
  CHECK(max_abs_diff(rec, fields[3]) <= 1e-10);
  CHECK_THROWS_AS(pod_project(b, Eigen::VectorXd(Eigen::VectorXd::Zero(59))), ShapeError);
  CHECK_THROWS_AS(pod_reconstruct(b, Eigen::VectorXd(Eigen::VectorXd::Zero(7))), ShapeError);
  CHECK(b.compression_ratio() == 60.0 / 8.0);
}

TEST_CASE("sweep is nested, monotone on the fitting data and equals refits") {
  SynthConfig cfg;
  cfg.nlat = 9;
  cfg.nlon = 12;
  cfg.steps = 60;
  const Dataset d = synth_generate(cfg);
  const auto norm = normalize(d.snapshots, d.desc);
  std::vector<Tensor> all;
  for (const auto& s : norm.snapshots) all.push_back(s.values);
  const std::span<const Tensor> train(all.data(), 50), test(all.data() + 50, 10);
  const auto w = latitude_weights(d.desc.lat);
  const std::vector<std::size_t> ks{1, 2, 4, 8, 16, 32, 49};
  const auto rows = pod_sweep(train, test, ks, w);
  REQUIRE(rows.size() == ks.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].k == ks[i]);
    CHECK(std::isfinite(rows[i].test_lw_rmse));
    if (i > 0) {
      CHECK(rows[i].train_frobenius <= rows[i - 1].train_frobenius);
      CHECK(rows[i].train_lw_rmse <= rows[i - 1].train_lw_rmse);
    }
    const auto refit = pod_sweep(train, {}, std::span(ks).subspan(i, 1), w);
    CHECK(refit[0].train_frobenius == doctest::Approx(rows[i].train_frobenius).epsilon(1e-8));
    CHECK(refit[0].train_lw_rmse == doctest::Approx(rows[i].train_lw_rmse).epsilon(1e-8));
    CHECK(std::isnan(refit[0].test_lw_rmse));
  }
  CHECK(rows.back().train_frobenius <= 1e-10);
  CHECK(rows.back().train_lw_rmse <= 1e-10);
  const std::vector<std::size_t> bad{4, 2};
  CHECK_THROWS_AS(pod_sweep(train, test, bad, w), ConfigError);
}

TEST_CASE("ROMPOD1 round trip and corruption") {
  std::mt19937_64 rng(8);
  const PodBasis b = fit_pod(gaussian(2 * 3 * 4, 10, rng), 4, 2, 3, 4);
  const std::string path = temp_path("basis.rompod");
  write_pod(path, b);
  const PodBasis r = read_pod(path);
  CHECK(r.channels == 2);
  CHECK(r.nlat == 3);
  CHECK(r.nlon == 4);
  CHECK(r.mean == b.mean);
  CHECK(r.singular_values == b.singular_values);
  CHECK(r.modes == b.modes);

  std::ifstream is(path, std::ios::binary);
  std::vector<char> bytes((std::istreambuf_iterator<char>(is)), {});
  is.close();
  CHECK(bytes.size() == 7 + 16 + (24 + 4 + 96) * 8);
  auto expect = [&](std::vector<char> bb, const std::string& needle) {
    {
      std::ofstream os(path, std::ios::binary | std::ios::trunc);
      os.write(bb.data(), static_cast<std::streamsize>(bb.size()));
    }
    try {
      read_pod(path);
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK_MESSAGE(std::string(e.what()).find(needle) != std::string::npos, std::string(e.what()));
    }
  };
  auto c = bytes;
  c[6] = '2';
  expect(c, "bad magic");
  c = bytes;
  c[7 + 12] = 5;  // k
  expect(c, "payload length mismatch");
  c = bytes;
  c[7 + 12] = 0;
  expect(c, "extent mismatch");
  c = bytes;
  c.resize(c.size() - 8);
  expect(c, "payload length mismatch");
  c.resize(12);
  expect(c, "truncated");
  std::remove(path.c_str());
}
