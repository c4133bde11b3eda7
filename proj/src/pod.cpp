#include "tdrom/pod.hpp"

#include <cmath>
#include <limits>

#include "tdrom/binary_io.hpp"
#include "tdrom/error.hpp"
#include "tdrom/linalg.hpp"
#include "tdrom/loss.hpp"
#include "tdrom/parallel.hpp"

namespace tdrom {
namespace {

constexpr char kMagic[] = "ROMPOD1";

Eigen::Index idx(std::size_t n) { return static_cast<Eigen::Index>(n); }

void check_length(const PodBasis& b, Eigen::Index n, const char* what) {
  if (static_cast<std::size_t>(n) != b.dim())
    throw ShapeError(std::string(what) + ": field length " + std::to_string(n) + " but basis dimension " +
                     std::to_string(b.dim()));
}

Tensor column_field(const PodBasis& b, const Eigen::VectorXd& v) {
  return Tensor(Shape{b.channels, b.nlat, b.nlon}, std::vector<double>(v.data(), v.data() + v.size()));
}

}  // namespace

Eigen::MatrixXd snapshot_matrix(std::span<const Tensor> snapshots) {
  if (snapshots.empty()) throw DataError("pod: no snapshots");
  const std::size_t D = snapshots[0].size();
  Eigen::MatrixXd x(idx(D), idx(snapshots.size()));
  for (std::size_t j = 0; j < snapshots.size(); ++j) {
    if (snapshots[j].shape() != snapshots[0].shape())
      throw ShapeError("pod: snapshot " + std::to_string(j) + " has shape " + shape_str(snapshots[j].shape()) +
                       ", expected " + shape_str(snapshots[0].shape()));
    x.col(idx(j)) = Eigen::Map<const Eigen::VectorXd>(snapshots[j].data().data(), idx(D));
  }
  return x;
}

PodBasis fit_pod(const Eigen::MatrixXd& snapshots, std::size_t k, std::size_t channels, std::size_t nlat,
                 std::size_t nlon) {
  const std::size_t D = static_cast<std::size_t>(snapshots.rows()), M = static_cast<std::size_t>(snapshots.cols());
  if (D != channels * nlat * nlon)
    throw ShapeError("fit_pod: rows " + std::to_string(D) + " do not match extents");
  if (k < 1 || k > std::min(M, D))
    throw ConfigError("fit_pod: k = " + std::to_string(k) + " outside [1, min(M, D) = " +
                      std::to_string(std::min(M, D)) + "]");
  if (!snapshots.allFinite()) throw DataError("fit_pod: non-finite snapshot values");
  PodBasis b;
  b.channels = channels;
  b.nlat = nlat;
  b.nlon = nlon;
  b.mean = snapshots.rowwise().mean();
  const Eigen::MatrixXd centred = snapshots.colwise() - b.mean;
  ThinSvd svd = thin_svd(centred);
  b.modes = svd.U.leftCols(idx(k));
  b.singular_values = svd.S.head(idx(k));
  if (b.singular_values(idx(k) - 1) < 1e-12 * b.singular_values(0))
    b.warnings.push_back("rank-deficient: sigma_" + std::to_string(k) + " = " +
                         std::to_string(b.singular_values(idx(k) - 1)) + " < 1e-12 sigma_1");
  return b;
}

PodBasis fit_pod(std::span<const Tensor> snapshots, std::size_t k) {
  const Eigen::MatrixXd x = snapshot_matrix(snapshots);
  const Shape& s = snapshots[0].shape();
  if (s.size() != 3) throw ShapeError("fit_pod: expected [C,H,W] snapshots, got " + shape_str(s));
  return fit_pod(x, k, s[0], s[1], s[2]);
}

PodBasis truncate(const PodBasis& basis, std::size_t k) {
  if (k < 1 || k > basis.k())
    throw ConfigError("pod: cannot truncate " + std::to_string(basis.k()) + " modes to " + std::to_string(k));
  PodBasis b = basis;
  b.modes = basis.modes.leftCols(idx(k));
  b.singular_values = basis.singular_values.head(idx(k));
  return b;
}

Eigen::VectorXd pod_project(const PodBasis& basis, const Eigen::VectorXd& x) {
  check_length(basis, x.size(), "pod_project");
  return basis.modes.transpose() * (x - basis.mean);
}

Eigen::VectorXd pod_reconstruct(const PodBasis& basis, const Eigen::VectorXd& coeffs) {
  if (static_cast<std::size_t>(coeffs.size()) != basis.k())
    throw ShapeError("pod_reconstruct: " + std::to_string(coeffs.size()) + " coefficients for " +
                     std::to_string(basis.k()) + " modes");
  return basis.mean + basis.modes * coeffs;
}

Eigen::VectorXd pod_project(const PodBasis& basis, const Tensor& field) {
  return pod_project(basis, Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(field.data().data(), idx(field.size()))));
}

Tensor pod_reconstruct_field(const PodBasis& basis, const Eigen::VectorXd& coeffs) {
  return column_field(basis, pod_reconstruct(basis, coeffs));
}

std::vector<PodSweepRow> pod_sweep(std::span<const Tensor> train, std::span<const Tensor> test,
                                   std::span<const std::size_t> k_list, const LatitudeWeights& weights,
                                   std::size_t threads) {
  if (k_list.empty()) throw ConfigError("pod_sweep: empty k list");
  for (std::size_t i = 1; i < k_list.size(); ++i)
    if (k_list[i] <= k_list[i - 1]) throw ConfigError("pod_sweep: k list must be strictly ascending");
  const PodBasis full = fit_pod(train, k_list.back());

  auto evaluate = [&](std::span<const Tensor> set, const PodBasis& b, double* frob) {
    const Eigen::MatrixXd x = snapshot_matrix(set);
    const Eigen::MatrixXd xc = x.colwise() - b.mean;
    const Eigen::MatrixXd resid = xc - b.modes * (b.modes.transpose() * xc);
    if (frob) *frob = resid.norm();
    std::vector<double> per(set.size());
    parallel_for(set.size(), threads, [&](std::size_t j) {
      const Eigen::VectorXd rec = x.col(idx(j)) - resid.col(idx(j));
      per[j] = lw_rmse(set[j], column_field(b, rec), weights);
    });
    double acc = 0.0;
    for (double v : per) acc += v;
    return acc / static_cast<double>(per.size());
  };

  std::vector<PodSweepRow> rows;
  for (std::size_t k : k_list) {
    const PodBasis b = truncate(full, k);
    PodSweepRow r;
    r.k = k;
    r.train_lw_rmse = evaluate(train, b, &r.train_frobenius);
    r.test_lw_rmse = test.empty() ? std::numeric_limits<double>::quiet_NaN() : evaluate(test, b, nullptr);
    rows.push_back(r);
  }
  return rows;
}

void write_pod(const std::string& path, const PodBasis& b) {
  binio::Writer w;
  w.bytes(std::string_view(kMagic, 7));
  w.u32(static_cast<std::uint32_t>(b.channels));
  w.u32(static_cast<std::uint32_t>(b.nlat));
  w.u32(static_cast<std::uint32_t>(b.nlon));
  w.u32(static_cast<std::uint32_t>(b.k()));
  w.f64s(std::span<const double>(b.mean.data(), static_cast<std::size_t>(b.mean.size())));
  w.f64s(std::span<const double>(b.singular_values.data(), b.k()));
  w.f64s(std::span<const double>(b.modes.data(), static_cast<std::size_t>(b.modes.size())));
  w.save(path);
}

PodBasis read_pod(const std::string& path) {
  auto r = binio::Reader::open(path, "ROMPOD1");
  r.expect_magic(std::string_view(kMagic, 7));
  PodBasis b;
  b.channels = r.u32("C");
  b.nlat = r.u32("H");
  b.nlon = r.u32("W");
  const std::size_t k = r.u32("k");
  const std::size_t D = b.dim();
  if (D == 0 || k == 0 || k > D) throw FormatError("ROMPOD1: extent mismatch, k = " + std::to_string(k) +
                                                   " with field dimension " + std::to_string(D));
  if (r.remaining() != (D + k + k * D) * 8)
    throw FormatError("ROMPOD1: payload length mismatch, " + std::to_string(r.remaining()) +
                      " bytes where the header implies " + std::to_string((D + k + k * D) * 8));
  const auto mean = r.f64s(D, "mean");
  const auto sv = r.f64s(k, "singular values");
  const auto modes = r.f64s(k * D, "modes");
  r.expect_end();
  b.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), idx(D));
  b.singular_values = Eigen::Map<const Eigen::VectorXd>(sv.data(), idx(k));
  b.modes = Eigen::Map<const Eigen::MatrixXd>(modes.data(), idx(D), idx(k));
  return b;
}

}  // namespace tdrom
