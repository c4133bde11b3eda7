#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tdrom/data.hpp"
#include "tdrom/tensor.hpp"

namespace tdrom {

/// Truncated POD basis of [C,H,W] fields flattened channel-major.
struct PodBasis {
  std::size_t channels = 0, nlat = 0, nlon = 0;
  Eigen::VectorXd mean;             // D
  Eigen::MatrixXd modes;            // D x k, orthonormal columns
  Eigen::VectorXd singular_values;  // k, non-increasing
  std::vector<std::string> warnings;

  std::size_t dim() const { return channels * nlat * nlon; }
  std::size_t k() const { return static_cast<std::size_t>(modes.cols()); }
  double compression_ratio() const { return static_cast<double>(dim()) / static_cast<double>(k()); }
};

/// Columns of the returned D x M matrix are the flattened snapshots.
Eigen::MatrixXd snapshot_matrix(std::span<const Tensor> snapshots);

/// Top-k left singular vectors of the mean-centred snapshot matrix.
/// Throws ConfigError unless 1 <= k <= min(M, D). A warning is recorded when
/// sigma_k < 1e-12 sigma_1.
PodBasis fit_pod(const Eigen::MatrixXd& snapshots, std::size_t k, std::size_t channels, std::size_t nlat,
                 std::size_t nlon);
PodBasis fit_pod(std::span<const Tensor> snapshots, std::size_t k);

/// The leading k modes of a wider basis (nested subspaces).
PodBasis truncate(const PodBasis& basis, std::size_t k);

Eigen::VectorXd pod_project(const PodBasis& basis, const Eigen::VectorXd& x);
Eigen::VectorXd pod_reconstruct(const PodBasis& basis, const Eigen::VectorXd& coeffs);
Eigen::VectorXd pod_project(const PodBasis& basis, const Tensor& field);
/// Returns a [C,H,W] field.
Tensor pod_reconstruct_field(const PodBasis& basis, const Eigen::VectorXd& coeffs);

struct PodSweepRow {
  std::size_t k = 0;
  double train_frobenius = 0.0;  // |X_c - P_k X_c|_F over the fitting snapshots
  double train_lw_rmse = 0.0;
  double test_lw_rmse = 0.0;     // NaN when no held-out snapshots are given
};

/// One fit at max(k_list), truncated for every k. Training errors are
/// non-increasing in k in Frobenius norm; the LW-RMSE columns are reported.
std::vector<PodSweepRow> pod_sweep(std::span<const Tensor> train, std::span<const Tensor> test,
                                   std::span<const std::size_t> k_list, const LatitudeWeights& weights,
                                   std::size_t threads = 1);

/// Layout: "ROMPOD1"; u32 C,H,W,k; D mean f64; k singular values f64;
/// k*D mode entries f64, one mode after another. Little-endian.
void write_pod(const std::string& path, const PodBasis& basis);
PodBasis read_pod(const std::string& path);

}  // namespace tdrom
