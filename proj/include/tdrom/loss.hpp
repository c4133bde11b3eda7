#pragma once

#include <vector>

#include "tdrom/data.hpp"
#include "tdrom/graph.hpp"
#include "tdrom/tensor.hpp"

namespace tdrom {

/// Latitude-weighted RMSE of [B,C,H,W] (or [C,H,W]) fields. For each sample
/// and variable: sqrt( sum_{h,w} w_h (x - xhat)^2 / (H*W) ); the result is the
/// arithmetic mean of these per-variable values over samples and variables.
double lw_rmse(const Tensor& x, const Tensor& xhat, const LatitudeWeights& weights);

/// Per-variable LW-RMSE averaged over the batch; length C.
std::vector<double> lw_rmse_per_variable(const Tensor& x, const Tensor& xhat,
                                         const LatitudeWeights& weights);

/// Differentiable version over graph nodes holding [B,C,H,W] tensors.
NodeId lw_rmse(Graph& g, NodeId x, NodeId xhat, const LatitudeWeights& weights);

}  // namespace tdrom
