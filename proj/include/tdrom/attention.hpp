#pragma once

#include <cstddef>
#include <random>

#include "tdrom/graph.hpp"
#include "tdrom/tensor.hpp"

namespace tdrom {

/// Shared two-layer perceptron of the channel gate: C -> C/r -> C with a ReLU
/// between the layers. Both pooled branches use these same tensors.
struct ChannelAttentionParams {
  ChannelAttentionParams() = default;
  /// Zero-initialized; throws ShapeError unless channels % reduction == 0.
  ChannelAttentionParams(std::size_t channels, std::size_t reduction);

  std::size_t channels() const { return w1.empty() ? 0 : w1.dim(0); }
  std::size_t hidden() const { return w0.empty() ? 0 : w0.dim(0); }

  std::size_t reduction = 1;
  Tensor w0;  // [C/r, C]
  Tensor b0;  // [C/r]
  Tensor w1;  // [C, C/r]
  Tensor b1;  // [C]
};

/// 7x7 convolution from the [avg; max] channel-pooled planes to one gate plane.
struct SpatialAttentionParams {
  static constexpr std::size_t kKernel = 7;
  static constexpr std::size_t kPad = 3;

  SpatialAttentionParams();

  Tensor w;  // [1, 2, 7, 7]
  Tensor b;  // [1]
};

void glorot_uniform(Tensor& w, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng);
void init_params(ChannelAttentionParams& p, std::mt19937_64& rng);
void init_params(SpatialAttentionParams& p, std::mt19937_64& rng);

// Graph builders. Parameters are bound by address.
NodeId channel_attention_map(Graph& g, NodeId f, const ChannelAttentionParams& p);  // [B,C,1,1]
NodeId spatial_attention_map(Graph& g, NodeId f, const SpatialAttentionParams& p);  // [B,1,H,W]
NodeId channel_attention(Graph& g, NodeId f, const ChannelAttentionParams& p);
NodeId spatial_attention(Graph& g, NodeId f, const SpatialAttentionParams& p);
/// Channel gate then spatial gate.
NodeId cbam(Graph& g, NodeId f, const ChannelAttentionParams& cp, const SpatialAttentionParams& sp);

// Value-level conveniences (build and discard a private graph).
Tensor channel_attention_map(const Tensor& f, const ChannelAttentionParams& p);
Tensor spatial_attention_map(const Tensor& f, const SpatialAttentionParams& p);
Tensor channel_attention(const Tensor& f, const ChannelAttentionParams& p);
Tensor spatial_attention(const Tensor& f, const SpatialAttentionParams& p);
Tensor cbam(const Tensor& f, const ChannelAttentionParams& cp, const SpatialAttentionParams& sp);

}  // namespace tdrom
