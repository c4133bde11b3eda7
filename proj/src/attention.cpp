#include "tdrom/attention.hpp"

#include <cmath>
#include <string>

#include "tdrom/error.hpp"

namespace tdrom {

ChannelAttentionParams::ChannelAttentionParams(std::size_t channels, std::size_t r) : reduction(r) {
  if (r == 0 || channels == 0 || channels % r != 0)
    throw ShapeError("channel attention: channels " + std::to_string(channels) +
                     " not divisible by reduction ratio " + std::to_string(r));
  const std::size_t h = channels / r;
  w0 = Tensor(Shape{h, channels});
  b0 = Tensor(Shape{h});
  w1 = Tensor(Shape{channels, h});
  b1 = Tensor(Shape{channels});
}

SpatialAttentionParams::SpatialAttentionParams()
    : w(Shape{1, 2, kKernel, kKernel}), b(Shape{1}) {}

void glorot_uniform(Tensor& w, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (auto& v : w.data()) v = dist(rng);
}

void init_params(ChannelAttentionParams& p, std::mt19937_64& rng) {
  glorot_uniform(p.w0, p.channels(), p.hidden(), rng);
  glorot_uniform(p.w1, p.hidden(), p.channels(), rng);
  p.b0.fill(0.0);
  p.b1.fill(0.0);
}

void init_params(SpatialAttentionParams& p, std::mt19937_64& rng) {
  constexpr std::size_t k2 = SpatialAttentionParams::kKernel * SpatialAttentionParams::kKernel;
  glorot_uniform(p.w, 2 * k2, k2, rng);
  p.b.fill(0.0);
}

namespace {

NodeId shared_mlp(Graph& g, NodeId pooled, std::size_t batch, const ChannelAttentionParams& p) {
  const NodeId flat = reshape(g, pooled, Shape{batch, p.channels()});
  const NodeId h = relu(g, linear(g, flat, g.parameter(p.w0), g.parameter(p.b0)));
  return linear(g, h, g.parameter(p.w1), g.parameter(p.b1));
}

}  // namespace

NodeId channel_attention_map(Graph& g, NodeId f, const ChannelAttentionParams& p) {
  const Shape s = g.value(f).shape();
  if (s.size() != 4) throw ShapeError("channel_attention: expected [B,C,H,W], got " + shape_str(s));
  if (s[1] != p.channels())
    throw ShapeError("channel_attention: input has " + std::to_string(s[1]) +
                     " channels, parameters expect " + std::to_string(p.channels()));
  const NodeId avg = shared_mlp(g, g.apply(OpKind::global_avg_pool, {f}), s[0], p);
  const NodeId mx = shared_mlp(g, g.apply(OpKind::global_max_pool, {f}), s[0], p);
  return reshape(g, sigmoid(g, add(g, avg, mx)), Shape{s[0], s[1], 1, 1});
}

NodeId spatial_attention_map(Graph& g, NodeId f, const SpatialAttentionParams& p) {
  const Shape s = g.value(f).shape();
  if (s.size() != 4) throw ShapeError("spatial_attention: expected [B,C,H,W], got " + shape_str(s));
  const NodeId pooled = g.apply(OpKind::concat, {g.apply(OpKind::channel_avg_pool, {f}),
                                                 g.apply(OpKind::channel_max_pool, {f})});
  return sigmoid(g, conv2d(g, pooled, g.parameter(p.w), g.parameter(p.b), 1,
                           SpatialAttentionParams::kPad));
}

NodeId channel_attention(Graph& g, NodeId f, const ChannelAttentionParams& p) {
  return multiply(g, f, channel_attention_map(g, f, p));
}

NodeId spatial_attention(Graph& g, NodeId f, const SpatialAttentionParams& p) {
  return multiply(g, f, spatial_attention_map(g, f, p));
}

NodeId cbam(Graph& g, NodeId f, const ChannelAttentionParams& cp, const SpatialAttentionParams& sp) {
  return spatial_attention(g, channel_attention(g, f, cp), sp);
}

namespace {

template <typename Build>
Tensor eval(const Tensor& f, Build&& build) {
  Graph g;
  const NodeId in = g.constant(f);
  return g.value(build(g, in));
}

}  // namespace

Tensor channel_attention_map(const Tensor& f, const ChannelAttentionParams& p) {
  return eval(f, [&](Graph& g, NodeId x) { return channel_attention_map(g, x, p); });
}
Tensor spatial_attention_map(const Tensor& f, const SpatialAttentionParams& p) {
  return eval(f, [&](Graph& g, NodeId x) { return spatial_attention_map(g, x, p); });
}
Tensor channel_attention(const Tensor& f, const ChannelAttentionParams& p) {
  return eval(f, [&](Graph& g, NodeId x) { return channel_attention(g, x, p); });
}
Tensor spatial_attention(const Tensor& f, const SpatialAttentionParams& p) {
  return eval(f, [&](Graph& g, NodeId x) { return spatial_attention(g, x, p); });
}
Tensor cbam(const Tensor& f, const ChannelAttentionParams& cp, const SpatialAttentionParams& sp) {
  return eval(f, [&](Graph& g, NodeId x) { return cbam(g, x, cp, sp); });
}

}  // namespace tdrom
