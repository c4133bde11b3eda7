#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "tdrom/tensor.hpp"

namespace tdrom {

/// Differentiable primitives. Shape rules:
///   conv2d            x[B,Ci,H,W], w[Co,Ci,kh,kw], (b[Co]) -> [B,Co,Ho,Wo],
///                     Ho = (H + 2*pad - kh)/stride + 1 (floor)
///   conv2d_transpose  x[B,Ci,H,W], w[Ci,Co,kh,kw], (b[Co]) -> [B,Co,Ho,Wo],
///                     Ho = (H - 1)*stride - 2*pad + kh + output_padding
///   linear            x[B,I], w[O,I], (b[O]) -> [B,O]
///   relu, sigmoid, sqrt, scale       elementwise, shape preserved
///   add, multiply     equal rank; each axis equal or 1 on one side (broadcast)
///   global_avg_pool, global_max_pool [B,C,H,W] -> [B,C,1,1]
///   channel_avg_pool, channel_max_pool [B,C,H,W] -> [B,1,H,W]
///   concat            along axis 1; all other extents equal
///   reshape           element count preserved
///   sum               any -> [1]
///   pad_rows, crop_rows  [B,C,H,W] -> [B,C,H +/- (top+bottom),W]
enum class OpKind {
  conv2d,
  conv2d_transpose,
  linear,
  relu,
  sigmoid,
  add,
  multiply,
  global_avg_pool,
  global_max_pool,
  channel_avg_pool,
  channel_max_pool,
  concat,
  reshape,
  scale,
  sum,
  sqrt,
  pad_rows,
  crop_rows,
};

struct OpAttrs {
  std::size_t stride = 1;
  std::size_t pad = 0;
  std::size_t output_padding = 0;
  double factor = 1.0;  // scale
  Shape shape;          // reshape target
  std::size_t top = 0;  // pad_rows / crop_rows
  std::size_t bottom = 0;
};

std::string_view op_name(OpKind kind);

/// Throws ShapeError naming the unknown kind.
OpKind parse_op_kind(std::string_view name);

/// Output extent of a strided convolution along one axis.
std::size_t conv_out_extent(std::size_t in, std::size_t pad, std::size_t kernel,
                            std::size_t stride);

/// Evaluate a primitive on concrete tensors.
Tensor forward(OpKind kind, std::span<const Tensor* const> inputs, const OpAttrs& attrs = {});
Tensor forward(OpKind kind, std::initializer_list<const Tensor*> inputs,
               const OpAttrs& attrs = {});

/// Vector-Jacobian product: gradient w.r.t. each input given the output
/// gradient. `output` is the cached forward value.
std::vector<Tensor> vjp(OpKind kind, std::span<const Tensor* const> inputs, const OpAttrs& attrs,
                        const Tensor& output, const Tensor& grad_output);

}  // namespace tdrom
