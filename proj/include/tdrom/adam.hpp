#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tdrom/tensor.hpp"

namespace tdrom {

struct AdamState {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
};

/// One bias-corrected Adam update in place. Moments are created as zeros on
/// the first call; afterwards every params/grads/moments triple must agree in
/// shape (ShapeError otherwise).
void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads, AdamState& state);

}  // namespace tdrom
