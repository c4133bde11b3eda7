#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "tdrom/cae.hpp"
#include "tdrom/pod.hpp"
#include "tdrom/rom.hpp"
#include "tdrom/tensor.hpp"

namespace tdrom {

/// Maps [C,H,W] fields to flat latent vectors and back.
class Codec {
 public:
  virtual ~Codec() = default;
  virtual std::size_t latent_dim() const = 0;
  virtual Shape field_shape() const = 0;
  virtual Eigen::VectorXd encode(const Tensor& field) const = 0;
  virtual Tensor decode(const Eigen::VectorXd& z) const = 0;

  /// Encodes every field; safe to run in parallel because encode is const.
  std::vector<Eigen::VectorXd> encode_all(std::span<const Tensor> fields, std::size_t threads = 1) const;
  std::vector<Tensor> decode_all(std::span<const Eigen::VectorXd> zs, std::size_t threads = 1) const;
  Tensor reconstruct(const Tensor& field) const { return decode(encode(field)); }
};

/// Flattens the [c,h,w] latent tensor channel-major.
class CaeCodec final : public Codec {
 public:
  explicit CaeCodec(const CaeModel& model) : model_(model) {}
  std::size_t latent_dim() const override { return model_.arch().latent_dim(); }
  Shape field_shape() const override;
  Eigen::VectorXd encode(const Tensor& field) const override;
  Tensor decode(const Eigen::VectorXd& z) const override;

 private:
  const CaeModel& model_;
};

class PodCodec final : public Codec {
 public:
  explicit PodCodec(const PodBasis& basis) : basis_(basis) {}
  std::size_t latent_dim() const override { return basis_.k(); }
  Shape field_shape() const override { return Shape{basis_.channels, basis_.nlat, basis_.nlon}; }
  Eigen::VectorXd encode(const Tensor& field) const override { return pod_project(basis_, field); }
  Tensor decode(const Eigen::VectorXd& z) const override { return pod_reconstruct_field(basis_, z); }

 private:
  const PodBasis& basis_;
};

/// The field itself is the latent state; lossless.
class IdentityCodec final : public Codec {
 public:
  explicit IdentityCodec(Shape shape) : shape_(std::move(shape)) {}
  std::size_t latent_dim() const override;
  Shape field_shape() const override { return shape_; }
  Eigen::VectorXd encode(const Tensor& field) const override;
  Tensor decode(const Eigen::VectorXd& z) const override;

 private:
  Shape shape_;
};

LatentSequence encode_sequence(const Codec& codec, std::span<const Tensor> fields, double dt_hours = 6.0,
                               std::size_t threads = 1);

/// Encodes the d window fields (oldest first), rolls the operator forward
/// `steps` times and decodes each predicted state.
std::vector<Tensor> forecast(const Codec& codec, const DelayRom& rom, std::span<const Tensor> window,
                             std::size_t steps, std::size_t threads = 1);

}  // namespace tdrom
