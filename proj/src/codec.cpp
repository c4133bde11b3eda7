#include "tdrom/codec.hpp"

#include "tdrom/error.hpp"
#include "tdrom/parallel.hpp"

namespace tdrom {
namespace {

void check_field(const Codec& c, const Tensor& field, const char* who) {
  if (field.shape() != c.field_shape())
    throw ShapeError(std::string(who) + ": field shape " + shape_str(field.shape()) + ", codec expects " +
                     shape_str(c.field_shape()));
}

void check_latent(const Codec& c, const Eigen::VectorXd& z, const char* who) {
  if (static_cast<std::size_t>(z.size()) != c.latent_dim())
    throw ShapeError(std::string(who) + ": latent length " + std::to_string(z.size()) + ", codec expects " +
                     std::to_string(c.latent_dim()));
}

}  // namespace

std::vector<Eigen::VectorXd> Codec::encode_all(std::span<const Tensor> fields, std::size_t threads) const {
  std::vector<Eigen::VectorXd> out(fields.size());
  parallel_for(fields.size(), threads, [&](std::size_t i) { out[i] = encode(fields[i]); });
  return out;
}

std::vector<Tensor> Codec::decode_all(std::span<const Eigen::VectorXd> zs, std::size_t threads) const {
  std::vector<Tensor> out(zs.size());
  parallel_for(zs.size(), threads, [&](std::size_t i) { out[i] = decode(zs[i]); });
  return out;
}

Shape CaeCodec::field_shape() const {
  const auto& a = model_.arch();
  return Shape{a.channels, a.nlat, a.nlon};
}

Eigen::VectorXd CaeCodec::encode(const Tensor& field) const {
  check_field(*this, field, "cae encode");
  const Tensor z = model_.encode(field.reshaped(model_.input_shape(1)));
  return Eigen::Map<const Eigen::VectorXd>(z.data().data(), static_cast<Eigen::Index>(z.size()));
}

Tensor CaeCodec::decode(const Eigen::VectorXd& z) const {
  check_latent(*this, z, "cae decode");
  const Tensor zt(model_.latent_shape(1), std::vector<double>(z.data(), z.data() + z.size()));
  return model_.decode(zt).reshaped(field_shape());
}

std::size_t IdentityCodec::latent_dim() const {
  std::size_t n = 1;
  for (auto s : shape_) n *= s;
  return n;
}

Eigen::VectorXd IdentityCodec::encode(const Tensor& field) const {
  check_field(*this, field, "identity encode");
  return Eigen::Map<const Eigen::VectorXd>(field.data().data(), static_cast<Eigen::Index>(field.size()));
}

Tensor IdentityCodec::decode(const Eigen::VectorXd& z) const {
  check_latent(*this, z, "identity decode");
  return Tensor(shape_, std::vector<double>(z.data(), z.data() + z.size()));
}

LatentSequence encode_sequence(const Codec& codec, std::span<const Tensor> fields, double dt_hours,
                               std::size_t threads) {
  LatentSequence seq{codec.latent_dim(), codec.encode_all(fields, threads), dt_hours};
  seq.validate();
  return seq;
}

std::vector<Tensor> forecast(const Codec& codec, const DelayRom& rom, std::span<const Tensor> window,
                             std::size_t steps, std::size_t threads) {
  if (rom.n != codec.latent_dim())
    throw ShapeError("forecast: operator dimension " + std::to_string(rom.n) + " but codec latent dimension " +
                     std::to_string(codec.latent_dim()));
  if (window.size() != rom.d)
    throw ShapeError("forecast: " + std::to_string(window.size()) + " window fields for delay depth " +
                     std::to_string(rom.d));
  const auto zs = codec.encode_all(window, threads);
  const auto pred = rollout(rom, zs, steps);
  return codec.decode_all(pred, threads);
}

}  // namespace tdrom
