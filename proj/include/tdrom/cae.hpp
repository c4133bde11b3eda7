#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tdrom/adam.hpp"
#include "tdrom/attention.hpp"
#include "tdrom/data.hpp"
#include "tdrom/graph.hpp"
#include "tdrom/tensor.hpp"

namespace tdrom {

/// Architecture descriptor of the ResNet/CBAM autoencoder.
///
/// Encoder: 3x3 stem conv (C -> stem) + ReLU; per stage a stride-2 3x3 conv
/// + ReLU followed by one residual block; a 1x1 conv to the latent channels.
/// The decoder mirrors it with stride-2 transposed convolutions and ends in a
/// 3x3 conv back to C. Latitude rows are zero-padded up to a multiple of
/// 2^stages before encoding and cropped after decoding.
struct CaeArch {
  std::size_t channels = 4;
  std::size_t nlat = 33;
  std::size_t nlon = 48;
  std::size_t stem_channels = 16;
  std::vector<std::size_t> stage_channels{32, 64};
  std::size_t latent_channels = 8;
  bool cbam = true;
  std::size_t reduction = 4;

  /// 4 x 121 x 240 input, four stages, latent 8 x 8 x 15 = 960.
  static CaeArch full_scale();

  std::size_t stages() const { return stage_channels.size(); }
  std::size_t padded_nlat() const;
  std::size_t pad_top() const { return (padded_nlat() - nlat) / 2; }
  std::size_t pad_bottom() const { return padded_nlat() - nlat - pad_top(); }
  std::size_t latent_h() const { return padded_nlat() >> stages(); }
  std::size_t latent_w() const { return nlon >> stages(); }
  std::size_t latent_dim() const { return latent_channels * latent_h() * latent_w(); }
  /// (C*H*W) / (c*h*w) on the unpadded grid.
  double compression_ratio() const;
  /// Trainable scalar count, computed without allocating the model.
  std::size_t parameter_count() const;
  void validate() const;

  friend bool operator==(const CaeArch&, const CaeArch&) = default;
};

struct ConvLayer {
  Tensor w;  // conv: [Co,Ci,k,k]; transpose: [Ci,Co,k,k]
  Tensor b;  // [Co]
  std::size_t stride = 1;
  std::size_t pad = 0;
  bool transpose = false;
  std::size_t output_padding = 0;

  NodeId apply(Graph& g, NodeId x) const;
};

ConvLayer make_conv(std::size_t cin, std::size_t cout, std::size_t k, std::size_t stride, std::size_t pad);
ConvLayer make_conv_transpose(std::size_t cin, std::size_t cout, std::size_t k, std::size_t stride,
                              std::size_t pad, std::size_t output_padding);

/// conv3x3 -> ReLU -> conv3x3 -> [CBAM] -> (+ skip) -> ReLU. CBAM sits on
/// the residual branch before the skip addition. A 1x1 projection is
/// added on the skip path when the channel count changes.
struct ResBlockParams {
  ResBlockParams() = default;
  ResBlockParams(std::size_t cin, std::size_t cout, bool with_cbam, std::size_t reduction);

  ConvLayer conv1;
  ConvLayer conv2;
  std::optional<ChannelAttentionParams> channel_gate;
  std::optional<SpatialAttentionParams> spatial_gate;
  std::optional<ConvLayer> projection;

  NodeId apply(Graph& g, NodeId x) const;
};

class CaeModel {
 public:
  /// Glorot-uniform weights from `seed`, zero biases.
  CaeModel(CaeArch arch, std::uint64_t seed);

  const CaeArch& arch() const { return arch_; }

  /// Declaration order: encoder (stem, stages, latent head) then decoder.
  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;
  std::size_t parameter_count() const;
  void zero_parameters();

  /// x: [B,C,H,W] on the unpadded grid -> [B,c,h,w].
  NodeId encode(Graph& g, NodeId x) const;
  /// z: [B,c,h,w] -> [B,C,H,W] cropped to the unpadded grid.
  NodeId decode(Graph& g, NodeId z) const;

  Tensor encode(const Tensor& x) const;
  Tensor decode(const Tensor& z) const;
  Tensor reconstruct(const Tensor& x) const;

  Shape input_shape(std::size_t batch) const;
  Shape latent_shape(std::size_t batch) const;

 private:
  struct EncoderStage {
    ConvLayer down;
    ResBlockParams block;
  };
  struct DecoderStage {
    ResBlockParams block;
    ConvLayer up;
  };

  CaeArch arch_;
  ConvLayer stem_;
  std::vector<EncoderStage> enc_;
  ConvLayer to_latent_;
  ConvLayer from_latent_;
  std::vector<DecoderStage> dec_;
  ConvLayer head_;
};

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 32;
  std::size_t epochs = 100;
  std::size_t patience = 5;
  double decay = 0.5;
  double lr_floor = 1e-6;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  std::size_t start_epoch = 0;  // numbering offset when resuming

  void validate() const;
};

/// Multiplies the rate by `decay` (never below `floor`) once `patience`
/// consecutive epochs fail to improve on the best validation loss.
struct PlateauScheduler {
  double lr = 1e-3;
  std::size_t patience = 5;
  double decay = 0.5;
  double floor = 1e-6;
  double best = std::numeric_limits<double>::infinity();
  std::size_t stale = 0;

  /// Records one epoch's validation loss and returns the rate for the next.
  double step(double val_loss);
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> trace;
  double final_lr = 0.0;  // after any plateau decay in the last epoch
};

/// Mean per-sample loss of `samples` ([C,H,W] each); the per-sample loss is
/// the arithmetic mean of per-variable LW-RMSE.
double reconstruction_loss(const CaeModel& model, std::span<const Tensor> samples,
                           const LatitudeWeights& weights, std::size_t threads = 1);

/// Minibatch Adam on the mean per-sample LW-RMSE. The learning rate is
/// multiplied by `decay` (floored) when validation loss has not improved for
/// `patience` epochs. If `val` is empty the training loss stands in for it.
/// Per-sample gradients are reduced in sample order, so the result does not
/// depend on the thread count.
TrainResult train(CaeModel& model, std::span<const Tensor> train_set, std::span<const Tensor> val,
                  const LatitudeWeights& weights, const TrainConfig& cfg,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

// ---- ROMCAE1 checkpoints -------------------------------------------------

/// Layout (little-endian): "ROMCAE1"; u32 field count K; K u32 fields
/// [C, H, W, H_padded, stem, latent_c, reduction, cbam, S, stage_1..stage_S,
/// epochs_completed]; f64 learning rate; u64 parameter count P; P f64
/// parameters in declaration order.
struct CaeCheckpoint {
  CaeModel model;
  std::size_t epochs_completed = 0;
  double learning_rate = 1e-3;
};

void write_cae_checkpoint(const std::string& path, const CaeModel& model, std::size_t epochs_completed,
                          double learning_rate);
CaeCheckpoint read_cae_checkpoint(const std::string& path);

/// CSV "epoch,train_loss,val_loss,lr".
void write_trace_csv(const std::string& path, std::span<const EpochRecord> trace, bool append = false);
std::vector<EpochRecord> read_trace_csv(const std::string& path);

}  // namespace tdrom
