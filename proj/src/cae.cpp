#include "tdrom/cae.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "tdrom/binary_io.hpp"
#include "tdrom/error.hpp"
#include "tdrom/loss.hpp"
#include "tdrom/parallel.hpp"

namespace tdrom {
namespace {

constexpr char kMagic[] = "ROMCAE1";

std::size_t conv_params(std::size_t cin, std::size_t cout, std::size_t k) { return cout * cin * k * k + cout; }

std::size_t block_params(std::size_t cin, std::size_t cout, bool cbam, std::size_t r) {
  std::size_t n = conv_params(cin, cout, 3) + conv_params(cout, cout, 3);
  if (cbam) {
    const std::size_t h = cout / r;
    n += h * cout + h + cout * h + cout;
    n += 2 * SpatialAttentionParams::kKernel * SpatialAttentionParams::kKernel + 1;
  }
  if (cin != cout) n += conv_params(cin, cout, 1);
  return n;
}

void push(std::vector<Tensor*>& out, ConvLayer& c) {
  out.push_back(&c.w);
  out.push_back(&c.b);
}

void push(std::vector<Tensor*>& out, ResBlockParams& r) {
  push(out, r.conv1);
  push(out, r.conv2);
  if (r.channel_gate) {
    out.push_back(&r.channel_gate->w0);
    out.push_back(&r.channel_gate->b0);
    out.push_back(&r.channel_gate->w1);
    out.push_back(&r.channel_gate->b1);
  }
  if (r.spatial_gate) {
    out.push_back(&r.spatial_gate->w);
    out.push_back(&r.spatial_gate->b);
  }
  if (r.projection) push(out, *r.projection);
}

void init_conv(ConvLayer& c, std::mt19937_64& rng) {
  // Same fan rule for both layouts: fan_in = Ci*k*k, fan_out = Co*k*k.
  const std::size_t k2 = c.w.dim(2) * c.w.dim(3);
  const std::size_t a = c.w.dim(0) * k2, b = c.w.dim(1) * k2;
  glorot_uniform(c.w, b, a, rng);
  c.b.fill(0.0);
}

void init_block(ResBlockParams& r, std::mt19937_64& rng) {
  init_conv(r.conv1, rng);
  init_conv(r.conv2, rng);
  if (r.channel_gate) init_params(*r.channel_gate, rng);
  if (r.spatial_gate) init_params(*r.spatial_gate, rng);
  if (r.projection) init_conv(*r.projection, rng);
}

}  // namespace

// ---- architecture ----------------------------------------------------------

CaeArch CaeArch::full_scale() {
  CaeArch a;
  a.channels = 4;
  a.nlat = 121;
  a.nlon = 240;
  a.stem_channels = 32;
  a.stage_channels = {32, 64, 128, 256};
  a.latent_channels = 8;
  a.cbam = true;
  a.reduction = 16;
  return a;
}

std::size_t CaeArch::padded_nlat() const {
  const std::size_t f = std::size_t{1} << stages();
  return (nlat + f - 1) / f * f;
}

double CaeArch::compression_ratio() const {
  return static_cast<double>(channels * nlat * nlon) / static_cast<double>(latent_dim());
}

void CaeArch::validate() const {
  if (channels == 0 || nlat == 0 || nlon == 0) throw ConfigError("cae: grid extents must be positive");
  if (stage_channels.empty()) throw ConfigError("cae: at least one stage is required");
  if (stem_channels == 0 || latent_channels == 0) throw ConfigError("cae: channel counts must be positive");
  const std::size_t f = std::size_t{1} << stages();
  if (nlon % f != 0)
    throw ConfigError("cae: nlon " + std::to_string(nlon) + " is not divisible by 2^stages = " + std::to_string(f));
  for (auto c : stage_channels) {
    if (c == 0) throw ConfigError("cae: stage channel counts must be positive");
    if (cbam && (reduction == 0 || c % reduction != 0))
      throw ConfigError("cae: stage channels " + std::to_string(c) + " not divisible by reduction " +
                        std::to_string(reduction));
  }
}

std::size_t CaeArch::parameter_count() const {
  std::size_t n = conv_params(channels, stem_channels, 3);
  std::size_t prev = stem_channels;
  for (auto c : stage_channels) {
    n += conv_params(prev, c, 3) + block_params(c, c, cbam, reduction);
    prev = c;
  }
  n += conv_params(prev, latent_channels, 1);
  n += conv_params(latent_channels, prev, 1);
  for (std::size_t s = stages(); s-- > 0;) {
    const std::size_t next = s == 0 ? stem_channels : stage_channels[s - 1];
    n += block_params(stage_channels[s], stage_channels[s], cbam, reduction) + conv_params(stage_channels[s], next, 3);
  }
  n += conv_params(stem_channels, channels, 3);
  return n;
}

// ---- layers ----------------------------------------------------------------

ConvLayer make_conv(std::size_t cin, std::size_t cout, std::size_t k, std::size_t stride, std::size_t pad) {
  ConvLayer c;
  c.w = Tensor(Shape{cout, cin, k, k});
  c.b = Tensor(Shape{cout});
  c.stride = stride;
  c.pad = pad;
  return c;
}

ConvLayer make_conv_transpose(std::size_t cin, std::size_t cout, std::size_t k, std::size_t stride,
                              std::size_t pad, std::size_t output_padding) {
  ConvLayer c;
  c.w = Tensor(Shape{cin, cout, k, k});
  c.b = Tensor(Shape{cout});
  c.stride = stride;
  c.pad = pad;
  c.transpose = true;
  c.output_padding = output_padding;
  return c;
}

NodeId ConvLayer::apply(Graph& g, NodeId x) const {
  const NodeId wn = g.parameter(w), bn = g.parameter(b);
  return transpose ? conv2d_transpose(g, x, wn, bn, stride, pad, output_padding)
                   : conv2d(g, x, wn, bn, stride, pad);
}

ResBlockParams::ResBlockParams(std::size_t cin, std::size_t cout, bool with_cbam, std::size_t reduction)
    : conv1(make_conv(cin, cout, 3, 1, 1)), conv2(make_conv(cout, cout, 3, 1, 1)) {
  if (with_cbam) {
    channel_gate.emplace(cout, reduction);
    spatial_gate.emplace();
  }
  if (cin != cout) projection = make_conv(cin, cout, 1, 1, 0);
}

NodeId ResBlockParams::apply(Graph& g, NodeId x) const {
  NodeId y = conv2.apply(g, relu(g, conv1.apply(g, x)));
  if (channel_gate) y = channel_attention(g, y, *channel_gate);
  if (spatial_gate) y = spatial_attention(g, y, *spatial_gate);
  const NodeId skip = projection ? projection->apply(g, x) : x;
  if (g.value(skip).shape() != g.value(y).shape())
    throw ShapeError("resblock: skip " + shape_str(g.value(skip).shape()) + " vs residual " +
                     shape_str(g.value(y).shape()));
  return relu(g, add(g, y, skip));
}

// ---- model -----------------------------------------------------------------

CaeModel::CaeModel(CaeArch arch, std::uint64_t seed) : arch_(std::move(arch)) {
  arch_.validate();
  std::mt19937_64 rng(seed);
  stem_ = make_conv(arch_.channels, arch_.stem_channels, 3, 1, 1);
  std::size_t prev = arch_.stem_channels;
  for (auto c : arch_.stage_channels) {
    enc_.push_back({make_conv(prev, c, 3, 2, 1), ResBlockParams(c, c, arch_.cbam, arch_.reduction)});
    prev = c;
  }
  to_latent_ = make_conv(prev, arch_.latent_channels, 1, 1, 0);
  from_latent_ = make_conv(arch_.latent_channels, prev, 1, 1, 0);
  for (std::size_t s = arch_.stages(); s-- > 0;) {
    const std::size_t c = arch_.stage_channels[s];
    const std::size_t next = s == 0 ? arch_.stem_channels : arch_.stage_channels[s - 1];
    dec_.push_back({ResBlockParams(c, c, arch_.cbam, arch_.reduction), make_conv_transpose(c, next, 3, 2, 1, 1)});
  }
  head_ = make_conv(arch_.stem_channels, arch_.channels, 3, 1, 1);

  init_conv(stem_, rng);
  for (auto& st : enc_) {
    init_conv(st.down, rng);
    init_block(st.block, rng);
  }
  init_conv(to_latent_, rng);
  init_conv(from_latent_, rng);
  for (auto& st : dec_) {
    init_block(st.block, rng);
    init_conv(st.up, rng);
  }
  init_conv(head_, rng);
}

std::vector<Tensor*> CaeModel::parameters() {
  std::vector<Tensor*> out;
  push(out, stem_);
  for (auto& st : enc_) {
    push(out, st.down);
    push(out, st.block);
  }
  push(out, to_latent_);
  push(out, from_latent_);
  for (auto& st : dec_) {
    push(out, st.block);
    push(out, st.up);
  }
  push(out, head_);
  return out;
}

std::vector<const Tensor*> CaeModel::parameters() const {
  auto ps = const_cast<CaeModel*>(this)->parameters();
  return {ps.begin(), ps.end()};
}

std::size_t CaeModel::parameter_count() const {
  std::size_t n = 0;
  for (const Tensor* p : parameters()) n += p->size();
  return n;
}

void CaeModel::zero_parameters() {
  for (Tensor* p : parameters()) p->fill(0.0);
}

Shape CaeModel::input_shape(std::size_t batch) const {
  return {batch, arch_.channels, arch_.nlat, arch_.nlon};
}

Shape CaeModel::latent_shape(std::size_t batch) const {
  return {batch, arch_.latent_channels, arch_.latent_h(), arch_.latent_w()};
}

NodeId CaeModel::encode(Graph& g, NodeId x) const {
  const Shape s = g.value(x).shape();
  if (s.size() != 4 || s[1] != arch_.channels || s[2] != arch_.nlat || s[3] != arch_.nlon)
    throw ShapeError("encode: input " + shape_str(s) + " does not match model input " + shape_str(input_shape(s.empty() ? 1 : s[0])));
  OpAttrs pad;
  pad.top = arch_.pad_top();
  pad.bottom = arch_.pad_bottom();
  NodeId h = g.apply(OpKind::pad_rows, {x}, pad);
  h = relu(g, stem_.apply(g, h));
  for (const auto& st : enc_) h = st.block.apply(g, relu(g, st.down.apply(g, h)));
  return to_latent_.apply(g, h);
}

NodeId CaeModel::decode(Graph& g, NodeId z) const {
  const Shape s = g.value(z).shape();
  if (s.size() != 4 || s != latent_shape(s[0]))
    throw ShapeError("decode: latent " + shape_str(s) + " does not match " + shape_str(latent_shape(s.empty() ? 1 : s[0])));
  NodeId h = relu(g, from_latent_.apply(g, z));
  for (const auto& st : dec_) h = relu(g, st.up.apply(g, st.block.apply(g, h)));
  h = head_.apply(g, h);
  OpAttrs crop;
  crop.top = arch_.pad_top();
  crop.bottom = arch_.pad_bottom();
  return crop.top + crop.bottom == 0 ? h : g.apply(OpKind::crop_rows, {h}, crop);
}

Tensor CaeModel::encode(const Tensor& x) const {
  Graph g;
  return g.value(encode(g, g.constant(x)));
}

Tensor CaeModel::decode(const Tensor& z) const {
  Graph g;
  return g.value(decode(g, g.constant(z)));
}

Tensor CaeModel::reconstruct(const Tensor& x) const {
  Graph g;
  return g.value(decode(g, encode(g, g.constant(x))));
}

// ---- training --------------------------------------------------------------

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw ConfigError("train: learning_rate must be >= 0");
  if (batch_size == 0) throw ConfigError("train: batch_size must be positive");
  if (patience == 0) throw ConfigError("train: patience must be positive");
  if (!(decay > 0.0 && decay < 1.0)) throw ConfigError("train: decay must lie in (0,1)");
  if (!(lr_floor >= 0.0)) throw ConfigError("train: lr_floor must be >= 0");
}

namespace {

Tensor as_batch(const Tensor& s) {
  Shape b{1};
  b.insert(b.end(), s.shape().begin(), s.shape().end());
  return s.reshaped(std::move(b));
}

struct SampleResult {
  double loss = 0.0;
  std::vector<Tensor> grads;
};

SampleResult sample_gradient(const CaeModel& model, const std::vector<const Tensor*>& params, const Tensor& x,
                             const LatitudeWeights& w) {
  Graph g;
  for (const Tensor* p : params) g.parameter(*p);
  const NodeId in = g.constant(as_batch(x));
  const NodeId loss = lw_rmse(g, in, model.decode(g, model.encode(g, in)), w);
  SampleResult r;
  r.loss = g.value(loss)[0];
  if (!std::isfinite(r.loss)) return r;
  g.backward(loss);
  r.grads.reserve(params.size());
  for (const Tensor* p : params) r.grads.push_back(g.grad_of(*p));
  return r;
}

}  // namespace

double reconstruction_loss(const CaeModel& model, std::span<const Tensor> samples, const LatitudeWeights& w,
                           std::size_t threads) {
  if (samples.empty()) throw DataError("reconstruction_loss: empty sample set");
  std::vector<double> losses(samples.size());
  parallel_for(samples.size(), threads, [&](std::size_t i) {
    const Tensor x = as_batch(samples[i]);
    losses[i] = lw_rmse(x, model.reconstruct(x), w);
  });
  double acc = 0.0;
  for (double l : losses) acc += l;
  return acc / static_cast<double>(losses.size());
}

double PlateauScheduler::step(double val_loss) {
  if (val_loss < best) {
    best = val_loss;
    stale = 0;
  } else if (++stale >= patience) {
    lr = std::max(lr * decay, std::min(lr, floor));
    stale = 0;
  }
  return lr;
}

TrainResult train(CaeModel& model, std::span<const Tensor> train_set, std::span<const Tensor> val,
                  const LatitudeWeights& weights, const TrainConfig& cfg,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
  cfg.validate();
  if (train_set.empty()) throw DataError("train: empty dataset");
  const auto params_mut = model.parameters();
  const auto params = std::as_const(model).parameters();

  AdamState adam;
  adam.learning_rate = cfg.learning_rate;
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  PlateauScheduler sched{cfg.learning_rate, cfg.patience, cfg.decay, cfg.lr_floor};
  TrainResult result;
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    const std::size_t epoch = cfg.start_epoch + e;
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    const double lr_used = adam.learning_rate;
    for (std::size_t start = 0, batch = 0; start < order.size(); start += cfg.batch_size, ++batch) {
      const std::size_t B = std::min(cfg.batch_size, order.size() - start);
      std::vector<SampleResult> res(B);
      parallel_for(B, cfg.threads, [&](std::size_t i) {
        res[i] = sample_gradient(model, params, train_set[order[start + i]], weights);
      });
      std::vector<Tensor> grads;
      double batch_loss = 0.0;
      for (std::size_t i = 0; i < B; ++i) {
        if (!std::isfinite(res[i].loss))
          throw NumericalError("train: non-finite loss at epoch " + std::to_string(epoch) + " batch " +
                               std::to_string(batch));
        batch_loss += res[i].loss;
        if (grads.empty()) {
          grads = std::move(res[i].grads);
        } else {
          for (std::size_t k = 0; k < grads.size(); ++k) grads[k] += res[i].grads[k];
        }
      }
      for (auto& gk : grads) gk *= 1.0 / static_cast<double>(B);
      adam_step(params_mut, grads, adam);
      loss_sum += batch_loss;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    rec.val_loss = val.empty() ? reconstruction_loss(model, train_set, weights, cfg.threads)
                               : reconstruction_loss(model, val, weights, cfg.threads);
    rec.lr = lr_used;
    if (!std::isfinite(rec.val_loss))
      throw NumericalError("train: non-finite validation loss at epoch " + std::to_string(epoch));
    adam.learning_rate = sched.step(rec.val_loss);
    result.trace.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  result.final_lr = adam.learning_rate;
  return result;
}

// ---- checkpoints -----------------------------------------------------------

void write_cae_checkpoint(const std::string& path, const CaeModel& model, std::size_t epochs_completed,
                          double learning_rate) {
  const auto& a = model.arch();
  std::vector<std::uint32_t> fields{static_cast<std::uint32_t>(a.channels),
                                    static_cast<std::uint32_t>(a.nlat),
                                    static_cast<std::uint32_t>(a.nlon),
                                    static_cast<std::uint32_t>(a.padded_nlat()),
                                    static_cast<std::uint32_t>(a.stem_channels),
                                    static_cast<std::uint32_t>(a.latent_channels),
                                    static_cast<std::uint32_t>(a.reduction),
                                    a.cbam ? 1u : 0u,
                                    static_cast<std::uint32_t>(a.stages())};
  for (auto c : a.stage_channels) fields.push_back(static_cast<std::uint32_t>(c));
  fields.push_back(static_cast<std::uint32_t>(epochs_completed));
  binio::Writer w;
  w.bytes(std::string_view(kMagic, 7));
  w.u32(static_cast<std::uint32_t>(fields.size()));
  for (auto f : fields) w.u32(f);
  w.f64(learning_rate);
  w.u64(model.parameter_count());
  for (const Tensor* p : model.parameters()) w.f64s(p->data());
  w.save(path);
}

CaeCheckpoint read_cae_checkpoint(const std::string& path) {
  auto r = binio::Reader::open(path, "ROMCAE1");
  r.expect_magic(std::string_view(kMagic, 7));
  const std::uint32_t k = r.u32("descriptor field count");
  if (k < 10 || k > 64) throw FormatError("ROMCAE1: implausible descriptor field count " + std::to_string(k));
  std::vector<std::uint32_t> f(k);
  for (auto& v : f) v = r.u32("descriptor field");
  CaeArch a;
  a.channels = f[0];
  a.nlat = f[1];
  a.nlon = f[2];
  a.stem_channels = f[4];
  a.latent_channels = f[5];
  a.reduction = f[6];
  a.cbam = f[7] != 0;
  const std::size_t S = f[8];
  if (k != 10 + S) throw FormatError("ROMCAE1: descriptor declares " + std::to_string(S) + " stages but holds " +
                                     std::to_string(k) + " fields");
  a.stage_channels.assign(f.begin() + 9, f.begin() + 9 + static_cast<std::ptrdiff_t>(S));
  try {
    a.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("ROMCAE1: invalid architecture descriptor: ") + e.what());
  }
  if (a.padded_nlat() != f[3])
    throw FormatError("ROMCAE1: extent mismatch, padded latitude count " + std::to_string(f[3]) +
                      " inconsistent with descriptor");
  const double lr = r.f64("learning rate");
  const std::uint64_t count = r.u64("parameter count");
  if (count != a.parameter_count())
    throw FormatError("ROMCAE1: parameter count " + std::to_string(count) + " does not match architecture (" +
                      std::to_string(a.parameter_count()) + ")");
  if (r.remaining() != count * 8)
    throw FormatError("ROMCAE1: payload length mismatch, " + std::to_string(r.remaining()) + " bytes for " +
                      std::to_string(count) + " parameters");
  CaeCheckpoint ck{CaeModel(a, 0), f[k - 1], lr};
  for (Tensor* p : ck.model.parameters()) {
    auto v = r.f64s(p->size(), "parameters");
    std::copy(v.begin(), v.end(), p->data().begin());
  }
  r.expect_end();
  return ck;
}

void write_trace_csv(const std::string& path, std::span<const EpochRecord> trace, bool append) {
  const bool header = !append || !std::ifstream(path).good();
  std::ofstream os(path, append ? std::ios::app : std::ios::trunc);
  if (!os) throw FormatError("trace: cannot open '" + path + "' for writing");
  os.precision(17);
  if (header) os << "epoch,train_loss,val_loss,lr\n";
  for (const auto& r : trace) os << r.epoch << ',' << r.train_loss << ',' << r.val_loss << ',' << r.lr << '\n';
}

std::vector<EpochRecord> read_trace_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("trace: cannot open '" + path + "'");
  std::string line;
  std::getline(is, line);
  if (line != "epoch,train_loss,val_loss,lr") throw FormatError("trace: unexpected header '" + line + "'");
  std::vector<EpochRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    EpochRecord r;
    char c1 = 0, c2 = 0, c3 = 0;
    if (!(ss >> r.epoch >> c1 >> r.train_loss >> c2 >> r.val_loss >> c3 >> r.lr) || c1 != ',' || c2 != ',' || c3 != ',')
      throw FormatError("trace: malformed row '" + line + "'");
    out.push_back(r);
  }
  return out;
}

}  // namespace tdrom
