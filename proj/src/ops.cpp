#include "tdrom/ops.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tdrom/error.hpp"

namespace tdrom {
namespace {

constexpr std::array<std::string_view, 18> kOpNames = {
    "conv2d",           "conv2d_transpose", "linear",           "relu",
    "sigmoid",          "add",              "multiply",         "global_avg_pool",
    "global_max_pool",  "channel_avg_pool", "channel_max_pool", "concat",
    "reshape",          "scale",            "sum",              "sqrt",
    "pad_rows",         "crop_rows"};

[[noreturn]] void shape_fail(OpKind kind, const Shape& a, const Shape& b, const std::string& why) {
  throw ShapeError(std::string(op_name(kind)) + ": " + why + " (" + shape_str(a) + " vs " +
                   shape_str(b) + ")");
}

void expect_arity(OpKind kind, std::span<const Tensor* const> in, std::size_t lo,
                  std::size_t hi) {
  if (in.size() < lo || in.size() > hi)
    throw ShapeError(std::string(op_name(kind)) + ": expected " + std::to_string(lo) +
                     (hi != lo ? ".." + std::to_string(hi) : std::string()) + " inputs, got " +
                     std::to_string(in.size()));
}

void expect_rank(OpKind kind, const Tensor& t, std::size_t r) {
  if (t.rank() != r)
    throw ShapeError(std::string(op_name(kind)) + ": expected rank " + std::to_string(r) +
                     " input, got " + shape_str(t.shape()));
}

// Indices idx in [0, n_outer) with idx*stride - pad + k inside [0, n_target).
struct IndexRange {
  std::size_t lo = 0;
  std::size_t hi = 0;  // exclusive
};

IndexRange valid_range(std::size_t k, std::size_t pad, std::size_t stride, std::size_t n_outer,
                       std::size_t n_target) {
  const auto p = static_cast<long>(pad);
  const auto kk = static_cast<long>(k);
  const auto s = static_cast<long>(stride);
  long lo = 0;
  if (p - kk > 0) lo = (p - kk + s - 1) / s;
  const long num = static_cast<long>(n_target) - 1 + p - kk;
  if (num < 0) return {0, 0};
  long hi = std::min(static_cast<long>(n_outer) - 1, num / s) + 1;
  if (hi < lo) hi = lo;
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

// ---- convolution kernels -------------------------------------------------

struct ConvGeom {
  std::size_t B, Ci, H, W, Co, KH, KW, Ho, Wo, stride, pad;
};

// Column matrix of one sample: row (ci,kh,kw), column (oh,ow); taps that
// fall in the zero padding stay 0.
void im2col(const ConvGeom& g, const double* xp, double* col) {
  const std::size_t P = g.Ho * g.Wo;
  std::fill(col, col + g.Ci * g.KH * g.KW * P, 0.0);
  for (std::size_t ci = 0; ci < g.Ci; ++ci)
    for (std::size_t kh = 0; kh < g.KH; ++kh) {
      const auto rr = valid_range(kh, g.pad, g.stride, g.Ho, g.H);
      for (std::size_t kw = 0; kw < g.KW; ++kw) {
        const auto cr = valid_range(kw, g.pad, g.stride, g.Wo, g.W);
        double* row = col + ((ci * g.KH + kh) * g.KW + kw) * P;
        const double* xc = xp + ci * g.H * g.W;
        for (std::size_t oh = rr.lo; oh < rr.hi; ++oh) {
          const double* xr = xc + (oh * g.stride + kh - g.pad) * g.W + kw - g.pad;
          double* r = row + oh * g.Wo;
          for (std::size_t ow = cr.lo; ow < cr.hi; ++ow) r[ow] = xr[ow * g.stride];
        }
      }
    }
}

// Adjoint of im2col: accumulates every column entry back onto its pixel.
void col2im(const ConvGeom& g, const double* col, double* xp) {
  const std::size_t P = g.Ho * g.Wo;
  for (std::size_t ci = 0; ci < g.Ci; ++ci)
    for (std::size_t kh = 0; kh < g.KH; ++kh) {
      const auto rr = valid_range(kh, g.pad, g.stride, g.Ho, g.H);
      for (std::size_t kw = 0; kw < g.KW; ++kw) {
        const auto cr = valid_range(kw, g.pad, g.stride, g.Wo, g.W);
        const double* row = col + ((ci * g.KH + kh) * g.KW + kw) * P;
        double* xc = xp + ci * g.H * g.W;
        for (std::size_t oh = rr.lo; oh < rr.hi; ++oh) {
          double* xr = xc + (oh * g.stride + kh - g.pad) * g.W + kw - g.pad;
          const double* r = row + oh * g.Wo;
          for (std::size_t ow = cr.lo; ow < cr.hi; ++ow) xr[ow * g.stride] += r[ow];
        }
      }
    }
}

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

Eigen::Index idx(std::size_t n) { return static_cast<Eigen::Index>(n); }

// y[b,co,oh,ow] += sum w[co,ci,kh,kw] * x[b,ci,oh*s-p+kh,ow*s-p+kw]
void conv_gather(const ConvGeom& g, const double* x, const double* w, double* y) {
  const std::size_t K = g.Ci * g.KH * g.KW, P = g.Ho * g.Wo;
  std::vector<double> col(K * P);
  const ConstMapMat wm(w, idx(g.Co), idx(K));
  for (std::size_t b = 0; b < g.B; ++b) {
    im2col(g, x + b * g.Ci * g.H * g.W, col.data());
    MapMat(y + b * g.Co * P, idx(g.Co), idx(P)).noalias() += wm * ConstMapMat(col.data(), idx(K), idx(P));
  }
}

// Adjoint of conv_gather w.r.t. x: gx[b,ci,...] += w * gy
void conv_scatter(const ConvGeom& g, const double* gy, const double* w, double* gx) {
  const std::size_t K = g.Ci * g.KH * g.KW, P = g.Ho * g.Wo;
  RowMat col(idx(K), idx(P));
  const ConstMapMat wm(w, idx(g.Co), idx(K));
  for (std::size_t b = 0; b < g.B; ++b) {
    col.noalias() = wm.transpose() * ConstMapMat(gy + b * g.Co * P, idx(g.Co), idx(P));
    col2im(g, col.data(), gx + b * g.Ci * g.H * g.W);
  }
}

// gw[co,ci,kh,kw] += sum gy[b,co,oh,ow] * x[b,ci,oh*s-p+kh,ow*s-p+kw]
void conv_weight_grad(const ConvGeom& g, const double* x, const double* gy, double* gw) {
  const std::size_t K = g.Ci * g.KH * g.KW, P = g.Ho * g.Wo;
  std::vector<double> col(K * P);
  MapMat gwm(gw, idx(g.Co), idx(K));
  for (std::size_t b = 0; b < g.B; ++b) {
    im2col(g, x + b * g.Ci * g.H * g.W, col.data());
    gwm.noalias() += ConstMapMat(gy + b * g.Co * P, idx(g.Co), idx(P)) * ConstMapMat(col.data(), idx(K), idx(P)).transpose();
  }
}

void add_bias(const Tensor& bias, Tensor& y) {
  const std::size_t B = y.dim(0), C = y.dim(1), plane = y.size() / (B * C);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < C; ++c) {
      double* p = y.data().data() + (b * C + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) p[i] += bias[c];
    }
}

Tensor bias_grad(const Tensor& gy) {
  const std::size_t B = gy.dim(0), C = gy.dim(1), plane = gy.size() / (B * C);
  Tensor gb(Shape{C});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < C; ++c) {
      const double* p = gy.data().data() + (b * C + c) * plane;
      double acc = 0.0;
      for (std::size_t i = 0; i < plane; ++i) acc += p[i];
      gb[c] += acc;
    }
  return gb;
}

void check_bias(OpKind kind, std::span<const Tensor* const> in, std::size_t channels) {
  if (in.size() == 3) {
    const auto& b = *in[2];
    if (b.rank() != 1 || b.dim(0) != channels)
      shape_fail(kind, b.shape(), Shape{channels}, "bias extent mismatch");
  }
}

ConvGeom conv_geom(OpKind kind, const Tensor& x, const Tensor& w, const OpAttrs& a) {
  expect_rank(kind, x, 4);
  expect_rank(kind, w, 4);
  if (a.stride == 0) throw ShapeError(std::string(op_name(kind)) + ": stride must be >= 1");
  ConvGeom g{};
  g.B = x.dim(0);
  g.H = x.dim(2);
  g.W = x.dim(3);
  g.KH = w.dim(2);
  g.KW = w.dim(3);
  g.stride = a.stride;
  g.pad = a.pad;
  if (kind == OpKind::conv2d) {
    if (w.dim(1) != x.dim(1)) shape_fail(kind, x.shape(), w.shape(), "input channels differ");
    g.Ci = x.dim(1);
    g.Co = w.dim(0);
    if (g.H + 2 * g.pad < g.KH || g.W + 2 * g.pad < g.KW)
      shape_fail(kind, x.shape(), w.shape(), "kernel larger than padded input");
    g.Ho = conv_out_extent(g.H, g.pad, g.KH, g.stride);
    g.Wo = conv_out_extent(g.W, g.pad, g.KW, g.stride);
  } else {
    // transpose: the "input" of the underlying gather is the output here
    if (w.dim(0) != x.dim(1)) shape_fail(kind, x.shape(), w.shape(), "input channels differ");
    if (a.output_padding >= a.stride && a.output_padding > 0)
      shape_fail(kind, x.shape(), w.shape(), "output_padding must be < stride");
    const long ho = static_cast<long>((g.H - 1) * g.stride + g.KH + a.output_padding) -
                    2 * static_cast<long>(g.pad);
    const long wo = static_cast<long>((g.W - 1) * g.stride + g.KW + a.output_padding) -
                    2 * static_cast<long>(g.pad);
    if (ho <= 0 || wo <= 0) shape_fail(kind, x.shape(), w.shape(), "non-positive output extent");
    // Re-express as a gather geometry: gather-input = transpose output.
    g.Ci = w.dim(1);  // gather input channels = transpose output channels
    g.Co = x.dim(1);  // gather output channels = transpose input channels
    g.Ho = g.H;
    g.Wo = g.W;
    g.H = static_cast<std::size_t>(ho);
    g.W = static_cast<std::size_t>(wo);
  }
  return g;
}

// Weight layout for the transpose op is [Ci_t, Co_t, kh, kw] = [Co_g, Ci_g, kh, kw],
// which matches the gather layout [Co_g, Ci_g, kh, kw] directly.

// ---- broadcasting ----------------------------------------------------------

Shape broadcast_shape(OpKind kind, const Shape& a, const Shape& b) {
  if (a.size() != b.size()) shape_fail(kind, a, b, "rank mismatch");
  Shape out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == b[i] || b[i] == 1)
      out[i] = a[i];
    else if (a[i] == 1)
      out[i] = b[i];
    else
      shape_fail(kind, a, b, "axis " + std::to_string(i) + " not broadcastable");
  }
  return out;
}

std::vector<std::size_t> broadcast_strides(const Shape& in, const Shape& out) {
  std::vector<std::size_t> st(out.size(), 0);
  std::size_t s = 1;
  for (std::size_t i = in.size(); i-- > 0;) {
    st[i] = in[i] == 1 && out[i] != 1 ? 0 : s;
    s *= in[i];
  }
  return st;
}

// Calls f(out_index, a_index, b_index) over the broadcast output.
template <typename F>
void for_each_broadcast(const Shape& out, const Shape& sa, const Shape& sb, F&& f) {
  const auto ta = broadcast_strides(sa, out);
  const auto tb = broadcast_strides(sb, out);
  const std::size_t rank = out.size();
  const std::size_t n = shape_numel(out);
  if (sa == out && sb == out) {
    for (std::size_t i = 0; i < n; ++i) f(i, i, i);
    return;
  }
  std::vector<std::size_t> idx(rank, 0);
  std::size_t ia = 0, ib = 0;
  for (std::size_t i = 0; i < n; ++i) {
    f(i, ia, ib);
    for (std::size_t ax = rank; ax-- > 0;) {
      ++idx[ax];
      ia += ta[ax];
      ib += tb[ax];
      if (idx[ax] < out[ax]) break;
      ia -= ta[ax] * out[ax];
      ib -= tb[ax] * out[ax];
      idx[ax] = 0;
    }
  }
}

// ---- pooling helpers -------------------------------------------------------

void expect_nchw(OpKind kind, const Tensor& x) { expect_rank(kind, x, 4); }

}  // namespace

std::string_view op_name(OpKind kind) { return kOpNames.at(static_cast<std::size_t>(kind)); }

OpKind parse_op_kind(std::string_view name) {
  for (std::size_t i = 0; i < kOpNames.size(); ++i)
    if (kOpNames[i] == name) return static_cast<OpKind>(i);
  throw ShapeError("unknown op_kind '" + std::string(name) + "'");
}

std::size_t conv_out_extent(std::size_t in, std::size_t pad, std::size_t kernel,
                            std::size_t stride) {
  if (in + 2 * pad < kernel || stride == 0)
    throw ShapeError("conv extent: kernel " + std::to_string(kernel) + " exceeds padded input " +
                     std::to_string(in + 2 * pad));
  return (in + 2 * pad - kernel) / stride + 1;
}

Tensor forward(OpKind kind, std::initializer_list<const Tensor*> inputs, const OpAttrs& attrs) {
  return forward(kind, std::span<const Tensor* const>(inputs.begin(), inputs.size()), attrs);
}

Tensor forward(OpKind kind, std::span<const Tensor* const> in, const OpAttrs& a) {
  if (static_cast<std::size_t>(kind) >= kOpNames.size())
    throw ShapeError("unknown op_kind " + std::to_string(static_cast<int>(kind)));
  switch (kind) {
    case OpKind::conv2d: {
      expect_arity(kind, in, 2, 3);
      const auto g = conv_geom(kind, *in[0], *in[1], a);
      check_bias(kind, in, g.Co);
      Tensor y(Shape{g.B, g.Co, g.Ho, g.Wo});
      if (in.size() == 3) add_bias(*in[2], y);
      conv_gather(g, in[0]->data().data(), in[1]->data().data(), y.data().data());
      return y;
    }
    case OpKind::conv2d_transpose: {
      expect_arity(kind, in, 2, 3);
      const auto g = conv_geom(kind, *in[0], *in[1], a);
      check_bias(kind, in, g.Ci);
      Tensor y(Shape{g.B, g.Ci, g.H, g.W});
      if (in.size() == 3) add_bias(*in[2], y);
      conv_scatter(g, in[0]->data().data(), in[1]->data().data(), y.data().data());
      return y;
    }
    case OpKind::linear: {
      expect_arity(kind, in, 2, 3);
      const auto& x = *in[0];
      const auto& w = *in[1];
      expect_rank(kind, x, 2);
      expect_rank(kind, w, 2);
      if (w.dim(1) != x.dim(1)) shape_fail(kind, x.shape(), w.shape(), "feature extent mismatch");
      const std::size_t B = x.dim(0), I = x.dim(1), O = w.dim(0);
      check_bias(kind, in, O);
      Tensor y(Shape{B, O});
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t o = 0; o < O; ++o) {
          double acc = in.size() == 3 ? (*in[2])[o] : 0.0;
          for (std::size_t i = 0; i < I; ++i) acc += w[o * I + i] * x[b * I + i];
          y[b * O + o] = acc;
        }
      return y;
    }
    case OpKind::relu: {
      expect_arity(kind, in, 1, 1);
      Tensor y = *in[0];
      for (auto& v : y.data()) v = v > 0.0 ? v : 0.0;
      return y;
    }
    case OpKind::sigmoid: {
      expect_arity(kind, in, 1, 1);
      Tensor y = *in[0];
      for (auto& v : y.data())
        v = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
      return y;
    }
    case OpKind::sqrt: {
      expect_arity(kind, in, 1, 1);
      Tensor y = *in[0];
      for (auto& v : y.data()) {
        if (v < 0.0) throw NumericalError("sqrt: negative input " + std::to_string(v));
        v = std::sqrt(v);
      }
      return y;
    }
    case OpKind::scale: {
      expect_arity(kind, in, 1, 1);
      Tensor y = *in[0];
      y *= a.factor;
      return y;
    }
    case OpKind::add:
    case OpKind::multiply: {
      expect_arity(kind, in, 2, 2);
      const auto& x0 = *in[0];
      const auto& x1 = *in[1];
      const Shape out = broadcast_shape(kind, x0.shape(), x1.shape());
      Tensor y(out);
      const double* p0 = x0.data().data();
      const double* p1 = x1.data().data();
      double* py = y.data().data();
      if (kind == OpKind::add)
        for_each_broadcast(out, x0.shape(), x1.shape(),
                           [&](std::size_t i, std::size_t i0, std::size_t i1) { py[i] = p0[i0] + p1[i1]; });
      else
        for_each_broadcast(out, x0.shape(), x1.shape(),
                           [&](std::size_t i, std::size_t i0, std::size_t i1) { py[i] = p0[i0] * p1[i1]; });
      return y;
    }
    case OpKind::global_avg_pool:
    case OpKind::global_max_pool: {
      expect_arity(kind, in, 1, 1);
      const auto& x = *in[0];
      expect_nchw(kind, x);
      const std::size_t B = x.dim(0), C = x.dim(1), P = x.dim(2) * x.dim(3);
      Tensor y(Shape{B, C, 1, 1});
      for (std::size_t bc = 0; bc < B * C; ++bc) {
        const double* p = x.data().data() + bc * P;
        if (kind == OpKind::global_avg_pool) {
          double acc = 0.0;
          for (std::size_t i = 0; i < P; ++i) acc += p[i];
          y[bc] = acc / static_cast<double>(P);
        } else {
          y[bc] = *std::max_element(p, p + P);
        }
      }
      return y;
    }
    case OpKind::channel_avg_pool:
    case OpKind::channel_max_pool: {
      expect_arity(kind, in, 1, 1);
      const auto& x = *in[0];
      expect_nchw(kind, x);
      const std::size_t B = x.dim(0), C = x.dim(1), P = x.dim(2) * x.dim(3);
      Tensor y(Shape{B, 1, x.dim(2), x.dim(3)});
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t i = 0; i < P; ++i) {
          double acc = kind == OpKind::channel_avg_pool ? 0.0 : x[b * C * P + i];
          for (std::size_t c = 0; c < C; ++c) {
            const double v = x[(b * C + c) * P + i];
            if (kind == OpKind::channel_avg_pool)
              acc += v;
            else if (v > acc)
              acc = v;
          }
          y[b * P + i] = kind == OpKind::channel_avg_pool ? acc / static_cast<double>(C) : acc;
        }
      return y;
    }
    case OpKind::concat: {
      if (in.empty()) throw ShapeError("concat: no inputs");
      const auto& x0 = *in[0];
      if (x0.rank() < 2) throw ShapeError("concat: rank must be >= 2, got " + shape_str(x0.shape()));
      Shape out = x0.shape();
      out[1] = 0;
      for (const auto* t : in) {
        Shape s = t->shape();
        if (s.size() != out.size()) shape_fail(kind, x0.shape(), s, "rank mismatch");
        for (std::size_t i = 0; i < s.size(); ++i)
          if (i != 1 && s[i] != x0.dim(i)) shape_fail(kind, x0.shape(), s, "non-channel extents differ");
        out[1] += s[1];
      }
      Tensor y(out);
      const std::size_t B = out[0];
      const std::size_t inner = shape_numel(out) / (B * out[1]);
      std::size_t off = 0;
      for (const auto* t : in) {
        const std::size_t block = t->dim(1) * inner;
        for (std::size_t b = 0; b < B; ++b)
          std::copy_n(t->data().data() + b * block, block,
                      y.data().data() + b * out[1] * inner + off * inner);
        off += t->dim(1);
      }
      return y;
    }
    case OpKind::reshape: {
      expect_arity(kind, in, 1, 1);
      if (shape_numel(a.shape) != in[0]->size())
        shape_fail(kind, in[0]->shape(), a.shape, "element count differs");
      return in[0]->reshaped(a.shape);
    }
    case OpKind::sum: {
      expect_arity(kind, in, 1, 1);
      double acc = 0.0;
      for (double v : in[0]->data()) acc += v;
      return Tensor::scalar(acc);
    }
    case OpKind::pad_rows:
    case OpKind::crop_rows: {
      expect_arity(kind, in, 1, 1);
      const auto& x = *in[0];
      expect_nchw(kind, x);
      const std::size_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
      if (kind == OpKind::pad_rows) {
        const std::size_t Ho = H + a.top + a.bottom;
        Tensor y(Shape{B, C, Ho, W});
        for (std::size_t bc = 0; bc < B * C; ++bc)
          std::copy_n(x.data().data() + bc * H * W, H * W, y.data().data() + (bc * Ho + a.top) * W);
        return y;
      }
      if (a.top + a.bottom >= H)
        shape_fail(kind, x.shape(), Shape{a.top, a.bottom}, "crop removes every row");
      const std::size_t Ho = H - a.top - a.bottom;
      Tensor y(Shape{B, C, Ho, W});
      for (std::size_t bc = 0; bc < B * C; ++bc)
        std::copy_n(x.data().data() + (bc * H + a.top) * W, Ho * W, y.data().data() + bc * Ho * W);
      return y;
    }
  }
  throw ShapeError("unknown op_kind " + std::to_string(static_cast<int>(kind)));
}

std::vector<Tensor> vjp(OpKind kind, std::span<const Tensor* const> in, const OpAttrs& a,
                        const Tensor& out, const Tensor& gy) {
  if (gy.shape() != out.shape()) shape_fail(kind, out.shape(), gy.shape(), "gradient shape");
  std::vector<Tensor> g;
  switch (kind) {
    case OpKind::conv2d: {
      const auto geo = conv_geom(kind, *in[0], *in[1], a);
      g.emplace_back(in[0]->shape());
      g.emplace_back(in[1]->shape());
      conv_scatter(geo, gy.data().data(), in[1]->data().data(), g[0].data().data());
      conv_weight_grad(geo, in[0]->data().data(), gy.data().data(), g[1].data().data());
      if (in.size() == 3) g.push_back(bias_grad(gy));
      return g;
    }
    case OpKind::conv2d_transpose: {
      const auto geo = conv_geom(kind, *in[0], *in[1], a);
      g.emplace_back(in[0]->shape());
      g.emplace_back(in[1]->shape());
      // transpose = scatter, so its input gradient is a gather of gy
      conv_gather(geo, gy.data().data(), in[1]->data().data(), g[0].data().data());
      conv_weight_grad(geo, gy.data().data(), in[0]->data().data(), g[1].data().data());
      if (in.size() == 3) g.push_back(bias_grad(gy));
      return g;
    }
    case OpKind::linear: {
      const auto& x = *in[0];
      const auto& w = *in[1];
      const std::size_t B = x.dim(0), I = x.dim(1), O = w.dim(0);
      Tensor gx(x.shape()), gw(w.shape());
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t o = 0; o < O; ++o) {
          const double go = gy[b * O + o];
          for (std::size_t i = 0; i < I; ++i) {
            gx[b * I + i] += go * w[o * I + i];
            gw[o * I + i] += go * x[b * I + i];
          }
        }
      g.push_back(std::move(gx));
      g.push_back(std::move(gw));
      if (in.size() == 3) {
        Tensor gb(Shape{O});
        for (std::size_t b = 0; b < B; ++b)
          for (std::size_t o = 0; o < O; ++o) gb[o] += gy[b * O + o];
        g.push_back(std::move(gb));
      }
      return g;
    }
    case OpKind::relu: {
      Tensor gx = gy;
      for (std::size_t i = 0; i < gx.size(); ++i)
        if (!((*in[0])[i] > 0.0)) gx[i] = 0.0;
      g.push_back(std::move(gx));
      return g;
    }
    case OpKind::sigmoid: {
      Tensor gx = gy;
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] *= out[i] * (1.0 - out[i]);
      g.push_back(std::move(gx));
      return g;
    }
    case OpKind::sqrt: {
      // d sqrt(x)/dx is unbounded at 0; the subgradient 0 is used there.
      Tensor gx = gy;
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] = out[i] > 0.0 ? gx[i] * 0.5 / out[i] : 0.0;
      g.push_back(std::move(gx));
      return g;
    }
    case OpKind::scale: {
      Tensor gx = gy;
      gx *= a.factor;
      g.push_back(std::move(gx));
      return g;
    }
    case OpKind::add:
    case OpKind::multiply: {
      const auto& x0 = *in[0];
      const auto& x1 = *in[1];
      Tensor g0(x0.shape()), g1(x1.shape());
      const double* p0 = x0.data().data();
      const double* p1 = x1.data().data();
      const double* pg = gy.data().data();
      double* q0 = g0.data().data();
      double* q1 = g1.data().data();
      if (kind == OpKind::add)
        for_each_broadcast(out.shape(), x0.shape(), x1.shape(),
                           [&](std::size_t i, std::size_t i0, std::size_t i1) {
                             q0[i0] += pg[i];
                             q1[i1] += pg[i];
                           });
      else
        for_each_broadcast(out.shape(), x0.shape(), x1.shape(),
                           [&](std::size_t i, std::size_t i0, std::size_t i1) {
                             q0[i0] += pg[i] * p1[i1];
                             q1[i1] += pg[i] * p0[i0];
                           });
      g.push_back(std::move(g0));
      g.push_back(std::move(g1));
      return g;
    }
    case OpKind::global_avg_pool:
    case OpKind::global_max_pool: {
      const auto& x = *in[0];
      const std::size_t B = x.dim(0), C = x.dim(1), P = x.dim(2) * x.dim(3);
      Tensor gx(x.shape());
      for (std::size_t bc = 0; bc < B * C; ++bc) {
        double* q = gx.data().data() + bc * P;
        if (kind == OpKind::global_avg_pool) {
          const double v = gy[bc] / static_cast<double>(P);
          for (std::size_t i = 0; i < P; ++i) q[i] = v;
        } else {
          const double* p = x.data().data() + bc * P;
          q[std::max_element(p, p + P) - p] = gy[bc];  // first maximum on ties
        }
      }
      g.push_back(std::move(gx));
      return g;
    }
    case OpKind::channel_avg_pool:
    case OpKind::channel_max_pool: {
      const auto& x = *in[0];
      const std::size_t B = x.dim(0), C = x.dim(1), P = x.dim(2) * x.dim(3);
      Tensor gx(x.shape());
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t i = 0; i < P; ++i) {
          const double go = gy[b * P + i];
          if (kind == OpKind::channel_avg_pool) {
            for (std::size_t c = 0; c < C; ++c) gx[(b * C + c) * P + i] = go / static_cast<double>(C);
          } else {
            std::size_t arg = 0;
            double best = x[b * C * P + i];
            for (std::size_t c = 1; c < C; ++c)
              if (x[(b * C + c) * P + i] > best) {
                best = x[(b * C + c) * P + i];
                arg = c;
              }
            gx[(b * C + arg) * P + i] = go;
          }
        }
      g.push_back(std::move(gx));
      return g;
    }
    case OpKind::concat: {
      const std::size_t B = out.dim(0);
      const std::size_t inner = out.size() / (B * out.dim(1));
      std::size_t off = 0;
      for (const auto* t : in) {
        Tensor gt(t->shape());
        const std::size_t block = t->dim(1) * inner;
        for (std::size_t b = 0; b < B; ++b)
          std::copy_n(gy.data().data() + b * out.dim(1) * inner + off * inner, block,
                      gt.data().data() + b * block);
        off += t->dim(1);
        g.push_back(std::move(gt));
      }
      return g;
    }
    case OpKind::reshape:
      g.push_back(gy.reshaped(in[0]->shape()));
      return g;
    case OpKind::sum:
      g.emplace_back(in[0]->shape(), gy[0]);
      return g;
    case OpKind::pad_rows:
    case OpKind::crop_rows: {
      OpAttrs inv = a;
      g.push_back(forward(kind == OpKind::pad_rows ? OpKind::crop_rows : OpKind::pad_rows, {&gy}, inv));
      return g;
    }
  }
  throw ShapeError("unknown op_kind " + std::to_string(static_cast<int>(kind)));
}

}  // namespace tdrom
