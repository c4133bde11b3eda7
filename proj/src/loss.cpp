#include "tdrom/loss.hpp"

#include <cmath>
#include <string>

#include "tdrom/error.hpp"

namespace tdrom {
namespace {

Shape as_nchw(const Tensor& t) {
  if (t.rank() == 4) return t.shape();
  if (t.rank() == 3) return Shape{1, t.dim(0), t.dim(1), t.dim(2)};
  throw ShapeError("lw_rmse: expected [B,C,H,W] or [C,H,W], got " + shape_str(t.shape()));
}

void check(const Tensor& x, const Tensor& xhat, const LatitudeWeights& w) {
  if (x.shape() != xhat.shape())
    throw ShapeError("lw_rmse: shape mismatch " + shape_str(x.shape()) + " vs " + shape_str(xhat.shape()));
  const Shape s = as_nchw(x);
  if (w.w.size() != s[2])
    throw ShapeError("lw_rmse: " + std::to_string(w.w.size()) + " latitude weights for " +
                     std::to_string(s[2]) + " rows");
  for (double v : w.w)
    if (v < 0.0) throw DataError("lw_rmse: negative latitude weight");
}

}  // namespace

std::vector<double> lw_rmse_per_variable(const Tensor& x, const Tensor& xhat, const LatitudeWeights& w) {
  check(x, xhat, w);
  const Shape s = as_nchw(x);
  const std::size_t B = s[0], C = s[1], H = s[2], W = s[3];
  std::vector<double> out(C, 0.0);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < C; ++c) {
      const std::size_t base = (b * C + c) * H * W;
      double acc = 0.0;
      for (std::size_t h = 0; h < H; ++h) {
        double row = 0.0;
        for (std::size_t j = 0; j < W; ++j) {
          const double e = x[base + h * W + j] - xhat[base + h * W + j];
          row += e * e;
        }
        acc += w.w[h] * row;
      }
      out[c] += std::sqrt(acc / static_cast<double>(H * W));
    }
  for (auto& v : out) v /= static_cast<double>(B);
  return out;
}

double lw_rmse(const Tensor& x, const Tensor& xhat, const LatitudeWeights& w) {
  const auto per = lw_rmse_per_variable(x, xhat, w);
  double acc = 0.0;
  for (double v : per) acc += v;
  return acc / static_cast<double>(per.size());
}

NodeId lw_rmse(Graph& g, NodeId x, NodeId xhat, const LatitudeWeights& w) {
  check(g.value(x), g.value(xhat), w);
  const Shape s = g.value(x).shape();
  if (s.size() != 4) throw ShapeError("lw_rmse: graph form expects [B,C,H,W], got " + shape_str(s));
  Tensor wt(Shape{1, 1, s[2], 1});
  for (std::size_t h = 0; h < s[2]; ++h) wt[h] = w.w[h];
  const NodeId diff = add(g, x, scale(g, xhat, -1.0));
  const NodeId weighted = multiply(g, multiply(g, diff, diff), g.constant(std::move(wt)));
  const NodeId per = g.apply(OpKind::sqrt, {g.apply(OpKind::global_avg_pool, {weighted})});
  return scale(g, sum(g, per), 1.0 / static_cast<double>(s[0] * s[1]));
}

}  // namespace tdrom
