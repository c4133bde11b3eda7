#include "tdrom/adam.hpp"

#include <cmath>
#include <string>

#include "tdrom/error.hpp"

namespace tdrom {

void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads, AdamState& s) {
  if (params.size() != grads.size())
    throw ShapeError("adam_step: " + std::to_string(params.size()) + " parameters but " +
                     std::to_string(grads.size()) + " gradients");
  if (s.first_moment.empty() && s.second_moment.empty()) {
    for (const Tensor* p : params) {
      s.first_moment.emplace_back(p->shape(), 0.0);
      s.second_moment.emplace_back(p->shape(), 0.0);
    }
  }
  if (s.first_moment.size() != params.size() || s.second_moment.size() != params.size())
    throw ShapeError("adam_step: optimizer state tracks " + std::to_string(s.first_moment.size()) +
                     " parameters, got " + std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& shp = params[i]->shape();
    if (grads[i].shape() != shp || s.first_moment[i].shape() != shp ||
        s.second_moment[i].shape() != shp)
      throw ShapeError("adam_step: parameter " + std::to_string(i) + " shape " + shape_str(shp) +
                       " vs gradient " + shape_str(grads[i].shape()));
  }

  ++s.step;
  const double t = static_cast<double>(s.step);
  const double c1 = 1.0 - std::pow(s.beta1, t);
  const double c2 = 1.0 - std::pow(s.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i]->data();
    auto g = grads[i].data();
    auto m = s.first_moment[i].data();
    auto v = s.second_moment[i].data();
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = s.beta1 * m[k] + (1.0 - s.beta1) * g[k];
      v[k] = s.beta2 * v[k] + (1.0 - s.beta2) * g[k] * g[k];
      const double mhat = m[k] / c1;
      const double vhat = v[k] / c2;
      p[k] -= s.learning_rate * mhat / (std::sqrt(vhat) + s.epsilon);
    }
  }
}

}  // namespace tdrom
