#include "c2/nn/tensor.hpp"

#include <cmath>

namespace c2::nn {

bool Tensor::all_finite() const noexcept {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Tensor Tensor::to_f32_precision() const {
  Tensor out = *this;
  for (double& v : out.data_) v = static_cast<double>(static_cast<float>(v));
  return out;
}

Gradients zeros_like(std::span<const Parameter* const> params) {
  Gradients g;
  g.reserve(params.size());
  for (const Parameter* p : params) g.emplace_back(p->value.shape());
  return g;
}

double global_norm(const Gradients& grads) {
  double sq = 0.0;
  for (const auto& t : grads) {
    for (double v : t.values()) sq += v * v;
  }
  return std::sqrt(sq);
}

void accumulate(Gradients& into, const Gradients& from, double scale) {
  if (into.size() != from.size()) throw std::invalid_argument("gradient lists differ in length");
  for (std::size_t i = 0; i < into.size(); ++i) {
    if (into[i].size() != from[i].size()) throw std::invalid_argument("gradient shapes differ");
    for (std::size_t k = 0; k < into[i].size(); ++k) into[i][k] += scale * from[i][k];
  }
}

}  // namespace c2::nn
