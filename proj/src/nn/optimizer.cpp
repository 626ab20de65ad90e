#include "c2/nn/optimizer.hpp"

#include <cmath>

namespace c2::nn {

RmsProp::RmsProp(RmsPropConfig config, std::span<const Parameter* const> params) {
  state_.config = config;
  state_.square_avg = zeros_like(params);
}

double clip_global_norm(Gradients& grads, double max_norm) {
  const double norm = global_norm(grads);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto& g : grads) {
      for (double& v : g.values()) v *= scale;
    }
  }
  return norm;
}

StepDiagnostic RmsProp::step(std::span<Parameter* const> params, const Gradients& grads) {
  StepDiagnostic diag;
  if (params.size() != grads.size() || params.size() != state_.square_avg.size()) {
    diag.message = "gradient list does not match parameter list";
    return diag;
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->value.shape() != grads[i].shape()) {
      diag.message = "gradient shape mismatch for " + params[i]->name;
      return diag;
    }
    if (!grads[i].all_finite()) {
      diag.message = "non-finite gradient in " + params[i]->name;
      return diag;
    }
  }

  Gradients clipped = grads;
  diag.grad_norm = clip_global_norm(clipped, state_.config.clip_norm);
  if (!std::isfinite(diag.grad_norm)) {
    diag.message = "gradient norm overflow";
    return diag;
  }
  diag.applied_norm = global_norm(clipped);

  const double decay = state_.config.decay;
  const double lr = state_.config.learning_rate;
  const double eps = state_.config.epsilon;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& value = params[i]->value.values();
    auto& sq = state_.square_avg[i].values();
    const auto& g = clipped[i].values();
    for (std::size_t k = 0; k < g.size(); ++k) {
      sq[k] = decay * sq[k] + (1.0 - decay) * g[k] * g[k];
      value[k] -= lr * g[k] / std::sqrt(sq[k] + eps);
    }
  }
  ++state_.steps;
  diag.applied = true;
  return diag;
}

}  // namespace c2::nn
