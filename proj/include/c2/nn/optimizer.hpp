#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "c2/nn/tensor.hpp"

namespace c2::nn {

struct RmsPropConfig {
  double learning_rate = 7e-4;
  double decay = 0.99;
  double epsilon = 1e-5;
  double clip_norm = 40.0;  // global-norm threshold; <= 0 disables clipping
  friend bool operator==(const RmsPropConfig&, const RmsPropConfig&) = default;
};

/// Squared-gradient moving averages, one per parameter.
struct OptimizerState {
  RmsPropConfig config;
  std::vector<Tensor> square_avg;
  std::uint64_t steps = 0;
  friend bool operator==(const OptimizerState&, const OptimizerState&) = default;
};

struct StepDiagnostic {
  bool applied = false;
  double grad_norm = 0.0;     // before clipping
  double applied_norm = 0.0;  // after clipping
  std::string message;        // why the step was rejected
};

class RmsProp {
 public:
  RmsProp() = default;
  RmsProp(RmsPropConfig config, std::span<const Parameter* const> params);

  /// Clips `grads` to the configured global norm and updates `params` in
  /// place. Non-finite gradients leave both parameters and state untouched.
  StepDiagnostic step(std::span<Parameter* const> params, const Gradients& grads);

  const OptimizerState& state() const noexcept { return state_; }
  void load_state(OptimizerState state) { state_ = std::move(state); }
  RmsPropConfig& config() noexcept { return state_.config; }

 private:
  OptimizerState state_;
};

/// Scales `grads` so their global norm is at most `max_norm`; returns the
/// norm before scaling.
double clip_global_norm(Gradients& grads, double max_norm);

}  // namespace c2::nn
