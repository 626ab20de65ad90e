#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "c2/nn/tensor.hpp"

namespace c2::nn {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
};

struct GradCheckOptions {
  double epsilon = 1e-5;
  /// Coordinates probed per tensor; 0 probes all of them.
  std::size_t samples_per_tensor = 0;
  std::uint64_t sample_seed = 1;
};

/// Compares `analytic` against central differences of `loss`, which must
/// evaluate the loss at the current parameter values. Each coordinate's
/// error is |a - cd| / max(|a|, |cd|, 1e-8).
GradCheckResult grad_check(std::span<Parameter* const> params, const Gradients& analytic,
                           const std::function<double()>& loss, const GradCheckOptions& options = {});

}  // namespace c2::nn
