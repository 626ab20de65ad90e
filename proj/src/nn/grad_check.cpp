#include "c2/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "c2/core/rng.hpp"

namespace c2::nn {

GradCheckResult grad_check(std::span<Parameter* const> params, const Gradients& analytic,
                           const std::function<double()>& loss, const GradCheckOptions& options) {
  if (params.size() != analytic.size()) throw std::invalid_argument("gradient list does not match parameters");
  GradCheckResult result;
  Rng rng(options.sample_seed);
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor& value = params[p]->value;
    std::vector<std::size_t> coords(value.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (options.samples_per_tensor > 0 && coords.size() > options.samples_per_tensor) {
      for (std::size_t i = 0; i < options.samples_per_tensor; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.below(coords.size() - i));
        std::swap(coords[i], coords[j]);
      }
      coords.resize(options.samples_per_tensor);
    }
    for (std::size_t k : coords) {
      const double original = value[k];
      value[k] = original + options.epsilon;
      const double plus = loss();
      value[k] = original - options.epsilon;
      const double minus = loss();
      value[k] = original;
      const double numeric = (plus - minus) / (2.0 * options.epsilon);
      const double a = analytic[p][k];
      const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
      ++result.checked;
      if (err > result.max_relative_error || result.checked == 1) {
        result.max_relative_error = err;
        result.worst_parameter = params[p]->name;
        result.worst_index = k;
        result.worst_analytic = a;
        result.worst_numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace c2::nn
