#include "c2/rl/returns.hpp"

#include <cstdint>
#include <stdexcept>

namespace c2::rl {

Returns n_step_returns(std::span<const double> rewards, std::span<const double> values,
                       std::span<const std::uint8_t> dones, double gamma, double bootstrap) {
  if (rewards.size() != values.size() || rewards.size() != dones.size()) {
    throw std::invalid_argument("rewards, values and dones must have equal length");
  }
  Returns out;
  out.returns.resize(rewards.size());
  out.advantages.resize(rewards.size());
  double next = bootstrap;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    if (dones[i]) next = 0.0;
    next = rewards[i] + gamma * next;
    out.returns[i] = next;
    out.advantages[i] = next - values[i];
  }
  return out;
}

}  // namespace c2::rl
