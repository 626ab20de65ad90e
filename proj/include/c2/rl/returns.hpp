#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace c2::rl {

struct Returns {
  std::vector<double> returns;
  std::vector<double> advantages;
};

/// Backward recursion R_t = r_t + gamma * R_{t+1} seeded with `bootstrap`;
/// a done flag at t cuts the tail (R_{t+1} counts as zero). A_t = R_t - v_t.
/// Throws std::invalid_argument on length mismatch.
Returns n_step_returns(std::span<const double> rewards, std::span<const double> values,
                       std::span<const std::uint8_t> dones, double gamma, double bootstrap);

}  // namespace c2::rl
