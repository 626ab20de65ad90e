#pragma once

#include <cstdint>
#include <string>

#include "c2/scenario/scenario.hpp"

namespace c2::harness {

struct BenchResult {
  int workers = 1;
  std::uint64_t ticks = 0;
  std::uint64_t episodes = 0;
  double seconds = 0.0;
  double ticks_per_sec = 0.0;
};

/// Steps full environments (observation encoding, action decoding, reward
/// and opponent included) with `policy` on Blue against the scenario's own
/// controller. `ticks` is the total, split evenly over `workers` threads that
/// each own an environment.
BenchResult bench(const scenario::Scenario& scenario, std::uint64_t ticks, int workers, std::uint64_t seed,
                  const std::string& policy = "random");

}  // namespace c2::harness
