#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "c2/env/environment.hpp"
#include "c2/scenario/scenario.hpp"

namespace c2::rl {

struct RolloutResult {
  std::uint64_t seed = 0;
  double total_reward = 0.0;
  int blue_casualties = 0;
  int red_casualties = 0;
  int length = 0;
  std::string termination;
};

struct Aggregate {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (0 for one value)
};

Aggregate aggregate(const std::vector<double>& values);

struct EvalReport {
  std::string policy;
  std::string opponent;
  std::string scenario;
  std::vector<RolloutResult> rollouts;
  Aggregate reward;
  Aggregate blue_casualties;
  Aggregate red_casualties;
  Aggregate length;
};

/// Seed of rollout i under a base seed.
std::uint64_t rollout_seed(std::uint64_t base, int index) noexcept;

/// Destroyed events whose victim belongs to `force`.
int casualties(const std::vector<sim::CombatEvent>& ledger, const sim::World& world, sim::Force force);

/// Plays one episode; `policy` drives the environment's controlled force.
RolloutResult run_rollout(env::Environment& env, env::Opponent& policy, std::uint64_t seed);

/// `opponent` null means the scenario's own controller. Deterministic in
/// `seed`; network policies act greedily.
EvalReport evaluate(const env::Opponent& policy, const scenario::Scenario& scenario, int rollouts,
                    const env::Opponent* opponent, std::uint64_t seed, env::EnvConfig config = {});

/// "random", "doctrine", "bot:<level>", "scenario", or a checkpoint path.
std::unique_ptr<env::Opponent> make_policy(const std::string& spec, const scenario::Scenario& scenario);

/// One row per rollout plus a closing aggregate row carrying means in the
/// metric columns and standard deviations in the *_std columns.
void write_report_csv(std::ostream& out, const EvalReport& report);

}  // namespace c2::rl
