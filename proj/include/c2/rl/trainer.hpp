#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "c2/env/environment.hpp"
#include "c2/nn/checkpoint.hpp"
#include "c2/scenario/scenario.hpp"

namespace c2::rl {

struct TrainConfig {
  int workers = 8;
  int n_steps = 20;
  double gamma = 0.99;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  double learning_rate = 7e-4;
  double grad_clip = 40.0;
  /// Multiplies rewards seen by the learner; reports stay in raw units.
  double reward_scale = 1.0;
  std::uint64_t total_env_steps = 200'000;
  std::uint64_t eval_period = 20'000;
  int eval_rollouts = 20;
  std::uint64_t seed = 1;

  env::ObservationMode observation = env::ObservationMode::Vector;
  int spatial_n = 16;
  int dense = 64;
  int lstm = 128;

  /// Credit each unit with its own share of the reward instead of the team total.
  bool unit_credit = false;
  /// Lock-free-style asynchronous updates from stale snapshots (A3C).
  bool asynchronous = false;
  /// Train a second, independent network for Red; the two alternate updates.
  bool learn_red = false;
  /// Blue's opponent when Red is not learning: see make_policy.
  std::string opponent = "scenario";

  /// Directory for checkpoints and the training log; empty writes nothing.
  std::string out_dir;
  int rolling_window = 100;
  int log_every = 10;  // updates between log rows

  std::function<void(const std::string&)> on_log;
  /// Called before each worker segment; an exception simulates a crash.
  std::function<void(int worker, std::uint64_t round)> fault_hook;
};

/// Throws std::invalid_argument naming the first bad field.
void validate(const TrainConfig& config);

nn::NetConfig net_config_for(const TrainConfig& config);

struct EvalPoint {
  std::uint64_t step = 0;
  double eval_mean = 0.0;
  double eval_blue_casualties = 0.0;
  double rolling_reward = 0.0;  // mean of the last training episodes
  std::uint64_t checkpoint_hash = 0;
};

struct TrainResult {
  nn::Checkpoint initial;
  nn::Checkpoint final_checkpoint;
  nn::Checkpoint best;
  std::optional<nn::Checkpoint> red_final;
  std::vector<EvalPoint> evals;
  double best_eval = 0.0;
  std::uint64_t env_steps = 0;
  std::uint64_t updates = 0;
  std::uint64_t skipped_updates = 0;
  std::uint64_t episodes = 0;
  std::vector<std::string> incidents;
};

/// Synchronous A2C by default: every round each worker collects one n-step
/// segment from its own environment and computes gradients against the
/// shared parameters; the learner sums them in worker order and takes one
/// optimizer step. The best checkpoint is the one with the highest greedy
/// evaluation mean.
TrainResult train(const TrainConfig& config, const scenario::Scenario& scenario);

}  // namespace c2::rl
