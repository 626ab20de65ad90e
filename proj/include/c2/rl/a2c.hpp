#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "c2/nn/optimizer.hpp"
#include "c2/nn/policy_net.hpp"

namespace c2::rl {

/// A sampled decision: action id plus spatial bins (spatial mode only).
struct Choice {
  int action = 0;
  int x = 0;
  int y = 0;
  friend bool operator==(const Choice&, const Choice&) = default;
};

struct Transition {
  nn::NetInput input;
  Choice choice;
  double reward = 0.0;
  double value = 0.0;     // critic estimate when the action was taken
  double log_prob = 0.0;  // behavior log-probability
  bool done = false;      // agent's episode ended after this step
  bool reset_before = false;  // recurrent state was zeroed before this step
};

/// One agent's consecutive transitions within a segment.
struct Trajectory {
  nn::LstmState initial;
  std::vector<Transition> steps;
  double bootstrap_value = 0.0;  // value of the state after the last step
};

struct A2CConfig {
  double gamma = 0.99;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
};

struct LossStats {
  double policy_loss = 0.0;  // mean of -log pi(a|s) * A
  double value_loss = 0.0;   // mean of (R - v)^2
  double entropy = 0.0;      // mean policy entropy
  double total = 0.0;        // policy + value_coef * value - entropy_coef * entropy
  double grad_norm = 0.0;
  std::size_t samples = 0;
  bool applied = false;
  std::string message;
};

/// Whether the spatial arguments take part in the action's likelihood.
bool uses_spatial_args(const nn::NetConfig& config, int action);

/// log pi(choice) under the head outputs.
double log_prob(const nn::NetConfig& config, const nn::HeadOutput& out, const Choice& choice);

/// Total entropy of the head distributions (action id, plus x and y in
/// spatial mode).
double policy_entropy(const nn::NetConfig& config, const nn::HeadOutput& out);

/// Unnormalized sums over every transition of the batch; gradients of the
/// summed loss are added into `grads` when non-null. Advantages use the
/// stored critic estimates, so they act as constants.
LossStats a2c_accumulate(const nn::PolicyNet& net, std::span<const Trajectory> batch, const A2CConfig& config,
                         nn::Gradients* grads);

/// Mean-normalized loss and its gradient (grads aligned with net.parameters()).
LossStats a2c_loss(const nn::PolicyNet& net, std::span<const Trajectory> batch, const A2CConfig& config,
                   nn::Gradients* grads = nullptr);

/// Divides raw sums from a2c_accumulate by the sample count.
void normalize(LossStats& sums, nn::Gradients& grads);

/// One optimizer step on the batch loss. Non-finite losses or gradients skip
/// the step and set `message`.
LossStats a2c_update(nn::PolicyNet& net, nn::RmsProp& optimizer, std::span<const Trajectory> batch,
                     const A2CConfig& config);

/// Applies already-normalized gradients; shares the skip rules of a2c_update.
LossStats apply_gradients(nn::PolicyNet& net, nn::RmsProp& optimizer, LossStats stats, const nn::Gradients& grads);

}  // namespace c2::rl
