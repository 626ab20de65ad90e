#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "c2/core/rng.hpp"
#include "c2/env/environment.hpp"
#include "c2/nn/policy_net.hpp"
#include "c2/rl/a2c.hpp"

namespace c2::rl {

/// Recurrent-state slot used by the single force-level agent in spatial mode.
inline constexpr int kForceSlot = -1;

/// One agent's decision for the current tick.
struct Decision {
  int slot = kForceSlot;  // unit id in vector mode
  nn::NetInput input;
  nn::LstmState state_before;
  bool first = false;  // recurrent state was fresh (start of episode)
  Choice choice;
  double value = 0.0;
  double log_prob = 0.0;
  std::vector<double> action_probs;
};

struct PolicyStep {
  std::vector<Decision> decisions;
  env::ActionSet actions;
};

/// Network inputs per agent: one per living unit (vector mode) or a single
/// force-level input (spatial mode).
std::vector<std::pair<int, nn::NetInput>> net_inputs(const nn::NetConfig& config, const env::Observation& obs);

/// Sampled or argmax choice from head outputs.
Choice choose(const nn::NetConfig& config, const nn::HeadOutput& out, Rng* rng);

/// ActionSet from per-agent choices. In spatial mode the force-level choice
/// is issued to every living unit.
env::ActionSet to_actions(const nn::NetConfig& config, const env::Observation& obs,
                          const std::vector<std::pair<int, Choice>>& choices);

/// Runs a network over observations, keeping one recurrent state per agent
/// slot. Sampling uses its own seeded generator; greedy mode takes argmax.
class NetPolicy {
 public:
  NetPolicy(std::shared_ptr<const nn::PolicyNet> net, bool greedy, std::uint64_t seed = 0);

  /// Clears recurrent state for a new episode.
  void reset(std::uint64_t seed);
  PolicyStep act(const env::Observation& obs);

  /// Critic estimate for a slot's next input without advancing its state.
  double peek_value(int slot, const nn::NetInput& input) const;

  bool fresh(int slot) const { return !states_.contains(slot); }
  void set_net(std::shared_ptr<const nn::PolicyNet> net) { net_ = std::move(net); }
  const nn::PolicyNet& net() const noexcept { return *net_; }

 private:
  std::shared_ptr<const nn::PolicyNet> net_;
  bool greedy_;
  Rng rng_;
  std::map<int, nn::LstmState> states_;
};

/// A trained network as a commander for either force. Observations are
/// built from the world; the force's cumulative score is tracked from each
/// tick's events so spatial inputs match the environment's.
class PolicyCommander final : public env::Opponent {
 public:
  PolicyCommander(std::shared_ptr<const nn::PolicyNet> net, scenario::Scenario scenario, bool greedy = true,
                  env::SpatialConfig spatial = {});

  void reset(const sim::World& world, std::uint64_t seed) override;
  std::vector<sim::Order> act(const sim::World& world, sim::Force force) override;
  std::unique_ptr<env::Opponent> clone() const override;
  std::string name() const override { return "policy"; }

 private:
  std::shared_ptr<const nn::PolicyNet> net_;
  std::shared_ptr<const scenario::Scenario> scenario_;
  std::vector<sim::Region> objectives_;
  env::SpatialConfig spatial_;
  NetPolicy policy_;
  std::optional<env::Navigator> nav_;
  double score_ = 0.0;
  int last_tick_ = 0;
};

}  // namespace c2::rl
