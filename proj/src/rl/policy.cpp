#include "c2/rl/policy.hpp"

#include <algorithm>
#include <stdexcept>

#include "c2/env/reward.hpp"
#include "c2/nn/layers.hpp"

namespace c2::rl {

namespace {

int sample(std::span<const double> probs, Rng* rng) {
  if (!rng) return static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
  const double u = rng->uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

}  // namespace

std::vector<std::pair<int, nn::NetInput>> net_inputs(const nn::NetConfig& config, const env::Observation& obs) {
  std::vector<std::pair<int, nn::NetInput>> out;
  if (config.mode == nn::NetMode::Vector) {
    out.reserve(obs.units.size());
    for (std::size_t i = 0; i < obs.units.size(); ++i) {
      nn::NetInput in;
      in.vector.assign(obs.features[i].begin(), obs.features[i].end());
      out.emplace_back(static_cast<int>(obs.units[i]), std::move(in));
    }
    return out;
  }
  if (!obs.spatial) throw std::invalid_argument("spatial network needs a spatial observation");
  if (obs.units.empty()) return out;
  nn::NetInput in;
  in.minimap = obs.spatial->minimap;
  in.screen = obs.spatial->screen;
  in.nonspatial = obs.spatial->nonspatial;
  out.emplace_back(kForceSlot, std::move(in));
  return out;
}

Choice choose(const nn::NetConfig& config, const nn::HeadOutput& out, Rng* rng) {
  Choice c;
  c.action = sample(nn::softmax(out.action_logits), rng);
  if (config.mode == nn::NetMode::Spatial) {
    c.x = sample(nn::softmax(out.x_logits), rng);
    c.y = sample(nn::softmax(out.y_logits), rng);
  }
  return c;
}

env::ActionSet to_actions(const nn::NetConfig& config, const env::Observation& obs,
                          const std::vector<std::pair<int, Choice>>& choices) {
  env::ActionSet actions;
  for (const auto& [slot, choice] : choices) {
    if (config.mode == nn::NetMode::Vector) {
      actions[static_cast<sim::UnitId>(slot)] = static_cast<env::DiscreteAction>(choice.action);
    } else {
      const auto compound =
          env::CompoundAction::from_bins(static_cast<env::CompoundId>(choice.action), choice.x, choice.y, config.n);
      for (sim::UnitId id : obs.units) actions[id] = compound;
    }
  }
  return actions;
}

NetPolicy::NetPolicy(std::shared_ptr<const nn::PolicyNet> net, bool greedy, std::uint64_t seed)
    : net_(std::move(net)), greedy_(greedy), rng_(seed) {
  if (!net_) throw std::invalid_argument("policy needs a network");
}

void NetPolicy::reset(std::uint64_t seed) {
  rng_.reseed(seed);
  states_.clear();
}

PolicyStep NetPolicy::act(const env::Observation& obs) {
  const nn::NetConfig& config = net_->config();
  PolicyStep step;
  std::vector<std::pair<int, Choice>> choices;
  for (auto& [slot, input] : net_inputs(config, obs)) {
    auto [it, inserted] = states_.try_emplace(slot, net_->initial_state());
    Decision d;
    d.slot = slot;
    d.state_before = it->second;
    d.first = inserted;
    const nn::HeadOutput out = net_->step(input, it->second);
    d.choice = choose(config, out, greedy_ ? nullptr : &rng_);
    d.value = out.value;
    d.log_prob = log_prob(config, out, d.choice);
    d.action_probs = nn::softmax(out.action_logits);
    d.input = std::move(input);
    choices.emplace_back(slot, d.choice);
    step.decisions.push_back(std::move(d));
  }
  step.actions = to_actions(config, obs, choices);
  return step;
}

double NetPolicy::peek_value(int slot, const nn::NetInput& input) const {
  auto it = states_.find(slot);
  nn::LstmState state = it == states_.end() ? net_->initial_state() : it->second;
  return net_->step(input, state).value;
}

PolicyCommander::PolicyCommander(std::shared_ptr<const nn::PolicyNet> net, scenario::Scenario scenario, bool greedy,
                                 env::SpatialConfig spatial)
    : net_(net),
      scenario_(std::make_shared<const scenario::Scenario>(std::move(scenario))),
      spatial_(spatial),
      policy_(net, greedy) {
  for (const auto& name : scenario_->objectives) {
    if (const auto* r = scenario_->find_region(name)) objectives_.push_back(*r);
  }
  if (net_->config().mode == nn::NetMode::Spatial) spatial_.n = net_->config().n;
}

void PolicyCommander::reset(const sim::World& world, std::uint64_t seed) {
  policy_.reset(seed);
  score_ = 0.0;
  last_tick_ = world.tick;
  if (!nav_) nav_.emplace(world.terrain);
}

std::vector<sim::Order> PolicyCommander::act(const sim::World& world, sim::Force force) {
  if (!nav_) nav_.emplace(world.terrain);
  if (world.tick != last_tick_) {
    score_ += env::reward_for(world.events, world, force, scenario_->reward_scheme);
    last_tick_ = world.tick;
  }
  const auto mode =
      net_->config().mode == nn::NetMode::Vector ? env::ObservationMode::Vector : env::ObservationMode::Spatial;
  const env::Observation obs =
      env::make_observation(world, force, mode, spatial_, env::SpatialContext{scenario_->max_ticks, score_, &objectives_});
  const PolicyStep step = policy_.act(obs);
  return env::decode_actions(world, force, step.actions, *nav_).orders;
}

std::unique_ptr<env::Opponent> PolicyCommander::clone() const { return std::make_unique<PolicyCommander>(*this); }

}  // namespace c2::rl
