#include "c2/env/environment.hpp"

#include <stdexcept>

#include "c2/env/reward.hpp"

namespace c2::env {

using sim::Force;

std::uint64_t opponent_seed(std::uint64_t episode_seed) noexcept { return derive_seed(episode_seed, 0x0990); }

Environment::Environment(scenario::Scenario scenario, EnvConfig config, std::unique_ptr<Opponent> opponent)
    : scenario_(std::move(scenario)),
      config_(config),
      opponent_(std::move(opponent)),
      nav_(std::make_unique<Navigator>(scenario_.terrain)) {
  if (auto issues = scenario::validate(scenario_); !issues.empty()) {
    throw std::invalid_argument("invalid scenario: " + issues.front().to_string());
  }
  for (const auto& name : scenario_.objectives) objective_regions_.push_back(*scenario_.find_region(name));
  world_ = scenario::build_world(scenario_, 0);
}

Environment::Environment(const Environment& other)
    : scenario_(other.scenario_),
      config_(other.config_),
      opponent_(other.opponent_ ? other.opponent_->clone() : nullptr),
      nav_(std::make_unique<Navigator>(*other.nav_)),
      objective_regions_(other.objective_regions_),
      world_(other.world_),
      ledger_(other.ledger_),
      seed_(other.seed_),
      score_(other.score_),
      force_scores_(other.force_scores_),
      done_(other.done_),
      termination_(other.termination_) {}

Environment& Environment::operator=(const Environment& other) {
  if (this != &other) *this = Environment(other);
  return *this;
}

Observation Environment::reset(std::uint64_t seed) {
  seed_ = seed;
  world_ = scenario::build_world(scenario_, seed);
  ledger_.clear();
  score_ = 0.0;
  force_scores_ = {0.0, 0.0};
  done_ = false;
  termination_.clear();
  if (opponent_) opponent_->reset(world_, opponent_seed(seed));
  return observe(config_.controlled);
}

Observation make_observation(const sim::World& world, Force force, ObservationMode mode, const SpatialConfig& spatial,
                             const SpatialContext& context) {
  Observation obs;
  obs.force = force;
  const sim::Vec2 goal = world.goal(force);
  for (const auto& u : world.units) {
    if (u.force != force || !u.alive()) continue;
    obs.units.push_back(u.id);
    obs.features.push_back(encode_vector_obs(world, u.id, goal));
  }
  if (mode == ObservationMode::Spatial) obs.spatial = encode_spatial_obs(world, force, spatial, context);
  return obs;
}

Observation Environment::observe(Force force) const {
  const double score = force_scores_[sim::index_of(force)];
  return make_observation(world_, force, config_.observation, config_.spatial,
                          SpatialContext{scenario_.max_ticks, score, &objective_regions_});
}

StepResult Environment::step(const ActionSet& actions) {
  if (!opponent_) throw std::logic_error("environment has an external opponent; pass its actions");
  if (done_) throw std::logic_error("episode is done; call reset first");
  auto own = decode_actions(world_, config_.controlled, actions, *nav_);
  auto other = opponent_->act(world_, sim::opposing(config_.controlled));
  auto result = step_orders(std::move(own.orders), std::move(other));
  result.info.diagnostics.insert(result.info.diagnostics.begin(), own.diagnostics.begin(), own.diagnostics.end());
  return result;
}

StepResult Environment::step_own_orders(std::vector<sim::Order> controlled) {
  if (!opponent_) throw std::logic_error("environment has an external opponent; pass its actions");
  if (done_) throw std::logic_error("episode is done; call reset first");
  auto other = opponent_->act(world_, sim::opposing(config_.controlled));
  return step_orders(std::move(controlled), std::move(other));
}

StepResult Environment::step(const ActionSet& actions, const ActionSet& other_actions) {
  if (done_) throw std::logic_error("episode is done; call reset first");
  auto own = decode_actions(world_, config_.controlled, actions, *nav_);
  auto other = decode_actions(world_, sim::opposing(config_.controlled), other_actions, *nav_);
  auto result = step_orders(std::move(own.orders), std::move(other.orders));
  auto& diag = result.info.diagnostics;
  diag.insert(diag.begin(), other.diagnostics.begin(), other.diagnostics.end());
  diag.insert(diag.begin(), own.diagnostics.begin(), own.diagnostics.end());
  return result;
}

StepResult Environment::step_orders(std::vector<sim::Order> controlled, std::vector<sim::Order> other) {
  if (done_) throw std::logic_error("episode is done; call reset first");
  const Force own = config_.controlled;
  std::vector<sim::Order> orders;
  orders.reserve(controlled.size() + other.size());
  StepInfo info;
  // Orders must come from the force that owns the unit.
  auto admit = [&](std::vector<sim::Order>& list, Force f) {
    for (auto& o : list) {
      if (world_.has_unit(o.unit) && world_.unit(o.unit).force != f) {
        info.diagnostics.push_back("order for unit " + std::to_string(o.unit) + " rejected: wrong force");
        continue;
      }
      orders.push_back(o);
    }
  };
  admit(controlled, own);
  admit(other, sim::opposing(own));

  const auto& events = sim::advance_tick(world_, orders);
  info.events = events;
  info.orders = std::move(orders);
  ledger_.insert(ledger_.end(), events.begin(), events.end());

  for (Force f : {Force::Blue, Force::Red}) {
    info.rewards[sim::index_of(f)] = reward_for(events, world_, f, scenario_.reward_scheme);
  }
  if (config_.unit_credit) info.unit_rewards = unit_credit(events, world_, own, scenario_.reward_scheme);

  StepResult result;
  result.reward = info.rewards[sim::index_of(own)];
  score_ += result.reward;
  for (std::size_t i = 0; i < 2; ++i) force_scores_[i] += info.rewards[i];
  if (auto reason = check_termination()) {
    done_ = true;
    termination_ = *reason;
  }
  info.score = score_;
  info.tick = world_.tick;
  info.termination = termination_;
  result.done = done_;
  result.observation = observe(own);
  result.info = std::move(info);
  return result;
}

std::optional<std::string> Environment::check_termination() const {
  return termination_reason(world_, objective_regions_, scenario_.max_ticks);
}

std::optional<std::string> termination_reason(const sim::World& world, std::span<const sim::Region> objectives,
                                              int max_ticks) {
  for (Force f : {Force::Blue, Force::Red}) {
    if (world.initial_count[sim::index_of(f)] > 0 && sim::living_count(world, f) == 0) {
      return std::string(kForceDestroyed);
    }
  }
  if (!objectives.empty()) {
    bool held = true;
    for (const auto& region : objectives) {
      int blue = 0;
      int red = 0;
      for (const auto& u : world.units) {
        if (!u.alive() || !region.contains(u.position)) continue;
        (u.force == Force::Blue ? blue : red) += 1;
      }
      if (blue == 0 || red > 0) {
        held = false;
        break;
      }
    }
    if (held) return std::string(kObjectivesHeld);
  }
  if (world.tick >= max_ticks) return std::string(kMaxTicks);
  return std::nullopt;
}

}  // namespace c2::env
