#include "c2/cmd/commanders.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "c2/env/decode.hpp"
#include "c2/env/observation.hpp"

namespace c2::cmd {

using env::ActionSet;
using env::CompoundAction;
using env::CompoundId;
using env::DiscreteAction;
using sim::Force;
using sim::Unit;
using sim::UnitId;
using sim::World;

namespace {

void ensure_navigator(std::optional<env::Navigator>& nav, const World& world) {
  if (!nav || !(nav->terrain() == world.terrain)) nav.emplace(world.terrain);
}

std::vector<UnitId> living_units(const World& world, Force force) {
  std::vector<UnitId> ids;
  for (const auto& u : world.units) {
    if (u.force == force && u.alive()) ids.push_back(u.id);
  }
  return ids;
}

CompoundAction compound_at(const World& world, CompoundId id, sim::Vec2 p) {
  return {id, p.x / world.terrain.width(), p.y / world.terrain.height()};
}

}  // namespace

ForceView make_view(const World& world, Force force, bool full_vision) {
  ForceView view;
  view.force = force;
  view.tick = world.tick;
  for (const Unit& u : world.units) {
    if (!u.alive()) continue;
    if (u.force == force) {
      view.own.push_back(u);
    } else if (full_vision || sim::is_perceived(world, force, u.id)) {
      view.contacts.push_back({u.id, u.unit_class, u.position, u.strength});
    }
  }
  return view;
}

ActionSet random_policy(std::span<const UnitId> units, Rng& rng, std::span<const DiscreteAction> legal) {
  ActionSet actions;
  if (legal.empty()) return actions;
  for (UnitId id : units) actions[id] = legal[rng.below(legal.size())];
  return actions;
}

// ----------------------------------------------------------------- random

void RandomCommander::reset(const World& world, std::uint64_t seed) {
  rng_.reseed(seed);
  ensure_navigator(nav_, world);
}

std::vector<sim::Order> RandomCommander::act(const World& world, Force force) {
  ensure_navigator(nav_, world);
  const auto units = living_units(world, force);
  return env::decode_actions(world, force, random_policy(units, rng_), *nav_).orders;
}

// ----------------------------------------------------------------- scripted

void ScriptedCommander::reset(const World& world, std::uint64_t) {
  ensure_navigator(nav_, world);
  cursor_.assign(world.units.size(), 0);
  group_of_.assign(world.units.size(), -1);
  for (std::size_t g = 0; g < script_.groups.size(); ++g) {
    for (UnitId id : script_.groups[g].units) {
      if (world.has_unit(id)) group_of_[id] = static_cast<int>(g);
    }
  }
}

std::size_t ScriptedCommander::cursor(UnitId id) const {
  return id >= 0 && static_cast<std::size_t>(id) < cursor_.size() ? cursor_[id] : 0;
}

std::vector<sim::Order> ScriptedCommander::act(const World& world, Force force) {
  if (cursor_.size() != world.units.size()) reset(world, 0);
  std::vector<sim::Order> orders;
  for (const Unit& u : world.units) {
    if (u.force != force || !u.alive() || group_of_[u.id] < 0) continue;
    const CoaGroup& group = script_.groups[group_of_[u.id]];
    sim::Order o;
    o.unit = u.id;

    switch (group.posture) {
      case Posture::HoldFire: o.hold_fire = true; break;
      case Posture::ReturnFire:
        o.hold_fire = true;
        if (u.was_hit && world.has_unit(u.last_attacker)) {
          const Unit& attacker = world.unit(u.last_attacker);
          if (attacker.alive() && env::nearest_target_in_range(world, u) != sim::kNoUnit &&
              sim::distance_km(world, u.position, attacker.position) <= u.weapon_range_km) {
            o.fire_target = attacker.id;
          }
        }
        break;
      case Posture::FreeFire: o.fire_target = env::nearest_target_in_range(world, u); break;
    }

    std::size_t& k = cursor_[u.id];
    while (k < group.waypoints.size() && (group.waypoints[k].position - u.position).norm() <= 1.0) ++k;
    if (k < group.waypoints.size() && world.tick >= group.waypoints[k].tick && u.speed > 0.0) {
      const sim::Vec2 wp = group.waypoints[k].position;
      o.heading = nav_->route_heading(u.position, wp);
      o.move = sim::MoveDir::Forward;
      const double step = u.speed * world.config.tick_seconds / 3600.0 / world.terrain.cell_km();
      if (nav_->segment_clear(u.position, wp)) o.move_fraction = std::min(1.0, (wp - u.position).norm() / step);
    }
    orders.push_back(o);
  }
  return orders;
}

// ----------------------------------------------------------------- bot

void BotCommander::reset(const World& world, std::uint64_t) {
  ensure_navigator(nav_, world);
  current_.clear();
  next_plan_tick_ = world.tick;
}

ActionSet BotCommander::plan(const ForceView& view, const World& world) const {
  ActionSet actions;
  if (view.own.empty()) return actions;

  // Distance from each unit to its nearest known enemy (or to the goal).
  struct Candidate {
    double distance;
    UnitId id;
    sim::Vec2 target;
  };
  std::vector<Candidate> candidates;
  const sim::Vec2 goal = world.goal(view.force);
  for (const Unit& u : view.own) {
    Candidate c{(goal - u.position).norm(), u.id, goal};
    bool found = false;
    for (const Contact& e : view.contacts) {
      const double d = (e.position - u.position).norm();
      if (!found || d < c.distance) {
        c = {d, u.id, e.position};
        found = true;
      }
    }
    candidates.push_back(c);
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return a.distance != b.distance ? a.distance < b.distance : a.id < b.id;
  });
  const auto committed = static_cast<std::size_t>(std::ceil(config_.aggression() * view.own.size() - 1e-9));
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const Candidate& c = candidates[i];
    const sim::Vec2 at = i < committed ? c.target : world.unit(c.id).position;
    actions[c.id] = compound_at(world, CompoundId::Attack, at);
  }
  return actions;
}

std::vector<sim::Order> BotCommander::act(const World& world, Force force) {
  ensure_navigator(nav_, world);
  if (world.tick >= next_plan_tick_ || current_.empty()) {
    current_ = plan(make_view(world, force, config_.full_map_vision()), world);
    next_plan_tick_ = world.tick + config_.decision_period();
  }
  return env::decode_actions(world, force, current_, *nav_).orders;
}

// ----------------------------------------------------------------- doctrine

std::vector<DoctrineRule> default_doctrine() {
  using P = Predicate;
  return {
      {1, {{P::TakingFire}, {P::EnemyInRange}}, DiscreteAction::FireWeapon, std::nullopt},
      {2, {{P::TakingFire}, {P::EnemyInRange, true}}, DiscreteAction::ReactToContact, std::nullopt},
      {3, {{P::EnemyInRange}}, DiscreteAction::FireWeapon, std::nullopt},
      {4, {{P::DamageAbove, false, 0.7}}, DiscreteAction::MoveBackward, std::nullopt},
      {5, {{P::IsIndirect}, {P::FireSupportAvailable}, {P::EnemyPerceived}}, DiscreteAction::CallForFire, std::nullopt},
      {6, {{P::Always}}, DiscreteAction::OrientToGoal, DiscreteAction::MoveForward},
  };
}

bool evaluate(const Condition& c, const World& world, const Unit& u) {
  bool v = false;
  switch (c.predicate) {
    case Predicate::Always: v = true; break;
    case Predicate::TakingFire: v = u.was_hit; break;
    case Predicate::EnemyInRange: v = env::nearest_target_in_range(world, u) != sim::kNoUnit; break;
    case Predicate::EnemyPerceived: v = env::nearest_perceived_enemy(world, u) != sim::kNoUnit; break;
    case Predicate::DamageAbove:
      v = u.strength_max > 0.0 && 1.0 - u.strength / u.strength_max > c.threshold;
      break;
    case Predicate::IsIndirect: v = u.indirect; break;
    case Predicate::FireSupportAvailable: v = env::fire_support_available(world, u); break;
  }
  return c.negate ? !v : v;
}

ActionSet doctrine_policy(const World& world, Force force, std::span<const DoctrineRule> rules) {
  std::vector<const DoctrineRule*> ordered;
  for (const auto& r : rules) ordered.push_back(&r);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const DoctrineRule* a, const DoctrineRule* b) { return a->priority < b->priority; });
  ActionSet actions;
  for (const Unit& u : world.units) {
    if (u.force != force || !u.alive()) continue;
    DiscreteAction chosen = DiscreteAction::NoOp;
    for (const DoctrineRule* r : ordered) {
      const bool match = std::all_of(r->all_of.begin(), r->all_of.end(),
                                     [&](const Condition& c) { return evaluate(c, world, u); });
      if (!match) continue;
      chosen = (r->alternate && world.tick % 2 == 1) ? *r->alternate : r->action;
      break;
    }
    actions[u.id] = chosen;
  }
  return actions;
}

DoctrineCommander::DoctrineCommander(std::vector<DoctrineRule> rules) : rules_(std::move(rules)) {}

void DoctrineCommander::reset(const World& world, std::uint64_t) { ensure_navigator(nav_, world); }

std::vector<sim::Order> DoctrineCommander::act(const World& world, Force force) {
  ensure_navigator(nav_, world);
  return env::decode_actions(world, force, doctrine_policy(world, force, rules_), *nav_).orders;
}

// ----------------------------------------------------------------- factories

std::unique_ptr<env::Opponent> make_opponent(const scenario::RedController& controller) {
  return std::visit(
      [](const auto& c) -> std::unique_ptr<env::Opponent> {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, scenario::ScriptedController>) {
          return std::make_unique<ScriptedCommander>(c.coa);
        } else if constexpr (std::is_same_v<T, scenario::BotController>) {
          return std::make_unique<BotCommander>(c.config);
        } else if constexpr (std::is_same_v<T, scenario::DoctrineController>) {
          return std::make_unique<DoctrineCommander>(c.rules.empty() ? default_doctrine() : c.rules);
        } else {
          return nullptr;
        }
      },
      controller);
}

std::unique_ptr<env::Opponent> make_commander(const std::string& spec, const scenario::Scenario& scenario) {
  if (spec == "random") return std::make_unique<RandomCommander>();
  if (spec == "doctrine") return std::make_unique<DoctrineCommander>();
  if (spec == "scenario") return make_opponent(scenario.red_controller);
  if (spec.rfind("bot:", 0) == 0) {
    int level = 0;
    try {
      std::size_t used = 0;
      level = std::stoi(spec.substr(4), &used);
      if (used != spec.size() - 4) level = 0;
    } catch (const std::exception&) {
      level = 0;
    }
    BotConfig config{level};
    if (!config.valid()) throw std::invalid_argument("bot level must be in [1, 10]: " + spec);
    return std::make_unique<BotCommander>(config);
  }
  throw std::invalid_argument("unknown commander '" + spec + "' (random, doctrine, bot:<1-10>, scenario)");
}

env::Environment make_environment(const scenario::Scenario& scenario, env::EnvConfig config) {
  return env::Environment(scenario, config, make_opponent(scenario.red_controller));
}

}  // namespace c2::cmd
