#pragma once

// Small hand-built worlds and scenarios shared by the test suites.

#include <cmath>
#include <string>
#include <vector>

#include "c2/scenario/scenario.hpp"
#include "c2/sim/world.hpp"

namespace c2::testing {

/// Open square map with no units.
inline sim::World open_world(int side = 16, double cell_km = 1.0) {
  sim::World w;
  w.terrain = sim::TerrainGrid(side, side, cell_km);
  w.rng.reseed(7);
  return w;
}

/// Appends a unit with plain attributes and returns its id.
inline sim::UnitId add_unit(sim::World& w, sim::Force force, sim::Vec2 pos, sim::UnitClass cls = sim::UnitClass::Infantry) {
  sim::Unit u;
  u.id = static_cast<sim::UnitId>(w.units.size());
  u.force = force;
  u.unit_class = cls;
  u.position = pos;
  u.speed_max = 60.0;
  u.speed = 30.0;
  u.strength = u.strength_max = 10.0;
  u.weapon_range_km = 2.0;
  u.weapon_damage = 2.0;
  u.shots_per_tick = 1;
  u.sensor_range_km = 3.0;
  u.ammo = u.ammo_max = 40;
  w.units.push_back(u);
  w.initial_count[sim::index_of(force)] += 1;
  sim::refresh_sensing(w);
  return u.id;
}

/// 16x16 open map, attrition scheme, one Blue unit heading for a goal and
/// no enemies.
inline scenario::Scenario lone_unit_scenario() {
  scenario::Scenario s;
  s.name = "lone";
  s.terrain = sim::TerrainGrid(16, 16, 0.5);
  s.roster.push_back({sim::UnitClass::Infantry, sim::Force::Blue, {2.5, 8.5}, 1, {}, ""});
  s.goals = {sim::Vec2{13.5, 8.5}, sim::Vec2{2.5, 8.5}};
  s.reward_scheme.kind = scenario::RewardKind::Attrition;
  s.max_ticks = 40;
  s.red_controller = scenario::ExternalController{};
  return s;
}

/// Mirror-image 16x16 duel: two Blue and two Red units placed symmetrically.
/// Every unit fires only on orders, so neither side gets free engagements.
inline scenario::Scenario symmetric_scenario() {
  scenario::Scenario s;
  s.name = "mirror";
  s.terrain = sim::TerrainGrid(16, 16, 0.5);
  s.roster.push_back({sim::UnitClass::Armor, sim::Force::Blue, {3.5, 6.5}, 1, {}, ""});
  s.roster.push_back({sim::UnitClass::Infantry, sim::Force::Blue, {3.5, 9.5}, 1, {}, ""});
  s.roster.push_back({sim::UnitClass::Armor, sim::Force::Red, {12.5, 6.5}, 1, {}, ""});
  s.roster.push_back({sim::UnitClass::Infantry, sim::Force::Red, {12.5, 9.5}, 1, {}, ""});
  for (auto& u : s.roster) u.overrides.passive = true;
  s.goals = {sim::Vec2{12.5, 8.0}, sim::Vec2{3.5, 8.0}};
  s.reward_scheme.kind = scenario::RewardKind::Attrition;
  s.reward_scheme.km_penalty = 0.0;
  s.max_ticks = 80;
  s.red_controller = scenario::DoctrineController{};
  return s;
}

/// Tolerance-free relative comparison used by oracle checks.
inline bool close_rel(double a, double b, double rel) {
  return std::abs(a - b) <= rel * std::max({std::abs(a), std::abs(b), 1e-300});
}

}  // namespace c2::testing

namespace c2::testing {

/// Arbitrary well-formed orders for every living unit: random heading,
/// speed and move direction, with occasional fire targets, fire missions
/// and hold-fire flags.
inline std::vector<sim::Order> random_orders(const sim::World& w, Rng& rng) {
  std::vector<sim::Order> orders;
  for (const auto& u : w.units) {
    if (!u.alive()) continue;
    sim::Order o;
    o.unit = u.id;
    if (rng.bernoulli(0.7)) o.heading = rng.uniform(-4.0, 4.0);
    if (rng.bernoulli(0.5)) o.speed = rng.uniform(0.0, u.speed_max * 1.5);
    o.move = static_cast<sim::MoveDir>(rng.below(5));
    o.move_fraction = rng.uniform();
    if (rng.bernoulli(0.2)) o.fire_target = static_cast<sim::UnitId>(rng.below(w.units.size()));
    if (rng.bernoulli(0.05)) {
      o.fire_mission = sim::CellPos{static_cast<int>(rng.below(w.terrain.width())),
                                    static_cast<int>(rng.below(w.terrain.height()))};
    }
    o.hold_fire = rng.bernoulli(0.1);
    orders.push_back(o);
  }
  return orders;
}

}  // namespace c2::testing
