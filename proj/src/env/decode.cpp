#include "c2/env/decode.hpp"

#include <algorithm>
#include <cmath>

#include "c2/env/observation.hpp"

namespace c2::env {

using sim::Order;
using sim::Unit;
using sim::UnitId;
using sim::World;

namespace {

double bearing(sim::Vec2 from, sim::Vec2 to) { return std::atan2(to.y - from.y, to.x - from.x); }

// Cells the unit covers in one tick at the given speed.
double step_cells(const World& world, double speed_kmh) {
  return speed_kmh * world.config.tick_seconds / 3600.0 / world.terrain.cell_km();
}

bool can_engage(const World& world, const Unit& unit, const Unit& enemy) {
  if (!enemy.alive() || enemy.force == unit.force) return false;
  if (sim::distance_km(world, unit.position, enemy.position) > unit.weapon_range_km) return false;
  if (unit.indirect) return sim::is_perceived(world, unit.force, enemy.id);
  const auto& pic = world.perceived[sim::index_of(unit.force)];
  return static_cast<std::size_t>(enemy.id) < pic.size() && pic[enemy.id];
}

}  // namespace

UnitId nearest_target_in_range(const World& world, const Unit& unit) {
  UnitId best = sim::kNoUnit;
  double best_d = 0.0;
  for (const Unit& e : world.units) {
    if (!can_engage(world, unit, e)) continue;
    const double d = sim::distance_km(world, unit.position, e.position);
    if (best == sim::kNoUnit || d < best_d) {
      best = e.id;
      best_d = d;
    }
  }
  return best;
}

Order decode_discrete(const World& world, const Unit& u, DiscreteAction action, Navigator& nav) {
  Order o;
  o.unit = u.id;
  switch (action) {
    case DiscreteAction::NoOp: break;
    case DiscreteAction::MoveForward: o.move = sim::MoveDir::Forward; break;
    case DiscreteAction::MoveBackward: o.move = sim::MoveDir::Backward; break;
    case DiscreteAction::MoveRight: o.move = sim::MoveDir::Right; break;
    case DiscreteAction::MoveLeft: o.move = sim::MoveDir::Left; break;
    case DiscreteAction::SpeedUp: o.speed = std::min(u.speed_max, u.speed + kSpeedStep * u.speed_max); break;
    case DiscreteAction::SlowDown: o.speed = std::max(0.0, u.speed - kSpeedStep * u.speed_max); break;
    case DiscreteAction::OrientToGoal: {
      const sim::Vec2 goal = world.goal(u.force);
      if ((goal - u.position).norm() > 0.0) o.heading = nav.route_heading(u.position, goal);
      break;
    }
    case DiscreteAction::Halt: o.speed = 0.0; break;
    case DiscreteAction::FireWeapon: o.fire_target = nearest_target_in_range(world, u); break;
    case DiscreteAction::CallForFire: {
      const UnitId enemy = nearest_perceived_enemy(world, u);
      if (enemy != sim::kNoUnit) o.fire_mission = sim::cell_of(world.unit(enemy).position);
      break;
    }
    case DiscreteAction::ReactToContact: {
      if (!u.was_hit || !world.has_unit(u.last_attacker)) break;
      const Unit& attacker = world.unit(u.last_attacker);
      if (!attacker.alive()) break;
      o.heading = bearing(u.position, attacker.position);
      if (can_engage(world, u, attacker)) o.fire_target = attacker.id;
      break;
    }
  }
  return o;
}

Order decode_compound(const World& world, const Unit& u, const CompoundAction& action, Navigator& nav) {
  Order o;
  o.unit = u.id;
  if (action.id == CompoundId::NoOp) return o;

  const double fx = std::clamp(action.x, 0.0, 1.0);
  const double fy = std::clamp(action.y, 0.0, 1.0);
  const sim::Vec2 target{std::min(fx * world.terrain.width(), world.terrain.width() - 1e-6),
                         std::min(fy * world.terrain.height(), world.terrain.height() - 1e-6)};

  if (action.id == CompoundId::Attack) {
    const UnitId enemy = nearest_target_in_range(world, u);
    if (enemy != sim::kNoUnit) {
      o.fire_target = enemy;
      o.heading = bearing(u.position, world.unit(enemy).position);
      return o;
    }
  } else {
    o.hold_fire = true;
  }

  const double remaining = (target - u.position).norm();
  if (remaining < 1e-9) return o;
  o.speed = u.speed_max;
  o.heading = nav.route_heading(u.position, target);
  o.move = sim::MoveDir::Forward;
  const double step = step_cells(world, u.speed_max);
  if (step > 0.0 && nav.segment_clear(u.position, target)) o.move_fraction = std::min(1.0, remaining / step);
  return o;
}

DecodedOrders decode_actions(const World& world, sim::Force force, const ActionSet& actions, Navigator& nav) {
  DecodedOrders out;
  for (const auto& [id, action] : actions) {
    if (!world.has_unit(id)) {
      out.diagnostics.push_back("action for unknown unit " + std::to_string(id) + " ignored");
      continue;
    }
    const Unit& u = world.unit(id);
    if (u.force != force) {
      out.diagnostics.push_back("action for unit " + std::to_string(id) + " of the other force ignored");
      continue;
    }
    if (!u.alive()) {
      out.diagnostics.push_back("action for dead unit " + std::to_string(id) + " ignored");
      continue;
    }
    Order o = std::visit(
        [&](const auto& a) -> Order {
          if constexpr (std::is_same_v<std::decay_t<decltype(a)>, DiscreteAction>) {
            return decode_discrete(world, u, a, nav);
          } else {
            return decode_compound(world, u, a, nav);
          }
        },
        action);
    out.orders.push_back(o);
  }
  return out;
}

}  // namespace c2::env
