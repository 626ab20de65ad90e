#pragma once

#include <string>
#include <vector>

#include "c2/env/action_space.hpp"
#include "c2/env/navigation.hpp"
#include "c2/sim/world.hpp"

namespace c2::env {

/// Orders for one force plus notes about actions that were dropped.
struct DecodedOrders {
  std::vector<sim::Order> orders;
  std::vector<std::string> diagnostics;
};

/// Translates per-unit actions into simulator orders. Actions naming dead,
/// unknown or enemy units are dropped with a diagnostic. Decoding reads only
/// the force's own units and its fused sensor picture.
DecodedOrders decode_actions(const sim::World& world, sim::Force force, const ActionSet& actions, Navigator& nav);

sim::Order decode_discrete(const sim::World& world, const sim::Unit& unit, DiscreteAction action, Navigator& nav);
sim::Order decode_compound(const sim::World& world, const sim::Unit& unit, const CompoundAction& action,
                           Navigator& nav);

/// Fraction of speed_max added or removed by SpeedUp / SlowDown.
inline constexpr double kSpeedStep = 0.2;

/// Nearest enemy the unit could legally engage this tick (in weapon range
/// and, for direct-fire units, in the sensor picture), or kNoUnit.
sim::UnitId nearest_target_in_range(const sim::World& world, const sim::Unit& unit);

}  // namespace c2::env
