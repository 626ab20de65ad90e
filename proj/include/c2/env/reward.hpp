#pragma once

#include <map>
#include <span>

#include "c2/scenario/scenario.hpp"
#include "c2/sim/world.hpp"

namespace c2::env {

/// Region-trigger scoring, always from Blue's point of view: crossings and
/// Red losses score +points, retreats and Blue losses -points.
double reward_tigerclaw(std::span<const sim::CombatEvent> events, const sim::World& world,
                        const scenario::RewardScheme& scheme = {});

/// Damage/destruction event weights plus a per-km distance-to-goal penalty
/// over the force's living units, from the given force's point of view.
double reward_attrition(std::span<const sim::CombatEvent> events, const sim::World& world, sim::Force force,
                        const scenario::RewardScheme& scheme = {});

/// Reward of one tick for `force` under the scheme (TigerClaw is negated for Red).
double reward_for(std::span<const sim::CombatEvent> events, const sim::World& world, sim::Force force,
                  const scenario::RewardScheme& scheme);

/// Splits the same tick reward over the force's units: each event is
/// credited to the friendly unit it names (victim or shooter), and each
/// living unit carries its own distance penalty. Values sum to reward_for.
std::map<sim::UnitId, double> unit_credit(std::span<const sim::CombatEvent> events, const sim::World& world,
                                          sim::Force force, const scenario::RewardScheme& scheme);

}  // namespace c2::env
