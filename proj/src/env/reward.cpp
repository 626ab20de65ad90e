#include "c2/env/reward.hpp"

namespace c2::env {

using sim::CombatEvent;
using sim::EventKind;
using sim::Force;
using sim::World;

namespace {

Force force_of(const World& world, sim::UnitId id) { return world.unit(id).force; }

double tigerclaw_term(const CombatEvent& e, const World& world, const scenario::RewardScheme& s) {
  switch (e.kind) {
    case EventKind::Crossed:
      return force_of(world, e.actor) == Force::Blue ? s.crossing_points : 0.0;
    case EventKind::Retreated:
      return force_of(world, e.actor) == Force::Blue ? -s.crossing_points : 0.0;
    case EventKind::Destroyed:
      return force_of(world, e.actor) == Force::Red ? s.kill_points : -s.kill_points;
    default: return 0.0;
  }
}

double attrition_term(const CombatEvent& e, const World& world, Force force, const scenario::RewardScheme& s) {
  const bool friendly = force_of(world, e.actor) == force;
  if (e.kind == EventKind::Damaged) return friendly ? s.friendly_damaged : s.enemy_damaged;
  if (e.kind == EventKind::Destroyed) return friendly ? s.friendly_destroyed : s.enemy_destroyed;
  return 0.0;
}

double event_points(const CombatEvent& e, const World& world, Force force, const scenario::RewardScheme& s) {
  if (s.kind == scenario::RewardKind::TigerClaw) {
    const double blue = tigerclaw_term(e, world, s);
    return force == Force::Blue ? blue : -blue;
  }
  return attrition_term(e, world, force, s);
}

double distance_penalty(const World& world, const sim::Unit& u, const scenario::RewardScheme& s) {
  return -s.km_penalty * sim::distance_km(world, u.position, world.goal(u.force));
}

}  // namespace

double reward_tigerclaw(std::span<const CombatEvent> events, const World& world, const scenario::RewardScheme& scheme) {
  double r = 0.0;
  for (const auto& e : events) r += tigerclaw_term(e, world, scheme);
  return r;
}

double reward_attrition(std::span<const CombatEvent> events, const World& world, Force force,
                        const scenario::RewardScheme& scheme) {
  double r = 0.0;
  for (const auto& e : events) r += attrition_term(e, world, force, scheme);
  for (const auto& u : world.units) {
    if (u.force == force && u.alive()) r += distance_penalty(world, u, scheme);
  }
  return r;
}

double reward_for(std::span<const CombatEvent> events, const World& world, Force force,
                  const scenario::RewardScheme& scheme) {
  if (scheme.kind == scenario::RewardKind::TigerClaw) {
    const double blue = reward_tigerclaw(events, world, scheme);
    return force == Force::Blue ? blue : -blue;
  }
  return reward_attrition(events, world, force, scheme);
}

std::map<sim::UnitId, double> unit_credit(std::span<const CombatEvent> events, const World& world, Force force,
                                          const scenario::RewardScheme& scheme) {
  std::map<sim::UnitId, double> credit;
  for (const auto& u : world.units) {
    if (u.force == force) credit[u.id] = 0.0;
  }
  if (credit.empty()) return credit;
  for (const auto& e : events) {
    const double points = event_points(e, world, force, scheme);
    if (points == 0.0) continue;
    // Losses go to the victim, kills and damage dealt to the shooter.
    sim::UnitId unit = sim::kNoUnit;
    if (e.kind == EventKind::Damaged || e.kind == EventKind::Destroyed) {
      unit = force_of(world, e.actor) == force ? e.actor : e.target;
    } else if (force_of(world, e.actor) == force) {
      unit = e.actor;
    }
    if (world.has_unit(unit) && force_of(world, unit) == force) {
      credit[unit] += points;
    } else {
      for (auto& entry : credit) entry.second += points / static_cast<double>(credit.size());
    }
  }
  if (scheme.kind == scenario::RewardKind::Attrition) {
    for (const auto& u : world.units) {
      if (u.force == force && u.alive()) credit[u.id] += distance_penalty(world, u, scheme);
    }
  }
  return credit;
}

}  // namespace c2::env
