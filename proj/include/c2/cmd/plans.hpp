#pragma once

// Plain data describing non-learning commanders. Kept free of behavior so
// scenario files can embed scripts and rule sets.

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "c2/env/action_space.hpp"
#include "c2/sim/types.hpp"

namespace c2::cmd {

enum class Posture : std::uint8_t { HoldFire, ReturnFire, FreeFire };

constexpr std::string_view to_string(Posture p) noexcept {
  switch (p) {
    case Posture::HoldFire: return "hold_fire";
    case Posture::ReturnFire: return "return_fire";
    case Posture::FreeFire: return "free_fire";
  }
  return "unknown";
}

constexpr std::optional<Posture> parse_posture(std::string_view s) noexcept {
  if (s == "hold_fire") return Posture::HoldFire;
  if (s == "return_fire") return Posture::ReturnFire;
  if (s == "free_fire") return Posture::FreeFire;
  return std::nullopt;
}

struct Waypoint {
  sim::Vec2 position;
  int tick = 0;  // earliest tick the group may start toward this waypoint
  friend bool operator==(const Waypoint&, const Waypoint&) = default;
};

struct CoaGroup {
  std::vector<sim::UnitId> units;
  std::vector<Waypoint> waypoints;
  Posture posture = Posture::ReturnFire;
  friend bool operator==(const CoaGroup&, const CoaGroup&) = default;
};

struct CoaScript {
  std::vector<CoaGroup> groups;
  friend bool operator==(const CoaScript&, const CoaScript&) = default;
};

enum class Predicate : std::uint8_t {
  Always,
  TakingFire,
  EnemyInRange,
  EnemyPerceived,
  DamageAbove,
  IsIndirect,
  FireSupportAvailable,
};

constexpr std::string_view to_string(Predicate p) noexcept {
  switch (p) {
    case Predicate::Always: return "always";
    case Predicate::TakingFire: return "taking_fire";
    case Predicate::EnemyInRange: return "enemy_in_range";
    case Predicate::EnemyPerceived: return "enemy_perceived";
    case Predicate::DamageAbove: return "damage_above";
    case Predicate::IsIndirect: return "is_indirect";
    case Predicate::FireSupportAvailable: return "fire_support_available";
  }
  return "unknown";
}

constexpr std::optional<Predicate> parse_predicate(std::string_view s) noexcept {
  for (auto p : {Predicate::Always, Predicate::TakingFire, Predicate::EnemyInRange, Predicate::EnemyPerceived,
                 Predicate::DamageAbove, Predicate::IsIndirect, Predicate::FireSupportAvailable}) {
    if (to_string(p) == s) return p;
  }
  return std::nullopt;
}

struct Condition {
  Predicate predicate = Predicate::Always;
  bool negate = false;
  double threshold = 0.0;  // DamageAbove only
  friend bool operator==(const Condition&, const Condition&) = default;
};

/// Fires when every condition holds. With `alternate` set, the rule issues
/// `action` on even ticks and `alternate` on odd ticks.
struct DoctrineRule {
  int priority = 0;
  std::vector<Condition> all_of;
  env::DiscreteAction action = env::DiscreteAction::NoOp;
  std::optional<env::DiscreteAction> alternate;
  friend bool operator==(const DoctrineRule&, const DoctrineRule&) = default;
};

/// Derived bot schedule: re-plan every (11 - level) ticks, commit level/10 of
/// the force, read true enemy positions only at level 10.
struct BotConfig {
  int level = 5;

  int decision_period() const noexcept { return 11 - level; }
  double aggression() const noexcept { return level / 10.0; }
  bool full_map_vision() const noexcept { return level == 10; }
  bool valid() const noexcept { return level >= 1 && level <= 10; }
  friend bool operator==(const BotConfig&, const BotConfig&) = default;
};

}  // namespace c2::cmd
