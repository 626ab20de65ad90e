#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string_view>
#include <variant>

#include "c2/sim/types.hpp"

namespace c2::env {

/// The twelve per-unit commands of the vector action space, in order.
enum class DiscreteAction : std::uint8_t {
  NoOp = 0,
  MoveForward,
  MoveBackward,
  MoveRight,
  MoveLeft,
  SpeedUp,
  SlowDown,
  OrientToGoal,
  Halt,
  FireWeapon,
  CallForFire,
  ReactToContact,
};

inline constexpr int kDiscreteActionCount = 12;

inline constexpr std::array<std::string_view, kDiscreteActionCount> kDiscreteActionNames = {
    "no_operation", "move_forward", "move_backward", "move_right",   "move_left",   "speed_up",
    "slow_down",    "orient_to_goal", "halt",       "fire_weapon", "call_for_fire", "react_to_contact"};

constexpr std::string_view to_string(DiscreteAction a) noexcept {
  return kDiscreteActionNames[static_cast<std::size_t>(a)];
}

constexpr std::optional<DiscreteAction> parse_discrete_action(std::string_view s) noexcept {
  for (std::size_t i = 0; i < kDiscreteActionNames.size(); ++i) {
    if (kDiscreteActionNames[i] == s) return static_cast<DiscreteAction>(i);
  }
  return std::nullopt;
}

enum class CompoundId : std::uint8_t { NoOp = 0, Move, Attack };
inline constexpr int kCompoundIdCount = 3;

constexpr std::string_view to_string(CompoundId id) noexcept {
  switch (id) {
    case CompoundId::NoOp: return "no_op";
    case CompoundId::Move: return "move";
    case CompoundId::Attack: return "attack";
  }
  return "unknown";
}

/// Action id plus a spatial argument. x/y are fractions of the map extent in
/// [0, 1); a categorical head over n bins maps bin b to (b + 0.5) / n.
struct CompoundAction {
  CompoundId id = CompoundId::NoOp;
  double x = 0.5;
  double y = 0.5;

  static CompoundAction from_bins(CompoundId id, int x_bin, int y_bin, int bins) noexcept {
    return {id, (x_bin + 0.5) / bins, (y_bin + 0.5) / bins};
  }
  friend bool operator==(const CompoundAction&, const CompoundAction&) = default;
};

using UnitAction = std::variant<DiscreteAction, CompoundAction>;

/// Commands keyed by unit id. Units without an entry receive NoOp.
using ActionSet = std::map<sim::UnitId, UnitAction>;

}  // namespace c2::env
