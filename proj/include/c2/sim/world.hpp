#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "c2/core/rng.hpp"
#include "c2/sim/region.hpp"
#include "c2/sim/terrain.hpp"
#include "c2/sim/types.hpp"

namespace c2::sim {

/// A company-level entity. Health is an equipment count (strength).
struct Unit {
  UnitId id = kNoUnit;
  Force force = Force::Blue;
  UnitClass unit_class = UnitClass::Infantry;

  Vec2 position;
  double heading = 0.0;    // radians
  double speed = 0.0;      // km/h
  double speed_max = 0.0;  // km/h

  double strength = 0.0;
  double strength_max = 0.0;

  double weapon_range_km = 0.0;
  double weapon_damage = 0.0;  // equipment destroyed per effective shot
  int shots_per_tick = 1;
  double accuracy = 0.8;       // stochastic hit model only
  double sensor_range_km = 0.0;

  int ammo = 0;
  int ammo_max = 0;

  double fuel_used = 0.0;
  double fuel_capacity = 0.0;
  double fuel_rate = 0.0;  // fuel units per km moved

  bool passive = false;   // fires only on explicit orders
  bool indirect = false;  // fires without needing the target in view

  // Combat flags describing the most recently completed tick.
  bool was_hit = false;
  bool fired = false;
  UnitId last_attacker = kNoUnit;

  // Crossing-trigger bank: -1 unknown, 0 near region, 1 far region.
  std::int8_t bank = -1;

  bool alive() const noexcept { return strength > 0.0; }
  friend bool operator==(const Unit&, const Unit&) = default;
};

enum class EventKind : std::uint8_t {
  Fired,
  Hit,
  Damaged,
  Destroyed,
  Crossed,
  Retreated,
  FireMissionCalled,
  FireMissionImpact,
  MoveBlocked,
  Diagnostic,
};

std::string_view to_string(EventKind k) noexcept;

enum class DiagnosticCode : std::uint8_t {
  None,
  UnknownUnit,
  DeadUnit,
  DeadTarget,
  InvalidTarget,
  OutOfRange,
  NotVisible,
  NoAmmo,
  NoFireSupport,
  OutOfFuel,
  WrongForce,
};

std::string_view to_string(DiagnosticCode c) noexcept;

/// One entry of the per-tick event ledger.
///
/// Field roles by kind:
///   Fired / Hit      actor = shooter, target = unit fired upon / struck
///   Damaged          actor = damaged unit, target = source, amount = equipment lost
///   Destroyed        actor = destroyed unit, target = source
///   Crossed/Retreated actor = the Blue unit
///   FireMissionCalled actor = requester, target = servicing unit, cell = aim point
///   FireMissionImpact actor = servicing unit, target = requester, cell = aim point
///   MoveBlocked      actor = unit, cell = blocked destination
///   Diagnostic       actor = unit named in the order, code says why
struct CombatEvent {
  EventKind kind = EventKind::Diagnostic;
  int tick = 0;
  UnitId actor = kNoUnit;
  UnitId target = kNoUnit;
  std::optional<CellPos> cell;
  double amount = 0.0;
  DiagnosticCode code = DiagnosticCode::None;

  friend bool operator==(const CombatEvent&, const CombatEvent&) = default;
};

enum class MoveDir : std::uint8_t { None = 0, Forward, Backward, Right, Left };

/// Per-unit command for one tick.
struct Order {
  UnitId unit = kNoUnit;
  std::optional<double> heading;  // absolute, radians
  std::optional<double> speed;    // km/h, clamped to [0, speed_max]
  MoveDir move = MoveDir::None;
  double move_fraction = 1.0;     // share of the tick's travel distance, in [0, 1]
  UnitId fire_target = kNoUnit;
  std::optional<CellPos> fire_mission;  // call-for-fire aim point
  bool hold_fire = false;               // suppresses automatic engagement

  friend bool operator==(const Order&, const Order&) = default;
};

struct FireMission {
  CellPos target;
  int arrival_tick = 0;
  double damage = 0.0;
  UnitId requester = kNoUnit;
  UnitId servicer = kNoUnit;
  Force force = Force::Blue;

  friend bool operator==(const FireMission&, const FireMission&) = default;
};

enum class CombatModel : std::uint8_t { Deterministic, Stochastic };

struct SimConfig {
  double tick_seconds = 6.0;
  CombatModel combat = CombatModel::Deterministic;
  bool fog_of_war = true;
  int fire_mission_delay = 3;         // ticks
  double fire_mission_radius = 1.0;   // cells

  friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

/// Region pair whose transitions raise Crossed / Retreated for Blue units.
struct CrossingTrigger {
  Region near_bank;
  Region far_bank;
  friend bool operator==(const CrossingTrigger&, const CrossingTrigger&) = default;
};

/// Full simulation truth. Units are stored so that units[i].id == i.
struct World {
  int tick = 0;
  SimConfig config;
  TerrainGrid terrain{TerrainGrid::kMinSide, TerrainGrid::kMinSide, 1.0};
  std::vector<Unit> units;
  Rng rng;
  std::vector<CombatEvent> events;
  std::vector<FireMission> pending_fire_missions;
  std::optional<CrossingTrigger> crossing;
  std::array<Vec2, 2> goals{};
  std::array<int, 2> initial_count{};

  // Fused sensor picture per force, indexed by unit id (refreshed each tick).
  std::array<std::vector<std::uint8_t>, 2> perceived;

  const Unit& unit(UnitId id) const;
  Unit& unit(UnitId id);
  bool has_unit(UnitId id) const noexcept { return id >= 0 && static_cast<std::size_t>(id) < units.size(); }

  Vec2 goal(Force f) const noexcept { return goals[index_of(f)]; }

  friend bool operator==(const World&, const World&) = default;
};

/// Raised by advance_tick for structurally malformed orders; the world is
/// left untouched.
class OrderError : public std::invalid_argument {
 public:
  OrderError(const std::string& what, std::vector<std::string> problems)
      : std::invalid_argument(what), problems_(std::move(problems)) {}
  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// Advances the world by one tick. Phases, in order: speed/heading changes,
/// movement, indirect-fire impacts, sensing, direct fire, event emission.
/// Returns the events of the executed tick (also kept in world.events).
const std::vector<CombatEvent>& advance_tick(World& world, std::span<const Order> orders);

/// Throws OrderError if any order is malformed.
void validate_orders(const World& world, std::span<const Order> orders);

/// Moves a unit by a displacement in cells. The straight segment is sampled
/// at <= 0.5-cell intervals; any out-of-bounds or Impassable sample blocks the
/// whole move and emits MoveBlocked. Returns the resulting position.
Vec2 move_unit(World& world, UnitId unit_id, Vec2 displacement);

/// Fires attacker at target immediately and applies the damage.
std::vector<CombatEvent> resolve_fire(World& world, UnitId attacker_id, UnitId target_id);

/// Living opposing units within the unit's sensor range (inclusive).
std::vector<UnitId> visible_enemies(const World& world, UnitId unit_id);

double distance_km(const World& world, Vec2 a, Vec2 b) noexcept;

/// Recomputes the fused sensor picture of both forces.
void refresh_sensing(World& world);

/// Living enemies in the force's fused picture (all living enemies when fog
/// of war is disabled), ordered by id.
std::vector<UnitId> perceived_enemies(const World& world, Force force);
bool is_perceived(const World& world, Force by, UnitId enemy) noexcept;

/// Queues a call-for-fire at the cell on behalf of the requester, serviced by
/// the nearest friendly indirect unit with range and ammunition.
std::vector<CombatEvent> call_for_fire(World& world, UnitId requester, CellPos target);

int living_count(const World& world, Force force) noexcept;

/// 64-bit stable digest over tick, unit tuples (rounded to 1e-6), pending
/// fire missions and rng state.
std::uint64_t state_hash(const World& world);

}  // namespace c2::sim
