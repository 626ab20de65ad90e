#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "c2/cmd/plans.hpp"
#include "c2/sim/region.hpp"
#include "c2/sim/terrain.hpp"
#include "c2/sim/world.hpp"

namespace c2::scenario {

struct AttributeOverrides {
  std::optional<double> speed_max;
  std::optional<double> strength;
  std::optional<double> weapon_range_km;
  std::optional<double> weapon_damage;
  std::optional<int> shots_per_tick;
  std::optional<double> sensor_range_km;
  std::optional<int> ammo;
  std::optional<double> accuracy;
  std::optional<bool> passive;
  friend bool operator==(const AttributeOverrides&, const AttributeOverrides&) = default;
};

struct UnitSpec {
  sim::UnitClass unit_class = sim::UnitClass::Infantry;
  sim::Force force = sim::Force::Blue;
  sim::Vec2 spawn;
  int count = 1;
  AttributeOverrides overrides;
  std::string symbol_code;  // display metadata only
  friend bool operator==(const UnitSpec&, const UnitSpec&) = default;
};

/// Class attribute table used when a spec carries no override.
struct ClassDefaults {
  double speed_max;
  double strength;
  double weapon_range_km;
  double weapon_damage;
  int shots_per_tick;
  double sensor_range_km;
  int ammo;
  double accuracy;
  bool indirect;
  double fuel_capacity;
  double fuel_rate;
};

const ClassDefaults& defaults_for(sim::UnitClass c) noexcept;

/// Starting cruise speed as a share of speed_max.
inline constexpr double kInitialSpeedFraction = 0.6;

enum class RewardKind : std::uint8_t { TigerClaw, Attrition };

struct RewardScheme {
  RewardKind kind = RewardKind::TigerClaw;
  // TigerClaw: crossing/retreat and kill/loss points.
  double crossing_points = 10.0;
  double kill_points = 10.0;
  // Attrition: per-event weights and per-km distance penalty.
  double friendly_damaged = -0.5;
  double friendly_destroyed = -1.0;
  double enemy_damaged = 0.5;
  double enemy_destroyed = 1.0;
  double km_penalty = 0.01;
  friend bool operator==(const RewardScheme&, const RewardScheme&) = default;
};

struct ScriptedController {
  cmd::CoaScript coa;
  friend bool operator==(const ScriptedController&, const ScriptedController&) = default;
};
struct BotController {
  cmd::BotConfig config;
  friend bool operator==(const BotController&, const BotController&) = default;
};
struct DoctrineController {
  std::vector<cmd::DoctrineRule> rules;  // empty means the shipped default set
  friend bool operator==(const DoctrineController&, const DoctrineController&) = default;
};
struct ExternalController {
  friend bool operator==(const ExternalController&, const ExternalController&) = default;
};

using RedController = std::variant<ScriptedController, BotController, DoctrineController, ExternalController>;

struct Randomization {
  double spawn_jitter = 0.0;     // cells, Chebyshev radius
  double attribute_noise = 0.0;  // relative, uniform in [-noise, +noise]
  friend bool operator==(const Randomization&, const Randomization&) = default;
};

struct Scenario {
  std::string name;
  sim::TerrainGrid terrain{sim::TerrainGrid::kMinSide, sim::TerrainGrid::kMinSide, 1.0};
  std::vector<UnitSpec> roster;
  std::vector<sim::Region> regions;
  std::optional<std::pair<std::string, std::string>> crossing_pair;
  std::vector<std::string> objectives;
  std::array<sim::Vec2, 2> goals{};
  RewardScheme reward_scheme;
  int max_ticks = 1;
  RedController red_controller = BotController{};
  double tick_seconds = 6.0;
  Randomization randomization;
  bool fog_of_war = true;
  sim::CombatModel combat_model = sim::CombatModel::Deterministic;

  double cell_km() const noexcept { return terrain.cell_km(); }
  const sim::Region* find_region(std::string_view name) const noexcept;
  sim::Vec2 goal(sim::Force f) const noexcept { return goals[sim::index_of(f)]; }
  int unit_count(sim::Force f) const noexcept;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

struct Issue {
  std::string path;
  std::string message;
  std::string to_string() const { return path.empty() ? message : path + ": " + message; }
};

/// Either a validated scenario or every violation found.
struct ParseResult {
  std::optional<Scenario> scenario;
  std::vector<Issue> errors;
  bool ok() const noexcept { return scenario.has_value(); }
};

ParseResult parse_scenario(std::string_view text);
ParseResult load_scenario_file(const std::string& path);

/// Canonical JSON; terrain is always written as explicit rows.
std::string serialize_scenario(const Scenario& s);

/// Semantic checks on an in-memory scenario.
std::vector<Issue> validate(const Scenario& s);

/// Stable 64-bit digest of the canonical serialization.
std::uint64_t content_hash(const Scenario& s);

class BuildError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Instantiates units in roster order (ids 0..N-1), applies seeded jitter
/// and seeds the world rng. Pure function of (scenario, seed).
sim::World build_world(const Scenario& s, std::uint64_t seed);

bool region_contains(const sim::Region& region, sim::Vec2 position) noexcept;

/// 64x64 wadi scenario with two crossing corridors, Blue west, Red east.
Scenario builtin_tigerclaw();

/// 16x16 open-ground skirmish: 4 Blue vs 2 Red, attrition scheme.
Scenario builtin_skirmish();

/// Resolves "tigerclaw" / "skirmish" to the built-ins, anything else is read
/// as a file path. Throws std::runtime_error listing issues on failure.
Scenario resolve_scenario(const std::string& name_or_path);

}  // namespace c2::scenario
