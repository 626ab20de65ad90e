#pragma once

#include <array>
#include <string_view>
#include <vector>

#include "c2/sim/region.hpp"
#include "c2/sim/world.hpp"

namespace c2::env {

inline constexpr int kVectorFeatureCount = 17;

inline constexpr std::array<std::string_view, kVectorFeatureCount> kVectorFeatureNames = {
    "damage_state",       "x_location",      "y_location",
    "equipment_loss",     "weapon_range",    "sensor_range",
    "fuel_consumed",      "ammunition_consumed", "ammunition_total",
    "equipment_category", "maximum_speed",   "perceived_opposition_entities",
    "goal_distance",      "goal_direction",  "fire_support",
    "taking_fire",        "engaging_targets"};

/// Speed used to normalize maximum_speed; above every shipped class.
inline constexpr double kGlobalMaxSpeed = 200.0;

using VectorFeatures = std::array<double, kVectorFeatureCount>;

/// Per-unit feature vector. Enemy-dependent entries read only the force's
/// fused sensor picture. Throws std::invalid_argument for a dead unit.
VectorFeatures encode_vector_obs(const sim::World& world, sim::UnitId unit_id, sim::Vec2 goal);

/// True iff a living friendly indirect unit has the unit's nearest perceived
/// enemy within its weapon range.
bool fire_support_available(const sim::World& world, const sim::Unit& unit);

/// Nearest enemy in the force's picture, or kNoUnit.
sim::UnitId nearest_perceived_enemy(const sim::World& world, const sim::Unit& unit);

struct SpatialConfig {
  int n = 16;
  int minimap_layers = 7;
  int screen_layers = 13;
  int nonspatial = 13;
  double score_scale = 50.0;

  friend bool operator==(const SpatialConfig&, const SpatialConfig&) = default;
};

namespace minimap {
enum Layer : int {
  FriendlyPresence,
  EnemyPresence,
  Passability,
  CrossingCells,
  Objectives,
  FriendlyStrength,
  EnemyStrength,
};
}

namespace screen {
// Layers 0..6 are per-class friendly presence in UnitClass order.
enum Layer : int {
  EnemyPresence = 7,
  EnemyStrength,
  TakingFire,
  Fired,
  GoalMarker,
  UnitDensity,
};
}

/// Layer stacks stored layer-major, then row (y), then column (x).
struct SpatialObservation {
  int n = 0;
  std::vector<double> minimap;
  std::vector<double> screen;
  std::vector<double> nonspatial;

  double minimap_at(int layer, int x, int y) const { return minimap[(layer * n + y) * n + x]; }
  double screen_at(int layer, int x, int y) const { return screen[(layer * n + y) * n + x]; }
  friend bool operator==(const SpatialObservation&, const SpatialObservation&) = default;
};

/// Episode context the spatial encoder needs beyond the world itself.
struct SpatialContext {
  int max_ticks = 1;
  double score = 0.0;
  const std::vector<sim::Region>* objectives = nullptr;
};

SpatialObservation encode_spatial_obs(const sim::World& world, sim::Force force, const SpatialConfig& config,
                                      const SpatialContext& context);

}  // namespace c2::env
