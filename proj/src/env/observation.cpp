#include "c2/env/observation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace c2::env {

using sim::Force;
using sim::Unit;
using sim::UnitId;
using sim::World;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
// Strength sums are divided by this constant; it exceeds any class default
// so a single unit never saturates the layer.
constexpr double kStrengthNorm = 20.0;

double clamp01(double v) { return std::isfinite(v) ? std::clamp(v, 0.0, 1.0) : 0.0; }

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

int bin_of(double coord, int extent, int n) {
  const int b = static_cast<int>(std::floor(coord * n / extent));
  return std::clamp(b, 0, n - 1);
}

}  // namespace

UnitId nearest_perceived_enemy(const World& world, const Unit& unit) {
  UnitId best = sim::kNoUnit;
  double best_d = 0.0;
  for (const Unit& e : world.units) {
    if (!sim::is_perceived(world, unit.force, e.id)) continue;
    const double d = sim::distance_km(world, unit.position, e.position);
    if (best == sim::kNoUnit || d < best_d) {
      best = e.id;
      best_d = d;
    }
  }
  return best;
}

bool fire_support_available(const World& world, const Unit& unit) {
  const UnitId enemy = nearest_perceived_enemy(world, unit);
  if (enemy == sim::kNoUnit) return false;
  const sim::Vec2 at = world.unit(enemy).position;
  for (const Unit& f : world.units) {
    if (f.force != unit.force || !f.alive() || !f.indirect) continue;
    if (sim::distance_km(world, f.position, at) <= f.weapon_range_km) return true;
  }
  return false;
}

VectorFeatures encode_vector_obs(const World& world, UnitId unit_id, sim::Vec2 goal) {
  const Unit& u = world.unit(unit_id);
  if (!u.alive()) throw std::invalid_argument("cannot observe dead unit " + std::to_string(unit_id));

  const double diag = world.terrain.diagonal_km();
  const double loss = ratio(u.strength_max - u.strength, u.strength_max);
  const int enemies_initial = world.initial_count[sim::index_of(sim::opposing(u.force))];
  const auto perceived = sim::perceived_enemies(world, u.force);
  const sim::Vec2 to_goal = goal - u.position;
  double bearing = std::atan2(to_goal.y, to_goal.x);
  if (bearing < 0.0) bearing += kTwoPi;

  VectorFeatures f{};
  f[0] = loss;
  f[1] = u.position.x / world.terrain.width();
  f[2] = u.position.y / world.terrain.height();
  f[3] = loss;
  f[4] = ratio(u.weapon_range_km, diag);
  f[5] = ratio(u.sensor_range_km, diag);
  f[6] = ratio(u.fuel_used, u.fuel_capacity);
  f[7] = ratio(u.ammo_max - u.ammo, u.ammo_max);
  f[8] = ratio(u.ammo, u.ammo_max);
  f[9] = sim::index_of(u.unit_class) / 6.0;
  f[10] = u.speed_max / kGlobalMaxSpeed;
  f[11] = ratio(static_cast<double>(perceived.size()), enemies_initial);
  f[12] = ratio(sim::distance_km(world, u.position, goal), diag);
  f[13] = to_goal.norm() > 0.0 ? bearing / kTwoPi : 0.0;
  if (f[13] >= 1.0) f[13] = 0.0;
  f[14] = fire_support_available(world, u) ? 1.0 : 0.0;
  f[15] = u.was_hit ? 1.0 : 0.0;
  f[16] = u.fired ? 1.0 : 0.0;
  for (double& v : f) v = clamp01(v);
  return f;
}

SpatialObservation encode_spatial_obs(const World& world, Force force, const SpatialConfig& config,
                                      const SpatialContext& context) {
  const int n = config.n;
  if (n < 1) throw std::invalid_argument("spatial resolution must be >= 1");
  const int plane = n * n;
  const int w = world.terrain.width();
  const int h = world.terrain.height();

  SpatialObservation obs;
  obs.n = n;
  obs.minimap.assign(static_cast<std::size_t>(config.minimap_layers) * plane, 0.0);
  obs.screen.assign(static_cast<std::size_t>(config.screen_layers) * plane, 0.0);
  obs.nonspatial.assign(static_cast<std::size_t>(config.nonspatial), 0.0);

  auto mm = [&](int layer, int bx, int by) -> double& { return obs.minimap[(layer * n + by) * n + bx]; };
  auto sc = [&](int layer, int bx, int by) -> double& { return obs.screen[(layer * n + by) * n + bx]; };

  // Terrain layers: share of the bin's cells with the property.
  std::vector<int> cells_in_bin(plane, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int bx = bin_of(x + 0.5, w, n);
      const int by = bin_of(y + 0.5, h, n);
      ++cells_in_bin[by * n + bx];
      const sim::Cell c = world.terrain.at({x, y});
      if (c != sim::Cell::Impassable) mm(minimap::Passability, bx, by) += 1.0;
      if (c == sim::Cell::Crossing) mm(minimap::CrossingCells, bx, by) += 1.0;
      if (context.objectives) {
        for (const auto& r : *context.objectives) {
          if (r.contains(sim::CellPos{x, y})) {
            mm(minimap::Objectives, bx, by) += 1.0;
            break;
          }
        }
      }
    }
  }
  for (int b = 0; b < plane; ++b) {
    const int count = cells_in_bin[b];
    if (count == 0) continue;
    for (int layer : {minimap::Passability, minimap::CrossingCells, minimap::Objectives}) {
      obs.minimap[layer * plane + b] /= count;
    }
  }

  const int own_initial = world.initial_count[sim::index_of(force)];
  const int enemy_initial = world.initial_count[sim::index_of(sim::opposing(force))];
  int living_own = 0;
  int living_seen = 0;
  std::array<int, sim::kUnitClassCount> per_class{};
  double ammo_sum = 0.0;
  double damage_sum = 0.0;

  for (const Unit& u : world.units) {
    if (!u.alive()) continue;
    const int bx = bin_of(u.position.x, w, n);
    const int by = bin_of(u.position.y, h, n);
    if (u.force == force) {
      ++living_own;
      ++per_class[sim::index_of(u.unit_class)];
      ammo_sum += ratio(u.ammo, u.ammo_max);
      damage_sum += ratio(u.strength_max - u.strength, u.strength_max);
      mm(minimap::FriendlyPresence, bx, by) = 1.0;
      mm(minimap::FriendlyStrength, bx, by) += u.strength / kStrengthNorm;
      sc(sim::index_of(u.unit_class), bx, by) = 1.0;
      if (u.was_hit) sc(screen::TakingFire, bx, by) = 1.0;
      if (u.fired) sc(screen::Fired, bx, by) = 1.0;
      sc(screen::UnitDensity, bx, by) += own_initial > 0 ? 1.0 / own_initial : 0.0;
    } else if (sim::is_perceived(world, force, u.id)) {
      ++living_seen;
      mm(minimap::EnemyPresence, bx, by) = 1.0;
      mm(minimap::EnemyStrength, bx, by) += u.strength / kStrengthNorm;
      sc(screen::EnemyPresence, bx, by) = 1.0;
      sc(screen::EnemyStrength, bx, by) += u.strength / kStrengthNorm;
    }
  }
  const sim::Vec2 goal = world.goal(force);
  sc(screen::GoalMarker, bin_of(goal.x, w, n), bin_of(goal.y, h, n)) = 1.0;

  auto& ns = obs.nonspatial;
  if (ns.size() >= 13) {
    ns[0] = ratio(world.tick, context.max_ticks);
    ns[1] = ratio(living_own, own_initial);
    ns[2] = ratio(living_seen, enemy_initial);
    ns[3] = 0.5 + 0.5 * std::tanh(context.score / config.score_scale);
    for (int c = 0; c < sim::kUnitClassCount; ++c) ns[4 + c] = ratio(per_class[c], own_initial);
    ns[11] = ratio(ammo_sum, living_own);
    ns[12] = ratio(damage_sum, living_own);
  }

  for (double& v : obs.minimap) v = clamp01(v);
  for (double& v : obs.screen) v = clamp01(v);
  for (double& v : obs.nonspatial) v = clamp01(v);
  return obs;
}

}  // namespace c2::env
