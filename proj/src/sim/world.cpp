#include "c2/sim/world.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "c2/core/hash.hpp"

namespace c2::sim {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kStrengthEpsilon = 1e-9;
constexpr double kSampleSpacing = 0.5;  // cells

double wrap_angle(double a) {
  a = std::fmod(a, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  return a;
}

CombatEvent diagnostic(int tick, UnitId actor, DiagnosticCode code, UnitId target = kNoUnit) {
  CombatEvent e;
  e.kind = EventKind::Diagnostic;
  e.tick = tick;
  e.actor = actor;
  e.target = target;
  e.code = code;
  return e;
}

CombatEvent unit_event(EventKind kind, int tick, UnitId actor) {
  CombatEvent e;
  e.kind = kind;
  e.tick = tick;
  e.actor = actor;
  return e;
}

double move_angle(MoveDir dir) {
  switch (dir) {
    case MoveDir::Forward: return 0.0;
    case MoveDir::Backward: return std::numbers::pi;
    case MoveDir::Right: return 0.5 * std::numbers::pi;
    case MoveDir::Left: return -0.5 * std::numbers::pi;
    case MoveDir::None: break;
  }
  return 0.0;
}

struct PendingHit {
  UnitId target;
  UnitId source;
  double amount;
};

// Range/visibility/ammo gate plus shot resolution. Spends ammunition and
// emits Fired/Hit, but leaves strength untouched; returns damage dealt.
double compute_fire(World& world, UnitId attacker_id, UnitId target_id, std::vector<CombatEvent>& out) {
  const int tick = world.tick;
  if (!world.has_unit(attacker_id)) {
    out.push_back(diagnostic(tick, attacker_id, DiagnosticCode::UnknownUnit, target_id));
    return 0.0;
  }
  Unit& attacker = world.unit(attacker_id);
  if (!attacker.alive()) {
    out.push_back(diagnostic(tick, attacker_id, DiagnosticCode::DeadUnit, target_id));
    return 0.0;
  }
  if (!world.has_unit(target_id) || world.unit(target_id).force == attacker.force) {
    out.push_back(diagnostic(tick, attacker_id, DiagnosticCode::InvalidTarget, target_id));
    return 0.0;
  }
  Unit& target = world.unit(target_id);
  if (!target.alive()) {
    out.push_back(diagnostic(tick, attacker_id, DiagnosticCode::DeadTarget, target_id));
    return 0.0;
  }
  if (attacker.ammo <= 0) {
    out.push_back(diagnostic(tick, attacker_id, DiagnosticCode::NoAmmo, target_id));
    return 0.0;
  }
  const double d = distance_km(world, attacker.position, target.position);
  if (d > attacker.weapon_range_km) {
    out.push_back(diagnostic(tick, attacker_id, DiagnosticCode::OutOfRange, target_id));
    return 0.0;
  }
  if (!attacker.indirect && !world.perceived[index_of(attacker.force)][target_id]) {
    out.push_back(diagnostic(tick, attacker_id, DiagnosticCode::NotVisible, target_id));
    return 0.0;
  }

  const int shots = std::min(attacker.shots_per_tick, attacker.ammo);
  attacker.ammo = std::max(0, attacker.ammo - attacker.shots_per_tick);
  attacker.fired = true;
  out.push_back({EventKind::Fired, tick, attacker_id, target_id, std::nullopt, static_cast<double>(shots)});

  int hits = shots;
  if (world.config.combat == CombatModel::Stochastic) {
    const double range = attacker.weapon_range_km;
    const double p = attacker.accuracy * (1.0 - 0.5 * (range > 0.0 ? d / range : 0.0));
    hits = 0;
    for (int s = 0; s < shots; ++s) {
      if (world.rng.bernoulli(p)) ++hits;
    }
  }
  if (hits == 0) return 0.0;

  target.was_hit = true;
  target.last_attacker = attacker_id;
  out.push_back({EventKind::Hit, tick, attacker_id, target_id, std::nullopt, static_cast<double>(hits)});
  return hits * attacker.weapon_damage;
}

void apply_damage(World& world, UnitId target_id, UnitId source, double amount, std::vector<CombatEvent>& out) {
  Unit& target = world.unit(target_id);
  if (!target.alive() || amount <= 0.0) return;
  const double before = target.strength;
  double after = before - amount;
  if (after < kStrengthEpsilon) after = 0.0;
  target.strength = after;
  out.push_back({EventKind::Damaged, world.tick, target_id, source, std::nullopt, before - after});
  if (after == 0.0) {
    out.push_back({EventKind::Destroyed, world.tick, target_id, source, std::nullopt, 0.0});
  }
}

std::optional<UnitId> nearest_engageable(const World& world, const Unit& u) {
  std::optional<UnitId> best;
  double best_d = 0.0;
  const auto& picture = world.perceived[index_of(u.force)];
  for (const Unit& e : world.units) {
    if (e.force == u.force || !e.alive()) continue;
    if (!picture[e.id]) continue;  // even indirect units need a located target
    const double d = distance_km(world, u.position, e.position);
    if (d > u.weapon_range_km) continue;
    if (!best || d < best_d) {
      best = e.id;
      best_d = d;
    }
  }
  return best;
}

void impact_fire_missions(World& world, std::vector<CombatEvent>& out) {
  auto& missions = world.pending_fire_missions;
  std::vector<FireMission> remaining;
  std::vector<FireMission> due;
  for (const auto& m : missions) {
    (m.arrival_tick <= world.tick ? due : remaining).push_back(m);
  }
  missions = std::move(remaining);

  for (const auto& m : due) {
    CombatEvent impact{EventKind::FireMissionImpact, world.tick, m.servicer, m.requester, m.target, m.damage};
    out.push_back(impact);
    const Vec2 aim = center_of(m.target);
    for (Unit& u : world.units) {
      if (!u.alive() || u.force == m.force) continue;
      if ((u.position - aim).norm() > world.config.fire_mission_radius) continue;
      u.was_hit = true;
      u.last_attacker = m.servicer;
      out.push_back({EventKind::Hit, world.tick, m.servicer, u.id, std::nullopt, 1.0});
      apply_damage(world, u.id, m.servicer, m.damage, out);
    }
  }
}

void emit_crossings(World& world, std::vector<CombatEvent>& out) {
  if (!world.crossing) return;
  const auto& trig = *world.crossing;
  for (Unit& u : world.units) {
    if (u.force != Force::Blue || !u.alive()) continue;
    std::int8_t bank = -1;
    if (trig.near_bank.contains(u.position)) {
      bank = 0;
    } else if (trig.far_bank.contains(u.position)) {
      bank = 1;
    }
    if (bank < 0) continue;
    if (u.bank == 0 && bank == 1) {
      out.push_back(unit_event(EventKind::Crossed, world.tick, u.id));
    } else if (u.bank == 1 && bank == 0) {
      out.push_back(unit_event(EventKind::Retreated, world.tick, u.id));
    }
    u.bank = bank;
  }
}

}  // namespace

const Unit& World::unit(UnitId id) const {
  if (!has_unit(id)) throw std::out_of_range("unknown unit id " + std::to_string(id));
  return units[static_cast<std::size_t>(id)];
}

Unit& World::unit(UnitId id) {
  if (!has_unit(id)) throw std::out_of_range("unknown unit id " + std::to_string(id));
  return units[static_cast<std::size_t>(id)];
}

double distance_km(const World& world, Vec2 a, Vec2 b) noexcept {
  return std::hypot(a.x - b.x, a.y - b.y) * world.terrain.cell_km();
}

int living_count(const World& world, Force force) noexcept {
  int n = 0;
  for (const auto& u : world.units) {
    if (u.force == force && u.alive()) ++n;
  }
  return n;
}

void validate_orders(const World& world, std::span<const Order> orders) {
  std::vector<std::string> problems;
  std::vector<UnitId> seen;
  for (const auto& o : orders) {
    const std::string who = "order for unit " + std::to_string(o.unit) + ": ";
    if (o.heading && !std::isfinite(*o.heading)) problems.push_back(who + "non-finite heading");
    if (o.speed && (!std::isfinite(*o.speed) || *o.speed < 0.0)) problems.push_back(who + "speed must be finite and >= 0");
    if (!std::isfinite(o.move_fraction) || o.move_fraction < 0.0 || o.move_fraction > 1.0) {
      problems.push_back(who + "move_fraction outside [0, 1]");
    }
    if (static_cast<int>(o.move) > static_cast<int>(MoveDir::Left)) problems.push_back(who + "unknown move direction");
    if (o.fire_mission && !world.terrain.in_bounds(*o.fire_mission)) {
      problems.push_back(who + "fire mission aim point out of bounds");
    }
    if (std::find(seen.begin(), seen.end(), o.unit) != seen.end()) {
      problems.push_back(who + "duplicate order");
    }
    seen.push_back(o.unit);
  }
  if (!problems.empty()) {
    std::string what = "malformed orders: " + problems.front();
    throw OrderError(what, std::move(problems));
  }
}

const std::vector<CombatEvent>& advance_tick(World& world, std::span<const Order> orders) {
  validate_orders(world, orders);

  world.events.clear();
  auto& out = world.events;
  const int tick = world.tick;

  for (Unit& u : world.units) {
    u.was_hit = false;
    u.fired = false;
  }

  std::vector<const Order*> by_unit(world.units.size(), nullptr);
  for (const auto& o : orders) {
    if (!world.has_unit(o.unit)) {
      out.push_back(diagnostic(tick, o.unit, DiagnosticCode::UnknownUnit));
    } else if (!world.unit(o.unit).alive()) {
      out.push_back(diagnostic(tick, o.unit, DiagnosticCode::DeadUnit));
    } else {
      by_unit[static_cast<std::size_t>(o.unit)] = &o;
    }
  }

  // (1) speed and heading
  for (Unit& u : world.units) {
    const Order* o = by_unit[static_cast<std::size_t>(u.id)];
    if (!o) continue;
    if (o->heading) u.heading = wrap_angle(*o->heading);
    if (o->speed) u.speed = std::clamp(*o->speed, 0.0, u.speed_max);
  }

  // (2) movement
  for (Unit& u : world.units) {
    const Order* o = by_unit[static_cast<std::size_t>(u.id)];
    if (!o || o->move == MoveDir::None || !u.alive()) continue;
    double km = u.speed * world.config.tick_seconds / 3600.0 * o->move_fraction;
    if (u.fuel_rate > 0.0) {
      const double reachable = (u.fuel_capacity - u.fuel_used) / u.fuel_rate;
      if (reachable <= 0.0) {
        out.push_back(diagnostic(tick, u.id, DiagnosticCode::OutOfFuel));
        continue;
      }
      km = std::min(km, reachable);
    }
    if (km <= 0.0) continue;
    const double angle = u.heading + move_angle(o->move);
    const double cells = km / world.terrain.cell_km();
    const Vec2 before = u.position;
    const Vec2 after = move_unit(world, u.id, {std::cos(angle) * cells, std::sin(angle) * cells});
    u.fuel_used += distance_km(world, before, after) * u.fuel_rate;
  }

  // (3) indirect-fire impacts
  impact_fire_missions(world, out);

  // (4) sensing
  refresh_sensing(world);

  // (5) direct fire, resolved simultaneously: damage lands only after every
  // shot of the tick has been drawn.
  std::vector<PendingHit> hits;
  for (Unit& u : world.units) {
    if (!u.alive()) continue;
    const Order* o = by_unit[static_cast<std::size_t>(u.id)];
    if (o && o->fire_mission) {
      auto called = call_for_fire(world, u.id, *o->fire_mission);
      out.insert(out.end(), called.begin(), called.end());
    }
    std::optional<UnitId> target;
    if (o && o->fire_target != kNoUnit) {
      target = o->fire_target;
    } else if (!u.passive && !(o && o->hold_fire)) {
      target = nearest_engageable(world, u);
    }
    if (!target) continue;
    const double dmg = compute_fire(world, u.id, *target, out);
    if (dmg > 0.0) hits.push_back({*target, u.id, dmg});
  }
  for (const auto& h : hits) apply_damage(world, h.target, h.source, h.amount, out);

  // (6) region triggers, final picture, clock
  emit_crossings(world, out);
  refresh_sensing(world);
  world.tick = tick + 1;
  return world.events;
}

Vec2 move_unit(World& world, UnitId unit_id, Vec2 displacement) {
  Unit& u = world.unit(unit_id);
  if (!u.alive()) return u.position;
  const double len = displacement.norm();
  if (len == 0.0) return u.position;
  const int samples = std::max(1, static_cast<int>(std::ceil(len / kSampleSpacing)));
  const Vec2 start = u.position;
  const Vec2 dest = start + displacement;
  for (int i = 1; i <= samples; ++i) {
    const Vec2 p = i == samples ? dest : start + displacement * (static_cast<double>(i) / samples);
    if (!world.terrain.traversable(p)) {
      CombatEvent e = unit_event(EventKind::MoveBlocked, world.tick, unit_id);
      e.cell = cell_of(dest);
      world.events.push_back(e);
      return u.position;
    }
  }
  u.position = dest;
  return dest;
}

std::vector<CombatEvent> resolve_fire(World& world, UnitId attacker_id, UnitId target_id) {
  std::vector<CombatEvent> out;
  const double dmg = compute_fire(world, attacker_id, target_id, out);
  if (dmg > 0.0) apply_damage(world, target_id, attacker_id, dmg, out);
  return out;
}

std::vector<UnitId> visible_enemies(const World& world, UnitId unit_id) {
  std::vector<UnitId> ids;
  if (!world.has_unit(unit_id)) return ids;
  const Unit& u = world.unit(unit_id);
  if (!u.alive()) return ids;
  for (const Unit& e : world.units) {
    if (e.force == u.force || !e.alive()) continue;
    if (distance_km(world, u.position, e.position) <= u.sensor_range_km) ids.push_back(e.id);
  }
  return ids;
}

void refresh_sensing(World& world) {
  for (auto& pic : world.perceived) pic.assign(world.units.size(), 0);
  for (const Unit& u : world.units) {
    if (!u.alive()) continue;
    auto& pic = world.perceived[index_of(u.force)];
    for (const Unit& e : world.units) {
      if (e.force == u.force || !e.alive() || pic[e.id]) continue;
      if (distance_km(world, u.position, e.position) <= u.sensor_range_km) pic[e.id] = 1;
    }
  }
}

bool is_perceived(const World& world, Force by, UnitId enemy) noexcept {
  if (!world.has_unit(enemy)) return false;
  const Unit& e = world.units[static_cast<std::size_t>(enemy)];
  if (e.force == by || !e.alive()) return false;
  if (!world.config.fog_of_war) return true;
  const auto& pic = world.perceived[index_of(by)];
  return static_cast<std::size_t>(enemy) < pic.size() && pic[enemy];
}

std::vector<UnitId> perceived_enemies(const World& world, Force force) {
  std::vector<UnitId> ids;
  for (const Unit& e : world.units) {
    if (is_perceived(world, force, e.id)) ids.push_back(e.id);
  }
  return ids;
}

std::vector<CombatEvent> call_for_fire(World& world, UnitId requester, CellPos target) {
  std::vector<CombatEvent> out;
  if (!world.has_unit(requester)) {
    out.push_back(diagnostic(world.tick, requester, DiagnosticCode::UnknownUnit));
    return out;
  }
  const Unit& req = world.unit(requester);
  if (!req.alive()) {
    out.push_back(diagnostic(world.tick, requester, DiagnosticCode::DeadUnit));
    return out;
  }
  const Vec2 aim = center_of(target);
  Unit* servicer = nullptr;
  double best = 0.0;
  for (Unit& s : world.units) {
    if (s.force != req.force || !s.alive() || !s.indirect || s.ammo <= 0 || s.fired) continue;
    if (distance_km(world, s.position, aim) > s.weapon_range_km) continue;
    const double d = distance_km(world, s.position, req.position);
    if (!servicer || d < best) {
      servicer = &s;
      best = d;
    }
  }
  if (!servicer) {
    CombatEvent e = diagnostic(world.tick, requester, DiagnosticCode::NoFireSupport);
    e.cell = target;
    out.push_back(e);
    return out;
  }
  const int shots = std::min(servicer->shots_per_tick, servicer->ammo);
  servicer->ammo = std::max(0, servicer->ammo - servicer->shots_per_tick);
  servicer->fired = true;
  FireMission m;
  m.target = target;
  m.arrival_tick = world.tick + world.config.fire_mission_delay;
  m.damage = shots * servicer->weapon_damage;
  m.requester = requester;
  m.servicer = servicer->id;
  m.force = req.force;
  world.pending_fire_missions.push_back(m);
  out.push_back({EventKind::FireMissionCalled, world.tick, requester, servicer->id, target, m.damage});
  return out;
}

std::uint64_t state_hash(const World& world) {
  Fnv1a h;
  h.i64(world.tick);
  for (const Unit& u : world.units) {  // units are kept sorted by id
    h.i64(u.id).u64(static_cast<std::uint64_t>(u.force)).u64(static_cast<std::uint64_t>(u.unit_class));
    h.real_rounded(u.position.x).real_rounded(u.position.y).real_rounded(u.heading);
    h.real_rounded(u.speed).real_rounded(u.speed_max);
    h.real_rounded(u.strength).real_rounded(u.strength_max);
    h.real_rounded(u.weapon_range_km).real_rounded(u.weapon_damage).i64(u.shots_per_tick);
    h.real_rounded(u.accuracy).real_rounded(u.sensor_range_km);
    h.i64(u.ammo).i64(u.ammo_max);
    h.real_rounded(u.fuel_used).real_rounded(u.fuel_capacity).real_rounded(u.fuel_rate);
    h.u64((u.passive ? 1u : 0u) | (u.indirect ? 2u : 0u) | (u.was_hit ? 4u : 0u) | (u.fired ? 8u : 0u));
    h.i64(u.last_attacker).i64(u.bank);
  }
  for (const auto& m : world.pending_fire_missions) {
    h.i64(m.target.x).i64(m.target.y).i64(m.arrival_tick).real_rounded(m.damage);
    h.i64(m.requester).i64(m.servicer).u64(static_cast<std::uint64_t>(m.force));
  }
  for (std::uint64_t w : world.rng.state()) h.u64(w);
  return h.digest();
}

}  // namespace c2::sim
