#include "c2/scenario/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "json.hpp"

#include "c2/core/hash.hpp"

namespace c2::scenario {

using nlohmann::json;
using sim::Force;
using sim::UnitClass;
using sim::Vec2;

namespace {

constexpr std::array<ClassDefaults, sim::kUnitClassCount> kDefaults = {{
    // speed  str   range  dmg  shots sensor ammo acc   indirect fuel  rate
    {50.0, 14.0, 2.4, 1.0, 1, 3.5, 60, 0.8, false, 200.0, 1.0},   // Armor
    {55.0, 12.0, 1.8, 0.6, 1, 3.0, 60, 0.8, false, 200.0, 1.0},   // MechInfantry
    {35.0, 6.0, 5.0, 0.6, 1, 2.5, 40, 0.8, true, 200.0, 1.0},     // Mortar
    {150.0, 8.0, 3.0, 0.8, 1, 6.0, 30, 0.8, false, 400.0, 1.0},   // Aviation
    {30.0, 6.0, 12.0, 0.8, 1, 2.5, 40, 0.8, true, 200.0, 1.0},    // Artillery
    {30.0, 8.0, 2.8, 1.2, 1, 3.0, 40, 0.8, false, 200.0, 1.0},    // AntiArmor
    {12.0, 10.0, 1.2, 0.4, 1, 2.5, 80, 0.8, false, 200.0, 1.0},   // Infantry
}};

const std::set<std::string> kTopLevelKeys = {
    "name",         "terrain",     "roster",     "regions",        "crossing_pair", "goals",
    "reward_scheme", "max_ticks",  "red_controller", "tick_seconds", "cell_km",     "randomization",
    "objectives",   "fog_of_war",  "combat_model"};

// ----------------------------------------------------------------- reading

class Reader {
 public:
  std::vector<Issue> issues;

  void error(const std::string& path, std::string msg) { issues.push_back({path, std::move(msg)}); }

  void check_keys(const json& j, const std::string& path, const std::set<std::string>& allowed) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!allowed.count(it.key())) error(path + "." + it.key(), "unknown key");
    }
  }

  bool require_object(const json& j, const std::string& path) {
    if (!j.is_object()) {
      error(path, "expected an object");
      return false;
    }
    return true;
  }

  std::optional<double> number(const json& j, const std::string& path) {
    if (!j.is_number()) {
      error(path, "expected a number");
      return std::nullopt;
    }
    const double v = j.get<double>();
    if (!std::isfinite(v)) {
      error(path, "expected a finite number");
      return std::nullopt;
    }
    return v;
  }

  std::optional<int> integer(const json& j, const std::string& path) {
    if (!j.is_number_integer()) {
      error(path, "expected an integer");
      return std::nullopt;
    }
    return j.get<int>();
  }

  std::optional<std::string> string(const json& j, const std::string& path) {
    if (!j.is_string()) {
      error(path, "expected a string");
      return std::nullopt;
    }
    return j.get<std::string>();
  }

  std::optional<bool> boolean(const json& j, const std::string& path) {
    if (!j.is_boolean()) {
      error(path, "expected a boolean");
      return std::nullopt;
    }
    return j.get<bool>();
  }

  std::optional<Vec2> point(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 2) {
      error(path, "expected [x, y]");
      return std::nullopt;
    }
    auto x = number(j[0], path + "[0]");
    auto y = number(j[1], path + "[1]");
    if (!x || !y) return std::nullopt;
    return Vec2{*x, *y};
  }

  const json* member(const json& j, const std::string& key, const std::string& path, bool required) {
    auto it = j.find(key);
    if (it == j.end()) {
      if (required) error(path + "." + key, "missing required key");
      return nullptr;
    }
    return &*it;
  }
};

std::string line_col(std::string_view text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

std::optional<sim::TerrainGrid> read_terrain(Reader& r, const json& j, double cell_km) {
  const std::string path = "terrain";
  if (!r.require_object(j, path)) return std::nullopt;
  r.check_keys(j, path, {"rows", "open", "wadi"});
  const int kinds = static_cast<int>(j.contains("rows")) + static_cast<int>(j.contains("open")) +
                    static_cast<int>(j.contains("wadi"));
  if (kinds != 1) {
    r.error(path, "expected exactly one of rows, open, wadi");
    return std::nullopt;
  }
  auto make = [&](int w, int h) -> std::optional<sim::TerrainGrid> {
    try {
      return sim::TerrainGrid(w, h, cell_km);
    } catch (const std::invalid_argument& e) {
      r.error(path, e.what());
      return std::nullopt;
    }
  };

  if (j.contains("rows")) {
    const json& rows = j["rows"];
    if (!rows.is_array() || rows.empty() || !rows[0].is_string()) {
      r.error(path + ".rows", "expected a non-empty array of strings");
      return std::nullopt;
    }
    const int h = static_cast<int>(rows.size());
    const int w = static_cast<int>(rows[0].get<std::string>().size());
    auto grid = make(w, h);
    if (!grid) return std::nullopt;
    for (int y = 0; y < h; ++y) {
      const std::string rp = path + ".rows[" + std::to_string(y) + "]";
      if (!rows[y].is_string() || rows[y].get<std::string>().size() != static_cast<std::size_t>(w)) {
        r.error(rp, "rows must be strings of equal length");
        return std::nullopt;
      }
      const std::string row = rows[y].get<std::string>();
      for (int x = 0; x < w; ++x) {
        switch (row[x]) {
          case '.': break;
          case '#': grid->set({x, y}, sim::Cell::Impassable); break;
          case '=': grid->set({x, y}, sim::Cell::Crossing); break;
          default: r.error(rp, std::string("unknown terrain symbol '") + row[x] + "'"); return std::nullopt;
        }
      }
    }
    return grid;
  }

  if (j.contains("open")) {
    const json& o = j["open"];
    if (!r.require_object(o, path + ".open")) return std::nullopt;
    r.check_keys(o, path + ".open", {"width", "height"});
    auto w = r.member(o, "width", path + ".open", true);
    auto h = r.member(o, "height", path + ".open", true);
    if (!w || !h) return std::nullopt;
    auto wi = r.integer(*w, path + ".open.width");
    auto hi = r.integer(*h, path + ".open.height");
    if (!wi || !hi) return std::nullopt;
    return make(*wi, *hi);
  }

  // Procedural wadi: a vertical impassable band [band[0], band[1]] with
  // crossing corridors spanning the listed row ranges.
  const json& wd = j["wadi"];
  const std::string wp = path + ".wadi";
  if (!r.require_object(wd, wp)) return std::nullopt;
  r.check_keys(wd, wp, {"width", "height", "band", "crossings"});
  auto w = r.member(wd, "width", wp, true);
  auto h = r.member(wd, "height", wp, true);
  auto band = r.member(wd, "band", wp, true);
  auto crossings = r.member(wd, "crossings", wp, true);
  if (!w || !h || !band || !crossings) return std::nullopt;
  auto wi = r.integer(*w, wp + ".width");
  auto hi = r.integer(*h, wp + ".height");
  if (!wi || !hi) return std::nullopt;
  auto grid = make(*wi, *hi);
  if (!grid) return std::nullopt;
  if (!band->is_array() || band->size() != 2) {
    r.error(wp + ".band", "expected [x0, x1]");
    return std::nullopt;
  }
  auto x0 = r.integer((*band)[0], wp + ".band[0]");
  auto x1 = r.integer((*band)[1], wp + ".band[1]");
  if (!x0 || !x1) return std::nullopt;
  if (*x0 < 0 || *x1 >= *wi || *x0 > *x1) {
    r.error(wp + ".band", "band outside the grid");
    return std::nullopt;
  }
  for (int y = 0; y < *hi; ++y) {
    for (int x = *x0; x <= *x1; ++x) grid->set({x, y}, sim::Cell::Impassable);
  }
  if (!crossings->is_array()) {
    r.error(wp + ".crossings", "expected an array of [y0, y1]");
    return std::nullopt;
  }
  for (std::size_t i = 0; i < crossings->size(); ++i) {
    const std::string cp = wp + ".crossings[" + std::to_string(i) + "]";
    const json& c = (*crossings)[i];
    if (!c.is_array() || c.size() != 2) {
      r.error(cp, "expected [y0, y1]");
      continue;
    }
    auto y0 = r.integer(c[0], cp + "[0]");
    auto y1 = r.integer(c[1], cp + "[1]");
    if (!y0 || !y1) continue;
    if (*y0 < 0 || *y1 >= *hi || *y0 > *y1) {
      r.error(cp, "crossing rows outside the grid");
      continue;
    }
    for (int y = *y0; y <= *y1; ++y) {
      for (int x = *x0; x <= *x1; ++x) grid->set({x, y}, sim::Cell::Crossing);
    }
  }
  return grid;
}

std::optional<AttributeOverrides> read_overrides(Reader& r, const json& j, const std::string& path) {
  if (!r.require_object(j, path)) return std::nullopt;
  r.check_keys(j, path,
               {"speed_max", "strength", "weapon_range_km", "weapon_damage", "shots_per_tick", "sensor_range_km",
                "ammo", "accuracy", "passive"});
  AttributeOverrides o;
  auto num = [&](const char* key, std::optional<double>& dst) {
    if (auto* v = r.member(j, key, path, false)) dst = r.number(*v, path + "." + key);
  };
  auto integer = [&](const char* key, std::optional<int>& dst) {
    if (auto* v = r.member(j, key, path, false)) dst = r.integer(*v, path + "." + key);
  };
  num("speed_max", o.speed_max);
  num("strength", o.strength);
  num("weapon_range_km", o.weapon_range_km);
  num("weapon_damage", o.weapon_damage);
  integer("shots_per_tick", o.shots_per_tick);
  num("sensor_range_km", o.sensor_range_km);
  integer("ammo", o.ammo);
  num("accuracy", o.accuracy);
  if (auto* v = r.member(j, "passive", path, false)) o.passive = r.boolean(*v, path + ".passive");
  return o;
}

std::optional<UnitSpec> read_unit_spec(Reader& r, const json& j, const std::string& path) {
  if (!r.require_object(j, path)) return std::nullopt;
  r.check_keys(j, path, {"class", "force", "spawn", "count", "overrides", "symbol_code"});
  UnitSpec u;
  bool ok = true;
  if (auto* v = r.member(j, "class", path, true)) {
    if (auto s = r.string(*v, path + ".class")) {
      if (auto c = sim::parse_unit_class(*s)) {
        u.unit_class = *c;
      } else {
        r.error(path + ".class", "unknown unit class '" + *s + "'");
        ok = false;
      }
    } else {
      ok = false;
    }
  } else {
    ok = false;
  }
  if (auto* v = r.member(j, "force", path, true)) {
    if (auto s = r.string(*v, path + ".force")) {
      if (auto f = sim::parse_force(*s)) {
        u.force = *f;
      } else {
        r.error(path + ".force", "force must be blue or red");
        ok = false;
      }
    } else {
      ok = false;
    }
  } else {
    ok = false;
  }
  if (auto* v = r.member(j, "spawn", path, true)) {
    if (auto p = r.point(*v, path + ".spawn")) {
      u.spawn = *p;
    } else {
      ok = false;
    }
  } else {
    ok = false;
  }
  if (auto* v = r.member(j, "count", path, false)) {
    if (auto c = r.integer(*v, path + ".count")) {
      u.count = *c;
    } else {
      ok = false;
    }
  }
  if (auto* v = r.member(j, "overrides", path, false)) {
    if (auto o = read_overrides(r, *v, path + ".overrides")) {
      u.overrides = *o;
    } else {
      ok = false;
    }
  }
  if (auto* v = r.member(j, "symbol_code", path, false)) {
    if (auto s = r.string(*v, path + ".symbol_code")) u.symbol_code = *s;
  }
  if (!ok) return std::nullopt;
  return u;
}

std::optional<sim::Region> read_region(Reader& r, const json& j, const std::string& path) {
  if (!r.require_object(j, path)) return std::nullopt;
  r.check_keys(j, path, {"name", "rects"});
  sim::Region reg;
  auto* name = r.member(j, "name", path, true);
  auto* rects = r.member(j, "rects", path, true);
  if (!name || !rects) return std::nullopt;
  auto n = r.string(*name, path + ".name");
  if (!n) return std::nullopt;
  reg.name = *n;
  if (!rects->is_array()) {
    r.error(path + ".rects", "expected an array of [x0, y0, x1, y1]");
    return std::nullopt;
  }
  for (std::size_t i = 0; i < rects->size(); ++i) {
    const std::string rp = path + ".rects[" + std::to_string(i) + "]";
    const json& rc = (*rects)[i];
    if (!rc.is_array() || rc.size() != 4) {
      r.error(rp, "expected [x0, y0, x1, y1]");
      return std::nullopt;
    }
    std::array<int, 4> v{};
    for (int k = 0; k < 4; ++k) {
      auto iv = r.integer(rc[k], rp + "[" + std::to_string(k) + "]");
      if (!iv) return std::nullopt;
      v[k] = *iv;
    }
    reg.rects.push_back({v[0], v[1], v[2], v[3]});
  }
  return reg;
}

std::optional<RewardScheme> read_reward(Reader& r, const json& j) {
  const std::string path = "reward_scheme";
  if (!r.require_object(j, path)) return std::nullopt;
  RewardScheme rs;
  auto* type = r.member(j, "type", path, true);
  if (!type) return std::nullopt;
  auto t = r.string(*type, path + ".type");
  if (!t) return std::nullopt;
  auto num = [&](const char* key, double& dst) {
    if (auto* v = r.member(j, key, path, false)) {
      if (auto d = r.number(*v, path + "." + key)) dst = *d;
    }
  };
  if (*t == "tigerclaw") {
    rs.kind = RewardKind::TigerClaw;
    r.check_keys(j, path, {"type", "crossing_points", "kill_points"});
    num("crossing_points", rs.crossing_points);
    num("kill_points", rs.kill_points);
  } else if (*t == "attrition") {
    rs.kind = RewardKind::Attrition;
    r.check_keys(j, path,
                 {"type", "friendly_damaged", "friendly_destroyed", "enemy_damaged", "enemy_destroyed", "km_penalty"});
    num("friendly_damaged", rs.friendly_damaged);
    num("friendly_destroyed", rs.friendly_destroyed);
    num("enemy_damaged", rs.enemy_damaged);
    num("enemy_destroyed", rs.enemy_destroyed);
    num("km_penalty", rs.km_penalty);
  } else {
    r.error(path + ".type", "expected tigerclaw or attrition");
    return std::nullopt;
  }
  return rs;
}

std::optional<cmd::CoaScript> read_coa(Reader& r, const json& j, const std::string& path) {
  if (!r.require_object(j, path)) return std::nullopt;
  r.check_keys(j, path, {"groups"});
  cmd::CoaScript script;
  auto* groups = r.member(j, "groups", path, true);
  if (!groups) return std::nullopt;
  if (!groups->is_array()) {
    r.error(path + ".groups", "expected an array");
    return std::nullopt;
  }
  for (std::size_t gi = 0; gi < groups->size(); ++gi) {
    const std::string gp = path + ".groups[" + std::to_string(gi) + "]";
    const json& g = (*groups)[gi];
    if (!r.require_object(g, gp)) continue;
    r.check_keys(g, gp, {"units", "waypoints", "posture"});
    cmd::CoaGroup group;
    if (auto* units = r.member(g, "units", gp, true)) {
      if (!units->is_array()) {
        r.error(gp + ".units", "expected an array of unit ids");
      } else {
        for (std::size_t k = 0; k < units->size(); ++k) {
          if (auto id = r.integer((*units)[k], gp + ".units[" + std::to_string(k) + "]")) group.units.push_back(*id);
        }
      }
    }
    if (auto* posture = r.member(g, "posture", gp, false)) {
      if (auto s = r.string(*posture, gp + ".posture")) {
        if (auto p = cmd::parse_posture(*s)) {
          group.posture = *p;
        } else {
          r.error(gp + ".posture", "unknown posture '" + *s + "'");
        }
      }
    }
    if (auto* wps = r.member(g, "waypoints", gp, true)) {
      if (!wps->is_array()) {
        r.error(gp + ".waypoints", "expected an array");
      } else {
        for (std::size_t k = 0; k < wps->size(); ++k) {
          const std::string wp = gp + ".waypoints[" + std::to_string(k) + "]";
          const json& w = (*wps)[k];
          if (!r.require_object(w, wp)) continue;
          r.check_keys(w, wp, {"at", "tick"});
          cmd::Waypoint waypoint;
          if (auto* at = r.member(w, "at", wp, true)) {
            if (auto p = r.point(*at, wp + ".at")) waypoint.position = *p;
          }
          if (auto* tick = r.member(w, "tick", wp, false)) {
            if (auto t = r.integer(*tick, wp + ".tick")) waypoint.tick = *t;
          }
          group.waypoints.push_back(waypoint);
        }
      }
    }
    script.groups.push_back(std::move(group));
  }
  return script;
}

std::optional<cmd::DoctrineRule> read_rule(Reader& r, const json& j, const std::string& path) {
  if (!r.require_object(j, path)) return std::nullopt;
  r.check_keys(j, path, {"priority", "when", "action", "alternate"});
  cmd::DoctrineRule rule;
  auto* pr = r.member(j, "priority", path, true);
  auto* act = r.member(j, "action", path, true);
  if (!pr || !act) return std::nullopt;
  auto p = r.integer(*pr, path + ".priority");
  auto a = r.string(*act, path + ".action");
  if (!p || !a) return std::nullopt;
  rule.priority = *p;
  if (auto da = env::parse_discrete_action(*a)) {
    rule.action = *da;
  } else {
    r.error(path + ".action", "unknown action '" + *a + "'");
    return std::nullopt;
  }
  if (auto* alt = r.member(j, "alternate", path, false)) {
    if (auto s = r.string(*alt, path + ".alternate")) {
      if (auto da = env::parse_discrete_action(*s)) {
        rule.alternate = *da;
      } else {
        r.error(path + ".alternate", "unknown action '" + *s + "'");
      }
    }
  }
  if (auto* when = r.member(j, "when", path, false)) {
    if (!when->is_array()) {
      r.error(path + ".when", "expected an array of conditions");
      return std::nullopt;
    }
    for (std::size_t k = 0; k < when->size(); ++k) {
      const std::string cp = path + ".when[" + std::to_string(k) + "]";
      const json& c = (*when)[k];
      if (!r.require_object(c, cp)) continue;
      r.check_keys(c, cp, {"predicate", "negate", "threshold"});
      cmd::Condition cond;
      if (auto* pv = r.member(c, "predicate", cp, true)) {
        if (auto s = r.string(*pv, cp + ".predicate")) {
          if (auto pred = cmd::parse_predicate(*s)) {
            cond.predicate = *pred;
          } else {
            r.error(cp + ".predicate", "unknown predicate '" + *s + "'");
          }
        }
      }
      if (auto* nv = r.member(c, "negate", cp, false)) {
        if (auto b = r.boolean(*nv, cp + ".negate")) cond.negate = *b;
      }
      if (auto* tv = r.member(c, "threshold", cp, false)) {
        if (auto d = r.number(*tv, cp + ".threshold")) cond.threshold = *d;
      }
      rule.all_of.push_back(cond);
    }
  }
  return rule;
}

std::optional<RedController> read_controller(Reader& r, const json& j) {
  const std::string path = "red_controller";
  if (!r.require_object(j, path)) return std::nullopt;
  auto* type = r.member(j, "type", path, true);
  if (!type) return std::nullopt;
  auto t = r.string(*type, path + ".type");
  if (!t) return std::nullopt;
  if (*t == "scripted") {
    r.check_keys(j, path, {"type", "coa"});
    auto* coa = r.member(j, "coa", path, true);
    if (!coa) return std::nullopt;
    auto script = read_coa(r, *coa, path + ".coa");
    if (!script) return std::nullopt;
    return ScriptedController{*script};
  }
  if (*t == "bot") {
    r.check_keys(j, path, {"type", "level"});
    auto* level = r.member(j, "level", path, true);
    if (!level) return std::nullopt;
    auto l = r.integer(*level, path + ".level");
    if (!l) return std::nullopt;
    return BotController{cmd::BotConfig{*l}};
  }
  if (*t == "doctrine") {
    r.check_keys(j, path, {"type", "rules"});
    DoctrineController dc;
    if (auto* rules = r.member(j, "rules", path, false)) {
      if (!rules->is_array()) {
        r.error(path + ".rules", "expected an array");
        return std::nullopt;
      }
      for (std::size_t k = 0; k < rules->size(); ++k) {
        if (auto rule = read_rule(r, (*rules)[k], path + ".rules[" + std::to_string(k) + "]")) {
          dc.rules.push_back(*rule);
        }
      }
    }
    return dc;
  }
  if (*t == "external") {
    r.check_keys(j, path, {"type"});
    return ExternalController{};
  }
  r.error(path + ".type", "expected scripted, bot, doctrine or external");
  return std::nullopt;
}

// ----------------------------------------------------------------- writing

json point_json(Vec2 p) { return json::array({p.x, p.y}); }

json overrides_json(const AttributeOverrides& o) {
  json j = json::object();
  if (o.speed_max) j["speed_max"] = *o.speed_max;
  if (o.strength) j["strength"] = *o.strength;
  if (o.weapon_range_km) j["weapon_range_km"] = *o.weapon_range_km;
  if (o.weapon_damage) j["weapon_damage"] = *o.weapon_damage;
  if (o.shots_per_tick) j["shots_per_tick"] = *o.shots_per_tick;
  if (o.sensor_range_km) j["sensor_range_km"] = *o.sensor_range_km;
  if (o.ammo) j["ammo"] = *o.ammo;
  if (o.accuracy) j["accuracy"] = *o.accuracy;
  if (o.passive) j["passive"] = *o.passive;
  return j;
}

json controller_json(const RedController& rc) {
  return std::visit(
      [](const auto& c) -> json {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, ScriptedController>) {
          json groups = json::array();
          for (const auto& g : c.coa.groups) {
            json wps = json::array();
            for (const auto& w : g.waypoints) wps.push_back({{"at", point_json(w.position)}, {"tick", w.tick}});
            groups.push_back({{"units", g.units}, {"posture", cmd::to_string(g.posture)}, {"waypoints", wps}});
          }
          return {{"type", "scripted"}, {"coa", {{"groups", groups}}}};
        } else if constexpr (std::is_same_v<T, BotController>) {
          return {{"type", "bot"}, {"level", c.config.level}};
        } else if constexpr (std::is_same_v<T, DoctrineController>) {
          json rules = json::array();
          for (const auto& rule : c.rules) {
            json when = json::array();
            for (const auto& cond : rule.all_of) {
              when.push_back({{"predicate", cmd::to_string(cond.predicate)},
                              {"negate", cond.negate},
                              {"threshold", cond.threshold}});
            }
            json jr = {{"priority", rule.priority}, {"when", when}, {"action", env::to_string(rule.action)}};
            if (rule.alternate) jr["alternate"] = env::to_string(*rule.alternate);
            rules.push_back(jr);
          }
          return {{"type", "doctrine"}, {"rules", rules}};
        } else {
          return {{"type", "external"}};
        }
      },
      rc);
}

std::string symbol_for(UnitClass c, Force f) {
  static constexpr std::array<std::string_view, sim::kUnitClassCount> kFunction = {
      "UCA----", "UCIZ---", "UCFM---", "UUAR---", "UCF----", "UCAA---", "UCI----"};
  std::string code = "S";
  code += f == Force::Blue ? 'F' : 'H';
  code += c == UnitClass::Aviation ? "AP" : "GP";
  code += kFunction[sim::index_of(c)];
  return code;
}

}  // namespace

const ClassDefaults& defaults_for(UnitClass c) noexcept { return kDefaults[sim::index_of(c)]; }

const sim::Region* Scenario::find_region(std::string_view n) const noexcept {
  for (const auto& r : regions) {
    if (r.name == n) return &r;
  }
  return nullptr;
}

int Scenario::unit_count(Force f) const noexcept {
  int n = 0;
  for (const auto& u : roster) {
    if (u.force == f) n += u.count;
  }
  return n;
}

bool region_contains(const sim::Region& region, Vec2 position) noexcept { return region.contains(position); }

std::vector<Issue> validate(const Scenario& s) {
  std::vector<Issue> out;
  auto err = [&](std::string path, std::string msg) { out.push_back({std::move(path), std::move(msg)}); };
  const auto& t = s.terrain;

  std::set<std::string> names;
  for (std::size_t i = 0; i < s.regions.size(); ++i) {
    const auto& r = s.regions[i];
    const std::string p = "regions[" + std::to_string(i) + "]";
    if (!names.insert(r.name).second) err(p + ".name", "duplicate region name '" + r.name + "'");
    if (r.rects.empty()) err(p + ".rects", "region needs at least one rectangle");
    for (std::size_t k = 0; k < r.rects.size(); ++k) {
      const auto& rc = r.rects[k];
      if (rc.x0 > rc.x1 || rc.y0 > rc.y1 || !t.in_bounds(sim::CellPos{rc.x0, rc.y0}) ||
          !t.in_bounds(sim::CellPos{rc.x1, rc.y1})) {
        err(p + ".rects[" + std::to_string(k) + "]", "rectangle empty or out of bounds");
      }
    }
  }
  if (s.crossing_pair) {
    for (const auto& n : {s.crossing_pair->first, s.crossing_pair->second}) {
      if (!s.find_region(n)) err("crossing_pair", "unknown region '" + n + "'");
    }
  }
  for (const auto& n : s.objectives) {
    if (!s.find_region(n)) err("objectives", "unknown region '" + n + "'");
  }

  for (std::size_t i = 0; i < s.roster.size(); ++i) {
    const auto& u = s.roster[i];
    const std::string p = "roster[" + std::to_string(i) + "]";
    if (u.count < 1) err(p + ".count", "count must be >= 1");
    if (!t.traversable(u.spawn)) err(p + ".spawn", "spawn is out of bounds or on impassable terrain");
    const auto& o = u.overrides;
    auto positive = [&](const char* name, const auto& v) {
      if (v && !(*v > 0)) err(p + ".overrides." + name, "override must be positive");
    };
    positive("speed_max", o.speed_max);
    positive("strength", o.strength);
    positive("weapon_range_km", o.weapon_range_km);
    positive("weapon_damage", o.weapon_damage);
    positive("shots_per_tick", o.shots_per_tick);
    positive("sensor_range_km", o.sensor_range_km);
    positive("ammo", o.ammo);
    positive("accuracy", o.accuracy);
    if (o.accuracy && *o.accuracy > 1.0) err(p + ".overrides.accuracy", "accuracy must be <= 1");
  }

  for (Force f : {Force::Blue, Force::Red}) {
    if (!t.in_bounds(s.goal(f))) err(std::string("goals.") + std::string(sim::to_string(f)), "goal out of bounds");
  }
  if (s.max_ticks < 1) err("max_ticks", "max_ticks must be >= 1");
  if (!(s.tick_seconds > 0.0)) err("tick_seconds", "tick_seconds must be positive");
  if (s.randomization.spawn_jitter < 0.0) err("randomization.spawn_jitter", "must be >= 0");
  if (s.randomization.attribute_noise < 0.0 || s.randomization.attribute_noise >= 1.0) {
    err("randomization.attribute_noise", "must be in [0, 1)");
  }

  // Red unit ids, in roster order.
  std::set<sim::UnitId> red_ids;
  {
    sim::UnitId id = 0;
    for (const auto& u : s.roster) {
      for (int k = 0; k < std::max(0, u.count); ++k, ++id) {
        if (u.force == Force::Red) red_ids.insert(id);
      }
    }
  }

  if (const auto* sc = std::get_if<ScriptedController>(&s.red_controller)) {
    for (std::size_t gi = 0; gi < sc->coa.groups.size(); ++gi) {
      const auto& g = sc->coa.groups[gi];
      const std::string p = "red_controller.coa.groups[" + std::to_string(gi) + "]";
      for (auto id : g.units) {
        if (!red_ids.count(id)) err(p + ".units", "unit " + std::to_string(id) + " is not a red unit");
      }
      for (std::size_t k = 0; k < g.waypoints.size(); ++k) {
        const auto& w = g.waypoints[k];
        if (!t.traversable(w.position)) err(p + ".waypoints[" + std::to_string(k) + "]", "waypoint not traversable");
        if (k > 0 && w.tick < g.waypoints[k - 1].tick) {
          err(p + ".waypoints[" + std::to_string(k) + "]", "waypoint ticks must be nondecreasing");
        }
      }
    }
  } else if (const auto* bc = std::get_if<BotController>(&s.red_controller)) {
    if (!bc->config.valid()) err("red_controller.level", "bot level must be in [1, 10]");
  } else if (const auto* dc = std::get_if<DoctrineController>(&s.red_controller)) {
    std::set<int> prios;
    for (const auto& rule : dc->rules) {
      if (!prios.insert(rule.priority).second) {
        err("red_controller.rules", "duplicate rule priority " + std::to_string(rule.priority));
      }
    }
  }
  return out;
}

ParseResult parse_scenario(std::string_view text) {
  ParseResult result;
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    result.errors.push_back({"", "syntax error at " + line_col(text, e.byte == 0 ? 0 : e.byte - 1) + ": " + e.what()});
    return result;
  }

  Reader r;
  if (!j.is_object()) {
    r.error("", "scenario must be a JSON object");
    result.errors = r.issues;
    return result;
  }
  r.check_keys(j, "", kTopLevelKeys);
  for (auto& issue : r.issues) issue.path.erase(0, issue.path.starts_with(".") ? 1 : 0);

  Scenario s;
  bool structural_ok = true;
  auto need = [&](const char* key) -> const json* {
    auto* v = r.member(j, key, "", true);
    if (!v) structural_ok = false;
    return v;
  };

  double cell_km = 1.0;
  if (auto* v = need("cell_km")) {
    if (auto d = r.number(*v, "cell_km")) {
      cell_km = *d;
      if (!(cell_km > 0.0)) {
        r.error("cell_km", "cell_km must be positive");
        structural_ok = false;
      }
    } else {
      structural_ok = false;
    }
  }
  if (auto* v = need("name")) {
    if (auto n = r.string(*v, "name")) s.name = *n;
  }
  if (auto* v = need("terrain"); v && structural_ok) {
    if (auto t = read_terrain(r, *v, cell_km)) {
      s.terrain = *t;
    } else {
      structural_ok = false;
    }
  }
  if (auto* v = need("roster")) {
    if (!v->is_array()) {
      r.error("roster", "expected an array");
    } else {
      for (std::size_t i = 0; i < v->size(); ++i) {
        if (auto u = read_unit_spec(r, (*v)[i], "roster[" + std::to_string(i) + "]")) s.roster.push_back(*u);
      }
    }
  }
  if (auto* v = need("regions")) {
    if (!v->is_array()) {
      r.error("regions", "expected an array");
    } else {
      for (std::size_t i = 0; i < v->size(); ++i) {
        if (auto reg = read_region(r, (*v)[i], "regions[" + std::to_string(i) + "]")) s.regions.push_back(*reg);
      }
    }
  }
  if (auto* v = r.member(j, "crossing_pair", "", false); v && !v->is_null()) {
    if (!v->is_array() || v->size() != 2 || !(*v)[0].is_string() || !(*v)[1].is_string()) {
      r.error("crossing_pair", "expected [near_region, far_region]");
    } else {
      s.crossing_pair = std::make_pair((*v)[0].get<std::string>(), (*v)[1].get<std::string>());
    }
  }
  if (auto* v = r.member(j, "objectives", "", false)) {
    if (!v->is_array()) {
      r.error("objectives", "expected an array of region names");
    } else {
      for (std::size_t i = 0; i < v->size(); ++i) {
        if (auto n = r.string((*v)[i], "objectives[" + std::to_string(i) + "]")) s.objectives.push_back(*n);
      }
    }
  }
  if (auto* v = need("goals")) {
    if (r.require_object(*v, "goals")) {
      r.check_keys(*v, "goals", {"blue", "red"});
      for (Force f : {Force::Blue, Force::Red}) {
        const std::string key(sim::to_string(f));
        if (auto* g = r.member(*v, key, "goals", true)) {
          if (auto p = r.point(*g, "goals." + key)) s.goals[sim::index_of(f)] = *p;
        }
      }
    }
  }
  if (auto* v = need("reward_scheme")) {
    if (auto rs = read_reward(r, *v)) s.reward_scheme = *rs;
  }
  if (auto* v = need("max_ticks")) {
    if (auto m = r.integer(*v, "max_ticks")) s.max_ticks = *m;
  }
  if (auto* v = need("red_controller")) {
    if (auto rc = read_controller(r, *v)) s.red_controller = *rc;
  }
  if (auto* v = r.member(j, "tick_seconds", "", false)) {
    if (auto d = r.number(*v, "tick_seconds")) s.tick_seconds = *d;
  }
  if (auto* v = r.member(j, "randomization", "", false)) {
    if (r.require_object(*v, "randomization")) {
      r.check_keys(*v, "randomization", {"spawn_jitter", "attribute_noise"});
      if (auto* jit = r.member(*v, "spawn_jitter", "randomization", false)) {
        if (auto d = r.number(*jit, "randomization.spawn_jitter")) s.randomization.spawn_jitter = *d;
      }
      if (auto* noise = r.member(*v, "attribute_noise", "randomization", false)) {
        if (auto d = r.number(*noise, "randomization.attribute_noise")) s.randomization.attribute_noise = *d;
      }
    }
  }
  if (auto* v = r.member(j, "fog_of_war", "", false)) {
    if (auto b = r.boolean(*v, "fog_of_war")) s.fog_of_war = *b;
  }
  if (auto* v = r.member(j, "combat_model", "", false)) {
    if (auto m = r.string(*v, "combat_model")) {
      if (*m == "deterministic") {
        s.combat_model = sim::CombatModel::Deterministic;
      } else if (*m == "stochastic") {
        s.combat_model = sim::CombatModel::Stochastic;
      } else {
        r.error("combat_model", "expected deterministic or stochastic");
      }
    }
  }

  for (auto& issue : r.issues) {
    if (issue.path.starts_with(".")) issue.path.erase(0, 1);
  }
  result.errors = std::move(r.issues);
  if (structural_ok) {
    auto semantic = validate(s);
    result.errors.insert(result.errors.end(), semantic.begin(), semantic.end());
  }
  if (result.errors.empty()) result.scenario = std::move(s);
  return result;
}

ParseResult load_scenario_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {std::nullopt, {{"", "cannot open scenario file '" + path + "'"}}};
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::string serialize_scenario(const Scenario& s) {
  json j;
  j["name"] = s.name;
  j["cell_km"] = s.cell_km();
  j["tick_seconds"] = s.tick_seconds;
  j["max_ticks"] = s.max_ticks;
  j["terrain"] = {{"rows", s.terrain.to_rows()}};

  json roster = json::array();
  for (const auto& u : s.roster) {
    json ju = {{"class", sim::to_string(u.unit_class)},
               {"force", sim::to_string(u.force)},
               {"spawn", point_json(u.spawn)},
               {"count", u.count}};
    json o = overrides_json(u.overrides);
    if (!o.empty()) ju["overrides"] = o;
    if (!u.symbol_code.empty()) ju["symbol_code"] = u.symbol_code;
    roster.push_back(ju);
  }
  j["roster"] = roster;

  json regions = json::array();
  for (const auto& r : s.regions) {
    json rects = json::array();
    for (const auto& rc : r.rects) rects.push_back({rc.x0, rc.y0, rc.x1, rc.y1});
    regions.push_back({{"name", r.name}, {"rects", rects}});
  }
  j["regions"] = regions;
  j["crossing_pair"] = s.crossing_pair ? json::array({s.crossing_pair->first, s.crossing_pair->second}) : json(nullptr);
  j["objectives"] = s.objectives;
  j["goals"] = {{"blue", point_json(s.goal(Force::Blue))}, {"red", point_json(s.goal(Force::Red))}};

  const auto& rs = s.reward_scheme;
  if (rs.kind == RewardKind::TigerClaw) {
    j["reward_scheme"] = {{"type", "tigerclaw"}, {"crossing_points", rs.crossing_points}, {"kill_points", rs.kill_points}};
  } else {
    j["reward_scheme"] = {{"type", "attrition"},
                          {"friendly_damaged", rs.friendly_damaged},
                          {"friendly_destroyed", rs.friendly_destroyed},
                          {"enemy_damaged", rs.enemy_damaged},
                          {"enemy_destroyed", rs.enemy_destroyed},
                          {"km_penalty", rs.km_penalty}};
  }
  j["red_controller"] = controller_json(s.red_controller);
  j["randomization"] = {{"spawn_jitter", s.randomization.spawn_jitter},
                        {"attribute_noise", s.randomization.attribute_noise}};
  j["fog_of_war"] = s.fog_of_war;
  j["combat_model"] = s.combat_model == sim::CombatModel::Deterministic ? "deterministic" : "stochastic";
  return j.dump(2);
}

std::uint64_t content_hash(const Scenario& s) { return Fnv1a{}.str(serialize_scenario(s)).digest(); }

sim::World build_world(const Scenario& s, std::uint64_t seed) {
  sim::World w;
  w.config.tick_seconds = s.tick_seconds;
  w.config.combat = s.combat_model;
  w.config.fog_of_war = s.fog_of_war;
  w.terrain = s.terrain;
  w.goals = s.goals;

  Rng jitter(derive_seed(seed, 0x6A17));
  const double radius = s.randomization.spawn_jitter;
  const double noise = s.randomization.attribute_noise;
  auto perturb = [&](double v) { return noise > 0.0 ? v * (1.0 + jitter.uniform(-noise, noise)) : v; };

  for (const auto& spec : s.roster) {
    const ClassDefaults& d = defaults_for(spec.unit_class);
    const auto& o = spec.overrides;
    for (int k = 0; k < spec.count; ++k) {
      sim::Unit u;
      u.id = static_cast<sim::UnitId>(w.units.size());
      u.force = spec.force;
      u.unit_class = spec.unit_class;
      u.speed_max = perturb(o.speed_max.value_or(d.speed_max));
      u.strength_max = perturb(o.strength.value_or(d.strength));
      u.strength = u.strength_max;
      u.weapon_range_km = perturb(o.weapon_range_km.value_or(d.weapon_range_km));
      u.weapon_damage = perturb(o.weapon_damage.value_or(d.weapon_damage));
      u.shots_per_tick = o.shots_per_tick.value_or(d.shots_per_tick);
      u.sensor_range_km = perturb(o.sensor_range_km.value_or(d.sensor_range_km));
      u.ammo_max = o.ammo.value_or(d.ammo);
      u.ammo = u.ammo_max;
      u.accuracy = o.accuracy.value_or(d.accuracy);
      u.indirect = d.indirect;
      u.fuel_capacity = d.fuel_capacity;
      u.fuel_rate = d.fuel_rate;
      // Blue units only engage on command; Red units keep default aggressiveness.
      u.passive = o.passive.value_or(spec.force == Force::Blue);
      u.speed = kInitialSpeedFraction * u.speed_max;

      Vec2 pos = spec.spawn;
      if (radius > 0.0) {
        bool placed = false;
        for (int attempt = 0; attempt < 16 && !placed; ++attempt) {
          const Vec2 candidate{spec.spawn.x + jitter.uniform(-radius, radius),
                               spec.spawn.y + jitter.uniform(-radius, radius)};
          if (s.terrain.traversable(candidate)) {
            pos = candidate;
            placed = true;
          }
        }
        if (!placed) {
          throw BuildError("could not place unit " + std::to_string(u.id) + " on traversable ground after 16 draws");
        }
      }
      u.position = pos;
      const Vec2 to_goal = s.goal(spec.force) - pos;
      u.heading = to_goal.norm() > 0.0 ? std::atan2(to_goal.y, to_goal.x) : 0.0;
      if (u.heading < 0.0) u.heading += 2.0 * std::numbers::pi;
      w.units.push_back(u);
    }
  }
  for (Force f : {Force::Blue, Force::Red}) w.initial_count[sim::index_of(f)] = s.unit_count(f);

  if (s.crossing_pair) {
    w.crossing = sim::CrossingTrigger{*s.find_region(s.crossing_pair->first), *s.find_region(s.crossing_pair->second)};
    for (auto& u : w.units) {
      if (u.force != Force::Blue) continue;
      if (w.crossing->near_bank.contains(u.position)) {
        u.bank = 0;
      } else if (w.crossing->far_bank.contains(u.position)) {
        u.bank = 1;
      }
    }
  }
  w.rng.reseed(seed);
  sim::refresh_sensing(w);
  return w;
}

Scenario builtin_tigerclaw() {
  constexpr int kSide = 64;
  constexpr int kBandX0 = 30;
  constexpr int kBandX1 = 33;
  Scenario s;
  s.name = "tigerclaw-desk";
  s.terrain = sim::TerrainGrid(kSide, kSide, 0.25);
  for (int y = 0; y < kSide; ++y) {
    const bool crossing = (y >= 12 && y <= 15) || (y >= 46 && y <= 49);
    for (int x = kBandX0; x <= kBandX1; ++x) {
      s.terrain.set({x, y}, crossing ? sim::Cell::Crossing : sim::Cell::Impassable);
    }
  }

  auto add = [&](UnitClass c, Force f, Vec2 spawn, int count) {
    UnitSpec u;
    u.unit_class = c;
    u.force = f;
    u.spawn = spawn;
    u.count = count;
    u.symbol_code = symbol_for(c, f);
    s.roster.push_back(u);
  };
  add(UnitClass::Armor, Force::Blue, {8.5, 24.5}, 2);
  add(UnitClass::MechInfantry, Force::Blue, {8.5, 40.5}, 2);
  add(UnitClass::Mortar, Force::Blue, {5.5, 32.5}, 1);
  add(UnitClass::Aviation, Force::Blue, {4.5, 28.5}, 1);
  add(UnitClass::Artillery, Force::Blue, {3.5, 36.5}, 1);
  add(UnitClass::Infantry, Force::Blue, {10.5, 32.5}, 1);
  add(UnitClass::AntiArmor, Force::Blue, {9.5, 28.5}, 1);
  add(UnitClass::Armor, Force::Red, {48.5, 32.5}, 1);
  add(UnitClass::MechInfantry, Force::Red, {46.5, 24.5}, 2);
  add(UnitClass::AntiArmor, Force::Red, {44.5, 40.5}, 1);
  add(UnitClass::Infantry, Force::Red, {50.5, 30.5}, 2);

  s.regions = {
      {"west_bank", {{0, 0, kBandX0 - 1, kSide - 1}}},
      {"east_bank", {{kBandX1 + 1, 0, kSide - 1, kSide - 1}}},
      {"objectives", {{46, 26, 53, 37}}},
  };
  s.crossing_pair = std::make_pair(std::string("west_bank"), std::string("east_bank"));
  s.objectives = {"objectives"};
  s.goals = {Vec2{50.0, 32.0}, Vec2{20.0, 32.0}};
  s.reward_scheme.kind = RewardKind::TigerClaw;
  s.max_ticks = 400;
  s.red_controller = BotController{cmd::BotConfig{5}};
  s.tick_seconds = 6.0;
  s.randomization.spawn_jitter = 2.0;
  return s;
}

Scenario builtin_skirmish() {
  Scenario s;
  s.name = "skirmish-16";
  s.terrain = sim::TerrainGrid(16, 16, 0.25);
  auto add = [&](UnitClass c, Force f, Vec2 spawn, int count) {
    UnitSpec u;
    u.unit_class = c;
    u.force = f;
    u.spawn = spawn;
    u.count = count;
    u.symbol_code = symbol_for(c, f);
    s.roster.push_back(u);
  };
  add(UnitClass::Armor, Force::Blue, {2.5, 6.5}, 2);
  add(UnitClass::MechInfantry, Force::Blue, {2.5, 9.5}, 1);
  add(UnitClass::Infantry, Force::Blue, {1.5, 8.0}, 1);
  add(UnitClass::AntiArmor, Force::Red, {13.5, 8.0}, 1);
  add(UnitClass::MechInfantry, Force::Red, {12.5, 11.5}, 1);
  s.regions = {{"objective", {{12, 6, 14, 9}}}};
  s.goals = {Vec2{13.5, 8.0}, Vec2{2.5, 8.0}};
  s.reward_scheme.kind = RewardKind::Attrition;
  s.max_ticks = 60;
  s.red_controller = BotController{cmd::BotConfig{5}};
  s.tick_seconds = 12.0;
  s.randomization.spawn_jitter = 1.0;
  return s;
}

Scenario resolve_scenario(const std::string& name_or_path) {
  if (name_or_path == "tigerclaw" || name_or_path == "tigerclaw-desk") return builtin_tigerclaw();
  if (name_or_path == "skirmish" || name_or_path == "skirmish-16") return builtin_skirmish();
  auto parsed = load_scenario_file(name_or_path);
  if (!parsed.ok()) {
    std::string msg = "invalid scenario '" + name_or_path + "':";
    for (const auto& e : parsed.errors) msg += "\n  " + e.to_string();
    throw std::runtime_error(msg);
  }
  return *parsed.scenario;
}

}  // namespace c2::scenario
