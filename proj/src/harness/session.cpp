#include "c2/harness/session.hpp"

#include <cmath>
#include <stdexcept>

#include "c2/cmd/commanders.hpp"
#include "c2/env/observation.hpp"
#include "c2/rl/evaluate.hpp"

namespace c2::harness {

using nlohmann::json;

namespace {

env::EnvConfig controlling(sim::Force force) {
  env::EnvConfig c;
  c.controlled = force;
  return c;
}

double round6(double v) { return std::round(v * 1e6) / 1e6; }

// Living enemies outside the force's picture appear as -1 so a hit from an
// unseen shooter does not name it.
json event_json(const sim::World& world, const sim::CombatEvent& e, sim::Force force) {
  auto shown = [&](sim::UnitId id) {
    if (!world.has_unit(id)) return id;
    const sim::Unit& u = world.unit(id);
    return u.force == force || !u.alive() || sim::is_perceived(world, force, id) ? id : sim::kNoUnit;
  };
  json j = {{"kind", sim::to_string(e.kind)}, {"tick", e.tick}, {"actor", shown(e.actor)},
            {"target", shown(e.target)}, {"amount", round6(e.amount)}};
  if (e.cell) j["cell"] = {e.cell->x, e.cell->y};
  if (e.kind == sim::EventKind::Diagnostic) j["code"] = sim::to_string(e.code);
  return j;
}

bool names_own_unit(const sim::World& world, const sim::CombatEvent& e, sim::Force force) {
  auto own = [&](sim::UnitId id) { return world.has_unit(id) && world.unit(id).force == force; };
  return own(e.actor) || own(e.target);
}

json terrain_rows(const sim::TerrainGrid& t) {
  json rows = json::array();
  for (int y = 0; y < t.height(); ++y) {
    std::string row;
    for (int x = 0; x < t.width(); ++x) {
      switch (t.at({x, y})) {
        case sim::Cell::Open: row.push_back('.'); break;
        case sim::Cell::Impassable: row.push_back('#'); break;
        case sim::Cell::Crossing: row.push_back('='); break;
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

json error_message(std::string_view message) { return {{"type", "error"}, {"message", message}}; }

json state_message(const sim::World& world, sim::Force force, double score, int max_ticks) {
  json units = json::array();
  for (const auto& u : world.units) {
    if (u.force != force || !u.alive()) continue;
    const auto features = env::encode_vector_obs(world, u.id, world.goal(force));
    units.push_back({{"id", u.id},
                     {"class", sim::to_string(u.unit_class)},
                     {"x", round6(u.position.x)},
                     {"y", round6(u.position.y)},
                     {"heading", round6(u.heading)},
                     {"speed", round6(u.speed)},
                     {"strength", round6(u.strength)},
                     {"strength_max", round6(u.strength_max)},
                     {"ammo", u.ammo},
                     {"fuel_used", round6(u.fuel_used)},
                     {"was_hit", u.was_hit},
                     {"fired", u.fired},
                     {"features", std::vector<double>(features.begin(), features.end())}});
  }
  json contacts = json::array();
  for (const auto& c : cmd::make_view(world, force, false).contacts) {
    contacts.push_back({{"id", c.id},
                        {"class", sim::to_string(c.unit_class)},
                        {"x", round6(c.position.x)},
                        {"y", round6(c.position.y)},
                        {"strength", round6(c.strength)}});
  }
  json events = json::array();
  for (const auto& e : world.events) {
    if (names_own_unit(world, e, force)) events.push_back(event_json(world, e, force));
  }
  return {{"type", "state"},   {"tick", world.tick},         {"max_ticks", max_ticks}, {"score", score},
          {"units", units},    {"contacts", contacts},       {"events", events}};
}

env::ActionSet parse_orders(const json& message, const sim::World& world, sim::Force force) {
  if (!message.contains("actions") || !message["actions"].is_array()) {
    throw std::invalid_argument("orders need an 'actions' array");
  }
  env::ActionSet actions;
  for (const auto& a : message["actions"]) {
    if (!a.is_object() || !a.contains("unit") || !a["unit"].is_number_integer() || !a.contains("action") ||
        !a["action"].is_string()) {
      throw std::invalid_argument("each action needs an integer 'unit' and a string 'action'");
    }
    const auto id = a["unit"].get<sim::UnitId>();
    if (!world.has_unit(id)) throw std::invalid_argument("unit " + std::to_string(id) + " does not exist");
    const sim::Unit& u = world.unit(id);
    if (u.force != force) throw std::invalid_argument("unit " + std::to_string(id) + " is not under your command");
    if (!u.alive()) throw std::invalid_argument("unit " + std::to_string(id) + " is destroyed");
    if (actions.contains(id)) throw std::invalid_argument("unit " + std::to_string(id) + " has two actions");
    const auto name = a["action"].get<std::string>();
    if (auto d = env::parse_discrete_action(name)) {
      actions[id] = *d;
      continue;
    }
    env::CompoundId cid;
    if (name == "no_op") {
      cid = env::CompoundId::NoOp;
    } else if (name == "move") {
      cid = env::CompoundId::Move;
    } else if (name == "attack") {
      cid = env::CompoundId::Attack;
    } else {
      throw std::invalid_argument("unknown action '" + name + "'");
    }
    const double x = a.value("x", 0.5);
    const double y = a.value("y", 0.5);
    if (!(x >= 0.0 && x < 1.0 && y >= 0.0 && y < 1.0)) {
      throw std::invalid_argument("spatial arguments must lie in [0, 1)");
    }
    actions[id] = env::CompoundAction{cid, x, y};
  }
  return actions;
}

Session::Session(scenario::Scenario scenario, SessionConfig config)
    : scenario_(std::move(scenario)),
      config_(std::move(config)),
      env_(scenario_, controlling(config_.human), rl::make_policy(config_.opponent, scenario_)),
      recorder_(scenario_, config_.seed, config_.human) {}

json Session::hello() const {
  json regions = json::array();
  for (const auto& r : scenario_.regions) {
    json rects = json::array();
    for (const auto& c : r.rects) rects.push_back({c.x0, c.y0, c.x1, c.y1});
    regions.push_back({{"name", r.name}, {"rects", rects}});
  }
  json actions = json::array();
  for (auto name : env::kDiscreteActionNames) actions.push_back(name);
  return {{"type", "hello"},
          {"protocol", kProtocolVersion},
          {"side", sim::to_string(config_.human)},
          {"opponent", env_.opponent()->name()},
          {"tick_seconds", scenario_.tick_seconds},
          {"cadence", config_.deadline ? "real_time" : "turn_based"},
          {"deadline_ms", config_.deadline ? json(config_.deadline->count()) : json(nullptr)},
          {"actions", actions},
          {"compound_actions", {"no_op", "move", "attack"}},
          {"scenario",
           {{"name", scenario_.name},
            {"width", scenario_.terrain.width()},
            {"height", scenario_.terrain.height()},
            {"cell_km", scenario_.cell_km()},
            {"max_ticks", scenario_.max_ticks},
            {"terrain", terrain_rows(scenario_.terrain)},
            {"regions", regions},
            {"goal", {scenario_.goal(config_.human).x, scenario_.goal(config_.human).y}}}}};
}

json Session::state() {
  json s = state_message(env_.world(), config_.human, env_.score(), scenario_.max_ticks);
  events_sent_ += static_cast<int>(s["events"].size());
  return s;
}

std::vector<json> Session::start() {
  if (started_) return {error_message("session already started")};
  env_.reset(config_.seed);
  started_ = true;
  return {hello(), state()};
}

std::vector<json> Session::handle(std::string_view line) {
  if (!started_) return {error_message("session not started")};
  if (finished_) return {error_message("episode is over")};
  json msg;
  try {
    msg = json::parse(line);
  } catch (const json::exception& e) {
    return {error_message(std::string("malformed message: ") + e.what())};
  }
  if (!msg.is_object() || !msg.contains("type") || !msg["type"].is_string()) {
    return {error_message("message needs a string 'type'")};
  }
  const auto type = msg["type"].get<std::string>();
  if (type != "orders") return {error_message("unexpected message type '" + type + "'; expected orders")};
  if (msg.contains("tick") && msg["tick"] != env_.world().tick) {
    return {error_message("orders are for tick " + msg["tick"].dump() + " but the session is at tick " +
                          std::to_string(env_.world().tick))};
  }
  env::ActionSet actions;
  try {
    actions = parse_orders(msg, env_.world(), config_.human);
  } catch (const std::exception& e) {
    return {error_message(e.what())};
  }
  return advance(actions);
}

std::vector<json> Session::on_deadline() {
  if (!started_ || finished_ || !config_.deadline) return {};
  return advance({});
}

std::vector<json> Session::advance(const env::ActionSet& actions) {
  auto result = env_.step(actions);
  recorder_.record(result.info, env_.world());
  std::vector<json> out;
  out.push_back({{"type", "step_ack"},
                 {"tick", env_.world().tick},
                 {"reward", result.reward},
                 {"score", env_.score()},
                 {"diagnostics", result.info.diagnostics}});
  out.push_back(state());
  if (result.done) {
    finished_ = true;
    recorder_.finish(env_.world(), env_.score(), env_.termination());
    json end = {{"type", "episode_end"},
                {"termination", env_.termination()},
                {"score", env_.score()},
                {"report",
                 {{"rollout_id", 0},
                  {"total_reward", env_.score()},
                  {"blue_casualties", rl::casualties(env_.ledger(), env_.world(), sim::Force::Blue)},
                  {"red_casualties", rl::casualties(env_.ledger(), env_.world(), sim::Force::Red)},
                  {"length", env_.world().tick},
                  {"termination", env_.termination()}}}};
    if (!config_.replay_path.empty()) {
      save_replay(config_.replay_path, recorder_.replay());
      end["replay"] = config_.replay_path;
    }
    out.push_back(std::move(end));
  }
  return out;
}

}  // namespace c2::harness
