#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <nlohmann/json.hpp>

#include "doctest.h"

#include "c2/cmd/commanders.hpp"
#include "c2/harness/replay.hpp"
#include "c2/harness/server.hpp"
#include "c2/harness/session.hpp"
#include "fixtures.hpp"

using namespace c2;
using namespace c2::harness;
using nlohmann::json;
namespace asio = boost::asio;
namespace beast = boost::beast;
namespace fs = std::filesystem;
using asio::ip::tcp;

namespace {

Replay doctrine_replay(const scenario::Scenario& sc, std::uint64_t seed) {
  auto env = cmd::make_environment(sc);
  cmd::DoctrineCommander doctrine;
  return record_episode(env, doctrine, seed);
}

fs::path temp_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Orders that cycle through every discrete action across the controlled units.
json cycling_orders(const json& state, int& next) {
  json actions = json::array();
  for (const auto& u : state["units"]) {
    actions.push_back({{"unit", u["id"]}, {"action", env::kDiscreteActionNames[next % 12]}});
    ++next;
  }
  return {{"type", "orders"}, {"tick", state["tick"]}, {"actions", actions}};
}

struct Episode {
  json hello;
  json last_state;
  json end;
  int errors = 0;
};

// Plays a full episode over any transport given send/receive callbacks.
template <class Send, class Receive>
Episode drive(Send send, Receive receive) {
  Episode ep;
  int next = 0;
  for (;;) {
    const json msg = json::parse(receive());
    const auto type = msg["type"].get<std::string>();
    if (type == "hello") ep.hello = msg;
    if (type == "error") ++ep.errors;
    if (type == "episode_end") {
      ep.end = msg;
      return ep;
    }
    if (type == "state") {
      ep.last_state = msg;
      send(cycling_orders(msg, next).dump());
    }
  }
}

std::string run_cli(const std::string& args) {
  return std::string(C2SIM_PATH) + " " + args + " >/dev/null 2>&1";
}

int exit_code(const std::string& args) {
  const int status = std::system(run_cli(args).c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("replays round-trip and verify exactly") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Replay r = doctrine_replay(scenario::builtin_tigerclaw(), seed);
    REQUIRE(r.end.has_value());
    CHECK_FALSE(r.hashes.empty());
    const Replay back = decode_replay(encode_replay(r));
    CHECK(back.ticks == r.ticks);
    CHECK(back.hashes == r.hashes);
    CHECK(back.end == r.end);
    CHECK(back.header.scenario_hash == r.header.scenario_hash);
    const Verdict v = verify_replay(back);
    CHECK_MESSAGE(v.exact, v.message);
    std::size_t recorded = 0;
    for (const auto& t : r.ticks) recorded += t.events.size();
    CHECK(v.events.size() == recorded);
  }
}

TEST_CASE("tampering with any single record is detected") {
  const Replay clean = doctrine_replay(scenario::builtin_skirmish(), 11);
  Rng rng(12);
  int tampered = 0;
  for (int trial = 0; trial < 60; ++trial) {
    Replay r = clean;
    const std::size_t k = rng.below(r.ticks.size());
    TickRecord& t = r.ticks[k];
    int affected_hash = r.end->tick;
    for (const auto& h : r.hashes) {
      if (h.tick >= t.tick) {
        affected_hash = h.tick;
        break;
      }
    }
    switch (trial % 3) {
      case 0:
        if (t.orders.empty()) continue;
        t.orders[rng.below(t.orders.size())].speed = 1.0 + rng.uniform();
        break;
      case 1:
        t.rewards[0] += 0.25;
        break;
      case 2:
        t.events.push_back({sim::EventKind::Fired, t.tick, 0, 1, std::nullopt, 1.0});
        break;
    }
    ++tampered;
    const Verdict v = verify_replay(decode_replay(encode_replay(r)));
    CHECK_FALSE(v.exact);
    REQUIRE(v.first_divergent_tick.has_value());
    CHECK(*v.first_divergent_tick <= affected_hash);
  }
  CHECK(tampered > 40);

  Replay no_end = clean;
  no_end.end.reset();
  CHECK_FALSE(verify_replay(no_end).exact);
  Replay relabelled = clean;
  relabelled.end->termination = "objectives_held";
  CHECK(verify_replay(relabelled).message == "termination differs");
  Replay truncated = clean;
  truncated.ticks.pop_back();
  CHECK_FALSE(verify_replay(truncated).exact);
  Replay wrong_scenario = clean;
  wrong_scenario.header.scenario_hash ^= 1;
  CHECK_THROWS_AS(verify_replay(wrong_scenario), ReplayError);
  std::string bytes = encode_replay(clean);
  bytes[4] = 9;  // version byte
  CHECK_THROWS_AS(decode_replay(bytes), ReplayError);
  CHECK_THROWS_AS(decode_replay("TCR"), ReplayError);
}

TEST_CASE("an episode that ends on its first tick still replays") {
  auto sc = testing::lone_unit_scenario();
  sc.max_ticks = 1;
  sc.red_controller = scenario::DoctrineController{};
  const Replay r = doctrine_replay(sc, 3);
  CHECK(r.ticks.size() == 1);
  CHECK(verify_replay(decode_replay(encode_replay(r))).exact);
}

TEST_CASE("session protocol") {
  SessionConfig cfg;
  cfg.opponent = "bot:1";
  cfg.seed = 4;
  Session s(scenario::builtin_skirmish(), cfg);
  CHECK(s.handle(R"({"type":"orders","actions":[]})")[0]["type"] == "error");

  const auto opening = s.start();
  REQUIRE(opening.size() == 2);
  CHECK(opening[0]["type"] == "hello");
  CHECK(opening[0]["protocol"] == kProtocolVersion);
  CHECK(opening[0]["cadence"] == "turn_based");
  CHECK(opening[0]["actions"].size() == 12);
  CHECK(opening[1]["type"] == "state");
  CHECK(opening[1]["tick"] == 0);

  SUBCASE("bad messages are answered with errors and change nothing") {
    const auto hash = sim::state_hash(s.environment().world());
    for (const char* bad : {"not json", R"([1,2])", R"({"type":"hello"})", R"({"type":"orders"})",
                            R"({"type":"orders","actions":[{"unit":5,"action":"halt"}]})",
                            R"({"type":"orders","actions":[{"unit":0,"action":"dance"}]})",
                            R"({"type":"orders","actions":[{"unit":0,"action":"halt"},{"unit":0,"action":"halt"}]})",
                            R"({"type":"orders","tick":7,"actions":[]})",
                            R"({"type":"orders","actions":[{"unit":0,"action":"move","x":1.5}]})"}) {
      const auto out = s.handle(bad);
      REQUIRE(out.size() == 1);
      CHECK_MESSAGE(out[0]["type"] == "error", bad);
      CHECK(sim::state_hash(s.environment().world()) == hash);
    }
    CHECK(s.environment().world().tick == 0);
  }

  SUBCASE("the clock waits for orders and a full episode replays exactly") {
    CHECK(s.on_deadline().empty());  // turn-based sessions ignore deadlines
    CHECK(s.environment().world().tick == 0);
    const auto dir = temp_dir("c2_session");
    SessionConfig with_replay = cfg;
    with_replay.replay_path = (dir / "episode.tcrp").string();
    Session full(scenario::builtin_skirmish(), with_replay);
    json state = full.start()[1];
    int next = 0;
    json end;
    std::set<std::string> issued;
    while (!full.finished()) {
      const json orders = cycling_orders(state, next);
      for (const auto& a : orders["actions"]) issued.insert(a["action"].get<std::string>());
      const auto out = full.handle(orders.dump());
      REQUIRE(out.size() >= 2);
      CHECK(out[0]["type"] == "step_ack");
      CHECK(out[0]["diagnostics"].is_array());
      state = out[1];
      if (out.size() == 3) end = out[2];
    }
    CHECK(issued.size() == 12);
    REQUIRE(end["type"] == "episode_end");
    CHECK(end["score"].get<double>() == full.environment().score());
    CHECK(end["report"]["length"] == full.environment().world().tick);
    CHECK(full.handle(R"({"type":"orders","actions":[]})")[0]["type"] == "error");
    const Verdict v = verify_replay(load_replay(with_replay.replay_path));
    CHECK_MESSAGE(v.exact, v.message);
    fs::remove_all(dir);
  }

  SUBCASE("real-time sessions advance on the deadline") {
    SessionConfig rt = cfg;
    rt.deadline = std::chrono::milliseconds(10);
    Session timed(scenario::builtin_skirmish(), rt);
    CHECK(timed.start()[0]["cadence"] == "real_time");
    const auto out = timed.on_deadline();
    REQUIRE(out.size() >= 2);
    CHECK(out[0]["type"] == "step_ack");
    CHECK(timed.environment().world().tick == 1);
  }
}

TEST_CASE("state messages reveal nothing about unseen enemies") {
  const auto sc = scenario::builtin_tigerclaw();
  Rng rng(21);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    sim::World w = scenario::build_world(sc, seed);
    for (int t = 0; t < 30; ++t) sim::advance_tick(w, testing::random_orders(w, rng));
    for (sim::Force f : {sim::Force::Blue, sim::Force::Red}) {
      sim::World hidden = w;
      for (auto& u : hidden.units) {
        if (u.force == f || sim::is_perceived(w, f, u.id)) continue;
        u.strength = std::max(0.5, u.strength * 0.5);
        u.ammo = 0;
        u.heading += 1.0;
        u.unit_class = sim::UnitClass::Aviation;
      }
      CHECK(state_message(hidden, f, 1.5, 100) == state_message(w, f, 1.5, 100));
      // Contacts carry only what sensors report.
      for (const auto& c : state_message(w, f, 0.0, 100)["contacts"]) {
        CHECK(sim::is_perceived(w, f, c["id"].get<sim::UnitId>()));
      }
    }
  }
}

TEST_CASE("events do not name shooters outside the sensor picture") {
  sim::World w = testing::open_world(16, 1.0);
  const auto blue = testing::add_unit(w, sim::Force::Blue, {2.0, 2.0});
  const auto red = testing::add_unit(w, sim::Force::Red, {12.0, 12.0});
  sim::CombatEvent hit;
  hit.kind = sim::EventKind::Damaged;
  hit.actor = blue;
  hit.target = red;
  hit.amount = 1.0;
  w.events = {hit};
  const json hidden = state_message(w, sim::Force::Blue, 0.0, 10)["events"];
  REQUIRE(hidden.size() == 1);
  CHECK(hidden[0]["actor"] == blue);
  CHECK(hidden[0]["target"] == sim::kNoUnit);
  w.units[red].position = {4.0, 2.0};
  sim::refresh_sensing(w);
  CHECK(state_message(w, sim::Force::Blue, 0.0, 10)["events"][0]["target"] == red);
}

TEST_CASE("static files stay inside the UI root") {
  const auto root = temp_dir("c2_ui_root");
  fs::create_directories(root / "assets");
  std::ofstream(root / "index.html") << "<html>ui</html>";
  std::ofstream(root / "assets" / "app.js") << "console.log(1)";
  const auto outside = temp_dir("c2_ui_outside");
  std::ofstream(outside / "secret.txt") << "secret";
  fs::create_symlink(outside / "secret.txt", root / "leak.txt");

  CHECK(resolve_static(root.string(), "/") == fs::canonical(root / "index.html").string());
  CHECK(resolve_static(root.string(), "/assets/app.js?v=3").has_value());
  CHECK(resolve_static(root.string(), "/assets/../index.html").has_value());
  CHECK_FALSE(resolve_static(root.string(), "/../c2_ui_outside/secret.txt"));
  CHECK_FALSE(resolve_static(root.string(), "/assets/../../c2_ui_outside/secret.txt"));
  CHECK_FALSE(resolve_static(root.string(), "/leak.txt"));
  CHECK_FALSE(resolve_static(root.string(), "/assets"));
  CHECK_FALSE(resolve_static(root.string(), "/missing.css"));
  CHECK_FALSE(resolve_static(root.string(), "relative.html"));
  CHECK(mime_type("a/index.html").starts_with("text/html"));
  CHECK(mime_type("app.js").find("javascript") != std::string::npos);
  CHECK(mime_type("blob.bin") == "application/octet-stream");

  ServerOptions opt;
  opt.tcp_port.reset();
  opt.http_port = 0;
  opt.ui_dir = root.string();
  SessionServer server(opt, [] { return std::make_unique<Session>(scenario::builtin_skirmish(), SessionConfig{}); });

  auto get = [&](const std::string& target) {
    asio::io_context io;
    beast::tcp_stream stream(io);
    stream.connect(tcp::endpoint(asio::ip::make_address("127.0.0.1"), server.http_port()));
    beast::http::request<beast::http::string_body> req{beast::http::verb::get, target, 11};
    req.set(beast::http::field::host, "localhost");
    beast::http::write(stream, req);
    beast::flat_buffer buf;
    beast::http::response<beast::http::string_body> res;
    beast::http::read(stream, buf, res);
    return res;
  };
  const auto index = get("/");
  CHECK(index.result() == beast::http::status::ok);
  CHECK(index.body() == "<html>ui</html>");
  CHECK(std::string(index[beast::http::field::content_type]).starts_with("text/html"));
  CHECK(get("/../c2_ui_outside/secret.txt").result() == beast::http::status::not_found);
  CHECK(get("/leak.txt").result() == beast::http::status::not_found);
  server.stop();
  fs::remove_all(root);
  fs::remove_all(outside);
}

TEST_CASE("sessions run over TCP and WebSocket") {
  auto factory = [] {
    SessionConfig cfg;
    cfg.seed = 8;
    return std::make_unique<Session>(scenario::builtin_skirmish(), cfg);
  };
  ServerOptions opt;
  opt.tcp_port = 0;
  opt.http_port = 0;
  SessionServer server(opt, factory);

  SUBCASE("newline-delimited TCP") {
    asio::io_context io;
    tcp::socket sock(io);
    sock.connect(tcp::endpoint(asio::ip::make_address("127.0.0.1"), server.tcp_port()));
    asio::streambuf buf;
    auto send = [&](const std::string& m) { asio::write(sock, asio::buffer(m + "\n")); };
    auto receive = [&] {
      asio::read_until(sock, buf, '\n');
      std::istream in(&buf);
      std::string line;
      std::getline(in, line);
      return line;
    };
    send("{oops");  // ignored with an error before the first state is answered
    const Episode ep = drive(send, receive);
    CHECK(ep.hello["type"] == "hello");
    CHECK(ep.errors == 1);
    CHECK(ep.end["type"] == "episode_end");
    server.wait_for_completed(1);
    CHECK(server.completed() == 1);
  }
  SUBCASE("WebSocket at /ws") {
    asio::io_context io;
    beast::websocket::stream<tcp::socket> ws(io);
    ws.next_layer().connect(tcp::endpoint(asio::ip::make_address("127.0.0.1"), server.http_port()));
    ws.handshake("localhost", "/ws");
    beast::flat_buffer buf;
    auto send = [&](const std::string& m) { ws.write(asio::buffer(m)); };
    auto receive = [&] {
      buf.clear();
      ws.read(buf);
      return beast::buffers_to_string(buf.data());
    };
    const Episode ep = drive(send, receive);
    CHECK(ep.errors == 0);
    CHECK(ep.end["score"].get<double>() == ep.end["report"]["total_reward"].get<double>());
    server.wait_for_completed(1);
  }
  server.stop();
}

TEST_CASE("command-line exit codes") {
  const auto dir = temp_dir("c2_cli");
  const std::string replay = (dir / "r.tcrp").string();
  CHECK(exit_code("validate --scenario tigerclaw") == 0);
  CHECK(exit_code("validate --scenario " + std::string(C2_SOURCE_DIR) + "/data/scenarios/skirmish.json") == 0);
  CHECK(exit_code("validate --scenario /nonexistent.json") == 2);
  CHECK(exit_code("") == 1);
  CHECK(exit_code("frobnicate") == 1);
  CHECK(exit_code("validate --no-such-flag") == 1);
  CHECK(exit_code("eval --scenario skirmish --policy doctrine --opponent bot:99 --rollouts 1") == 2);
  CHECK(exit_code("replay record --scenario skirmish --seed 3 --out " + replay) == 0);
  CHECK(exit_code("replay verify " + replay) == 0);

  std::string bytes;
  {
    std::ifstream in(replay, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  bytes[bytes.size() - 20] ^= 0x5a;
  std::ofstream(replay, std::ios::binary | std::ios::trunc) << bytes;
  CHECK(exit_code("replay verify " + replay) == 2);
  CHECK(exit_code("replay verify " + (dir / "missing.tcrp").string()) == 2);
  fs::remove_all(dir);
}
