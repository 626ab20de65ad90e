#include "c2/harness/replay.hpp"

#include <bit>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "c2/core/hash.hpp"
#include "c2/core/rng.hpp"
#include "c2/env/environment.hpp"
#include "c2/env/reward.hpp"

#ifndef C2_BUILD_ID
#define C2_BUILD_ID "dev"
#endif

namespace c2::harness {

using nlohmann::json;

namespace {

constexpr std::string_view kMagic = "TCRP";
constexpr std::uint8_t kFormatVersion = 1;

enum RecordKind : std::uint8_t { kHeader = 'H', kTick = 'T', kHash = 'S', kEnd = 'E' };

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.append(s);
  }
  std::string& bytes() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(in_[at_++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(in_.substr(at_, n));
    at_ += n;
    return s;
  }
  std::string_view take(std::size_t n) {
    need(n);
    auto v = in_.substr(at_, n);
    at_ += n;
    return v;
  }
  bool done() const noexcept { return at_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (in_.size() - at_ < n) throw ReplayError("replay truncated");
  }
  std::string_view in_;
  std::size_t at_ = 0;
};

void write_order(Writer& w, const sim::Order& o) {
  w.i32(o.unit);
  const std::uint8_t flags = (o.heading ? 1 : 0) | (o.speed ? 2 : 0) | (o.fire_mission ? 4 : 0) | (o.hold_fire ? 8 : 0);
  w.u8(flags);
  if (o.heading) w.f64(*o.heading);
  if (o.speed) w.f64(*o.speed);
  w.u8(static_cast<std::uint8_t>(o.move));
  w.f64(o.move_fraction);
  w.i32(o.fire_target);
  if (o.fire_mission) {
    w.i32(o.fire_mission->x);
    w.i32(o.fire_mission->y);
  }
}

sim::Order read_order(Reader& r) {
  sim::Order o;
  o.unit = r.i32();
  const std::uint8_t flags = r.u8();
  if (flags & ~0x0F) throw ReplayError("corrupt order flags");
  if (flags & 1) o.heading = r.f64();
  if (flags & 2) o.speed = r.f64();
  const std::uint8_t move = r.u8();
  if (move > static_cast<std::uint8_t>(sim::MoveDir::Left)) throw ReplayError("corrupt move direction");
  o.move = static_cast<sim::MoveDir>(move);
  o.move_fraction = r.f64();
  o.fire_target = r.i32();
  if (flags & 4) o.fire_mission = sim::CellPos{r.i32(), r.i32()};
  o.hold_fire = (flags & 8) != 0;
  return o;
}

void write_event(Writer& w, const sim::CombatEvent& e) {
  w.u8(static_cast<std::uint8_t>(e.kind));
  w.i32(e.tick);
  w.i32(e.actor);
  w.i32(e.target);
  w.u8(e.cell ? 1 : 0);
  if (e.cell) {
    w.i32(e.cell->x);
    w.i32(e.cell->y);
  }
  w.f64(e.amount);
  w.u8(static_cast<std::uint8_t>(e.code));
}

sim::CombatEvent read_event(Reader& r) {
  sim::CombatEvent e;
  e.kind = static_cast<sim::EventKind>(r.u8());
  e.tick = r.i32();
  e.actor = r.i32();
  e.target = r.i32();
  if (r.u8()) e.cell = sim::CellPos{r.i32(), r.i32()};
  e.amount = r.f64();
  e.code = static_cast<sim::DiagnosticCode>(r.u8());
  return e;
}

void put_record(Writer& out, RecordKind kind, Writer& payload) {
  out.u8(kind);
  out.str(payload.bytes());
}

std::string describe(const sim::CombatEvent& e) {
  return std::string(sim::to_string(e.kind)) + " actor " + std::to_string(e.actor) + " target " +
         std::to_string(e.target);
}

}  // namespace

std::string build_id() { return C2_BUILD_ID; }

std::uint64_t chain_orders(std::uint64_t digest, const std::vector<sim::Order>& orders) {
  Fnv1a h;
  h.u64(digest).u64(orders.size());
  for (const auto& o : orders) {
    h.i64(o.unit).u64(o.heading ? 1 : 0).real_exact(o.heading.value_or(0.0));
    h.u64(o.speed ? 1 : 0).real_exact(o.speed.value_or(0.0));
    h.u64(static_cast<std::uint64_t>(o.move)).real_exact(o.move_fraction).i64(o.fire_target);
    h.u64(o.fire_mission ? 1 : 0).i64(o.fire_mission ? o.fire_mission->x : 0).i64(o.fire_mission ? o.fire_mission->y : 0);
    h.u64(o.hold_fire ? 1 : 0);
  }
  return h.digest();
}

ReplayRecorder::ReplayRecorder(const scenario::Scenario& scenario, std::uint64_t seed, sim::Force controlled) {
  auto& h = replay_.header;
  h.version = kFormatVersion;
  h.scenario_json = scenario::serialize_scenario(scenario);
  h.scenario_hash = scenario::content_hash(scenario);
  h.seed = seed;
  h.reward_scheme = scenario.reward_scheme.kind == scenario::RewardKind::TigerClaw ? "tigerclaw" : "attrition";
  h.build_id = build_id();
  h.controlled = controlled;
}

void ReplayRecorder::record(const env::StepInfo& info, const sim::World& after) {
  replay_.ticks.push_back({after.tick, info.orders, info.events, info.rewards});
  digest_ = chain_orders(digest_, info.orders);
  if (after.tick % Replay::kHashInterval == 0) replay_.hashes.push_back({after.tick, sim::state_hash(after), digest_});
}

void ReplayRecorder::finish(const sim::World& world, double score, const std::string& termination) {
  replay_.end = EndRecord{world.tick, sim::state_hash(world), digest_, score, termination};
}

std::string encode_replay(const Replay& replay) {
  Writer out;
  out.bytes().append(kMagic);
  out.u8(replay.header.version);

  const auto& h = replay.header;
  const json header = {{"scenario", json::parse(h.scenario_json)},
                       {"scenario_hash", h.scenario_hash},
                       {"seed", h.seed},
                       {"reward_scheme", h.reward_scheme},
                       {"build_id", h.build_id},
                       {"controlled", sim::to_string(h.controlled)}};
  Writer hp;
  hp.bytes() = header.dump();
  put_record(out, kHeader, hp);

  std::size_t next_hash = 0;
  for (const auto& t : replay.ticks) {
    Writer p;
    p.i32(t.tick);
    p.u32(static_cast<std::uint32_t>(t.orders.size()));
    for (const auto& o : t.orders) write_order(p, o);
    p.u32(static_cast<std::uint32_t>(t.events.size()));
    for (const auto& e : t.events) write_event(p, e);
    p.f64(t.rewards[0]);
    p.f64(t.rewards[1]);
    put_record(out, kTick, p);
    while (next_hash < replay.hashes.size() && replay.hashes[next_hash].tick <= t.tick) {
      const auto& s = replay.hashes[next_hash++];
      Writer q;
      q.i32(s.tick);
      q.u64(s.state_hash);
      q.u64(s.orders_digest);
      put_record(out, kHash, q);
    }
  }
  if (replay.end) {
    Writer p;
    p.i32(replay.end->tick);
    p.u64(replay.end->state_hash);
    p.u64(replay.end->orders_digest);
    p.f64(replay.end->score);
    p.str(replay.end->termination);
    put_record(out, kEnd, p);
  }
  return std::move(out.bytes());
}

Replay decode_replay(std::string_view bytes) {
  Reader r(bytes);
  if (r.take(4) != kMagic) throw ReplayError("not a replay file (bad magic)");
  Replay replay;
  replay.header.version = r.u8();
  if (replay.header.version != kFormatVersion) {
    throw ReplayError("unsupported replay version " + std::to_string(replay.header.version) + " (this build reads " +
                      std::to_string(kFormatVersion) + ")");
  }
  bool have_header = false;
  while (!r.done()) {
    const std::uint8_t kind = r.u8();
    const std::string payload = r.str();
    Reader p(payload);
    switch (kind) {
      case kHeader: {
        try {
          std::string text;
          while (!p.done()) text.push_back(static_cast<char>(p.u8()));
          const json j = json::parse(text);
          auto& h = replay.header;
          h.scenario_json = j.at("scenario").dump(2);
          h.scenario_hash = j.at("scenario_hash").get<std::uint64_t>();
          h.seed = j.at("seed").get<std::uint64_t>();
          h.reward_scheme = j.at("reward_scheme").get<std::string>();
          h.build_id = j.at("build_id").get<std::string>();
          const auto force = sim::parse_force(j.at("controlled").get<std::string>());
          if (!force) throw ReplayError("unknown controlled force");
          h.controlled = *force;
        } catch (const json::exception& e) {
          throw ReplayError(std::string("corrupt replay header: ") + e.what());
        }
        have_header = true;
        break;
      }
      case kTick: {
        TickRecord t;
        t.tick = p.i32();
        t.orders.resize(p.u32());
        for (auto& o : t.orders) o = read_order(p);
        t.events.resize(p.u32());
        for (auto& e : t.events) e = read_event(p);
        t.rewards = {p.f64(), p.f64()};
        replay.ticks.push_back(std::move(t));
        break;
      }
      case kHash: {
        HashRecord s;
        s.tick = p.i32();
        s.state_hash = p.u64();
        s.orders_digest = p.u64();
        replay.hashes.push_back(s);
        break;
      }
      case kEnd: {
        EndRecord e;
        e.tick = p.i32();
        e.state_hash = p.u64();
        e.orders_digest = p.u64();
        e.score = p.f64();
        e.termination = p.str();
        replay.end = e;
        break;
      }
      default:
        throw ReplayError("unknown replay record kind " + std::to_string(kind));
    }
    if (!p.done()) throw ReplayError("replay record has trailing bytes");
  }
  if (!have_header) throw ReplayError("replay has no header record");
  return replay;
}

void save_replay(const std::string& path, const Replay& replay) {
  const std::string bytes = encode_replay(replay);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ReplayError("cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ReplayError("write failed for " + path);
}

Replay load_replay(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ReplayError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return decode_replay(buf.str());
}

Verdict verify_replay(const Replay& replay) {
  const auto parsed = scenario::parse_scenario(replay.header.scenario_json);
  if (!parsed.ok()) throw ReplayError("replay scenario does not validate: " + parsed.errors.front().to_string());
  const scenario::Scenario& sc = *parsed.scenario;
  if (scenario::content_hash(sc) != replay.header.scenario_hash) {
    throw ReplayError("scenario hash mismatch: the embedded scenario is not the one recorded");
  }

  Verdict v;
  auto diverge = [&](int tick, std::string msg) {
    v.exact = false;
    v.first_divergent_tick = tick;
    v.message = std::move(msg);
    return v;
  };

  sim::World world = scenario::build_world(sc, replay.header.seed);
  std::vector<sim::Region> objectives;
  for (const auto& name : sc.objectives) objectives.push_back(*sc.find_region(name));
  std::optional<std::string> ended;
  std::uint64_t digest = 0;
  std::size_t next_hash = 0;
  auto check_hashes = [&](int up_to) -> std::optional<std::string> {
    while (next_hash < replay.hashes.size() && replay.hashes[next_hash].tick <= up_to) {
      const HashRecord& s = replay.hashes[next_hash++];
      if (s.tick != world.tick) return "hash point for tick " + std::to_string(s.tick) + " is out of sequence";
      if (s.state_hash != sim::state_hash(world)) return "state hash differs";
      if (s.orders_digest != digest) return "orders digest differs";
    }
    return std::nullopt;
  };

  for (const TickRecord& t : replay.ticks) {
    if (ended) return diverge(world.tick + 1, "tick recorded after the episode ended (" + *ended + ")");
    const int expected_tick = world.tick + 1;
    if (t.tick != expected_tick) return diverge(expected_tick, "tick record out of sequence");
    const auto& events = sim::advance_tick(world, t.orders);
    digest = chain_orders(digest, t.orders);
    v.events.insert(v.events.end(), events.begin(), events.end());
    if (events.size() != t.events.size()) {
      return diverge(world.tick, "event count differs (" + std::to_string(events.size()) + " re-simulated, " +
                                     std::to_string(t.events.size()) + " recorded)");
    }
    for (std::size_t i = 0; i < events.size(); ++i) {
      if (!(events[i] == t.events[i])) return diverge(world.tick, "event differs: " + describe(events[i]));
    }
    for (sim::Force f : {sim::Force::Blue, sim::Force::Red}) {
      const double r = env::reward_for(events, world, f, sc.reward_scheme);
      if (std::bit_cast<std::uint64_t>(r) != std::bit_cast<std::uint64_t>(t.rewards[sim::index_of(f)])) {
        return diverge(world.tick, "reward differs for " + std::string(sim::to_string(f)));
      }
    }
    if (auto err = check_hashes(world.tick)) return diverge(world.tick, *err);
    ended = env::termination_reason(world, objectives, sc.max_ticks);
  }
  if (next_hash != replay.hashes.size()) return diverge(world.tick + 1, "hash points beyond the last tick");
  if (!replay.end) return diverge(world.tick, "replay has no end record");
  const EndRecord& e = *replay.end;
  if (e.tick != world.tick) return diverge(world.tick, "end record tick differs");
  if (e.state_hash != sim::state_hash(world)) return diverge(world.tick, "final state hash differs");
  if (e.orders_digest != digest) return diverge(world.tick, "final orders digest differs");
  if (!ended || e.termination != *ended) return diverge(world.tick, "termination differs");
  double score = 0.0;
  for (const TickRecord& t : replay.ticks) score += t.rewards[sim::index_of(replay.header.controlled)];
  if (std::bit_cast<std::uint64_t>(score) != std::bit_cast<std::uint64_t>(e.score)) {
    return diverge(world.tick, "final score differs from the sum of tick rewards");
  }
  v.exact = true;
  v.message = "exact";
  if (replay.header.build_id != build_id()) v.message += " (recorded by build " + replay.header.build_id + ")";
  return v;
}

Replay record_episode(env::Environment& env, env::Opponent& policy, std::uint64_t seed) {
  env.reset(seed);
  policy.reset(env.world(), derive_seed(seed, 0xB1E));
  ReplayRecorder rec(env.scenario(), seed, env.config().controlled);
  while (!env.done()) {
    const auto result = env.step_own_orders(policy.act(env.world(), env.config().controlled));
    rec.record(result.info, env.world());
  }
  rec.finish(env.world(), env.score(), env.termination());
  return rec.replay();
}

}  // namespace c2::harness
