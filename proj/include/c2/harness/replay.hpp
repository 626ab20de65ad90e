#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "c2/env/environment.hpp"
#include "c2/scenario/scenario.hpp"
#include "c2/sim/world.hpp"

namespace c2::harness {

/// Identifies the binary that wrote a replay or checkpoint.
std::string build_id();

struct ReplayHeader {
  std::uint8_t version = 1;
  std::string scenario_json;  // canonical serialization
  std::uint64_t scenario_hash = 0;
  std::uint64_t seed = 0;
  std::string reward_scheme;
  std::string build_id;
  sim::Force controlled = sim::Force::Blue;
};

struct TickRecord {
  int tick = 0;  // tick number after the step
  std::vector<sim::Order> orders;
  std::vector<sim::CombatEvent> events;
  std::array<double, 2> rewards{};
  friend bool operator==(const TickRecord&, const TickRecord&) = default;
};

/// Written after every tick divisible by kHashInterval.
struct HashRecord {
  int tick = 0;
  std::uint64_t state_hash = 0;
  std::uint64_t orders_digest = 0;  // chained over every order so far
  friend bool operator==(const HashRecord&, const HashRecord&) = default;
};

struct EndRecord {
  int tick = 0;
  std::uint64_t state_hash = 0;
  std::uint64_t orders_digest = 0;
  double score = 0.0;
  std::string termination;
  friend bool operator==(const EndRecord&, const EndRecord&) = default;
};

struct Replay {
  static constexpr int kHashInterval = 32;
  ReplayHeader header;
  std::vector<TickRecord> ticks;
  std::vector<HashRecord> hashes;
  std::optional<EndRecord> end;
};

class ReplayError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Next link of the orders chain.
std::uint64_t chain_orders(std::uint64_t digest, const std::vector<sim::Order>& orders);

/// Builds a replay from environment steps as they happen.
class ReplayRecorder {
 public:
  ReplayRecorder(const scenario::Scenario& scenario, std::uint64_t seed, sim::Force controlled);

  void record(const env::StepInfo& info, const sim::World& after);
  void finish(const sim::World& world, double score, const std::string& termination);
  const Replay& replay() const noexcept { return replay_; }

 private:
  Replay replay_;
  std::uint64_t digest_ = 0;
};

/// Binary layout: "TCRP", version byte, then length-prefixed records
/// (u8 kind, u32 length, payload). The first record is the JSON header.
std::string encode_replay(const Replay& replay);
Replay decode_replay(std::string_view bytes);
void save_replay(const std::string& path, const Replay& replay);
Replay load_replay(const std::string& path);

struct Verdict {
  bool exact = false;
  std::optional<int> first_divergent_tick;
  std::string message;
  std::vector<sim::CombatEvent> events;  // re-simulated stream
};

/// Re-simulates the recorded orders from (scenario, seed) and compares every
/// event, reward, hash point and the end record. Throws ReplayError when the
/// file cannot be trusted at all (version or scenario hash mismatch).
Verdict verify_replay(const Replay& replay);

/// Plays a full episode with `policy` on the controlled side and records it.
Replay record_episode(env::Environment& env, env::Opponent& policy, std::uint64_t seed);

}  // namespace c2::harness
