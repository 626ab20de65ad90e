#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "c2/env/environment.hpp"
#include "c2/harness/replay.hpp"
#include "c2/scenario/scenario.hpp"

namespace c2::harness {

inline constexpr int kProtocolVersion = 1;

struct SessionConfig {
  sim::Force human = sim::Force::Blue;
  std::string opponent = "bot:1";  // see rl::make_policy
  std::uint64_t seed = 1;
  /// Real-time cadence: the tick advances with NoOp orders when no orders
  /// arrive within the deadline. Unset means turn-based.
  std::optional<std::chrono::milliseconds> deadline;
  std::string replay_path;  // written at episode end when non-empty
};

/// Fog-filtered view of the world for one force: its own units in full,
/// enemies only as sensor contacts, and last tick's events that name one of
/// its units.
nlohmann::json state_message(const sim::World& world, sim::Force force, double score, int max_ticks);

/// Protocol state machine for one human-commanded episode. Transport-free:
/// feed it client lines, send back whatever it returns.
///
///   server: hello, state
///   client: orders   -> server: step_ack, state | episode_end
///   client: (bad)    -> server: error (episode state unchanged)
class Session {
 public:
  Session(scenario::Scenario scenario, SessionConfig config);

  std::vector<nlohmann::json> start();
  std::vector<nlohmann::json> handle(std::string_view line);
  /// Real-time mode only: advances one tick with NoOp for the human.
  std::vector<nlohmann::json> on_deadline();

  bool started() const noexcept { return started_; }
  bool finished() const noexcept { return finished_; }
  std::optional<std::chrono::milliseconds> deadline() const noexcept { return config_.deadline; }
  const env::Environment& environment() const noexcept { return env_; }
  const Replay& replay() const noexcept { return recorder_.replay(); }
  int events_sent() const noexcept { return events_sent_; }

 private:
  std::vector<nlohmann::json> advance(const env::ActionSet& actions);
  nlohmann::json hello() const;
  nlohmann::json state();

  scenario::Scenario scenario_;
  SessionConfig config_;
  env::Environment env_;
  ReplayRecorder recorder_;
  bool started_ = false;
  bool finished_ = false;
  int events_sent_ = 0;
};

nlohmann::json error_message(std::string_view message);

/// Parses the `actions` array of an orders message for `force`. Throws
/// std::invalid_argument describing the first problem.
env::ActionSet parse_orders(const nlohmann::json& message, const sim::World& world, sim::Force force);

}  // namespace c2::harness
