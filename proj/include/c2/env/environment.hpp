#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "c2/env/action_space.hpp"
#include "c2/env/decode.hpp"
#include "c2/env/navigation.hpp"
#include "c2/env/observation.hpp"
#include "c2/scenario/scenario.hpp"
#include "c2/sim/world.hpp"

namespace c2::env {

/// A non-learning commander for one force. Implementations must be
/// deterministic given the world and their own seeded state.
class Opponent {
 public:
  virtual ~Opponent() = default;
  virtual void reset(const sim::World& world, std::uint64_t seed) = 0;
  virtual std::vector<sim::Order> act(const sim::World& world, sim::Force force) = 0;
  virtual std::unique_ptr<Opponent> clone() const = 0;
  virtual std::string name() const = 0;
};

enum class ObservationMode : std::uint8_t { Vector, Spatial };

struct EnvConfig {
  ObservationMode observation = ObservationMode::Vector;
  SpatialConfig spatial;
  sim::Force controlled = sim::Force::Blue;
  bool unit_credit = false;  // fill StepInfo::unit_rewards
};

struct Observation {
  sim::Force force = sim::Force::Blue;
  std::vector<sim::UnitId> units;        // living controlled units
  std::vector<VectorFeatures> features;  // one row per entry of `units`
  std::optional<SpatialObservation> spatial;
  friend bool operator==(const Observation&, const Observation&) = default;
};

struct StepInfo {
  std::vector<sim::CombatEvent> events;
  std::vector<sim::Order> orders;  // everything handed to the simulator this tick
  std::vector<std::string> diagnostics;
  std::array<double, 2> rewards{};  // per force
  std::map<sim::UnitId, double> unit_rewards;
  double score = 0.0;  // cumulative reward of the controlled force
  int tick = 0;
  std::string termination;  // empty while running
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

inline constexpr std::string_view kForceDestroyed = "force_destroyed";
inline constexpr std::string_view kObjectivesHeld = "objectives_held";
inline constexpr std::string_view kMaxTicks = "max_ticks";

/// Reset/step lifecycle over one scenario. The opposing force is driven by
/// `opponent`; pass nullptr to supply its actions on every step instead.
class Environment {
 public:
  Environment(scenario::Scenario scenario, EnvConfig config, std::unique_ptr<Opponent> opponent);

  Environment(const Environment& other);
  Environment& operator=(const Environment& other);
  Environment(Environment&&) noexcept = default;
  Environment& operator=(Environment&&) noexcept = default;
  ~Environment() = default;

  Observation reset(std::uint64_t seed);

  /// Throws std::logic_error when called after done without a reset.
  StepResult step(const ActionSet& actions);
  /// Variant for an external opponent: `other` drives the opposing force.
  StepResult step(const ActionSet& actions, const ActionSet& other);
  /// Raw orders for the controlled force; the built-in opponent drives the other.
  StepResult step_own_orders(std::vector<sim::Order> controlled);
  /// Lowest level: raw orders for both forces.
  StepResult step_orders(std::vector<sim::Order> controlled, std::vector<sim::Order> other);

  Observation observe(sim::Force force) const;

  const sim::World& world() const noexcept { return world_; }
  const scenario::Scenario& scenario() const noexcept { return scenario_; }
  const EnvConfig& config() const noexcept { return config_; }
  bool done() const noexcept { return done_; }
  double score() const noexcept { return score_; }
  /// Cumulative reward of either force under the scenario's scheme.
  double score_of(sim::Force f) const noexcept { return force_scores_[sim::index_of(f)]; }
  const std::string& termination() const noexcept { return termination_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const Opponent* opponent() const noexcept { return opponent_.get(); }
  Navigator& navigator() noexcept { return *nav_; }

  /// Every event of the current episode, in emission order.
  const std::vector<sim::CombatEvent>& ledger() const noexcept { return ledger_; }

 private:
  std::optional<std::string> check_termination() const;

  scenario::Scenario scenario_;
  EnvConfig config_;
  std::unique_ptr<Opponent> opponent_;
  std::unique_ptr<Navigator> nav_;
  std::vector<sim::Region> objective_regions_;
  sim::World world_;
  std::vector<sim::CombatEvent> ledger_;
  std::uint64_t seed_ = 0;
  double score_ = 0.0;
  std::array<double, 2> force_scores_{};
  bool done_ = true;
  std::string termination_;
};

/// Observation of `force` built from the world alone.
Observation make_observation(const sim::World& world, sim::Force force, ObservationMode mode,
                             const SpatialConfig& spatial, const SpatialContext& context);

/// Seed handed to the opponent for an episode seed.
std::uint64_t opponent_seed(std::uint64_t episode_seed) noexcept;

/// Why an episode in `world` is over, or nullopt while it continues.
std::optional<std::string> termination_reason(const sim::World& world, std::span<const sim::Region> objectives,
                                              int max_ticks);

}  // namespace c2::env
