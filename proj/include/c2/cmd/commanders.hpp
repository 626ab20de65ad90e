#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "c2/cmd/plans.hpp"
#include "c2/core/rng.hpp"
#include "c2/env/environment.hpp"
#include "c2/scenario/scenario.hpp"

namespace c2::cmd {

/// An enemy unit as the observing force knows it.
struct Contact {
  sim::UnitId id = sim::kNoUnit;
  sim::UnitClass unit_class = sim::UnitClass::Infantry;
  sim::Vec2 position;
  double strength = 0.0;
  friend bool operator==(const Contact&, const Contact&) = default;
};

/// What one force knows: its own living units in full, enemies only as
/// contacts from the fused sensor picture (or ground truth with full vision).
struct ForceView {
  sim::Force force = sim::Force::Blue;
  int tick = 0;
  std::vector<sim::Unit> own;
  std::vector<Contact> contacts;
  friend bool operator==(const ForceView&, const ForceView&) = default;
};

ForceView make_view(const sim::World& world, sim::Force force, bool full_vision = false);

inline constexpr std::array<env::DiscreteAction, env::kDiscreteActionCount> kAllDiscreteActions = {
    env::DiscreteAction::NoOp,         env::DiscreteAction::MoveForward, env::DiscreteAction::MoveBackward,
    env::DiscreteAction::MoveRight,    env::DiscreteAction::MoveLeft,    env::DiscreteAction::SpeedUp,
    env::DiscreteAction::SlowDown,     env::DiscreteAction::OrientToGoal, env::DiscreteAction::Halt,
    env::DiscreteAction::FireWeapon,   env::DiscreteAction::CallForFire, env::DiscreteAction::ReactToContact};

/// One uniform draw from `legal` per unit.
env::ActionSet random_policy(std::span<const sim::UnitId> units, Rng& rng,
                             std::span<const env::DiscreteAction> legal = kAllDiscreteActions);

class RandomCommander final : public env::Opponent {
 public:
  void reset(const sim::World& world, std::uint64_t seed) override;
  std::vector<sim::Order> act(const sim::World& world, sim::Force force) override;
  std::unique_ptr<env::Opponent> clone() const override { return std::make_unique<RandomCommander>(*this); }
  std::string name() const override { return "random"; }

 private:
  Rng rng_;
  std::optional<env::Navigator> nav_;
};

/// Waypoint playback. Each unit keeps its own cursor and moves on to the
/// next waypoint once within one cell of the current one.
class ScriptedCommander final : public env::Opponent {
 public:
  explicit ScriptedCommander(CoaScript script) : script_(std::move(script)) {}
  void reset(const sim::World& world, std::uint64_t seed) override;
  std::vector<sim::Order> act(const sim::World& world, sim::Force force) override;
  std::unique_ptr<env::Opponent> clone() const override { return std::make_unique<ScriptedCommander>(*this); }
  std::string name() const override { return "scripted"; }

  /// Index of the waypoint the unit is heading for (== size when exhausted).
  std::size_t cursor(sim::UnitId id) const;

 private:
  CoaScript script_;
  std::vector<std::size_t> cursor_;  // by unit id
  std::vector<int> group_of_;        // by unit id, -1 when unscripted
  std::optional<env::Navigator> nav_;
};

/// Leveled opponent: every decision period it commits a share of its living
/// units to attack the nearest known enemy (or advance on the goal when none
/// is known) and keeps the rest in place, firing at anything in range.
class BotCommander final : public env::Opponent {
 public:
  explicit BotCommander(BotConfig config) : config_(config) {}
  void reset(const sim::World& world, std::uint64_t seed) override;
  std::vector<sim::Order> act(const sim::World& world, sim::Force force) override;
  std::unique_ptr<env::Opponent> clone() const override { return std::make_unique<BotCommander>(*this); }
  std::string name() const override { return "bot:" + std::to_string(config_.level); }

  /// The plan for a view; exposed for tests.
  env::ActionSet plan(const ForceView& view, const sim::World& world) const;
  const BotConfig& config() const noexcept { return config_; }

 private:
  BotConfig config_;
  env::ActionSet current_;
  int next_plan_tick_ = 0;
  std::optional<env::Navigator> nav_;
};

/// Shipped stand-in rule set (priorities 1..6).
std::vector<DoctrineRule> default_doctrine();

/// First matching rule by ascending priority, per unit. No rules -> NoOp.
env::ActionSet doctrine_policy(const sim::World& world, sim::Force force, std::span<const DoctrineRule> rules);

bool evaluate(const Condition& c, const sim::World& world, const sim::Unit& unit);

class DoctrineCommander final : public env::Opponent {
 public:
  explicit DoctrineCommander(std::vector<DoctrineRule> rules = default_doctrine());
  void reset(const sim::World& world, std::uint64_t seed) override;
  std::vector<sim::Order> act(const sim::World& world, sim::Force force) override;
  std::unique_ptr<env::Opponent> clone() const override { return std::make_unique<DoctrineCommander>(*this); }
  std::string name() const override { return "doctrine"; }
  const std::vector<DoctrineRule>& rules() const noexcept { return rules_; }

 private:
  std::vector<DoctrineRule> rules_;
  std::optional<env::Navigator> nav_;
};

/// Commander described by the scenario's red_controller; nullptr for External.
std::unique_ptr<env::Opponent> make_opponent(const scenario::RedController& controller);

/// Parses "random", "doctrine", "bot:<level>" or "scenario" (the scenario's
/// own controller). Throws std::invalid_argument otherwise.
std::unique_ptr<env::Opponent> make_commander(const std::string& spec, const scenario::Scenario& scenario);

/// Environment whose opponent comes from the scenario.
env::Environment make_environment(const scenario::Scenario& scenario, env::EnvConfig config = {});

}  // namespace c2::cmd
