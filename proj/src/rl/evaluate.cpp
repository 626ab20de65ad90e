#include "c2/rl/evaluate.hpp"

#include <cmath>
#include <filesystem>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

#include "c2/cmd/commanders.hpp"
#include "c2/core/rng.hpp"
#include "c2/nn/checkpoint.hpp"
#include "c2/rl/policy.hpp"

namespace c2::rl {

Aggregate aggregate(const std::vector<double>& values) {
  Aggregate a;
  if (values.empty()) return a;
  double sum = 0.0;
  for (double v : values) sum += v;
  a.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double sq = 0.0;
    for (double v : values) sq += (v - a.mean) * (v - a.mean);
    a.std = std::sqrt(sq / static_cast<double>(values.size() - 1));
  }
  return a;
}

std::uint64_t rollout_seed(std::uint64_t base, int index) noexcept {
  return derive_seed(base, static_cast<std::uint64_t>(index));
}

int casualties(const std::vector<sim::CombatEvent>& ledger, const sim::World& world, sim::Force force) {
  int n = 0;
  for (const auto& e : ledger) {
    if (e.kind == sim::EventKind::Destroyed && world.has_unit(e.actor) && world.unit(e.actor).force == force) ++n;
  }
  return n;
}

RolloutResult run_rollout(env::Environment& env, env::Opponent& policy, std::uint64_t seed) {
  env.reset(seed);
  policy.reset(env.world(), derive_seed(seed, 0xB1E));
  const sim::Force own = env.config().controlled;
  while (!env.done()) env.step_own_orders(policy.act(env.world(), own));
  RolloutResult r;
  r.seed = seed;
  r.total_reward = env.score();
  r.blue_casualties = casualties(env.ledger(), env.world(), sim::Force::Blue);
  r.red_casualties = casualties(env.ledger(), env.world(), sim::Force::Red);
  r.length = env.world().tick;
  r.termination = env.termination();
  return r;
}

EvalReport evaluate(const env::Opponent& policy, const scenario::Scenario& scenario, int rollouts,
                    const env::Opponent* opponent, std::uint64_t seed, env::EnvConfig config) {
  if (rollouts < 1) throw std::invalid_argument("evaluation needs at least one rollout");
  std::unique_ptr<env::Opponent> opp = opponent ? opponent->clone() : cmd::make_opponent(scenario.red_controller);
  if (!opp) throw std::invalid_argument("scenario has an external opponent; supply one to evaluate against");
  EvalReport report;
  report.policy = policy.name();
  report.opponent = opp->name();
  report.scenario = scenario.name;
  env::Environment env(scenario, config, std::move(opp));
  auto driver = policy.clone();
  std::vector<double> rewards, blue, red, length;
  for (int i = 0; i < rollouts; ++i) {
    RolloutResult r = run_rollout(env, *driver, rollout_seed(seed, i));
    rewards.push_back(r.total_reward);
    blue.push_back(r.blue_casualties);
    red.push_back(r.red_casualties);
    length.push_back(r.length);
    report.rollouts.push_back(std::move(r));
  }
  report.reward = aggregate(rewards);
  report.blue_casualties = aggregate(blue);
  report.red_casualties = aggregate(red);
  report.length = aggregate(length);
  return report;
}

std::unique_ptr<env::Opponent> make_policy(const std::string& spec, const scenario::Scenario& scenario) {
  if (spec == "random" || spec == "doctrine" || spec == "scenario" || spec.starts_with("bot:")) {
    return cmd::make_commander(spec, scenario);
  }
  const std::string path = spec.starts_with("checkpoint:") ? spec.substr(11) : spec;
  if (!std::filesystem::exists(path)) {
    throw std::invalid_argument("unknown policy '" + spec + "' (expected random, doctrine, bot:N, scenario or a checkpoint)");
  }
  const nn::Checkpoint ck = nn::load_checkpoint(path);
  auto net = std::make_shared<const nn::PolicyNet>(nn::restore_net(ck));
  return std::make_unique<PolicyCommander>(std::move(net), scenario, true);
}

void write_report_csv(std::ostream& out, const EvalReport& r) {
  // Shortest round-trip formatting keeps recomputed means exact.
  out << "rollout_id,total_reward,blue_casualties,red_casualties,length,termination,seed,"
         "total_reward_std,blue_casualties_std,red_casualties_std,length_std\n";
  for (std::size_t i = 0; i < r.rollouts.size(); ++i) {
    const auto& x = r.rollouts[i];
    out << fmt::format("{},{},{},{},{},{},{},,,,\n", i, x.total_reward, x.blue_casualties, x.red_casualties,
                       x.length, x.termination, x.seed);
  }
  out << fmt::format("aggregate,{},{},{},{},,,{},{},{},{}\n", r.reward.mean, r.blue_casualties.mean,
                     r.red_casualties.mean, r.length.mean, r.reward.std, r.blue_casualties.std,
                     r.red_casualties.std, r.length.std);
}

}  // namespace c2::rl
