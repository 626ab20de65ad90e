// Command-line entry point: validate, train, eval, play, replay, bench.
//
// Exit codes: 0 success, 1 usage error, 2 validation failure (bad scenario,
// bad configuration, replay that does not verify), 3 runtime failure.

#include <atomic>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "c2/cmd/commanders.hpp"
#include "c2/harness/bench.hpp"
#include "c2/harness/log.hpp"
#include "c2/harness/replay.hpp"
#include "c2/harness/server.hpp"
#include "c2/harness/session.hpp"
#include "c2/nn/checkpoint.hpp"
#include "c2/rl/evaluate.hpp"
#include "c2/rl/trainer.hpp"
#include "c2/scenario/scenario.hpp"

namespace {

using namespace c2;
using harness::LogLevel;

enum Exit : int { kOk = 0, kUsage = 1, kInvalid = 2, kRuntime = 3 };

/// Raised for problems the user can fix by changing inputs.
struct InvalidInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

scenario::Scenario load(const std::string& name) {
  if (name == "tigerclaw" || name == "tigerclaw-desk") return scenario::builtin_tigerclaw();
  if (name == "skirmish" || name == "skirmish-16") return scenario::builtin_skirmish();
  const auto parsed = scenario::load_scenario_file(name);
  if (!parsed.ok()) {
    std::string msg = "scenario " + name + " is invalid:";
    for (const auto& issue : parsed.errors) msg += "\n  " + issue.to_string();
    throw InvalidInput(msg);
  }
  return *parsed.scenario;
}

std::unique_ptr<env::Opponent> policy_or_invalid(const std::string& spec, const scenario::Scenario& sc) {
  try {
    return rl::make_policy(spec, sc);
  } catch (const std::invalid_argument& e) {
    throw InvalidInput(e.what());
  }
}

int cmd_validate(const std::string& path, bool print) {
  const scenario::Scenario sc = load(path);
  if (print) std::cout << scenario::serialize_scenario(sc) << "\n";
  std::cout << fmt::format("{}: valid ({} blue / {} red units, {}x{} cells, hash {:016x})\n", sc.name,
                           sc.unit_count(sim::Force::Blue), sc.unit_count(sim::Force::Red), sc.terrain.width(),
                           sc.terrain.height(), scenario::content_hash(sc));
  return kOk;
}

struct TrainArgs {
  std::string scenario = "skirmish";
  rl::TrainConfig config;
  std::string observation = "vector";
};

int cmd_train(TrainArgs& args) {
  const scenario::Scenario sc = load(args.scenario);
  auto& c = args.config;
  if (args.observation != "vector" && args.observation != "spatial") {
    throw InvalidInput("--observation must be vector or spatial");
  }
  c.observation = args.observation == "vector" ? env::ObservationMode::Vector : env::ObservationMode::Spatial;
  try {
    rl::validate(c);
  } catch (const std::invalid_argument& e) {
    throw InvalidInput(e.what());
  }
  c.on_log = [](const std::string& m) { harness::log(LogLevel::Info, m); };
  const rl::TrainResult r = rl::train(c, sc);
  std::cout << fmt::format("trained {} env steps in {} updates ({} skipped), {} episodes\n", r.env_steps, r.updates,
                           r.skipped_updates, r.episodes);
  if (!r.evals.empty()) {
    std::cout << fmt::format("best greedy eval mean reward {:.3f}; final {:.3f}\n", r.best_eval,
                             r.evals.back().eval_mean);
  }
  if (!c.out_dir.empty()) std::cout << "checkpoints in " << c.out_dir << "\n";
  for (const auto& i : r.incidents) harness::log(LogLevel::Warn, i);
  return kOk;
}

struct EvalArgs {
  std::string scenario = "tigerclaw";
  std::string checkpoint;
  std::string policy;
  std::string opponent = "scenario";
  int rollouts = 100;
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_eval(const EvalArgs& a) {
  const scenario::Scenario sc = load(a.scenario);
  if (a.checkpoint.empty() == a.policy.empty()) throw InvalidInput("give exactly one of --checkpoint or --policy");
  if (a.rollouts < 1) throw InvalidInput("--rollouts must be at least 1");
  auto policy = policy_or_invalid(a.checkpoint.empty() ? a.policy : "checkpoint:" + a.checkpoint, sc);
  auto opponent = policy_or_invalid(a.opponent, sc);
  const rl::EvalReport report = rl::evaluate(*policy, sc, a.rollouts, opponent.get(), a.seed);
  if (a.out.empty() || a.out == "-") {
    rl::write_report_csv(std::cout, report);
  } else {
    std::ofstream out(a.out);
    if (!out) throw std::runtime_error("cannot write " + a.out);
    rl::write_report_csv(out, report);
  }
  std::cerr << fmt::format("{} vs {} on {}: reward {:.3f} ± {:.3f}, blue casualties {:.2f}, red casualties {:.2f}\n",
                           report.policy, report.opponent, report.scenario, report.reward.mean, report.reward.std,
                           report.blue_casualties.mean, report.red_casualties.mean);
  return kOk;
}

struct PlayArgs {
  std::string scenario = "tigerclaw";
  std::string side = "blue";
  std::string opponent = "bot:1";
  std::uint64_t seed = 1;
  std::string address = "127.0.0.1";
  int port = 7777;
  int http_port = -1;
  std::string ui_dir;
  int realtime_ms = 0;
  std::string replay_dir;
  int sessions = 0;
};

int cmd_play(const PlayArgs& a) {
  const scenario::Scenario sc = load(a.scenario);
  const auto side = sim::parse_force(a.side);
  if (!side) throw InvalidInput("--side must be blue or red");
  policy_or_invalid(a.opponent, sc);

  harness::ServerOptions opts;
  opts.address = a.address;
  opts.tcp_port = a.port < 0 ? std::nullopt : std::optional<unsigned short>(static_cast<unsigned short>(a.port));
  if (a.http_port >= 0) {
    opts.http_port = static_cast<unsigned short>(a.http_port);
  } else if (!a.ui_dir.empty()) {
    opts.http_port = 8080;
  }
  opts.ui_dir = a.ui_dir;

  auto counter = std::make_shared<std::atomic<int>>(0);
  auto factory = [sc, side, a, counter] {
    harness::SessionConfig cfg;
    cfg.human = *side;
    cfg.opponent = a.opponent;
    const int n = (*counter)++;
    cfg.seed = a.seed + static_cast<std::uint64_t>(n);
    if (a.realtime_ms > 0) cfg.deadline = std::chrono::milliseconds(a.realtime_ms);
    if (!a.replay_dir.empty()) cfg.replay_path = fmt::format("{}/session_{:04d}.tcrp", a.replay_dir, n);
    return std::make_unique<harness::Session>(sc, cfg);
  };
  harness::SessionServer server(opts, factory, [](const std::string& m) { harness::log(LogLevel::Info, m); });
  std::cout << fmt::format("listening tcp={} http={}\n", server.tcp_port(), server.http_port()) << std::flush;
  server.wait_for_completed(a.sessions);
  return kOk;
}

int cmd_replay_record(const std::string& scenario_name, const std::string& policy_spec, const std::string& opponent,
                      std::uint64_t seed, const std::string& out) {
  const scenario::Scenario sc = load(scenario_name);
  auto policy = policy_or_invalid(policy_spec, sc);
  env::Environment env(sc, {}, policy_or_invalid(opponent, sc));
  const harness::Replay replay = harness::record_episode(env, *policy, seed);
  harness::save_replay(out, replay);
  std::cout << fmt::format("recorded {} ticks to {} (score {:.3f}, {})\n", replay.ticks.size(), out,
                           replay.end->score, replay.end->termination);
  return kOk;
}

int cmd_replay_verify(const std::string& file) {
  harness::Replay replay;
  harness::Verdict v;
  try {
    replay = harness::load_replay(file);
    v = harness::verify_replay(replay);
  } catch (const harness::ReplayError& e) {
    std::cout << "refused: " << e.what() << "\n";
    return kInvalid;
  }
  if (v.exact) {
    std::cout << fmt::format("exact: {} ticks, {} events; {}\n", replay.ticks.size(), v.events.size(), v.message);
    return kOk;
  }
  std::cout << fmt::format("diverged at tick {}: {}\n", v.first_divergent_tick.value_or(-1), v.message);
  return kInvalid;
}

int cmd_replay_show(const std::string& file) {
  const harness::Replay replay = harness::load_replay(file);
  for (const auto& t : replay.ticks) {
    for (const auto& e : t.events) {
      nlohmann::json j = {{"tick", e.tick}, {"kind", sim::to_string(e.kind)}, {"actor", e.actor},
                          {"target", e.target}, {"amount", e.amount}};
      if (e.cell) j["cell"] = {e.cell->x, e.cell->y};
      std::cout << j.dump() << "\n";
    }
  }
  return kOk;
}

int cmd_bench(const std::string& scenario_name, std::uint64_t ticks, int workers, std::uint64_t seed,
              const std::string& policy) {
  const scenario::Scenario sc = load(scenario_name);
  if (workers < 1) throw InvalidInput("--workers must be at least 1");
  policy_or_invalid(policy, sc);
  const auto r = harness::bench(sc, ticks, workers, seed, policy);
  std::cout << fmt::format("ticks={} workers={} episodes={} seconds={:.3f} ticks_per_sec={:.1f} realtime_factor={:.0f}\n",
                           r.ticks, r.workers, r.episodes, r.seconds, r.ticks_per_sec,
                           r.ticks_per_sec * sc.tick_seconds);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  harness::set_log_level(harness::log_level_from_env());
  CLI::App app{"Desk-scale command-and-control simulation: scenarios, training, evaluation and play"};
  app.require_subcommand(1);

  std::string validate_path;
  bool validate_print = false;
  auto* validate = app.add_subcommand("validate", "Check a scenario file or built-in name");
  validate->add_option("--scenario", validate_path, "Scenario file or built-in name")->required();
  validate->add_flag("--print", validate_print, "Print the canonical serialization");

  TrainArgs train;
  auto* tr = app.add_subcommand("train", "Train an actor-critic policy");
  tr->add_option("--scenario", train.scenario, "Scenario file or built-in name");
  tr->add_option("--out", train.config.out_dir, "Output directory for checkpoints and the CSV log")->required();
  tr->add_option("--workers", train.config.workers, "Parallel rollout workers");
  tr->add_option("--steps", train.config.total_env_steps, "Total environment steps");
  tr->add_option("--n-steps", train.config.n_steps, "Segment length");
  tr->add_option("--gamma", train.config.gamma, "Discount factor");
  tr->add_option("--lr", train.config.learning_rate, "Learning rate");
  tr->add_option("--entropy", train.config.entropy_coef, "Entropy coefficient");
  tr->add_option("--reward-scale", train.config.reward_scale, "Multiplier applied to rewards before the update");
  tr->add_option("--value-coef", train.config.value_coef, "Value loss coefficient");
  tr->add_option("--clip", train.config.grad_clip, "Global gradient-norm clip");
  tr->add_option("--eval-period", train.config.eval_period, "Environment steps between evaluations");
  tr->add_option("--eval-rollouts", train.config.eval_rollouts, "Rollouts per evaluation");
  tr->add_option("--seed", train.config.seed, "Seed");
  tr->add_option("--observation", train.observation, "vector or spatial");
  tr->add_option("--spatial-n", train.config.spatial_n, "Spatial grid size");
  tr->add_option("--opponent", train.config.opponent, "Opponent: scenario, random, doctrine, bot:N or checkpoint");
  tr->add_flag("--unit-credit", train.config.unit_credit, "Per-unit reward credit");
  tr->add_flag("--async", train.config.asynchronous, "Asynchronous updates");
  tr->add_flag("--learn-red", train.config.learn_red, "Train an independent Red network as well");

  EvalArgs ev;
  auto* evc = app.add_subcommand("eval", "Evaluate a policy over seeded rollouts");
  evc->add_option("--scenario", ev.scenario, "Scenario file or built-in name");
  evc->add_option("--checkpoint", ev.checkpoint, "Trained checkpoint (greedy actions)");
  evc->add_option("--policy", ev.policy, "Non-learned policy: random, doctrine, bot:N, scenario");
  evc->add_option("--opponent", ev.opponent, "Opponent for the other force");
  evc->add_option("--rollouts", ev.rollouts, "Number of rollouts");
  evc->add_option("--seed", ev.seed, "Base seed");
  evc->add_option("--out", ev.out, "CSV report path (default stdout)");

  PlayArgs play;
  auto* pl = app.add_subcommand("play", "Serve human-play sessions");
  pl->add_option("--scenario", play.scenario, "Scenario file or built-in name");
  pl->add_option("--side", play.side, "Force commanded by the human");
  pl->add_option("--opponent", play.opponent, "Commander of the other force");
  pl->add_option("--seed", play.seed, "Seed of the first session");
  pl->add_option("--address", play.address, "Listen address");
  pl->add_option("--port", play.port, "NDJSON TCP port (0 = any, -1 = off)");
  pl->add_option("--http-port", play.http_port, "HTTP/WebSocket port (0 = any)");
  pl->add_option("--serve-ui", play.ui_dir, "Serve static UI files from this directory");
  pl->add_option("--realtime-ms", play.realtime_ms, "Per-tick deadline; 0 = turn-based");
  pl->add_option("--replay-dir", play.replay_dir, "Write one replay per session here");
  pl->add_option("--sessions", play.sessions, "Exit after this many completed sessions (0 = never)");

  auto* rp = app.add_subcommand("replay", "Record, verify or print replays");
  rp->require_subcommand(1);
  std::string rec_scenario = "tigerclaw", rec_policy = "doctrine", rec_opponent = "scenario", rec_out, replay_file;
  std::uint64_t rec_seed = 1;
  auto* rec = rp->add_subcommand("record", "Play one episode and record it");
  rec->add_option("--scenario", rec_scenario, "Scenario file or built-in name");
  rec->add_option("--policy", rec_policy, "Policy for the controlled force");
  rec->add_option("--opponent", rec_opponent, "Opponent");
  rec->add_option("--seed", rec_seed, "Episode seed");
  rec->add_option("--out", rec_out, "Replay file")->required();
  auto* ver = rp->add_subcommand("verify", "Re-simulate a replay and report the verdict");
  ver->add_option("file", replay_file, "Replay file")->required();
  auto* show = rp->add_subcommand("show", "Print a replay's event stream as JSON lines");
  show->add_option("file", replay_file, "Replay file")->required();

  std::string bench_scenario = "tigerclaw", bench_policy = "random";
  std::uint64_t bench_ticks = 100'000, bench_seed = 1;
  int bench_workers = 1;
  auto* bn = app.add_subcommand("bench", "Measure simulation throughput");
  bn->add_option("--scenario", bench_scenario, "Scenario file or built-in name");
  bn->add_option("--ticks", bench_ticks, "Total ticks");
  bn->add_option("--workers", bench_workers, "Worker threads");
  bn->add_option("--seed", bench_seed, "Seed");
  bn->add_option("--policy", bench_policy, "Blue policy");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*validate) return cmd_validate(validate_path, validate_print);
    if (*tr) return cmd_train(train);
    if (*evc) return cmd_eval(ev);
    if (*pl) return cmd_play(play);
    if (*rec) return cmd_replay_record(rec_scenario, rec_policy, rec_opponent, rec_seed, rec_out);
    if (*ver) return cmd_replay_verify(replay_file);
    if (*show) return cmd_replay_show(replay_file);
    if (*bn) return cmd_bench(bench_scenario, bench_ticks, bench_workers, bench_seed, bench_policy);
  } catch (const InvalidInput& e) {
    harness::log(LogLevel::Error, e.what());
    return kInvalid;
  } catch (const std::exception& e) {
    harness::log(LogLevel::Error, e.what());
    return kRuntime;
  }
  return kUsage;
}
