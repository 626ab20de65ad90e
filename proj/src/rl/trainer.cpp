#include "c2/rl/trainer.hpp"

#include <chrono>
#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

#include "c2/cmd/commanders.hpp"
#include "c2/core/rng.hpp"
#include "c2/env/reward.hpp"
#include "c2/rl/a2c.hpp"
#include "c2/rl/evaluate.hpp"
#include "c2/rl/policy.hpp"

namespace c2::rl {

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::uint64_t kEvalSeedStream = 0xE7A1;
constexpr std::uint64_t kWorkerSeedStream = 0x3000;
constexpr std::uint64_t kSamplerStream = 0x5A;
constexpr std::uint64_t kRedSamplerStream = 0x5B;

/// Open trajectories of one force, keyed by agent slot.
using TrajectoryMap = std::map<int, Trajectory>;

struct Segment {
  std::vector<Trajectory> blue;
  std::vector<Trajectory> red;
  std::vector<double> finished_returns;
  std::uint64_t steps = 0;
  LossStats sums;
  nn::Gradients grads;
};

class Worker {
 public:
  Worker(int index, const TrainConfig& config, const env::Environment& prototype,
         std::shared_ptr<const nn::PolicyNet> blue, std::shared_ptr<const nn::PolicyNet> red)
      : index_(index), config_(config), env_(prototype), blue_(std::move(blue), false),
        seed_base_(derive_seed(config.seed, kWorkerSeedStream + static_cast<std::uint64_t>(index))) {
    if (red) red_.emplace(std::move(red), false);
  }

  void set_nets(std::shared_ptr<const nn::PolicyNet> blue, std::shared_ptr<const nn::PolicyNet> red) {
    blue_.set_net(std::move(blue));
    if (red_ && red) red_->set_net(std::move(red));
  }

  /// Discards the running episode; the next segment starts a fresh one.
  void restart(const env::Environment& prototype) {
    env_ = prototype;
    needs_reset_ = true;
  }

  std::uint64_t episodes() const noexcept { return episodes_; }

  Segment collect(int steps) {
    Segment seg;
    TrajectoryMap blue_open, red_open;
    env::Observation red_obs;
    for (int k = 0; k < steps; ++k) {
      if (needs_reset_) begin_episode();
      const PolicyStep blue_step = blue_.act(obs_);
      env::StepResult res;
      PolicyStep red_step;
      if (red_) {
        red_step = red_->act(env_.observe(sim::Force::Red));
        res = env_.step(blue_step.actions, red_step.actions);
      } else {
        res = env_.step(blue_step.actions);
      }
      ++seg.steps;
      episode_return_ += res.reward;

      record(blue_step, res.observation, res, sim::Force::Blue, blue_open);
      if (red_) {
        red_obs = env_.observe(sim::Force::Red);
        record(red_step, red_obs, res, sim::Force::Red, red_open);
      }
      obs_ = std::move(res.observation);
      if (res.done) {
        seg.finished_returns.push_back(episode_return_);
        needs_reset_ = true;
      }
    }
    seg.blue = close(blue_open, blue_, needs_reset_ ? nullptr : &obs_);
    if (red_) {
      const env::Observation next_red = needs_reset_ ? env::Observation{} : env_.observe(sim::Force::Red);
      seg.red = close(red_open, *red_, needs_reset_ ? nullptr : &next_red);
    }
    return seg;
  }

 private:
  void begin_episode() {
    const std::uint64_t seed = derive_seed(seed_base_, episodes_++);
    obs_ = env_.reset(seed);
    blue_.reset(derive_seed(seed, kSamplerStream));
    if (red_) red_->reset(derive_seed(seed, kRedSamplerStream));
    episode_return_ = 0.0;
    needs_reset_ = false;
  }

  void record(const PolicyStep& step, const env::Observation& next, const env::StepResult& res, sim::Force force,
              TrajectoryMap& open) {
    std::map<sim::UnitId, double> credit;
    const bool per_unit = config_.unit_credit && config_.observation == env::ObservationMode::Vector;
    if (per_unit) credit = env::unit_credit(res.info.events, env_.world(), force, env_.scenario().reward_scheme);
    const double team = res.info.rewards[sim::index_of(force)];
    for (const Decision& d : step.decisions) {
      Trajectory& traj = open[d.slot];
      if (traj.steps.empty()) traj.initial = d.state_before;
      Transition tr;
      tr.input = d.input;
      tr.choice = d.choice;
      tr.value = d.value;
      tr.log_prob = d.log_prob;
      tr.reset_before = d.first;
      if (per_unit) {
        const auto it = credit.find(static_cast<sim::UnitId>(d.slot));
        tr.reward = it == credit.end() ? 0.0 : it->second * config_.reward_scale;
      } else {
        tr.reward = team * config_.reward_scale;
      }
      const bool present = d.slot == kForceSlot
                               ? !next.units.empty()
                               : std::find(next.units.begin(), next.units.end(),
                                           static_cast<sim::UnitId>(d.slot)) != next.units.end();
      tr.done = res.done || !present;
      traj.steps.push_back(std::move(tr));
    }
  }

  static std::vector<Trajectory> close(TrajectoryMap& open, const NetPolicy& policy, const env::Observation* next) {
    std::vector<Trajectory> out;
    std::map<int, nn::NetInput> inputs;
    if (next) {
      for (auto& [slot, input] : net_inputs(policy.net().config(), *next)) inputs.emplace(slot, std::move(input));
    }
    for (auto& [slot, traj] : open) {
      if (!traj.steps.back().done) {
        const auto it = inputs.find(slot);
        traj.bootstrap_value = it == inputs.end() ? 0.0 : policy.peek_value(slot, it->second);
      }
      out.push_back(std::move(traj));
    }
    return out;
  }

  int index_;
  const TrainConfig& config_;
  env::Environment env_;
  NetPolicy blue_;
  std::optional<NetPolicy> red_;
  std::uint64_t seed_base_;
  std::uint64_t episodes_ = 0;
  env::Observation obs_;
  double episode_return_ = 0.0;
  bool needs_reset_ = true;
};

class CsvLog {
 public:
  explicit CsvLog(const std::string& path) {
    if (path.empty()) return;
    const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
    out_.open(path, std::ios::app);
    if (!out_) throw std::runtime_error("cannot open training log " + path);
    if (fresh) {
      out_ << "step,updates,episodes,rolling_reward,policy_loss,value_loss,entropy,grad_norm,steps_per_sec,"
              "eval_mean_reward\n";
    }
  }

  void row(std::uint64_t step, std::uint64_t updates, std::uint64_t episodes, double rolling, const LossStats& s,
           double sps, std::optional<double> eval) {
    if (!out_.is_open()) return;
    out_ << fmt::format("{},{},{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.1f},{}\n", step, updates, episodes, rolling,
                        s.policy_loss, s.value_loss, s.entropy, s.grad_norm, sps,
                        eval ? fmt::format("{:.6f}", *eval) : std::string());
    out_.flush();
  }

 private:
  std::ofstream out_;
};

class Trainer {
 public:
  Trainer(const TrainConfig& config, const scenario::Scenario& scenario)
      : config_(config), scenario_(scenario), a2c_{config.gamma, config.entropy_coef, config.value_coef} {
    validate(config);
    const nn::NetConfig nc = net_config_for(config);
    blue_ = std::make_shared<nn::PolicyNet>(nc, derive_seed(config.seed, 0xB1));
    const nn::RmsPropConfig oc{config.learning_rate, 0.99, 1e-5, config.grad_clip};
    blue_opt_ = nn::RmsProp(oc, std::as_const(*blue_).parameters());
    if (config.learn_red) {
      red_ = std::make_shared<nn::PolicyNet>(nc, derive_seed(config.seed, 0xED));
      red_opt_ = nn::RmsProp(oc, std::as_const(*red_).parameters());
    }

    env::EnvConfig ec;
    ec.observation = config.observation;
    ec.spatial.n = config.spatial_n;
    std::unique_ptr<env::Opponent> opponent;
    if (!config.learn_red) {
      opponent = make_policy(config.opponent, scenario);
      if (!opponent) throw std::invalid_argument("opponent: scenario has an external controller; pick one");
      eval_opponent_ = opponent->clone();
    }
    prototype_.emplace(scenario, ec, std::move(opponent));
    env_config_ = ec;

    if (!config.out_dir.empty()) std::filesystem::create_directories(config.out_dir);
    log_.emplace(config.out_dir.empty() ? std::string() : config.out_dir + "/train_log.csv");
  }

  TrainResult run() {
    result_.initial = snapshot(0);
    save(result_.initial, "initial.tcck");
    result_.best = result_.initial;
    next_eval_ = config_.eval_period;
    start_ = Clock::now();

    if (config_.total_env_steps > 0) {
      if (config_.asynchronous) {
        run_async();
      } else {
        run_sync();
      }
      if (result_.evals.empty() || result_.evals.back().step != result_.env_steps) evaluate_point();
    }

    result_.final_checkpoint = snapshot(result_.env_steps);
    save(result_.final_checkpoint, "final.tcck");
    if (red_) {
      result_.red_final = nn::make_checkpoint(*red_, &red_opt_, result_.env_steps);
      result_.red_final->metadata = {{"role", "red"}, {"scenario", scenario_.name}};
      save(*result_.red_final, "red_final.tcck");
    }
    if (result_.evals.empty()) result_.best = result_.initial;
    return std::move(result_);
  }

 private:
  int round_steps() const {
    const std::uint64_t remaining = config_.total_env_steps - result_.env_steps;
    return static_cast<int>(std::min<std::uint64_t>(config_.n_steps, remaining / config_.workers));
  }

  void run_sync() {
    std::vector<std::unique_ptr<Worker>> workers;
    for (int i = 0; i < config_.workers; ++i) {
      workers.push_back(std::make_unique<Worker>(i, config_, *prototype_, blue_, red_));
    }
    std::uint64_t round = 0;
    for (int steps = round_steps(); steps > 0; steps = round_steps(), ++round) {
      const bool update_red = red_ && round % 2 == 1;
      const nn::PolicyNet& learner = update_red ? *red_ : *blue_;

      std::vector<std::optional<Segment>> segments(workers.size());
      std::vector<std::string> errors(workers.size());
      auto job = [&](std::size_t i) {
        try {
          if (config_.fault_hook) config_.fault_hook(static_cast<int>(i), round);
          Segment seg = workers[i]->collect(steps);
          seg.grads = nn::zeros_like(learner.parameters());
          seg.sums = a2c_accumulate(learner, update_red ? seg.red : seg.blue, a2c_, &seg.grads);
          segments[i] = std::move(seg);
        } catch (const std::exception& e) {
          errors[i] = e.what();
        }
      };
      if (workers.size() == 1) {
        job(0);
      } else {
        std::vector<std::jthread> threads;
        for (std::size_t i = 0; i < workers.size(); ++i) threads.emplace_back(job, i);
      }

      LossStats total;
      nn::Gradients grads = nn::zeros_like(learner.parameters());
      for (std::size_t i = 0; i < workers.size(); ++i) {
        if (!segments[i]) {
          incident(fmt::format("worker {} crashed in round {}: {}; segment discarded, worker restarted", i, round,
                               errors[i]));
          workers[i]->restart(*prototype_);
          result_.env_steps += static_cast<std::uint64_t>(steps);
          continue;
        }
        Segment& seg = *segments[i];
        result_.env_steps += seg.steps;
        for (double r : seg.finished_returns) push_return(r);
        accumulate_stats(total, seg.sums);
        nn::accumulate(grads, seg.grads);
      }
      result_.episodes = 0;
      for (const auto& w : workers) result_.episodes += w->episodes();
      update(update_red, total, grads);
      maybe_evaluate();
    }
  }

  void run_async() {
    std::mutex mutex;
    std::vector<std::jthread> threads;
    std::uint64_t claimed = 0;
    std::uint64_t rounds = 0;
    std::vector<std::uint64_t> worker_episodes(config_.workers, 0);
    for (int i = 0; i < config_.workers; ++i) {
      threads.emplace_back([&, i] {
        std::shared_ptr<const nn::PolicyNet> blue_snap, red_snap;
        {
          std::lock_guard lock(mutex);
          blue_snap = std::make_shared<nn::PolicyNet>(*blue_);
          if (red_) red_snap = std::make_shared<nn::PolicyNet>(*red_);
        }
        Worker worker(i, config_, *prototype_, blue_snap, red_snap);
        for (std::uint64_t local = 0;; ++local) {
          int steps = 0;
          std::uint64_t round = 0;
          {
            std::lock_guard lock(mutex);
            const std::uint64_t remaining = config_.total_env_steps - std::min(claimed, config_.total_env_steps);
            steps = static_cast<int>(std::min<std::uint64_t>(config_.n_steps, remaining));
            if (steps == 0) return;
            claimed += static_cast<std::uint64_t>(steps);
            round = rounds++;
            blue_snap = std::make_shared<nn::PolicyNet>(*blue_);
            if (red_) red_snap = std::make_shared<nn::PolicyNet>(*red_);
          }
          worker.set_nets(blue_snap, red_snap);
          const bool update_red = red_ && local % 2 == 1;
          const nn::PolicyNet& learner = update_red ? *red_snap : *blue_snap;
          std::optional<Segment> seg;
          std::string error;
          try {
            if (config_.fault_hook) config_.fault_hook(i, round);
            seg = worker.collect(steps);
            seg->grads = nn::zeros_like(learner.parameters());
            seg->sums = a2c_accumulate(learner, update_red ? seg->red : seg->blue, a2c_, &seg->grads);
          } catch (const std::exception& e) {
            seg.reset();
            error = e.what();
          }
          std::lock_guard lock(mutex);
          if (!seg) {
            incident(fmt::format("worker {} crashed in round {}: {}; segment discarded, worker restarted", i, round,
                                 error));
            worker.restart(*prototype_);
            result_.env_steps += static_cast<std::uint64_t>(steps);
            continue;
          }
          result_.env_steps += seg->steps;
          for (double r : seg->finished_returns) push_return(r);
          worker_episodes[i] = worker.episodes();
          result_.episodes = 0;
          for (auto n : worker_episodes) result_.episodes += n;
          update(update_red, seg->sums, seg->grads);
          maybe_evaluate();
        }
      });
    }
  }

  static void accumulate_stats(LossStats& into, const LossStats& s) {
    into.policy_loss += s.policy_loss;
    into.value_loss += s.value_loss;
    into.entropy += s.entropy;
    into.total += s.total;
    into.samples += s.samples;
  }

  void update(bool red, LossStats sums, nn::Gradients& grads) {
    if (sums.samples == 0) return;
    normalize(sums, grads);
    nn::PolicyNet& net = red ? *red_ : *blue_;
    nn::RmsProp& opt = red ? red_opt_ : blue_opt_;
    const LossStats stats = apply_gradients(net, opt, sums, grads);
    ++result_.updates;
    if (!stats.applied) {
      ++result_.skipped_updates;
      incident(fmt::format("update {} skipped: {}", result_.updates, stats.message));
    }
    last_stats_ = stats;
    if (config_.log_every > 0 && result_.updates % static_cast<std::uint64_t>(config_.log_every) == 0) {
      log_->row(result_.env_steps, result_.updates, result_.episodes, rolling(), last_stats_, steps_per_sec(),
                std::nullopt);
    }
  }

  void maybe_evaluate() {
    if (config_.eval_period == 0) return;
    while (result_.env_steps >= next_eval_) {
      evaluate_point();
      next_eval_ += config_.eval_period;
    }
  }

  void evaluate_point() {
    auto frozen = std::make_shared<const nn::PolicyNet>(*blue_);
    PolicyCommander policy(frozen, scenario_, true, env_config_.spatial);
    const env::Opponent* opponent = eval_opponent_.get();
    std::unique_ptr<env::Opponent> red_policy;
    if (red_) {
      red_policy = std::make_unique<PolicyCommander>(std::make_shared<const nn::PolicyNet>(*red_), scenario_, true,
                                                     env_config_.spatial);
      opponent = red_policy.get();
    }
    const EvalReport report = evaluate(policy, scenario_, config_.eval_rollouts, opponent,
                                       derive_seed(config_.seed, kEvalSeedStream), env_config_);
    EvalPoint point;
    point.step = result_.env_steps;
    point.eval_mean = report.reward.mean;
    point.eval_blue_casualties = report.blue_casualties.mean;
    point.rolling_reward = rolling();

    nn::Checkpoint ck = snapshot(result_.env_steps);
    ck.metadata["eval_mean_reward"] = point.eval_mean;
    ck.metadata["rolling_reward"] = point.rolling_reward;
    point.checkpoint_hash = nn::checkpoint_hash(ck);
    save(ck, fmt::format("step_{:09d}.tcck", result_.env_steps));
    if (result_.evals.empty() || point.eval_mean > result_.best_eval) {
      result_.best_eval = point.eval_mean;
      result_.best = ck;
      save(ck, "best.tcck");
    }
    result_.evals.push_back(point);
    log_->row(result_.env_steps, result_.updates, result_.episodes, point.rolling_reward, last_stats_,
              steps_per_sec(), point.eval_mean);
    note(fmt::format("step {}: eval mean reward {:.3f}, blue casualties {:.2f}, rolling training reward {:.3f}",
                     point.step, point.eval_mean, point.eval_blue_casualties, point.rolling_reward));
  }

  nn::Checkpoint snapshot(std::uint64_t step) const {
    nn::Checkpoint ck = nn::make_checkpoint(*blue_, &blue_opt_, step);
    ck.metadata = {{"role", "blue"}, {"scenario", scenario_.name}, {"seed", config_.seed}};
    return ck;
  }

  void save(const nn::Checkpoint& ck, const std::string& file) const {
    if (config_.out_dir.empty()) return;
    nn::save_checkpoint(config_.out_dir + "/" + file, ck);
  }

  void push_return(double r) {
    recent_.push_back(r);
    while (recent_.size() > static_cast<std::size_t>(std::max(1, config_.rolling_window))) recent_.pop_front();
  }

  double rolling() const {
    if (recent_.empty()) return 0.0;
    double sum = 0.0;
    for (double r : recent_) sum += r;
    return sum / static_cast<double>(recent_.size());
  }

  double steps_per_sec() const {
    const double secs = std::chrono::duration<double>(Clock::now() - start_).count();
    return secs > 0.0 ? static_cast<double>(result_.env_steps) / secs : 0.0;
  }

  void incident(const std::string& message) {
    result_.incidents.push_back(message);
    note(message);
  }

  void note(const std::string& message) const {
    if (config_.on_log) config_.on_log(message);
  }

  const TrainConfig& config_;
  const scenario::Scenario& scenario_;
  A2CConfig a2c_;
  std::shared_ptr<nn::PolicyNet> blue_, red_;
  nn::RmsProp blue_opt_, red_opt_;
  std::optional<env::Environment> prototype_;
  std::unique_ptr<env::Opponent> eval_opponent_;
  env::EnvConfig env_config_;
  std::optional<CsvLog> log_;
  TrainResult result_;
  std::deque<double> recent_;
  LossStats last_stats_;
  std::uint64_t next_eval_ = 0;
  Clock::time_point start_;
};

}  // namespace

void validate(const TrainConfig& c) {
  auto fail = [](const std::string& msg) { throw std::invalid_argument(msg); };
  if (c.workers < 1) fail("workers must be at least 1");
  if (c.n_steps < 1) fail("n_steps must be at least 1");
  if (!(c.gamma > 0.0 && c.gamma <= 1.0)) fail("gamma must lie in (0, 1]");
  if (!(c.learning_rate > 0.0) || !std::isfinite(c.learning_rate)) fail("learning_rate must be positive");
  if (c.entropy_coef < 0.0 || c.value_coef < 0.0) fail("loss coefficients must be nonnegative");
  if (c.eval_rollouts < 1) fail("eval_rollouts must be at least 1");
  if (!(c.reward_scale > 0.0) || !std::isfinite(c.reward_scale)) fail("reward_scale must be positive");
  if (c.spatial_n < 4) fail("spatial_n must be at least 4");
  if (c.dense < 1 || c.lstm < 1) fail("layer widths must be positive");
}

nn::NetConfig net_config_for(const TrainConfig& config) {
  nn::NetConfig nc = config.observation == env::ObservationMode::Vector ? nn::NetConfig::vector_default()
                                                                         : nn::NetConfig::spatial_default(config.spatial_n);
  nc.dense = config.dense;
  nc.lstm = config.lstm;
  return nc;
}

TrainResult train(const TrainConfig& config, const scenario::Scenario& scenario) {
  Trainer trainer(config, scenario);
  return trainer.run();
}

}  // namespace c2::rl
