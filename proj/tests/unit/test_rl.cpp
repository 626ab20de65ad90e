#include <cmath>
#include <filesystem>
#include <numeric>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "doctest.h"

#include "c2/cmd/commanders.hpp"
#include "c2/nn/checkpoint.hpp"
#include "c2/nn/grad_check.hpp"
#include "c2/nn/layers.hpp"
#include "c2/rl/a2c.hpp"
#include "c2/rl/evaluate.hpp"
#include "c2/rl/policy.hpp"
#include "c2/rl/returns.hpp"
#include "c2/rl/trainer.hpp"
#include "fixtures.hpp"

using namespace c2;
using namespace c2::rl;

namespace {

std::vector<double> returns_of(std::vector<double> rewards, double gamma, double bootstrap = 0.0) {
  const std::vector<double> values(rewards.size(), 0.0);
  const std::vector<std::uint8_t> dones(rewards.size(), 0);
  return n_step_returns(rewards, values, dones, gamma, bootstrap).returns;
}

nn::Parameter& param(nn::PolicyNet& net, const std::string& name) {
  for (nn::Parameter* p : net.parameters()) {
    if (p->name == name) return *p;
  }
  throw std::out_of_range(name);
}

nn::NetConfig tiny_config() {
  nn::NetConfig c;
  c.input_dim = 4;
  c.dense = 2;
  c.lstm = 2;
  c.actions = 3;
  return c;
}

Trajectory one_step(std::vector<double> x, int action, double reward, double stored_value) {
  Trajectory t;
  t.initial = {Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2)};
  Transition tr;
  tr.input.vector = std::move(x);
  tr.choice.action = action;
  tr.reward = reward;
  tr.value = stored_value;
  tr.done = true;
  tr.reset_before = true;
  t.steps.push_back(tr);
  return t;
}

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

scenario::Scenario goal_toy() {
  scenario::Scenario s;
  s.name = "goal-toy";
  s.terrain = sim::TerrainGrid(16, 16, 0.5);
  s.roster.push_back({sim::UnitClass::Aviation, sim::Force::Blue, {1.5, 8.5}, 1, {}, ""});
  s.goals = {sim::Vec2{14.5, 8.5}, sim::Vec2{1.5, 8.5}};
  s.reward_scheme.kind = scenario::RewardKind::Attrition;
  s.max_ticks = 60;
  s.red_controller = scenario::ExternalController{};
  return s;
}

TrainConfig quick_config() {
  TrainConfig tc;
  tc.workers = 1;
  tc.total_env_steps = 2'000;
  tc.eval_period = 1'000;
  tc.eval_rollouts = 2;
  tc.dense = 16;
  tc.lstm = 16;
  tc.seed = 5;
  return tc;
}

std::vector<std::string> csv_fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) out.push_back(f);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

TEST_CASE("n-step returns: worked examples") {
  CHECK(returns_of({1, 0, 0}, 0.99) == std::vector<double>{1, 0, 0});
  const auto r = returns_of({0, 0, 1}, 0.99);
  CHECK(r[0] == doctest::Approx(0.9801).epsilon(1e-15));
  CHECK(r[1] == doctest::Approx(0.99).epsilon(1e-15));
  CHECK(r[2] == 1.0);
  CHECK(returns_of({1, 2, 3, 4}, 1.0) == std::vector<double>{10, 9, 7, 4});
  const std::vector<double> rw = {1, 2}, vs = {0.5, 0.25};
  const std::vector<std::uint8_t> dn = {1, 0};
  const auto cut = n_step_returns(rw, vs, dn, 0.5, 8.0);
  CHECK(cut.returns == std::vector<double>{1.0, 6.0});
  CHECK(cut.advantages == std::vector<double>{0.5, 5.75});
  CHECK_THROWS_AS(n_step_returns(rw, std::vector<double>{1.0}, dn, 0.5, 0.0), std::invalid_argument);
}

TEST_CASE("n-step returns equal brute-force suffix sums up to length 50") {
  Rng rng(404);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = 1 + rng.below(50);
    const double gamma = rng.uniform();
    const double bootstrap = rng.uniform(-5.0, 5.0);
    std::vector<double> rewards(n), values(n);
    std::vector<std::uint8_t> dones(n);
    for (std::size_t i = 0; i < n; ++i) {
      rewards[i] = rng.uniform(-2.0, 2.0);
      values[i] = rng.uniform(-2.0, 2.0);
      dones[i] = rng.bernoulli(0.1) ? 1 : 0;
    }
    const auto got = n_step_returns(rewards, values, dones, gamma, bootstrap);
    for (std::size_t t = 0; t < n; ++t) {
      // The episode containing t ends at the first done at or after t.
      std::size_t end = t;
      while (end < n - 1 && !dones[end]) ++end;
      double tail = dones[end] ? 0.0 : bootstrap;
      for (std::size_t k = end + 1; k-- > t;) tail = rewards[k] + gamma * tail;
      REQUIRE(got.returns[t] == tail);
      REQUIRE(got.advantages[t] == tail - values[t]);
    }
  }
}

TEST_CASE("policy entropy stays within its bounds") {
  Rng rng(8);
  for (nn::NetConfig c : {nn::NetConfig::vector_default(), nn::NetConfig::spatial_default(8)}) {
    const double bound = std::log(c.actions) + (c.mode == nn::NetMode::Spatial ? 2.0 * std::log(c.n) : 0.0);
    for (int i = 0; i < 500; ++i) {
      nn::HeadOutput out;
      out.action_logits.resize(c.actions);
      for (double& v : out.action_logits) v = rng.uniform(-20.0, 20.0);
      if (c.mode == nn::NetMode::Spatial) {
        out.x_logits.resize(c.n);
        out.y_logits.resize(c.n);
        for (double& v : out.x_logits) v = rng.uniform(-20.0, 20.0);
        for (double& v : out.y_logits) v = rng.uniform(-20.0, 20.0);
      }
      const double h = policy_entropy(c, out);
      CHECK(h >= 0.0);
      CHECK(h <= bound + 1e-12);
      for (double p : nn::softmax(out.action_logits)) CHECK(p >= 0.0);
    }
  }
}

TEST_CASE("single-step A2C loss matches a hand computation") {
  nn::PolicyNet net(tiny_config(), 1);
  Rng rng(19);
  for (nn::Parameter* p : net.parameters()) {
    for (double& v : p->value.values()) v = rng.uniform(-0.9, 0.9);
  }
  const std::vector<double> x = {0.3, -0.1, 0.8, 0.2};
  const int action = 2;
  const double reward = 1.5, stored = 0.4;
  const A2CConfig cfg{0.99, 0.01, 0.5};

  // Scalar forward pass from a zero recurrent state.
  const auto& w1 = param(net, "trunk.dense.weight").value;
  const auto& b1 = param(net, "trunk.dense.bias").value;
  const auto& wx = param(net, "lstm.wx").value;
  const auto& bl = param(net, "lstm.bias").value;
  const auto& wa = param(net, "head.action.weight").value;
  const auto& ba = param(net, "head.action.bias").value;
  const auto& wv = param(net, "head.value.weight").value;
  const auto& bv = param(net, "head.value.bias").value;
  double a[2], h[2];
  for (int j = 0; j < 2; ++j) {
    double s = b1[j];
    for (int k = 0; k < 4; ++k) s += w1[j * 4 + k] * x[k];
    a[j] = std::tanh(s);
  }
  for (int j = 0; j < 2; ++j) {
    auto z = [&](int r) { return bl[r] + wx[r * 2] * a[0] + wx[r * 2 + 1] * a[1]; };
    const double c = sig(z(j)) * std::tanh(z(4 + j));
    h[j] = sig(z(6 + j)) * std::tanh(c);
  }
  double logits[3], norm = 0.0;
  for (int q = 0; q < 3; ++q) {
    logits[q] = ba[q] + wa[q * 2] * h[0] + wa[q * 2 + 1] * h[1];
    norm += std::exp(logits[q]);
  }
  double entropy = 0.0;
  for (double l : logits) {
    const double p = std::exp(l) / norm;
    entropy -= p * std::log(p);
  }
  const double value = bv[0] + wv[0] * h[0] + wv[1] * h[1];
  const double adv = reward - stored;
  const double policy_loss = -(logits[action] - std::log(norm)) * adv;
  const double value_loss = (reward - value) * (reward - value);

  const std::vector<Trajectory> batch = {one_step(x, action, reward, stored)};
  const LossStats s = a2c_loss(net, batch, cfg);
  CHECK(std::abs(s.policy_loss - policy_loss) < 1e-9);
  CHECK(std::abs(s.value_loss - value_loss) < 1e-9);
  CHECK(std::abs(s.entropy - entropy) < 1e-9);
  CHECK(std::abs(s.total - (policy_loss + 0.5 * value_loss - 0.01 * entropy)) < 1e-9);
  CHECK(s.samples == 1);
}

TEST_CASE("zero advantage with an exact critic leaves only the entropy term") {
  nn::PolicyNet net(tiny_config(), 2);
  param(net, "head.value.weight").value.fill(0.0);
  param(net, "head.value.bias").value.fill(0.75);
  const std::vector<Trajectory> batch = {one_step({0.1, 0.2, 0.3, 0.4}, 1, 0.75, 0.75)};
  auto cps = std::as_const(net).parameters();
  nn::Gradients grads = nn::zeros_like(cps);
  const LossStats s = a2c_loss(net, batch, {0.99, 0.01, 0.5}, &grads);
  CHECK(s.policy_loss == 0.0);
  CHECK(s.value_loss == 0.0);
  CHECK(s.total == doctest::Approx(-0.01 * s.entropy).epsilon(1e-14));
  for (std::size_t i = 0; i < cps.size(); ++i) {
    if (cps[i]->name.starts_with("head.value")) {
      for (double g : grads[i].values()) CHECK(g == 0.0);
    }
  }
  // With no entropy bonus either, nothing moves.
  nn::Gradients none = nn::zeros_like(cps);
  a2c_loss(net, batch, {0.99, 0.0, 0.5}, &none);
  CHECK(nn::global_norm(none) == 0.0);
}

TEST_CASE("the composed A2C loss passes a gradient check") {
  for (nn::NetConfig c : {tiny_config(), nn::NetConfig::spatial_default(4)}) {
    if (c.mode == nn::NetMode::Spatial) {
      c.conv1_filters = 2;
      c.conv2_filters = 2;
      c.conv1_kernel = 3;
      c.trunk_projection = 4;
      c.dense = 3;
      c.lstm = 4;
      c.minimap_layers = 2;
      c.screen_layers = 2;
      c.nonspatial = 3;
    }
    nn::PolicyNet net(c, 3);
    Rng rng(4);
    for (nn::Parameter* p : net.parameters()) {
      if (p->name.ends_with(".bias")) {
        for (double& v : p->value.values()) v = rng.uniform(-0.3, 0.3);
      }
    }
    std::vector<Trajectory> batch(2);
    for (auto& traj : batch) {
      traj.initial = net.initial_state();
      for (int t = 0; t < 4; ++t) {
        Transition tr;
        auto fill = [&](std::vector<double>& v, int n) {
          v.resize(static_cast<std::size_t>(n));
          for (double& e : v) e = rng.uniform();
        };
        if (c.mode == nn::NetMode::Vector) {
          fill(tr.input.vector, c.input_dim);
        } else {
          fill(tr.input.minimap, c.minimap_layers * c.n * c.n);
          fill(tr.input.screen, c.screen_layers * c.n * c.n);
          fill(tr.input.nonspatial, c.nonspatial);
        }
        tr.choice = {static_cast<int>(rng.below(static_cast<std::uint64_t>(c.actions))),
                     static_cast<int>(rng.below(static_cast<std::uint64_t>(c.n))),
                     static_cast<int>(rng.below(static_cast<std::uint64_t>(c.n)))};
        tr.reward = rng.uniform(-1.0, 1.0);
        tr.value = rng.uniform(-1.0, 1.0);
        tr.done = t == 1;
        tr.reset_before = t == 2;
        traj.steps.push_back(tr);
      }
      traj.bootstrap_value = 0.3;
    }
    const A2CConfig cfg{0.9, 0.05, 0.5};
    auto params = net.parameters();
    nn::Gradients grads = nn::zeros_like(std::as_const(net).parameters());
    a2c_loss(net, batch, cfg, &grads);
    nn::GradCheckOptions opt;
    opt.samples_per_tensor = 30;
    const auto r = nn::grad_check(params, grads, [&] { return a2c_loss(net, batch, cfg).total; }, opt);
    CHECK_MESSAGE(r.max_relative_error < 1e-4, r.worst_parameter);
  }
}

TEST_CASE("on a deterministic bandit the best arm's probability rises every update") {
  nn::NetConfig c = tiny_config();
  nn::PolicyNet net(c, 6);
  auto params = std::as_const(net).parameters();
  nn::RmsProp opt({.learning_rate = 1e-3}, params);
  const std::vector<double> x = {0.5, 0.5, 0.5, 0.5};
  auto best_prob = [&] {
    auto state = net.initial_state();
    nn::NetInput in;
    in.vector = x;
    return nn::softmax(net.step(in, state).action_logits)[1];
  };
  double prev = best_prob();
  const double first = prev;
  for (int u = 0; u < 100; ++u) {
    std::vector<Trajectory> batch;
    for (int arm = 0; arm < 3; ++arm) batch.push_back(one_step(x, arm, arm == 1 ? 1.0 : 0.0, 0.0));
    const auto s = a2c_update(net, opt, batch, {0.99, 0.0, 0.5});
    REQUIRE(s.applied);
    const double now = best_prob();
    REQUIRE(now > prev);
    prev = now;
  }
  CHECK(prev > first + 0.05);
}

TEST_CASE("a non-finite reward skips the update") {
  nn::PolicyNet net(tiny_config(), 7);
  nn::RmsProp opt({}, std::as_const(net).parameters());
  const auto before = nn::make_checkpoint(net, nullptr, 0);
  const std::vector<Trajectory> batch = {one_step({0, 0, 0, 0}, 0, std::nan(""), 0.0)};
  const auto s = a2c_update(net, opt, batch, {});
  CHECK_FALSE(s.applied);
  CHECK_FALSE(s.message.empty());
  CHECK(nn::checkpoint_hash(nn::make_checkpoint(net, nullptr, 0)) == nn::checkpoint_hash(before));
}

TEST_CASE("training with no steps yields only the initial checkpoint") {
  TrainConfig tc = quick_config();
  tc.total_env_steps = 0;
  const auto dir = std::filesystem::temp_directory_path() / "c2_train_zero";
  std::filesystem::remove_all(dir);
  tc.out_dir = dir.string();
  const auto r = train(tc, scenario::builtin_skirmish());
  CHECK(r.updates == 0);
  CHECK(r.env_steps == 0);
  CHECK(r.evals.empty());
  CHECK(nn::checkpoint_hash(r.final_checkpoint) == nn::checkpoint_hash(r.initial));
  std::set<std::string> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.path().extension() == ".tcck") files.insert(e.path().filename().string());
  }
  // The final snapshot is the untouched initial network.
  CHECK(files == std::set<std::string>{"final.tcck", "initial.tcck"});
  CHECK(nn::checkpoint_hash(nn::load_checkpoint((dir / "final.tcck").string())) ==
        nn::checkpoint_hash(nn::load_checkpoint((dir / "initial.tcck").string())));
  std::filesystem::remove_all(dir);
}

TEST_CASE("single-worker training is bit-reproducible") {
  const auto sc = scenario::builtin_skirmish();
  const auto a = train(quick_config(), sc);
  const auto b = train(quick_config(), sc);
  CHECK(a.updates == 100);
  CHECK(nn::checkpoint_hash(a.final_checkpoint) == nn::checkpoint_hash(b.final_checkpoint));
  REQUIRE(a.evals.size() == b.evals.size());
  for (std::size_t i = 0; i < a.evals.size(); ++i) CHECK(a.evals[i].checkpoint_hash == b.evals[i].checkpoint_hash);
  TrainConfig other = quick_config();
  other.seed = 6;
  CHECK(nn::checkpoint_hash(train(other, sc).final_checkpoint) != nn::checkpoint_hash(a.final_checkpoint));
}

TEST_CASE("a crashing worker loses its segment and training carries on") {
  TrainConfig tc = quick_config();
  tc.workers = 2;
  tc.fault_hook = [](int worker, std::uint64_t round) {
    if (worker == 1 && round == 3) throw std::runtime_error("injected fault");
  };
  const auto r = train(tc, scenario::builtin_skirmish());
  REQUIRE(r.incidents.size() == 1);
  CHECK(r.incidents[0].find("worker 1") != std::string::npos);
  CHECK(r.incidents[0].find("injected fault") != std::string::npos);
  CHECK(r.env_steps == tc.total_env_steps);
  CHECK(r.updates == 50);
}

TEST_CASE("a lone unit learns to close on its goal") {
  const auto sc = goal_toy();
  TrainConfig tc;
  tc.workers = 4;
  tc.total_env_steps = 100'000;
  tc.eval_period = 20'000;
  tc.eval_rollouts = 5;
  tc.dense = 16;
  tc.lstm = 16;
  tc.gamma = 0.9;
  tc.learning_rate = 3e-3;
  tc.reward_scale = 30.0;
  tc.opponent = "random";
  tc.seed = 1;
  const auto dir = std::filesystem::temp_directory_path() / "c2_goal_toy";
  std::filesystem::remove_all(dir);
  tc.out_dir = dir.string();
  const auto r = train(tc, sc);
  REQUIRE(r.evals.size() == 5);

  std::vector<double> final_km;
  for (const auto& e : r.evals) {
    const auto ck = nn::load_checkpoint((dir / fmt::format("step_{:09d}.tcck", e.step)).string());
    PolicyCommander pol(std::make_shared<const nn::PolicyNet>(nn::restore_net(ck)), sc);
    env::Environment env(sc, {}, nullptr);
    double sum = 0.0;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      env.reset(seed);
      pol.reset(env.world(), seed);
      while (!env.done()) env.step_orders(pol.act(env.world(), sim::Force::Blue), {});
      sum += sim::distance_km(env.world(), env.world().units[0].position, sc.goals[0]);
    }
    final_km.push_back(sum / 3.0);
  }
  INFO("final distances: " << fmt::format("{}", fmt::join(final_km, " ")));
  for (std::size_t i = 1; i < final_km.size(); ++i) CHECK(final_km[i] <= final_km[i - 1]);
  CHECK(final_km.back() < final_km.front());
  std::filesystem::remove_all(dir);
}

TEST_CASE("evaluation is deterministic and symmetric play scores near zero") {
  const auto sc = testing::symmetric_scenario();
  cmd::DoctrineCommander doctrine;
  const auto a = evaluate(doctrine, sc, 1, &doctrine, 42);
  const auto b = evaluate(doctrine, sc, 1, &doctrine, 42);
  REQUIRE(a.rollouts.size() == 1);
  CHECK(a.rollouts[0].total_reward == b.rollouts[0].total_reward);
  CHECK(a.rollouts[0].length == b.rollouts[0].length);
  CHECK(a.rollouts[0].seed == b.rollouts[0].seed);

  // Destroying a unit is worth 1.0 under this scheme.
  const auto many = evaluate(doctrine, sc, 100, &doctrine, 43);
  CHECK(std::abs(many.reward.mean) < 0.25);
}

TEST_CASE("report CSV carries one row per rollout and a consistent aggregate") {
  const auto sc = scenario::builtin_skirmish();
  const auto report = evaluate(cmd::RandomCommander{}, sc, 100, nullptr, 9);
  std::ostringstream out;
  write_report_csv(out, report);
  std::istringstream in(out.str());
  std::string line;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) rows.push_back(csv_fields(line));
  REQUIRE(rows.size() == 102);
  CHECK(rows[0][0] == "rollout_id");
  CHECK(rows[101][0] == "aggregate");
  const std::size_t cols = rows[0].size();
  for (const auto& r : rows) CHECK(r.size() == cols);
  for (int col : {1, 2, 3, 4}) {
    double sum = 0.0;
    for (int i = 1; i <= 100; ++i) sum += std::stod(rows[i][col]);
    CHECK(std::abs(sum / 100.0 - std::stod(rows[101][col])) < 1e-9);
  }

  // Identical rollouts give zero spread.
  const cmd::RandomCommander nobody;  // the toy has no Red units
  const auto flat = evaluate(cmd::DoctrineCommander{}, goal_toy(), 5, &nobody, 1);
  std::ostringstream flat_out;
  write_report_csv(flat_out, flat);
  std::string last;
  std::istringstream flat_in(flat_out.str());
  while (std::getline(flat_in, line)) last = line;
  const auto agg = csv_fields(last);
  for (std::size_t i = agg.size() - 4; i < agg.size(); ++i) CHECK(std::stod(agg[i]) == 0.0);
}

TEST_CASE("tournament: random loses more units than doctrine against a level-5 bot" * doctest::test_suite("tournament")) {
  const auto sc = scenario::builtin_tigerclaw();
  const auto bot = cmd::make_commander("bot:5", sc);
  const auto random = evaluate(*cmd::make_commander("random", sc), sc, 100, bot.get(), 7);
  const auto doctrine = evaluate(*cmd::make_commander("doctrine", sc), sc, 100, bot.get(), 7);
  INFO("random " << random.blue_casualties.mean << " vs doctrine " << doctrine.blue_casualties.mean);
  CHECK(random.blue_casualties.mean > doctrine.blue_casualties.mean);
}
