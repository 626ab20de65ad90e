#include "c2/harness/bench.hpp"

#include <chrono>
#include <stdexcept>
#include <thread>
#include <vector>

#include "c2/cmd/commanders.hpp"
#include "c2/core/rng.hpp"
#include "c2/rl/evaluate.hpp"

namespace c2::harness {

BenchResult bench(const scenario::Scenario& scenario, std::uint64_t ticks, int workers, std::uint64_t seed,
                  const std::string& policy) {
  if (workers < 1) throw std::invalid_argument("bench needs at least one worker");
  struct Tally {
    std::uint64_t ticks = 0;
    std::uint64_t episodes = 0;
  };
  std::vector<Tally> tallies(static_cast<std::size_t>(workers));
  auto prototype = cmd::make_environment(scenario);
  auto blue = rl::make_policy(policy, scenario);

  auto job = [&](int w) {
    env::Environment env = prototype;
    auto driver = blue->clone();
    const std::uint64_t share = ticks / static_cast<std::uint64_t>(workers) +
                                (static_cast<std::uint64_t>(w) < ticks % static_cast<std::uint64_t>(workers) ? 1 : 0);
    Tally& t = tallies[static_cast<std::size_t>(w)];
    const std::uint64_t base = derive_seed(seed, static_cast<std::uint64_t>(w));
    while (t.ticks < share) {
      const std::uint64_t episode_seed = derive_seed(base, t.episodes++);
      env.reset(episode_seed);
      driver->reset(env.world(), episode_seed);
      while (!env.done() && t.ticks < share) {
        env.step_own_orders(driver->act(env.world(), sim::Force::Blue));
        ++t.ticks;
      }
    }
  };

  const auto start = std::chrono::steady_clock::now();
  if (workers == 1) {
    job(0);
  } else {
    std::vector<std::jthread> threads;
    for (int w = 0; w < workers; ++w) threads.emplace_back(job, w);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  BenchResult r;
  r.workers = workers;
  for (const auto& t : tallies) {
    r.ticks += t.ticks;
    r.episodes += t.episodes;
  }
  r.seconds = secs;
  r.ticks_per_sec = secs > 0.0 ? static_cast<double>(r.ticks) / secs : 0.0;
  return r;
}

}  // namespace c2::harness
