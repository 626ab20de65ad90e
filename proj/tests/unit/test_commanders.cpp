#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"

#include "c2/cmd/commanders.hpp"
#include "fixtures.hpp"

using namespace c2;
using namespace c2::cmd;
using env::DiscreteAction;
using sim::Force;
using c2::testing::add_unit;
using c2::testing::open_world;

namespace {

struct Outcome {
  double reward = 0.0;
  int blue_losses = 0;
};

// Blue under `blue`, Red under the scenario's controller.
Outcome play(const scenario::Scenario& sc, env::Opponent& blue, std::uint64_t seed) {
  auto env = make_environment(sc);
  env.reset(seed);
  blue.reset(env.world(), derive_seed(seed, 1));
  while (!env.done()) env.step_own_orders(blue.act(env.world(), Force::Blue));
  Outcome o;
  o.reward = env.score();
  for (const auto& e : env.ledger()) {
    if (e.kind == sim::EventKind::Destroyed && env.world().unit(e.actor).force == Force::Blue) ++o.blue_losses;
  }
  return o;
}

// Copies the world and scrambles every enemy the viewer cannot perceive.
sim::World scramble_hidden(const sim::World& w, Force viewer, Rng& rng) {
  sim::World out = w;
  for (auto& u : out.units) {
    if (u.force == viewer || !u.alive() || sim::is_perceived(w, viewer, u.id)) continue;
    u.strength = std::max(0.1, u.strength * rng.uniform());
    u.ammo = static_cast<int>(rng.below(static_cast<std::uint64_t>(u.ammo_max) + 1));
    u.heading = rng.uniform(0.0, 6.0);
    u.unit_class = static_cast<sim::UnitClass>(rng.below(7));
    const sim::Vec2 before = u.position;
    const sim::Vec2 moved{rng.uniform(0.0, w.terrain.width()), rng.uniform(0.0, w.terrain.height())};
    if (!w.terrain.traversable(moved)) continue;
    u.position = moved;
    auto picture = out.perceived;
    sim::refresh_sensing(out);
    if (out.perceived[sim::index_of(viewer)] != w.perceived[sim::index_of(viewer)]) u.position = before;
    sim::refresh_sensing(out);
    (void)picture;
  }
  return out;
}

}  // namespace

TEST_CASE("random draws are uniform over the twelve actions") {
  Rng rng(2718);
  std::array<int, 12> counts{};
  const std::vector<sim::UnitId> units(10);
  std::vector<sim::UnitId> ids(10);
  std::iota(ids.begin(), ids.end(), 0);
  const int rounds = 12'000;  // 120,000 draws
  for (int r = 0; r < rounds; ++r) {
    for (const auto& [id, a] : random_policy(ids, rng)) ++counts[static_cast<int>(std::get<DiscreteAction>(a))];
  }
  const double n = rounds * 10.0;
  double chi2 = 0.0;
  for (int c : counts) {
    CHECK(std::abs(c / n - 1.0 / 12.0) <= 0.005);
    const double expected = n / 12.0;
    chi2 += (c - expected) * (c - expected) / expected;
  }
  // 11 degrees of freedom: the 0.999 quantile is 31.26.
  CHECK(chi2 < 31.26);
}

TEST_CASE("a single legal action is always drawn and seeds reproduce") {
  Rng rng(1);
  const std::array<DiscreteAction, 1> only = {DiscreteAction::Halt};
  const std::vector<sim::UnitId> ids = {0, 1, 2};
  for (int i = 0; i < 100; ++i) {
    for (const auto& [id, a] : random_policy(ids, rng, only)) CHECK(std::get<DiscreteAction>(a) == DiscreteAction::Halt);
  }
  Rng a(77), b(77);
  for (int i = 0; i < 100; ++i) CHECK(random_policy(ids, a) == random_policy(ids, b));
}

TEST_CASE("scripted playback") {
  sim::World w = open_world(16, 1.0);
  const auto id = add_unit(w, Force::Red, {2.5, 2.5});
  w.units[id].speed = 40.0;
  CoaScript script;
  script.groups.push_back({{id}, {{{6.5, 2.5}, 3}, {{6.5, 8.5}, 3}, {{12.5, 12.5}, 3}}, Posture::HoldFire});
  ScriptedCommander cmdr(script);
  cmdr.reset(w, 0);

  SUBCASE("before the first trigger only holds") {
    const auto orders = cmdr.act(w, Force::Red);
    REQUIRE(orders.size() == 1);
    CHECK(orders[0].move == sim::MoveDir::None);
    CHECK(orders[0].hold_fire);
  }
  SUBCASE("within one cell of a waypoint the next one is targeted") {
    w.tick = 3;
    w.units[id].position = {6.0, 2.9};
    const auto orders = cmdr.act(w, Force::Red);
    CHECK(cmdr.cursor(id) == 1);
    REQUIRE(orders.size() == 1);
    REQUIRE(orders[0].heading.has_value());
    CHECK(*orders[0].heading == doctest::Approx(std::atan2(8.5 - 2.9, 6.5 - 6.0)));
  }
  SUBCASE("full playback visits every waypoint in order") {
    std::vector<std::size_t> reached;
    for (int t = 0; t < 600 && cmdr.cursor(id) < 3; ++t) {
      const auto before = cmdr.cursor(id);
      sim::advance_tick(w, cmdr.act(w, Force::Red));
      if (cmdr.cursor(id) != before) reached.push_back(cmdr.cursor(id));
    }
    // Make the final arrival visible to the cursor.
    cmdr.act(w, Force::Red);
    CHECK(cmdr.cursor(id) == 3);
    CHECK(std::is_sorted(reached.begin(), reached.end()));
    CHECK((w.units[id].position - sim::Vec2{12.5, 12.5}).norm() <= 1.0);
  }
}

TEST_CASE("bot schedule follows its level") {
  const BotConfig one{1};
  CHECK(one.decision_period() == 10);
  CHECK(one.aggression() == doctest::Approx(0.1));
  CHECK_FALSE(one.full_map_vision());
  const BotConfig ten{10};
  CHECK(ten.decision_period() == 1);
  CHECK(ten.full_map_vision());
  CHECK_FALSE(BotConfig{0}.valid());
  CHECK_FALSE(BotConfig{11}.valid());

  // Ten units, level 1: exactly one unit is sent toward the nearest enemy.
  sim::World w = open_world(32, 1.0);
  for (int i = 0; i < 10; ++i) add_unit(w, Force::Blue, {2.5, 2.5 + 2.0 * i});
  add_unit(w, Force::Red, {4.5, 2.5});
  BotCommander bot(one);
  const auto plan = bot.plan(make_view(w, Force::Blue), w);
  int committed = 0;
  for (const auto& [id, a] : plan) {
    const auto& c = std::get<env::CompoundAction>(a);
    const sim::Vec2 at{c.x * 32.0, c.y * 32.0};
    if ((at - w.units[id].position).norm() > 1.0) ++committed;
  }
  CHECK(committed == 1);

  // It re-plans only every ten ticks: a contact that moves mid-period keeps
  // drawing the committed unit toward where it was last planned.
  sim::World far = open_world(32, 1.0);
  for (int i = 0; i < 4; ++i) {
    const auto id = add_unit(far, Force::Blue, {2.5, 2.5 + 2.0 * i});
    far.units[id].sensor_range_km = 40.0;
  }
  const auto red = add_unit(far, Force::Red, {20.5, 2.5});
  sim::refresh_sensing(far);
  bot.reset(far, 0);
  const auto first = bot.act(far, Force::Blue);
  far.units[red].position = {20.5, 28.5};
  sim::refresh_sensing(far);
  for (int t = 1; t < 10; ++t) {
    far.tick = t;
    CHECK(bot.act(far, Force::Blue) == first);
  }
  far.tick = 10;
  CHECK(bot.act(far, Force::Blue) != first);
}

TEST_CASE("a level-10 bot homes on enemies it cannot see") {
  sim::World w = open_world(32, 1.0);
  const auto blue = add_unit(w, Force::Blue, {2.5, 2.5});
  add_unit(w, Force::Red, {28.5, 2.5});
  REQUIRE(sim::perceived_enemies(w, Force::Blue).empty());
  w.goals = {sim::Vec2{2.5, 28.5}, sim::Vec2{2.5, 2.5}};  // goal points elsewhere
  BotCommander bot(BotConfig{10});
  bot.reset(w, 0);
  const auto orders = bot.act(w, Force::Blue);
  REQUIRE(orders.size() == 1);
  REQUIRE(orders[0].heading.has_value());
  CHECK(std::abs(*orders[0].heading) < 0.1);  // due east, toward the hidden enemy
  CHECK(orders[0].move == sim::MoveDir::Forward);
  (void)blue;
}

TEST_CASE("doctrine priorities") {
  sim::World w = open_world(16, 1.0);
  const auto blue = add_unit(w, Force::Blue, {4.0, 4.0});
  const auto rules = default_doctrine();
  SUBCASE("enemy in range, not under fire: rule 3 fires") {
    add_unit(w, Force::Red, {5.0, 4.0});
    const auto a = doctrine_policy(w, Force::Blue, rules);
    CHECK(std::get<DiscreteAction>(a.at(blue)) == DiscreteAction::FireWeapon);
  }
  SUBCASE("under fire with the enemy out of range: rule 2 reacts") {
    add_unit(w, Force::Red, {6.5, 4.0});  // seen at 2.5 km, outside the 2 km weapon range
    w.units[blue].was_hit = true;
    const auto a = doctrine_policy(w, Force::Blue, rules);
    CHECK(std::get<DiscreteAction>(a.at(blue)) == DiscreteAction::ReactToContact);
  }
  SUBCASE("heavily damaged with no enemy perceived: rule 4 withdraws") {
    w.units[blue].strength = 2.0;
    const auto a = doctrine_policy(w, Force::Blue, rules);
    CHECK(std::get<DiscreteAction>(a.at(blue)) == DiscreteAction::MoveBackward);
  }
  SUBCASE("nothing else applies: rule 6 alternates orient and advance") {
    w.tick = 0;
    CHECK(std::get<DiscreteAction>(doctrine_policy(w, Force::Blue, rules).at(blue)) == DiscreteAction::OrientToGoal);
    w.tick = 1;
    CHECK(std::get<DiscreteAction>(doctrine_policy(w, Force::Blue, rules).at(blue)) == DiscreteAction::MoveForward);
  }
  SUBCASE("no rules means no-op") {
    CHECK(std::get<DiscreteAction>(doctrine_policy(w, Force::Blue, {}).at(blue)) == DiscreteAction::NoOp);
  }
}

TEST_CASE("commander specs parse") {
  const auto sc = scenario::builtin_tigerclaw();
  CHECK(make_commander("random", sc)->name() == "random");
  CHECK(make_commander("doctrine", sc)->name() == "doctrine");
  CHECK(make_commander("bot:7", sc)->name() == "bot:7");
  CHECK(make_commander("scenario", sc)->name() == "bot:5");
  CHECK_THROWS_AS(make_commander("bot:11", sc), std::invalid_argument);
  CHECK_THROWS_AS(make_commander("wizard", sc), std::invalid_argument);
}

TEST_CASE("non-cheating commanders only read the fog-filtered picture") {
  const auto sc = scenario::builtin_tigerclaw();
  scenario::ScriptedController script;
  script.coa.groups.push_back({{9, 10, 11}, {{{40.5, 30.5}, 0}, {{34.5, 30.5}, 10}}, Posture::FreeFire});
  std::vector<std::unique_ptr<env::Opponent>> commanders;
  commanders.push_back(std::make_unique<DoctrineCommander>());
  commanders.push_back(std::make_unique<ScriptedCommander>(script.coa));
  commanders.push_back(std::make_unique<RandomCommander>());
  for (int level = 1; level <= 9; ++level) commanders.push_back(std::make_unique<BotCommander>(BotConfig{level}));

  Rng rng(31);
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    sim::World w = scenario::build_world(sc, seed);
    for (int t = 0; t < 25; ++t) sim::advance_tick(w, testing::random_orders(w, rng));
    for (Force f : {Force::Blue, Force::Red}) {
      const sim::World hidden = scramble_hidden(w, f, rng);
      REQUIRE(make_view(hidden, f) == make_view(w, f));
      for (const auto& c : commanders) {
        auto a = c->clone();
        auto b = c->clone();
        a->reset(w, seed);
        b->reset(hidden, seed);
        CHECK_MESSAGE(a->act(w, f) == b->act(hidden, f), c->name());
      }
    }
  }
}

TEST_CASE("doctrine outplays random on the skirmish map") {
  const auto sc = scenario::builtin_skirmish();
  auto doctrine = make_commander("doctrine", sc);
  auto random = make_commander("random", sc);
  double doc_reward = 0.0, rnd_reward = 0.0;
  int doc_losses = 0, rnd_losses = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto d = play(sc, *doctrine, derive_seed(500, seed));
    const auto r = play(sc, *random, derive_seed(500, seed));
    doc_reward += d.reward;
    rnd_reward += r.reward;
    doc_losses += d.blue_losses;
    rnd_losses += r.blue_losses;
  }
  CHECK(doc_reward > rnd_reward);
  CHECK(doc_losses < rnd_losses);
}

TEST_CASE("a level-10 bot outplays a level-1 bot on paired seeds") {
  const auto sc = scenario::builtin_tigerclaw();
  auto ten = make_commander("bot:10", sc);
  auto one = make_commander("bot:1", sc);
  double r10 = 0.0, r1 = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    r10 += play(sc, *ten, derive_seed(900, seed)).reward;
    r1 += play(sc, *one, derive_seed(900, seed)).reward;
  }
  CHECK(r10 > r1);
}
