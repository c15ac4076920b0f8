#include <doctest.h>

#include <algorithm>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "searchmesh/error.hpp"
#include "searchmesh/mission_sim.hpp"
#include "reduced_policies.hpp"

using namespace searchmesh;
using namespace searchmesh::sim;
using fixture::reduced_policies;
using fixture::reduced_scenario;

namespace {

constexpr const char* kScenario = R"(
[scenario]
name = "probe"
seed = 11
epochs = 9
mode = "expected"
priorities = [2, 1]

[[uav]]
location = 1
soc = 0.8
fault = 3

[[uav]]
location = 3

[[event]]
epoch = 2
kind = "priority"
goal = 1
level = 1

[[event]]
epoch = 4
kind = "fault"
uav = 2
fault = 12

[[event]]
epoch = 5
kind = "soc"
uav = 1
soc = 0.5
)";

std::string replace(std::string text, const std::string& from, const std::string& to) {
  const auto at = text.find(from);
  REQUIRE(at != std::string::npos);
  return text.replace(at, from.size(), to);
}

}  // namespace

TEST_CASE("scenario text parses into every field") {
  const auto s = parse_scenario(kScenario);
  CHECK(s.name == "probe");
  CHECK(s.seed == 11);
  CHECK(s.epoch_limit == 9);
  CHECK(s.mode == OutcomeMode::expected);
  CHECK(s.priority == std::vector<int>{2, 1});
  REQUIRE(s.uavs.size() == 2);
  CHECK(s.uavs[0].location == 1);
  CHECK(s.uavs[0].soc == doctest::Approx(0.8));
  CHECK(s.uavs[0].fault == 3);
  CHECK(s.uavs[1].soc == 1.0);
  CHECK(s.uavs[1].fault == 1);
  REQUIRE(s.events.size() == 3);
  CHECK(s.events[0].epoch == 2);
  CHECK(s.events[0].event.kind == WorldEvent::Kind::priority);
  CHECK(s.events[1].event.value == 12.0);
  CHECK(s.events[2].event.kind == WorldEvent::Kind::soc);
  CHECK_NOTHROW(s.validate(reduced_policies().config));
}

TEST_CASE("malformed scenarios are rejected") {
  const auto& c = reduced_policies().config;
  auto fails = [&](const std::string& text) {
    CHECK_THROWS_AS(parse_scenario(text).validate(c), StructuralError);
  };
  fails(replace(kScenario, "priorities = [2, 1]", "priorities = [2, 1, 1]"));
  fails(replace(kScenario, "priorities = [2, 1]", "priorities = [3, 1]"));
  fails(replace(kScenario, "priorities = [2, 1]\n", ""));
  fails(replace(kScenario, "location = 3", "location = 4"));
  fails(replace(kScenario, "fault = 3", "fault = 19"));
  fails(replace(kScenario, "soc = 0.8", "soc = 1.5"));
  fails(replace(kScenario, "mode = \"expected\"", "mode = \"mean\""));
  fails(replace(kScenario, "kind = \"priority\"", "kind = \"wind\""));
  fails(replace(kScenario, "goal = 1", "goal = 3"));
  fails(replace(kScenario, "epochs = 9", "epochs = 0"));
  fails(replace(kScenario, "[[uav]]\nlocation = 3\n", ""));
  fails("[scenario\n");
}

TEST_CASE("same seed gives byte-identical traces") {
  const auto& p = reduced_policies();
  const auto a = run_scenario(p, reduced_scenario(OutcomeMode::sampled, 5));
  const auto b = run_scenario(p, reduced_scenario(OutcomeMode::sampled, 5));
  CHECK(trace_csv(a) == trace_csv(b));
  CHECK(trace_jsonl(a) == trace_jsonl(b));
  CHECK(a.discounted_cost == b.discounted_cost);

  std::set<std::string> distinct;
  for (std::uint64_t seed = 1; seed <= 20; ++seed)
    distinct.insert(trace_csv(run_scenario(p, reduced_scenario(OutcomeMode::sampled, seed))));
  CHECK(distinct.size() > 1);
}

TEST_CASE("expected mode ignores the seed") {
  const auto& p = reduced_policies();
  CHECK(trace_csv(run_scenario(p, reduced_scenario(OutcomeMode::expected, 1))) ==
        trace_csv(run_scenario(p, reduced_scenario(OutcomeMode::expected, 99))));
}

TEST_CASE("expected mode: a healthy UAV achieves its goal one epoch later") {
  const auto& p = reduced_policies();
  Simulator sim(p, reduced_scenario(OutcomeMode::expected));
  const auto first = sim.step();
  REQUIRE_FALSE(first.idle);
  for (std::size_t i = 0; i < first.decision.size(); ++i) {
    const int g = first.decision[i];
    if (g == 0 || !first.uavs[i].available || first.uavs[i].reach[static_cast<std::size_t>(g - 1)] == 0) continue;
    CHECK(first.priority[static_cast<std::size_t>(g - 1)] != 0);
    CHECK(sim.priority()[static_cast<std::size_t>(g - 1)] == 0);
  }
}

TEST_CASE("epochs increase by one and records match the world") {
  const auto& p = reduced_policies();
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto t = run_scenario(p, reduced_scenario(OutcomeMode::sampled, seed));
    REQUIRE_FALSE(t.records.empty());
    for (std::size_t e = 0; e < t.records.size(); ++e) {
      const auto& r = t.records[e];
      CHECK(r.epoch == static_cast<int>(e));
      CHECK(r.decision.size() == 2);
      CHECK(r.uavs.size() == 2);
      bool open = false;
      for (int g : r.decision)
        if (g != 0 && r.priority[static_cast<std::size_t>(g - 1)] != 0) open = true;
      CHECK(r.idle == !open);
      CHECK(r.logged == (r.idle ? std::vector<int>{0, 0} : r.decision));
      if (r.decision[0] != 0 && r.decision[1] != 0) CHECK(r.decision[0] != r.decision[1]);
      for (const auto& u : r.uavs) {
        CHECK(u.soc >= 0.0);
        CHECK(u.soc <= 1.0);
        CHECK(u.fault >= 1);
        CHECK(u.fault <= 18);
      }
    }
    CHECK(t.completion_epoch <= t.records.back().epoch + 1);
  }
}

TEST_CASE("an unavailable UAV gets no assignment and never moves") {
  const auto& p = reduced_policies();
  auto s = reduced_scenario(OutcomeMode::sampled);
  s.uavs[0].fault = 6;
  s.uavs[1].soc = 0.05;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    s.seed = seed;
    Simulator sim(p, s);
    while (!sim.finished()) {
      const auto before = sim.uavs();
      const auto& r = sim.step();
      for (std::size_t i = 0; i < 2; ++i) {
        if (r.uavs[i].available) continue;
        CHECK(r.decision[i] == 0);
        CHECK(sim.uavs()[i].location == before[i].location);
        CHECK(sim.uavs()[i].commit == 0);
      }
    }
  }
}

TEST_CASE("a severely faulty UAV goes to service and comes back healthy") {
  const auto& p = reduced_policies();
  auto s = reduced_scenario(OutcomeMode::expected);
  s.uavs[1].fault = 6;
  Simulator sim(p, s);
  const auto& r0 = sim.step();
  CHECK(r0.uavs[1].top == "serv");
  CHECK_FALSE(r0.uavs[1].available);
  int epochs_out = 1;
  while (sim.uavs()[1].activity != Activity::active) {
    sim.step();
    ++epochs_out;
    REQUIRE(epochs_out < 10);
  }
  CHECK(epochs_out == p.config.sim.service_epochs);
  CHECK(sim.uavs()[1].fault == 1);
  CHECK(sim.uavs()[1].soc == 1.0);
}

TEST_CASE("all goals achieved from the start gives an idle one-epoch mission") {
  const auto& p = reduced_policies();
  auto s = reduced_scenario(OutcomeMode::expected);
  s.priority = {0, 0};
  const auto t = run_scenario(p, s);
  REQUIRE(t.records.size() == 1);
  CHECK(t.records[0].idle);
  CHECK(t.records[0].logged == std::vector<int>{0, 0});
  CHECK(t.completion_epoch == 0);
  CHECK(t.assignment_sequence() == std::vector<std::vector<int>>{{0, 0}});
}

TEST_CASE("scripted events land at their epoch boundary") {
  const auto& p = reduced_policies();
  auto s = reduced_scenario(OutcomeMode::expected);
  s.priority = {0, 0};
  s.events = {{3, {WorldEvent::Kind::priority, 2, 2.0}}, {3, {WorldEvent::Kind::fault, 1, 7.0}}};
  const auto t = run_scenario(p, s);
  REQUIRE(t.records.size() > 4);
  for (int e = 0; e < 3; ++e) {
    CHECK(t.records[static_cast<std::size_t>(e)].priority == std::vector<int>{0, 0});
    CHECK(t.records[static_cast<std::size_t>(e)].uavs[0].fault == 1);
  }
  CHECK(t.records[3].priority == std::vector<int>{0, 2});
  CHECK(t.records[3].uavs[0].fault == 7);
  CHECK(t.completion_epoch == 0);
}

TEST_CASE("queued events apply at the next step only") {
  const auto& p = reduced_policies();
  auto s = reduced_scenario(OutcomeMode::expected);
  s.priority = {0, 0};
  Simulator sim(p, s);
  sim.step();
  CHECK(sim.finished());
  CHECK(sim.queue_event({WorldEvent::Kind::priority, 1, 1.0}) == 1);
  CHECK(sim.priority() == std::vector<int>{0, 0});
  CHECK_FALSE(sim.finished());
  const auto& r = sim.step();
  CHECK(r.epoch == 1);
  CHECK(r.priority == std::vector<int>{1, 0});
  CHECK_THROWS_AS(sim.queue_event({WorldEvent::Kind::priority, 3, 1.0}), StructuralError);
  CHECK_THROWS_AS(sim.queue_event({WorldEvent::Kind::fault, 1, 0.0}), StructuralError);
  CHECK_THROWS_AS(sim.queue_event({WorldEvent::Kind::soc, 2, -0.1}), StructuralError);
}

TEST_CASE("stepping past the epoch limit throws") {
  const auto& p = reduced_policies();
  auto s = reduced_scenario(OutcomeMode::sampled);
  s.epoch_limit = 2;
  Simulator sim(p, s);
  sim.step();
  sim.step();
  CHECK(sim.finished());
  CHECK_THROWS_AS(sim.step(), StructuralError);
}

TEST_CASE("telemetry lines are versioned JSON with one message per epoch") {
  const auto& p = reduced_policies();
  const auto t = run_scenario(p, reduced_scenario(OutcomeMode::sampled, 3));
  std::istringstream in(trace_jsonl(t));
  std::string line;
  int epoch = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j["v"] == 1);
    CHECK(j["type"] == "telemetry");
    CHECK(j["epoch"] == epoch);
    CHECK(j["goals"].size() == 2);
    CHECK(j["uavs"].size() == 2);
    CHECK(j["decision"]["assignment"] == nlohmann::json(t.records[static_cast<std::size_t>(epoch)].logged));
    ++epoch;
  }
  CHECK(epoch == static_cast<int>(t.records.size()));
}

TEST_CASE("a rule compared with itself gives identical statistics") {
  const auto& p = reduced_policies();
  const auto s = reduced_scenario(OutcomeMode::sampled);
  const auto stats = compare_baselines(p, s, {AssignmentRule::mdp, AssignmentRule::mdp}, 40);
  REQUIRE(stats.size() == 2);
  CHECK(stats[0].mean_cost == stats[1].mean_cost);
  CHECK(stats[0].stderr_cost == stats[1].stderr_cost);
  CHECK(stats[0].mean_latency == stats[1].mean_latency);
  CHECK(stats[0].runs == 40);
  CHECK_THROWS_AS(compare_baselines(p, s, {AssignmentRule::mdp}, 1), StructuralError);
}

TEST_CASE("batch results do not depend on the worker count") {
  const auto& p = reduced_policies();
  const auto s = reduced_scenario(OutcomeMode::sampled, 17);
  const auto one = monte_carlo(p, s, AssignmentRule::random_feasible, 24, 1);
  const auto three = monte_carlo(p, s, AssignmentRule::random_feasible, 24, 3);
  REQUIRE(one.size() == three.size());
  for (std::size_t r = 0; r < one.size(); ++r) {
    CHECK(one[r].seed == run_seed(17, r));
    CHECK(trace_csv(one[r]) == trace_csv(three[r]));
  }
}

TEST_CASE("run seeds are distinct and depend on the master seed") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t r = 0; r < 1000; ++r) seen.insert(run_seed(42, r));
  CHECK(seen.size() == 1000);
  CHECK(run_seed(42, 0) != run_seed(43, 0));
  CHECK(run_seed(42, 7) == run_seed(42, 7));
}

TEST_CASE("baselines only assign usable UAVs to open goals") {
  const auto& p = reduced_policies();
  for (auto rule : {AssignmentRule::greedy_nearest, AssignmentRule::random_feasible}) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const auto t = run_scenario(p, reduced_scenario(OutcomeMode::sampled, seed), rule);
      for (const auto& r : t.records)
        for (std::size_t i = 0; i < 2; ++i) {
          const int g = r.decision[i];
          if (g == 0) continue;
          CHECK(r.uavs[i].available);
          CHECK(r.uavs[i].reach[static_cast<std::size_t>(g - 1)] == 1);
          CHECK(r.priority[static_cast<std::size_t>(g - 1)] != 0);
        }
    }
  }
}

TEST_CASE("without recurrence an achieved goal stays achieved") {
  const auto& base = reduced_policies();
  auto c = base.config;
  c.goal.recurrence = 0.0;
  const auto p = make_policies(c, base.uav_values, base.fleet_values);
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    auto s = reduced_scenario(OutcomeMode::sampled, seed);
    s.uavs[1].fault = 3;
    const auto t = run_scenario(p, s);
    for (std::size_t e = 0; e + 1 < t.records.size(); ++e)
      for (std::size_t j = 0; j < 2; ++j)
        if (t.records[e].priority[j] == 0) CHECK(t.records[e + 1].priority[j] == 0);
  }
}
