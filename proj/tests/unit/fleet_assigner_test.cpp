#include <doctest.h>

#include <cmath>
#include <map>
#include <random>
#include <set>

#include "model_oracles.hpp"
#include "searchmesh/config.hpp"
#include "searchmesh/error.hpp"
#include "searchmesh/fleet_assigner.hpp"

using namespace searchmesh;
using namespace searchmesh::fleet;

namespace {

FleetState random_state(std::mt19937_64& rng, int k, int z) {
  FleetState s;
  for (int j = 0; j < k; ++j) s.priority.push_back(static_cast<int>(rng() % 3));
  for (int i = 0; i < z; ++i) {
    s.assign.push_back(0);
    s.fault.push_back(1 + static_cast<int>(rng() % 18));
    s.avail.push_back(static_cast<int>(rng() % 2));
  }
  return s;
}

LiveBids random_bids(std::mt19937_64& rng, int k, int z) {
  std::uniform_real_distribution<double> u(-2000.0, -100.0);
  LiveBids b;
  for (int i = 0; i < z; ++i) {
    b.values.emplace_back();
    for (int j = 0; j < k; ++j) b.values.back().push_back(rng() % 4 ? std::optional<double>(u(rng)) : std::nullopt);
  }
  return b;
}

/// Futures drawn from a few levels so ties are common.
std::vector<double> coarse_futures(std::mt19937_64& rng, std::size_t n) {
  std::vector<double> f(n);
  for (auto& x : f) x = -1000.0 - 50.0 * static_cast<double>(rng() % 4);
  return f;
}

}  // namespace

TEST_CASE("codec is a bijection over every case-study state") {
  const FleetCodec codec(3, 2);
  REQUIRE(codec.size() == 559872);
  std::size_t bad = 0;
  for (std::size_t i = 0; i < codec.size(); ++i)
    if (codec.encode(codec.decode(static_cast<mdp::StateId>(i))) != i) ++bad;
  CHECK(bad == 0);
  CHECK(FleetCodec(1, 1).size() == 216);
}

TEST_CASE("decision sets") {
  const auto d = enumerate_decisions(3, 2);
  const std::set<Decision> expect{{1, 2}, {2, 1}, {1, 3}, {3, 1}, {2, 3}, {3, 2},
                                  {0, 1}, {1, 0}, {0, 2}, {2, 0}, {0, 3}, {3, 0}};
  CHECK(d.size() == 12);
  CHECK(std::set<Decision>(d.begin(), d.end()) == expect);
  CHECK(std::is_sorted(d.begin(), d.end()));
  CHECK(enumerate_decisions(1, 1) == std::vector<Decision>{{1}});

  // All of {0,1,2}^3 filtered by hand.
  std::vector<Decision> brute;
  for (int a = 0; a <= 2; ++a)
    for (int b = 0; b <= 2; ++b)
      for (int c = 0; c <= 2; ++c) {
        if (a + b + c == 0) continue;
        if ((a && a == b) || (a && a == c) || (b && b == c)) continue;
        brute.push_back({a, b, c});
      }
  CHECK(enumerate_decisions(2, 3) == brute);
  for (int k = 1; k <= 4; ++k)
    for (int z = 1; z <= 3; ++z) CHECK(decision_count(k, z) == enumerate_decisions(k, z).size());
}

TEST_CASE("cost examples") {
  const auto c = case_study_config();
  CHECK(priority_cost({2, 2, 1}, c.fleet_cost) == doctest::Approx(200 * std::exp(2.0) * 2 + 100 * std::exp(1.0)));
  CHECK(priority_cost({2, 2, 1}, c.fleet_cost) == doctest::Approx(3227.4).epsilon(1e-4));
  CHECK(priority_cost({0, 0, 0}, c.fleet_cost) == 0.0);

  const FleetState s{{2, 2, 1}, {0, 0}, {1, 1}, {1, 1}};
  const LiveBids bids{{{-10.0, -20.0, -30.0}, {-30.0, -20.0, -10.0}}};
  const auto ranks = rank_all(bids);
  const double base = priority_cost(s.priority, c.fleet_cost);
  // UAV 1 on its top goal, UAV 2 idle (last h2 branch).
  CHECK(fleet_cost(s, {1, 0}, ranks, c.fleet_cost) - base == doctest::Approx(2.0));
  CHECK(fleet_cost(s, {1, 3}, ranks, c.fleet_cost) - base == doctest::Approx(0.0));
  CHECK(fleet_cost(s, {2, 1}, ranks, c.fleet_cost) - base == doctest::Approx(1.0 + 2.0));
  auto away = s;
  away.avail = {0, 1};
  CHECK(fleet_cost(away, {1, 3}, ranks, c.fleet_cost) - fleet_cost(s, {1, 3}, ranks, c.fleet_cost) ==
        doctest::Approx(20.0));
  auto sick = s;
  sick.fault = {3, 7};
  CHECK(fleet_cost(sick, {1, 3}, ranks, c.fleet_cost) - base == doctest::Approx(50.0 + 100.0));
  CHECK_THROWS_AS(fleet_cost(s, {1, 3}, BidRanks{{{0, 1, 2}}}, c.fleet_cost), StructuralError);
}

TEST_CASE("rank ties share the better rank; missing bids rank last") {
  CHECK(rank_bids({-1.0, -2.0, -3.0}) == std::vector<int>{0, 1, 2});
  CHECK(rank_bids({-1.0, -1.0, -3.0}) == std::vector<int>{0, 0, 2});
  CHECK(rank_bids({std::nullopt, -5.0, -3.0}) == std::vector<int>{2, 1, 0});
}

TEST_CASE("transition examples") {
  const auto c = case_study_config();
  const FleetCodec codec(3, 2);
  const FleetState s{{2, 2, 1}, {0, 0}, {1, 1}, {1, 1}};
  double g1_done = 0.0, g2_done = 0.0, g3_done = 0.0, sum = 0.0;
  for (const auto& t : fleet_transitions(codec, s, {1, 0}, c)) {
    const auto n = codec.decode(t.next);
    CHECK(n.assign == std::vector<int>{1, 0});
    if (n.priority[0] == 0) g1_done += t.prob;
    if (n.priority[1] == 0) g2_done += t.prob;
    if (n.priority[2] == 0) g3_done += t.prob;
    sum += t.prob;
  }
  CHECK(sum == doctest::Approx(1.0));
  CHECK(g1_done == doctest::Approx(0.9));
  CHECK(g2_done == 0.0);
  CHECK(g3_done == 0.0);
}

TEST_CASE("reduced fleet models match the dense restatement") {
  for (auto [k, z] : {std::pair{1, 1}, std::pair{2, 1}}) {
    CAPTURE(k);
    CAPTURE(z);
    const auto c = reduced_config(k, 2, z);
    const auto o = oracle::fleet_oracle(c);
    const auto model = build_fleet_mdp(c);
    const FleetCodec codec(k, z);
    REQUIRE(model.state_count() == o.states.size());
    REQUIRE(enumerate_decisions(k, z) == o.decisions);
    std::vector<mdp::StateId> id(o.states.size());
    for (std::size_t i = 0; i < o.states.size(); ++i) {
      const auto& t = o.states[i];
      id[i] = codec.encode({t.priority, t.assign, t.fault, t.avail});
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < o.states.size(); ++i) {
      for (std::size_t a = 0; a < o.decisions.size(); ++a) {
        const auto act = static_cast<mdp::ActionId>(a);
        worst = std::max(worst, std::abs(model.cost(id[i], act) - o.mdp.cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a))));
        std::map<mdp::StateId, double> lib;
        const auto row = model.row(id[i], act);
        for (std::size_t e = 0; e < row.next.size(); ++e) lib[row.next[e]] += row.prob[e];
        for (std::size_t t = 0; t < o.states.size(); ++t) {
          const auto it = lib.find(id[t]);
          worst = std::max(worst, std::abs(o.mdp.p[a](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) -
                                           (it == lib.end() ? 0.0 : it->second)));
        }
      }
    }
    CHECK(worst < 1e-12);
    const auto v = mdp::solve(model, {.eta = 1e-12, .max_sweeps = 5000});
    const auto dense = oracle::dense_value_iteration(o.mdp, 2000);
    double vdiff = 0.0;
    for (std::size_t i = 0; i < o.states.size(); ++i)
      vdiff = std::max(vdiff, std::abs(v.values[id[i]] - dense(static_cast<Eigen::Index>(i))));
    CHECK(vdiff < 1e-8);
  }
}

TEST_CASE("reduced two-goal two-UAV model is stochastic everywhere") {
  const auto c = reduced_config(2, 3, 2);
  const auto model = build_fleet_mdp(c);
  std::size_t bad = 0;
  for (std::size_t s = 0; s < model.state_count(); ++s)
    for (mdp::ActionId a = 0; a < model.action_count(); ++a) {
      double sum = 0.0;
      for (double p : model.row(static_cast<mdp::StateId>(s), a).prob) sum += p;
      if (std::abs(sum - 1.0) > 1e-9) ++bad;
    }
  CHECK(bad == 0);
}

TEST_CASE("tie audit") {
  auto c = case_study_config();
  const auto decisions = enumerate_decisions(3, 2);
  const std::vector<double> flat(decisions.size(), 0.0);
  const FleetState all_done{{0, 0, 0}, {0, 0}, {1, 1}, {1, 1}};
  const LiveBids none{{{std::nullopt, std::nullopt, std::nullopt}, {std::nullopt, std::nullopt, std::nullopt}}};
  // Equal futures: an idle UAV pays the last h2 branch, so the pairs tie on q
  // and lexicographic order picks the first.
  CHECK(choose_assignment(flat, decisions, all_done, none, c).decision == Decision{1, 2});

  // Two decisions tie on q; the one that wastes no UAV on an achieved goal wins.
  const FleetState one_open{{0, 2, 0}, {0, 0}, {1, 1}, {1, 1}};
  const LiveBids same{{{-1.0, -1.0, -1.0}, {-1.0, -1.0, -1.0}}};
  std::vector<double> fut(decisions.size(), -1e6);
  const auto idx = [&](Decision d) { return static_cast<std::size_t>(std::find(decisions.begin(), decisions.end(), d) - decisions.begin()); };
  fut[idx({0, 1})] = 0.0;
  fut[idx({0, 2})] = 0.0;
  CHECK(choose_assignment(fut, decisions, one_open, same, c).decision == Decision{0, 2});

  // Symmetric pair with equal ranks: lexicographic order, also for bid gaps
  // inside the tolerance.
  const FleetState open{{2, 2, 1}, {0, 0}, {1, 1}, {1, 1}};
  std::vector<double> pair(decisions.size(), -1e6);
  pair[idx({1, 2})] = 0.0;
  pair[idx({2, 1})] = 0.0;
  const LiveBids flat_ranks{{{-10.0, -10.0, -90.0}, {-10.0, -10.0, -90.0}}};
  CHECK(choose_assignment(pair, decisions, open, flat_ranks, c).decision == Decision{1, 2});
  const LiveBids tilted{{{-10.0, -10.0 + 1e-12, -90.0}, {-10.0 + 1e-12, -10.0, -90.0}}};
  CHECK(choose_assignment(pair, decisions, open, tilted, c).decision == Decision{1, 2});

  // q tied through the futures while the bids clearly favor [2,1].
  const LiveBids prefs{{{-50.0, -10.0, -90.0}, {-10.0, -50.0, -90.0}}};
  pair[idx({2, 1})] = -2.0;
  const auto chosen = choose_assignment(pair, decisions, open, prefs, c);
  CHECK(chosen.ranking[0].q == doctest::Approx(chosen.ranking[1].q));
  CHECK(chosen.decision == Decision{2, 1});
  c.tie_break = TieBreak::lexicographic;
  CHECK(choose_assignment(pair, decisions, open, prefs, c).decision == Decision{1, 2});
}

TEST_CASE("scaling every bid by a positive factor keeps the decision") {
  const auto c = case_study_config();
  const auto decisions = enumerate_decisions(3, 2);
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto s = random_state(rng, 3, 2);
    const auto bids = random_bids(rng, 3, 2);
    const auto fut = coarse_futures(rng, decisions.size());
    auto scaled = bids;
    const double k = 0.25 + static_cast<double>(rng() % 16) * 0.5;
    for (auto& row : scaled.values)
      for (auto& b : row)
        if (b) *b *= k;
    CHECK(choose_assignment(fut, decisions, s, bids, c).decision ==
          choose_assignment(fut, decisions, s, scaled, c).decision);
  }
}

TEST_CASE("the UAV bidding more for the last open goal gets it") {
  const auto c = case_study_config();
  const auto decisions = enumerate_decisions(3, 2);
  const FleetState s{{0, 0, 1}, {2, 1}, {1, 1}, {1, 1}};
  const std::vector<double> flat(decisions.size(), -1000.0);
  const LiveBids near{{{-900.0, -950.0, -500.0}, {-900.0, -950.0, -800.0}}};
  const LiveBids far{{{-900.0, -950.0, -800.0}, {-900.0, -950.0, -500.0}}};
  CHECK(choose_assignment(flat, decisions, s, near, c).decision[0] == 3);
  CHECK(choose_assignment(flat, decisions, s, far, c).decision[1] == 3);
}

TEST_CASE("scaling every cost and future keeps the decision") {
  const auto base = case_study_config();
  const auto decisions = enumerate_decisions(3, 2);
  std::mt19937_64 rng(78);
  for (int trial = 0; trial < 1000; ++trial) {
    const double k = 0.5 + static_cast<double>(rng() % 8);
    auto scaled = base;
    auto& p = scaled.fleet_cost;
    for (auto& z : p.zeta) z *= k;
    for (auto& h : p.h2) h *= k;
    p.h1_healthy *= k;
    p.h1_mild *= k;
    p.h1_severe *= k;
    p.h2_prior *= k;
    p.h3 *= k;
    const auto s = random_state(rng, 3, 2);
    const auto bids = random_bids(rng, 3, 2);
    auto fut = coarse_futures(rng, decisions.size());
    auto fut_scaled = fut;
    for (auto& x : fut_scaled) x *= k;
    CHECK(choose_assignment(fut, decisions, s, bids, base).decision ==
          choose_assignment(fut_scaled, decisions, s, bids, scaled).decision);
  }
}

TEST_CASE("live rule never prefers an achieved goal over an equally good open one") {
  const auto c = reduced_config(2, 3, 2);
  const auto model = build_fleet_mdp(c);
  const auto v = mdp::solve(model, {.eta = 1e-8});
  const FleetCodec codec(2, 2);
  const auto decisions = enumerate_decisions(2, 2);
  std::mt19937_64 rng(5);
  for (std::size_t s = 0; s < codec.size(); s += 13) {
    auto st = codec.decode(static_cast<mdp::StateId>(s));
    const auto bids = random_bids(rng, 2, 2);
    const auto choice = decide_assignment(model, v.values, codec, st, bids, c);
    int wasted = 0;
    for (int g : choice.decision)
      if (g && st.priority[static_cast<std::size_t>(g - 1)] == 0) ++wasted;
    if (wasted == 0) continue;
    const double best = choice.ranking.front().q;
    for (const auto& r : choice.ranking) {
      if (r.q < best - 1e-9 * std::max(1.0, std::abs(best))) break;
      int w = 0;
      for (int g : decisions[r.action])
        if (g && st.priority[static_cast<std::size_t>(g - 1)] == 0) ++w;
      CHECK(w >= wasted);
    }
  }
}

TEST_CASE("ranking is sorted and led by the chosen decision") {
  const auto c = case_study_config();
  const auto decisions = enumerate_decisions(3, 2);
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 300; ++trial) {
    const auto s = random_state(rng, 3, 2);
    const auto choice = choose_assignment(coarse_futures(rng, decisions.size()), decisions, s, random_bids(rng, 3, 2), c);
    CHECK(choice.ranking.front().action == choice.action);
    CHECK(choice.decision == decisions[choice.action]);
    for (std::size_t i = 2; i < choice.ranking.size(); ++i) CHECK(choice.ranking[i - 1].q >= choice.ranking[i].q);
  }
}
