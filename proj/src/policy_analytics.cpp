#include "searchmesh/policy_analytics.hpp"

#include <algorithm>
#include <optional>
#include <sstream>

#include "searchmesh/error.hpp"
#include "searchmesh/fleet_assigner.hpp"
#include "searchmesh/uav_bidder.hpp"

namespace searchmesh::analytics {

double PolicyTrendReport::aggregate(const std::string& name) const {
  for (const auto& [k, v] : aggregates)
    if (k == name) return v;
  throw StructuralError("no aggregate named " + name);
}

const ConditionSummary& PolicyTrendReport::action(const std::string& name) const {
  for (const auto& a : actions)
    if (a.action == name) return a;
  throw StructuralError("no action named " + name);
}

std::string PolicyTrendReport::text() const {
  std::ostringstream out;
  out << level << " policy, " << total_states << " states\n";
  for (const auto& a : actions) {
    out << "  " << a.action << ": support " << a.support << ", " << a.satisfied << " satisfy (" << a.fraction() * 100.0
        << "%)\n    if " << a.condition << '\n';
    if (!a.key_condition.empty())
      out << "    key clause: " << a.key_satisfied << " satisfy (" << a.key_fraction() * 100.0 << "%) " << a.key_condition
          << '\n';
  }
  for (const auto& [k, v] : aggregates) out << "  " << k << " = " << v << '\n';
  return out.str();
}

std::string PolicyTrendReport::csv() const {
  std::ostringstream out;
  out.precision(10);
  out << "kind,name,condition,support,satisfied,fraction,key_condition,key_satisfied,key_fraction\n";
  for (const auto& a : actions)
    out << "action," << a.action << ",\"" << a.condition << "\"," << a.support << ',' << a.satisfied << ','
        << a.fraction() << ",\"" << a.key_condition << "\"," << a.key_satisfied << ',' << a.key_fraction() << '\n';
  for (const auto& [k, v] : aggregates) out << "aggregate," << k << ",,,," << v << ",,,\n";
  return out.str();
}

PolicyTrendReport uav_policy_trends(const MissionConfig& config, const std::vector<mdp::ActionId>& policy) {
  const uav::UavCodec codec(config.goals, config.regions);
  if (policy.size() != codec.size()) throw StructuralError("UAV policy does not match the configuration");
  const int k = config.goals;
  const auto actions = static_cast<std::size_t>(k + 3);

  PolicyTrendReport r;
  r.level = "uav";
  r.total_states = policy.size();
  for (std::size_t a = 0; a < actions; ++a) {
    ConditionSummary c;
    c.action = uav::decision_name(static_cast<mdp::ActionId>(a), k);
    const auto d = uav::decision_of(static_cast<mdp::ActionId>(a), k);
    switch (d.kind) {
      case uav::DecisionKind::pursue:
        c.condition = "r_" + std::to_string(d.goal) + " = 1 and f = 1";
        break;
      case uav::DecisionKind::charge:
        c.condition = "sum_j r_j <= 2";
        break;
      case uav::DecisionKind::serv:
        c.condition = "f != 1";
        break;
      case uav::DecisionKind::idle:
        c.condition = "every goal has r_j = 0 or g_j = 0";
        break;
    }
    r.actions.push_back(c);
  }

  std::size_t mild_severe = 0, mild_severe_serv = 0, camera = 0, camera_serv = 0;
  std::size_t charge_states = 0, charge_reach = 0, pursue_violations = 0;
  for (std::size_t s = 0; s < policy.size(); ++s) {
    const auto st = codec.decode(static_cast<mdp::StateId>(s));
    const auto a = policy[s];
    if (a >= actions) throw StructuralError("UAV policy action out of range");
    const auto d = uav::decision_of(a, k);
    int reach = 0;
    bool nothing_left = true;
    for (int j = 0; j < k; ++j) {
      reach += st.reach[static_cast<std::size_t>(j)];
      if (st.reach[static_cast<std::size_t>(j)] == 1 && st.priority[static_cast<std::size_t>(j)] != 0)
        nothing_left = false;
    }
    bool ok = false;
    switch (d.kind) {
      case uav::DecisionKind::pursue:
        ok = st.reach[static_cast<std::size_t>(d.goal - 1)] == 1 && st.fault == 1;
        if (!ok) ++pursue_violations;
        break;
      case uav::DecisionKind::charge:
        ok = reach <= 2;
        ++charge_states;
        charge_reach += static_cast<std::size_t>(reach);
        break;
      case uav::DecisionKind::serv:
        ok = st.fault != 1;
        break;
      case uav::DecisionKind::idle:
        ok = nothing_left;
        break;
    }
    auto& c = r.actions[a];
    ++c.support;
    if (ok) ++c.satisfied;
    const bool serv = d.kind == uav::DecisionKind::serv;
    if (st.fault >= 2 && st.fault <= 9) {
      ++mild_severe;
      if (serv) ++mild_severe_serv;
    } else if (st.fault > 9) {
      ++camera;
      if (serv) ++camera_serv;
    }
  }
  auto ratio = [](std::size_t a, std::size_t b) { return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b); };
  r.aggregates = {{"serv_fraction_f2_9", ratio(mild_severe_serv, mild_severe)},
                  {"serv_fraction_f10_18", ratio(camera_serv, camera)},
                  {"charge_mean_reachable", ratio(charge_reach, charge_states)},
                  {"pursue_violations", static_cast<double>(pursue_violations)}};
  return r;
}

PolicyTrendReport offline_fleet_policy_trends(const MissionConfig& config, const std::vector<mdp::ActionId>& policy) {
  const fleet::FleetCodec codec(config.goals, config.uavs);
  if (policy.size() != codec.size()) throw StructuralError("fleet policy does not match the configuration");
  const auto decisions = fleet::enumerate_decisions(config.goals, config.uavs);
  const auto k = static_cast<std::size_t>(config.goals);
  const auto z = static_cast<std::size_t>(config.uavs);

  PolicyTrendReport r;
  r.level = "fleet (offline)";
  r.total_states = policy.size();
  for (const auto& d : decisions) {
    ConditionSummary c;
    c.action = fleet::format_assignment(d);
    const bool everyone = std::none_of(d.begin(), d.end(), [](int g) { return g == 0; });
    if (everyone) {
      c.condition =
          "every UAV available with f = 1, and every unassigned goal has g <= 1 unless all goals have g = 2 "
          "(bid preferences are not part of the fleet state)";
      c.key_condition = "every unassigned goal has g <= 1 unless all goals have g = 2";
    } else {
      c.condition =
          "every assigned goal has g = 2 and its UAV is available, and every idle UAV is unavailable or has f >= 5 "
          "(battery range is not part of the fleet state)";
      c.key_condition = "every idle UAV is unavailable or has f >= 5";
    }
    r.actions.push_back(c);
  }

  for (std::size_t s = 0; s < policy.size(); ++s) {
    const auto st = codec.decode(static_cast<mdp::StateId>(s));
    const auto a = policy[s];
    if (a >= decisions.size()) throw StructuralError("fleet policy action out of range");
    const auto& d = decisions[a];
    const bool everyone = std::none_of(d.begin(), d.end(), [](int g) { return g == 0; });
    bool pre = true, key = true;
    if (everyone) {
      for (std::size_t i = 0; i < z; ++i)
        if (st.avail[i] != 1 || st.fault[i] != 1) pre = false;
      const bool all_high = std::all_of(st.priority.begin(), st.priority.end(), [](int g) { return g == 2; });
      for (std::size_t j = 0; j < k && !all_high; ++j) {
        const bool assigned = std::find(d.begin(), d.end(), static_cast<int>(j) + 1) != d.end();
        if (!assigned && st.priority[j] > 1) key = false;
      }
    } else {
      for (std::size_t i = 0; i < z; ++i) {
        if (d[i] != 0) {
          if (st.priority[static_cast<std::size_t>(d[i] - 1)] != 2 || st.avail[i] != 1) pre = false;
        } else if (st.avail[i] != 0 && st.fault[i] < 5) {
          key = false;
        }
      }
    }
    auto& c = r.actions[a];
    ++c.support;
    if (pre && key) ++c.satisfied;
    if (key) ++c.key_satisfied;
  }
  std::size_t empty = 0;
  for (const auto& c : r.actions)
    if (c.support == 0) ++empty;
  r.aggregates = {{"empty_supports", static_cast<double>(empty)}};
  return r;
}

namespace {

/// Every bid pattern of one UAV: a reachable subset and a strict order over
/// it, the first goal getting the largest bid.
std::vector<std::vector<std::optional<double>>> bid_patterns(int goals) {
  std::vector<std::vector<std::optional<double>>> out;
  for (int mask = 0; mask < (1 << goals); ++mask) {
    std::vector<int> members;
    for (int j = 0; j < goals; ++j)
      if (mask & (1 << j)) members.push_back(j);
    do {
      std::vector<std::optional<double>> b(static_cast<std::size_t>(goals));
      for (std::size_t p = 0; p < members.size(); ++p)
        b[static_cast<std::size_t>(members[p])] = static_cast<double>(goals - static_cast<int>(p));
      out.push_back(std::move(b));
    } while (std::next_permutation(members.begin(), members.end()));
  }
  return out;
}

struct Verdict {
  bool pre = true;
  bool key = true;
};

Verdict live_condition(const fleet::FleetState& st, const fleet::Decision& d, const fleet::LiveBids& bids,
                       const fleet::BidRanks& ranks) {
  Verdict v;
  const auto z = d.size();
  const bool everyone = std::none_of(d.begin(), d.end(), [](int g) { return g == 0; });
  if (everyone) {
    for (std::size_t i = 0; i < z; ++i)
      if (st.avail[i] != 1 || st.fault[i] != 1) v.pre = false;
    if (ranks.rank[0][static_cast<std::size_t>(d[0] - 1)] != 0) v.pre = false;
    const bool all_high = std::all_of(st.priority.begin(), st.priority.end(), [](int g) { return g == 2; });
    for (std::size_t j = 0; j < st.priority.size() && !all_high; ++j) {
      const bool assigned = std::find(d.begin(), d.end(), static_cast<int>(j) + 1) != d.end();
      if (!assigned && st.priority[j] > 1) v.key = false;
    }
    return v;
  }
  for (std::size_t i = 0; i < z; ++i) {
    if (d[i] != 0) {
      if (st.priority[static_cast<std::size_t>(d[i] - 1)] != 2 || st.avail[i] != 1) v.pre = false;
      continue;
    }
    bool excused = st.avail[i] == 0 || st.fault[i] >= 5;
    for (int g : d)
      if (g != 0 && !bids.values[i][static_cast<std::size_t>(g - 1)]) excused = true;
    if (!excused) v.key = false;
  }
  return v;
}

}  // namespace

PolicyTrendReport fleet_policy_trends(const MissionConfig& config, const mdp::MdpModel& model,
                                      const std::vector<double>& values, FleetDomain domain) {
  const fleet::FleetCodec codec(config.goals, config.uavs);
  const auto decisions = fleet::enumerate_decisions(config.goals, config.uavs);
  if (model.state_count() != codec.size() || model.action_count() != decisions.size() ||
      values.size() != model.state_count())
    throw StructuralError("fleet model or values do not match the configuration");
  const int k = config.goals;
  const auto z = static_cast<std::size_t>(config.uavs);
  const auto patterns = bid_patterns(k);

  PolicyTrendReport r;
  r.level = domain == FleetDomain::all ? "fleet (live, all states)" : "fleet (live, bid-consistent states)";
  for (const auto& d : decisions) {
    ConditionSummary c;
    c.action = fleet::format_assignment(d);
    const bool everyone = std::none_of(d.begin(), d.end(), [](int g) { return g == 0; });
    c.condition = everyone ? "every UAV available with f = 1, UAV 1 ranks its goal first, and every unassigned goal "
                             "has g <= 1 unless all goals have g = 2"
                           : "every assigned goal has g = 2 and its UAV is available, and every idle UAV is "
                             "unavailable, has f >= 5, or has no bid on an assigned goal";
    c.key_condition = everyone ? "every unassigned goal has g <= 1 unless all goals have g = 2"
                               : "every idle UAV is unavailable, has f >= 5, or has no bid on an assigned goal";
    r.actions.push_back(c);
  }

  std::size_t states = 0, idle = 0, cases = 0;
  std::vector<double> future(decisions.size());
  fleet::LiveBids bids;
  bids.values.resize(z);
  std::vector<std::size_t> pick(z, 0);
  for (std::size_t s = 0; s < codec.size(); ++s) {
    const auto st = codec.decode(static_cast<mdp::StateId>(s));
    if (std::any_of(st.assign.begin(), st.assign.end(), [](int a) { return a != 0; })) continue;
    if (domain == FleetDomain::bid_consistent) {
      bool ok = true;
      for (std::size_t i = 0; i < z; ++i)
        if (st.avail[i] == 1 && st.fault[i] != 1) ok = false;
      if (!ok) continue;
    }
    ++states;
    for (std::size_t a = 0; a < decisions.size(); ++a) {
      const auto act = static_cast<mdp::ActionId>(a);
      future[a] = model.backup(static_cast<mdp::StateId>(s), act, values) + model.cost(static_cast<mdp::StateId>(s), act);
    }
    std::fill(pick.begin(), pick.end(), 0);
    while (true) {
      for (std::size_t i = 0; i < z; ++i) bids.values[i] = patterns[pick[i]];
      ++cases;
      const auto choice = fleet::choose_assignment(future, decisions, st, bids, config);
      bool open = false;
      for (int g : choice.decision)
        if (g != 0 && st.priority[static_cast<std::size_t>(g - 1)] != 0) open = true;
      if (!open) {
        ++idle;
      } else {
        auto& c = r.actions[choice.action];
        ++c.support;
        const auto v = live_condition(st, choice.decision, bids, fleet::rank_all(bids));
        if (v.pre && v.key) ++c.satisfied;
        if (v.key) ++c.key_satisfied;
      }
      std::size_t i = 0;
      for (; i < z; ++i) {
        if (++pick[i] < patterns.size()) break;
        pick[i] = 0;
      }
      if (i == z) break;
    }
  }
  r.total_states = states;
  std::size_t empty = 0;
  double worst = 1.0, worst_key = 1.0;
  for (const auto& c : r.actions) {
    if (c.support == 0) ++empty;
    worst = std::min(worst, c.fraction());
    worst_key = std::min(worst_key, c.key_fraction());
  }
  r.aggregates = {{"bid_patterns_per_uav", static_cast<double>(patterns.size())},
                  {"cases", static_cast<double>(cases)},
                  {"idle_cases", static_cast<double>(idle)},
                  {"empty_supports", static_cast<double>(empty)},
                  {"min_fraction", worst},
                  {"min_key_fraction", worst_key}};
  return r;
}

}  // namespace searchmesh::analytics
