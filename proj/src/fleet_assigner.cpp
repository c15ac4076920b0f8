#include "searchmesh/fleet_assigner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "searchmesh/error.hpp"
#include "searchmesh/kernels.hpp"

namespace searchmesh::fleet {
namespace {

struct Term {
  std::size_t offset;
  double prob;
};

std::size_t ipow(std::size_t base, int exp) {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

void check_decision(const Decision& d, int goals, int uavs) {
  if (d.size() != static_cast<std::size_t>(uavs)) throw StructuralError("decision needs one entry per UAV");
  for (int a : d)
    if (a < 0 || a > goals) throw StructuralError("decision entry outside 0..k");
}

// Joint (fault, availability) evolution of one UAV. Healthy available UAVs
// keep flying; a faulty one leaves for service; an unavailable one comes
// back repaired and charged.
std::vector<std::pair<Outcome, int>> uav_kernel(int fault, int avail, const MissionConfig& c) {
  std::vector<std::pair<Outcome, int>> out;
  if (avail == 0) {
    const double back = c.fleet.return_probability;
    if (back > 0.0) out.push_back({{1, back}, 1});
    if (back < 1.0) out.push_back({{fault, 1.0 - back}, 0});
    return out;
  }
  if (fault != 1) {
    out.push_back({{fault, 1.0}, 0});
    return out;
  }
  const double leave = c.fleet.recharge_probability;
  for (const auto& o : fault_kernel(1, c.fault)) {
    if (leave < 1.0) out.push_back({{o.value, o.prob * (1.0 - leave)}, 1});
    if (leave > 0.0) out.push_back({{o.value, o.prob * leave}, 0});
  }
  return out;
}

}  // namespace

FleetCodec::FleetCodec(int goals, int uavs) : goals_(goals), uavs_(uavs) {
  if (goals < 1 || uavs < 1) throw StructuralError("fleet model needs at least one goal and one UAV");
  priority_radix_ = ipow(3, goals);
  assign_radix_ = ipow(static_cast<std::size_t>(goals + 1), uavs);
  fault_radix_ = ipow(18, uavs);
  avail_radix_ = ipow(2, uavs);
  const long double total = static_cast<long double>(priority_radix_) * assign_radix_ * fault_radix_ * avail_radix_;
  if (total > std::numeric_limits<mdp::StateId>::max()) throw StructuralError("fleet state space too large");
  size_ = priority_radix_ * assign_radix_ * fault_radix_ * avail_radix_;
}

mdp::StateId FleetCodec::encode(const FleetState& s) const {
  const auto k = static_cast<std::size_t>(goals_);
  const auto z = static_cast<std::size_t>(uavs_);
  if (s.priority.size() != k) throw StructuralError("fleet state needs one priority per goal");
  if (s.assign.size() != z || s.fault.size() != z || s.avail.size() != z)
    throw StructuralError("fleet state needs one assignment, fault and availability per UAV");
  std::size_t g = 0;
  for (std::size_t j = k; j-- > 0;) {
    if (s.priority[j] < 0 || s.priority[j] > 2) throw StructuralError("priority outside 0..2");
    g = g * 3 + static_cast<std::size_t>(s.priority[j]);
  }
  std::size_t a = 0;
  std::size_t f = 0;
  std::size_t d = 0;
  for (std::size_t i = z; i-- > 0;) {
    if (s.assign[i] < 0 || s.assign[i] > goals_) throw StructuralError("assignment outside 0..k");
    if (s.fault[i] < 1 || s.fault[i] > 18) throw StructuralError("fault state outside 1..18");
    if (s.avail[i] != 0 && s.avail[i] != 1) throw StructuralError("availability is binary");
    a = a * (k + 1) + static_cast<std::size_t>(s.assign[i]);
    f = f * 18 + static_cast<std::size_t>(s.fault[i] - 1);
    d = d * 2 + static_cast<std::size_t>(s.avail[i]);
  }
  return static_cast<mdp::StateId>(((g * assign_radix_ + a) * fault_radix_ + f) * avail_radix_ + d);
}

FleetState FleetCodec::decode(mdp::StateId index) const {
  if (index >= size_) throw StructuralError("fleet state index out of range");
  const auto k = static_cast<std::size_t>(goals_);
  const auto z = static_cast<std::size_t>(uavs_);
  std::size_t i = index;
  std::size_t d = i % avail_radix_;
  i /= avail_radix_;
  std::size_t f = i % fault_radix_;
  i /= fault_radix_;
  std::size_t a = i % assign_radix_;
  std::size_t g = i / assign_radix_;
  FleetState s;
  s.priority.resize(k);
  s.assign.resize(z);
  s.fault.resize(z);
  s.avail.resize(z);
  for (std::size_t j = 0; j < k; ++j, g /= 3) s.priority[j] = static_cast<int>(g % 3);
  for (std::size_t u = 0; u < z; ++u) {
    s.assign[u] = static_cast<int>(a % (k + 1));
    a /= k + 1;
    s.fault[u] = static_cast<int>(f % 18) + 1;
    f /= 18;
    s.avail[u] = static_cast<int>(d % 2);
    d /= 2;
  }
  return s;
}

std::vector<Decision> enumerate_decisions(int goals, int uavs) {
  if (goals < 1 || uavs < 1) throw StructuralError("need at least one goal and one UAV");
  std::vector<Decision> out;
  Decision d(static_cast<std::size_t>(uavs), 0);
  while (true) {
    bool ok = std::any_of(d.begin(), d.end(), [](int a) { return a != 0; });
    for (std::size_t i = 0; ok && i < d.size(); ++i)
      for (std::size_t j = i + 1; ok && j < d.size(); ++j)
        if (d[i] != 0 && d[i] == d[j]) ok = false;
    if (ok) out.push_back(d);
    std::size_t pos = d.size();
    while (pos > 0 && d[pos - 1] == goals) d[--pos] = 0;
    if (pos == 0) break;
    ++d[pos - 1];
  }
  return out;
}

std::uint64_t decision_count(int goals, int uavs) {
  // sum over m assigned UAVs of C(z, m) * k! / (k - m)!, minus the all-idle vector
  std::uint64_t total = 0;
  for (int m = 0; m <= std::min(goals, uavs); ++m) {
    std::uint64_t choose = 1;
    for (int i = 0; i < m; ++i) choose = choose * static_cast<std::uint64_t>(uavs - i) / static_cast<std::uint64_t>(i + 1);
    std::uint64_t perm = 1;
    for (int i = 0; i < m; ++i) perm *= static_cast<std::uint64_t>(goals - i);
    total += choose * perm;
  }
  return total - 1;
}

std::string format_assignment(const std::vector<int>& a) {
  std::string s = "[";
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(a[i]);
  }
  return s + "]";
}

std::vector<int> rank_bids(const std::vector<std::optional<double>>& goal_bids, double tie_tolerance) {
  std::vector<int> rank(goal_bids.size(), 0);
  for (std::size_t j = 0; j < goal_bids.size(); ++j) {
    int better = 0;
    for (std::size_t m = 0; m < goal_bids.size(); ++m) {
      if (m == j || !goal_bids[m]) continue;
      if (!goal_bids[j]) {
        ++better;
        continue;
      }
      const double slack = tie_tolerance * std::max(1.0, std::abs(*goal_bids[j]));
      if (*goal_bids[m] > *goal_bids[j] + slack) ++better;
    }
    rank[j] = better;
  }
  return rank;
}

BidRanks rank_all(const LiveBids& bids, double tie_tolerance) {
  BidRanks r;
  for (const auto& row : bids.values) r.rank.push_back(rank_bids(row, tie_tolerance));
  return r;
}

double priority_cost(const std::vector<int>& priority, const FleetCostParams& p) {
  double total = 0.0;
  for (std::size_t j = 0; j < priority.size(); ++j) total += p.zeta[j] * priority[j] * std::exp(priority[j]);
  return total;
}

namespace {

double uav_terms(const FleetState& s, const Decision& d, const FleetCostParams& p, std::size_t i) {
  if (d[i] == 0) return 0.0;
  double h1 = p.h1_healthy;
  if (s.fault[i] >= 2 && s.fault[i] <= 4) {
    h1 = p.h1_mild;
  } else if (s.fault[i] != 1) {
    h1 = p.h1_severe;
  }
  return h1 + p.h3 * (1 - s.avail[i]);
}

}  // namespace

double fleet_cost(const FleetState& s, const Decision& d, const BidRanks& ranks, const FleetCostParams& p) {
  if (ranks.rank.size() != d.size()) throw StructuralError("bid ranks need one row per UAV");
  double total = priority_cost(s.priority, p);
  for (std::size_t i = 0; i < d.size(); ++i) {
    total += uav_terms(s, d, p, i);
    int r = 2;
    if (d[i] != 0) {
      if (ranks.rank[i].size() != s.priority.size()) throw StructuralError("bid ranks need one entry per goal");
      r = std::min(2, ranks.rank[i][static_cast<std::size_t>(d[i] - 1)]);
    }
    total += p.h2[static_cast<std::size_t>(r)];
  }
  return total;
}

double offline_cost(const FleetState& s, const Decision& d, const FleetCostParams& p) {
  double total = priority_cost(s.priority, p);
  for (std::size_t i = 0; i < d.size(); ++i) total += uav_terms(s, d, p, i) + (d[i] != 0 ? p.h2_prior : p.h2[2]);
  return total;
}

std::vector<Transition> fleet_transitions(const FleetCodec& codec, const FleetState& s, const Decision& d,
                                          const MissionConfig& config) {
  const int k = codec.goals();
  const int z = codec.uavs();
  check_decision(d, k, z);
  const std::size_t avail_radix = ipow(2, z);
  const std::size_t fault_radix = ipow(18, z);
  const std::size_t assign_radix = ipow(static_cast<std::size_t>(k + 1), z);

  std::vector<std::vector<Term>> factors;
  std::size_t fixed = 0;
  {
    std::size_t a = 0;
    for (int i = z - 1; i >= 0; --i) a = a * static_cast<std::size_t>(k + 1) + static_cast<std::size_t>(d[static_cast<std::size_t>(i)]);
    fixed = a * fault_radix * avail_radix;
  }
  std::size_t fstride = avail_radix;
  std::size_t dstride = 1;
  for (int i = 0; i < z; ++i) {
    std::vector<Term> terms;
    const auto u = static_cast<std::size_t>(i);
    for (const auto& [o, avail] : uav_kernel(s.fault[u], s.avail[u], config))
      terms.push_back({static_cast<std::size_t>(o.value - 1) * fstride + static_cast<std::size_t>(avail) * dstride, o.prob});
    factors.push_back(std::move(terms));
    fstride *= 18;
    dstride *= 2;
  }
  std::size_t gstride = assign_radix * fault_radix * avail_radix;
  for (int j = 0; j < k; ++j) {
    double p_achieve = 0.0;
    for (int i = 0; i < z; ++i) {
      const auto u = static_cast<std::size_t>(i);
      if (d[u] == j + 1 && s.avail[u] == 1) p_achieve = achievement_probability(s.fault[u], config.goal);
    }
    std::vector<Term> terms;
    for (const auto& o : priority_kernel(s.priority[static_cast<std::size_t>(j)], p_achieve, config.goal))
      terms.push_back({static_cast<std::size_t>(o.value) * gstride, o.prob});
    factors.push_back(std::move(terms));
    gstride *= 3;
  }

  std::vector<Transition> out;
  std::vector<std::size_t> pos(factors.size(), 0);
  while (true) {
    std::size_t idx = fixed;
    double prob = 1.0;
    for (std::size_t f = 0; f < factors.size(); ++f) {
      idx += factors[f][pos[f]].offset;
      prob *= factors[f][pos[f]].prob;
    }
    out.push_back({static_cast<mdp::StateId>(idx), prob});
    std::size_t f = 0;
    for (; f < factors.size(); ++f) {
      if (++pos[f] < factors[f].size()) break;
      pos[f] = 0;
    }
    if (f == factors.size()) break;
  }
  return out;
}

mdp::MdpModel build_fleet_mdp(const MissionConfig& config, unsigned workers) {
  config.validate();
  const FleetCodec codec(config.goals, config.uavs);
  const auto decisions = enumerate_decisions(config.goals, config.uavs);
  if (config.expect_decisions && *config.expect_decisions != decisions.size())
    throw StructuralError("x = " + std::to_string(*config.expect_decisions) + " does not match k and z (" +
                          std::to_string(decisions.size()) + ")");
  return mdp::MdpModel::build(
      codec.size(), decisions.size(), config.gamma,
      [&](mdp::StateId s, mdp::ActionId a, mdp::RowWriter& row) {
        const FleetState st = codec.decode(s);
        const auto& d = decisions[a];
        row.set_cost(offline_cost(st, d, config.fleet_cost));
        for (const auto& t : fleet_transitions(codec, st, d, config)) row.add(t.next, t.prob);
      },
      workers);
}

AssignmentChoice decide_assignment(const mdp::MdpModel& model, const std::vector<double>& values,
                                   const FleetCodec& codec, const FleetState& state, const LiveBids& bids,
                                   const MissionConfig& config, double tie_tolerance) {
  const auto decisions = enumerate_decisions(config.goals, config.uavs);
  if (model.action_count() != decisions.size() || model.state_count() != codec.size())
    throw StructuralError("fleet policy does not match the configuration");
  const auto s = codec.encode(state);
  std::vector<double> future(decisions.size());
  for (std::size_t a = 0; a < decisions.size(); ++a) {
    const auto act = static_cast<mdp::ActionId>(a);
    // backup() carries the offline cost; only the discounted future is kept.
    future[a] = model.backup(s, act, values) + model.cost(s, act);
  }
  return choose_assignment(future, decisions, state, bids, config, tie_tolerance);
}

AssignmentChoice choose_assignment(const std::vector<double>& future, const std::vector<Decision>& decisions,
                                   const FleetState& state, const LiveBids& bids, const MissionConfig& config,
                                   double tie_tolerance) {
  if (future.size() != decisions.size() || decisions.empty())
    throw StructuralError("one future value per decision is required");
  if (bids.values.size() != static_cast<std::size_t>(config.uavs))
    throw StructuralError("live bids need one row per UAV");
  const BidRanks ranks = rank_all(bids, tie_tolerance);
  std::vector<double> q(decisions.size());
  AssignmentChoice choice;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < decisions.size(); ++a) {
    q[a] = future[a] - fleet_cost(state, decisions[a], ranks, config.fleet_cost);
    best = std::max(best, q[a]);
    choice.ranking.push_back({a, q[a]});
  }
  const double slack = tie_tolerance * std::max(1.0, std::abs(best));
  auto wasted = [&](const Decision& d) {
    int n = 0;
    for (int g : d)
      if (g != 0 && state.priority[static_cast<std::size_t>(g - 1)] == 0) ++n;
    return n;
  };
  // Bids share one cost scale, so the larger total on open goals wins.
  auto open_bids = [&](const Decision& d) {
    double total = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (d[i] == 0 || state.priority[static_cast<std::size_t>(d[i] - 1)] == 0) continue;
      const auto& b = bids.values[i].at(static_cast<std::size_t>(d[i] - 1));
      total += b ? *b : -std::numeric_limits<double>::max() / 4;
    }
    return total;
  };
  std::optional<std::size_t> pick;
  for (std::size_t a = 0; a < decisions.size(); ++a) {
    if (q[a] < best - slack) continue;
    if (!pick) {
      pick = a;
      continue;
    }
    const int wa = wasted(decisions[a]);
    const int wp = wasted(decisions[*pick]);
    if (wa != wp) {
      if (wa < wp) pick = a;
      continue;
    }
    if (config.tie_break == TieBreak::open_goal_bids) {
      const double ba = open_bids(decisions[a]);
      const double bp = open_bids(decisions[*pick]);
      if (ba > bp + tie_tolerance * std::max(1.0, std::abs(bp))) pick = a;
    }
  }
  choice.action = *pick;
  choice.decision = decisions[choice.action];
  std::stable_sort(choice.ranking.begin(), choice.ranking.end(),
                   [](const DecisionScore& x, const DecisionScore& y) { return x.q > y.q; });
  // The chosen decision leads its tie group.
  const auto it = std::find_if(choice.ranking.begin(), choice.ranking.end(),
                               [&](const DecisionScore& d) { return d.action == choice.action; });
  std::rotate(choice.ranking.begin(), it, it + 1);
  return choice;
}

}  // namespace searchmesh::fleet
