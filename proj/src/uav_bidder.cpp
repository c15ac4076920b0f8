#include "searchmesh/uav_bidder.hpp"

#include <cmath>
#include <limits>

#include "searchmesh/error.hpp"
#include "searchmesh/kernels.hpp"

namespace searchmesh::uav {

UavCodec::UavCodec(int goals, int regions) : goals_(goals), regions_(regions), pow3_(1) {
  if (goals < 1 || regions < 1) throw StructuralError("UAV model needs at least one goal and one region");
  if (goals > 10) throw StructuralError("UAV model supports at most 10 goals");
  for (int j = 0; j < goals; ++j) pow3_ *= 3;
  location_stride_ = static_cast<std::size_t>(goals + 1);
  priority_stride_ = location_stride_ * static_cast<std::size_t>(regions);
  reach_stride_ = priority_stride_ * static_cast<std::size_t>(pow3_);
  fault_stride_ = reach_stride_ * (std::size_t{1} << goals);
  size_ = fault_stride_ * 18;
  if (size_ > std::numeric_limits<mdp::StateId>::max()) throw StructuralError("UAV state space too large");
}

mdp::StateId UavCodec::encode(const UavState& s) const {
  if (s.fault < 1 || s.fault > 18) throw StructuralError("fault state outside 1..18");
  if (s.reach.size() != static_cast<std::size_t>(goals_) || s.priority.size() != static_cast<std::size_t>(goals_))
    throw StructuralError("UAV state needs one reach flag and one priority per goal");
  if (s.location < 1 || s.location > regions_) throw StructuralError("location outside 1..q");
  if (s.commit < 0 || s.commit > goals_) throw StructuralError("commitment outside 0..k");
  std::size_t reach = 0;
  std::size_t pri = 0;
  for (int j = goals_ - 1; j >= 0; --j) {
    const int r = s.reach[static_cast<std::size_t>(j)];
    const int g = s.priority[static_cast<std::size_t>(j)];
    if (r != 0 && r != 1) throw StructuralError("reach flags are binary");
    if (g < 0 || g > 2) throw StructuralError("priority outside 0..2");
    reach = reach * 2 + static_cast<std::size_t>(r);
    pri = pri * 3 + static_cast<std::size_t>(g);
  }
  return static_cast<mdp::StateId>(static_cast<std::size_t>(s.fault - 1) * fault_stride_ + reach * reach_stride_ +
                                   pri * priority_stride_ +
                                   static_cast<std::size_t>(s.location - 1) * location_stride_ +
                                   static_cast<std::size_t>(s.commit));
}

UavState UavCodec::decode(mdp::StateId index) const {
  if (index >= size_) throw StructuralError("UAV state index out of range");
  std::size_t i = index;
  UavState s;
  s.fault = static_cast<int>(i / fault_stride_) + 1;
  i %= fault_stride_;
  std::size_t reach = i / reach_stride_;
  i %= reach_stride_;
  std::size_t pri = i / priority_stride_;
  i %= priority_stride_;
  s.location = static_cast<int>(i / location_stride_) + 1;
  s.commit = static_cast<int>(i % location_stride_);
  s.reach.resize(static_cast<std::size_t>(goals_));
  s.priority.resize(static_cast<std::size_t>(goals_));
  for (int j = 0; j < goals_; ++j) {
    s.reach[static_cast<std::size_t>(j)] = static_cast<int>(reach % 2);
    reach /= 2;
    s.priority[static_cast<std::size_t>(j)] = static_cast<int>(pri % 3);
    pri /= 3;
  }
  return s;
}

UavDecision decision_of(mdp::ActionId action, int goals) {
  const auto k = static_cast<mdp::ActionId>(goals);
  if (action < k) return {DecisionKind::pursue, static_cast<int>(action) + 1};
  if (action == k) return {DecisionKind::serv, 0};
  if (action == k + 1) return {DecisionKind::charge, 0};
  if (action == k + 2) return {DecisionKind::idle, 0};
  throw StructuralError("UAV action out of range");
}

mdp::ActionId action_of(UavDecision d, int goals) {
  switch (d.kind) {
    case DecisionKind::pursue:
      if (d.goal < 1 || d.goal > goals) throw StructuralError("pursued goal out of range");
      return static_cast<mdp::ActionId>(d.goal - 1);
    case DecisionKind::serv:
      return serv_action(goals);
    case DecisionKind::charge:
      return charge_action(goals);
    case DecisionKind::idle:
      break;
  }
  return continue_action(goals);
}

std::string decision_name(mdp::ActionId action, int goals) {
  const auto d = decision_of(action, goals);
  switch (d.kind) {
    case DecisionKind::pursue:
      return "goal" + std::to_string(d.goal);
    case DecisionKind::serv:
      return "serv";
    case DecisionKind::charge:
      return "charge";
    case DecisionKind::idle:
      break;
  }
  return "continue";
}

bool admissible(const UavState& s, mdp::ActionId action) {
  const auto d = decision_of(action, static_cast<int>(s.reach.size()));
  if (d.kind != DecisionKind::pursue) return true;
  return s.reach[static_cast<std::size_t>(d.goal - 1)] == 1;
}

int worked_goal(const UavState& s, mdp::ActionId action) {
  const auto d = decision_of(action, static_cast<int>(s.reach.size()));
  if (d.kind == DecisionKind::pursue) return d.goal;
  if (d.kind == DecisionKind::idle && s.commit != 0) {
    const auto c = static_cast<std::size_t>(s.commit - 1);
    if (s.reach[c] == 1 && s.priority[c] != 0) return s.commit;
  }
  return 0;
}

double uav_cost(const UavState& s, mdp::ActionId action, const MissionConfig& config) {
  const auto& p = config.uav_cost;
  double open_goals = 0.0;
  double unreachable = 0.0;
  int reachable = 0;
  for (std::size_t j = 0; j < s.priority.size(); ++j) {
    const int g = s.priority[j];
    const int r = s.reach[j];
    const int committed = s.commit == static_cast<int>(j) + 1 ? 1 : 0;
    open_goals += p.eta[j] * g * r * (1 - committed);
    unreachable += p.delta[j] * g * (1 - r);
    reachable += r;
  }
  double search = 0.0;
  const int w = worked_goal(s, action);
  const auto d = decision_of(action, static_cast<int>(s.reach.size()));
  if (w != 0) {
    search = p.search_cost[static_cast<std::size_t>(w - 1)][static_cast<std::size_t>(s.location - 1)];
  } else if (d.kind == DecisionKind::serv) {
    search = p.serv_cost;
  } else if (d.kind == DecisionKind::charge) {
    search = p.charge_cost;
  } else {
    search = p.continue_cost;
  }
  double fault_cost = p.fault_other;
  if (s.fault == 1) {
    fault_cost = p.fault_healthy;
  } else if (s.fault > 9) {
    fault_cost = p.fault_camera_failed;
  } else if (s.fault > 4) {
    fault_cost = p.fault_severe;
  }
  return open_goals + search + fault_cost * reachable + unreachable;
}

std::vector<Transition> uav_transitions(const UavCodec& codec, const UavState& s, mdp::ActionId action,
                                        const MissionConfig& config) {
  std::vector<Transition> out;
  if (!admissible(s, action)) return out;
  const int k = codec.goals();
  const auto d = decision_of(action, k);
  const int w = worked_goal(s, action);

  std::vector<Outcome> faults =
      d.kind == DecisionKind::serv ? std::vector<Outcome>{{1, 1.0}} : fault_kernel(s.fault, config.fault);

  std::vector<int> reach = s.reach;
  int location = s.location;
  if (w != 0) {
    location = config.geometry.goal_region[static_cast<std::size_t>(w - 1)];
    for (int m = 0; m < k; ++m)
      if (config.reach_clears[static_cast<std::size_t>(w - 1)][static_cast<std::size_t>(m)] != 0)
        reach[static_cast<std::size_t>(m)] = 0;
  } else if (d.kind == DecisionKind::charge) {
    reach.assign(static_cast<std::size_t>(k), 1);
  }
  // Goal that commitment follows into the next epoch, before completion.
  int commit = 0;
  if (w != 0) {
    commit = w;
  } else if (d.kind == DecisionKind::idle) {
    commit = s.commit;
  }

  const double p_achieve = achievement_probability(s.fault, config.goal);
  std::vector<std::vector<Outcome>> goals(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j)
    goals[static_cast<std::size_t>(j)] =
        priority_kernel(s.priority[static_cast<std::size_t>(j)], j + 1 == w ? p_achieve : 0.0, config.goal);

  std::size_t reach_bits = 0;
  for (int j = k - 1; j >= 0; --j) reach_bits = reach_bits * 2 + static_cast<std::size_t>(reach[static_cast<std::size_t>(j)]);
  const std::size_t fixed = reach_bits * codec.reach_stride() +
                            static_cast<std::size_t>(location - 1) * codec.location_stride();

  std::vector<std::size_t> pos(static_cast<std::size_t>(k), 0);
  for (const auto& f : faults) {
    const std::size_t base = fixed + static_cast<std::size_t>(f.value - 1) * codec.fault_stride();
    std::fill(pos.begin(), pos.end(), 0);
    while (true) {
      double prob = f.prob;
      std::size_t pri = 0;
      int commit_next = commit;
      for (int j = k - 1; j >= 0; --j) {
        const auto& o = goals[static_cast<std::size_t>(j)][pos[static_cast<std::size_t>(j)]];
        prob *= o.prob;
        pri = pri * 3 + static_cast<std::size_t>(o.value);
        if (commit == j + 1 && o.value == 0) commit_next = 0;
      }
      out.push_back({static_cast<mdp::StateId>(base + pri * codec.priority_stride() + static_cast<std::size_t>(commit_next)),
                     prob});
      int j = 0;
      for (; j < k; ++j) {
        auto& p = pos[static_cast<std::size_t>(j)];
        if (++p < goals[static_cast<std::size_t>(j)].size()) break;
        p = 0;
      }
      if (j == k) break;
    }
  }
  return out;
}

mdp::MdpModel build_uav_mdp(const MissionConfig& config, unsigned workers) {
  config.validate();
  const UavCodec codec(config.goals, config.regions);
  const int k = config.goals;
  return mdp::MdpModel::build(
      codec.size(), static_cast<std::size_t>(k + 3), config.gamma,
      [&](mdp::StateId s, mdp::ActionId a, mdp::RowWriter& row) {
        const UavState st = codec.decode(s);
        if (!admissible(st, a)) {
          row.forbid();
          return;
        }
        row.set_cost(uav_cost(st, a, config));
        for (const auto& t : uav_transitions(codec, st, a, config)) row.add(t.next, t.prob);
      },
      workers);
}

BidVector compute_bids(const mdp::MdpModel& model, const std::vector<double>& values, mdp::StateId state,
                       double tie_tolerance) {
  BidVector b;
  b.state = state;
  b.values = mdp::q_values(model, values, state);
  b.top = static_cast<mdp::ActionId>(*mdp::argmax_with_ties(b.values, tie_tolerance));
  return b;
}

}  // namespace searchmesh::uav
