#pragma once

#include <optional>
#include <string>
#include <vector>

#include "searchmesh/config.hpp"
#include "searchmesh/mdp.hpp"

namespace searchmesh::fleet {

/// Base-station view: goal priorities, current assignment, and each UAV's
/// fault state and availability. Bids are not part of the state; they enter
/// the live cost only.
struct FleetState {
  std::vector<int> priority;
  std::vector<int> assign;
  std::vector<int> fault;
  std::vector<int> avail;

  friend bool operator==(const FleetState&, const FleetState&) = default;
};

/// Mixed-radix index: priorities most significant, then assignments, faults
/// and availability flags, UAV 1 least significant within each block.
class FleetCodec {
 public:
  FleetCodec(int goals, int uavs);

  int goals() const { return goals_; }
  int uavs() const { return uavs_; }
  std::size_t size() const { return size_; }

  mdp::StateId encode(const FleetState& s) const;
  FleetState decode(mdp::StateId index) const;

 private:
  int goals_;
  int uavs_;
  std::size_t priority_radix_;
  std::size_t assign_radix_;
  std::size_t fault_radix_;
  std::size_t avail_radix_;
  std::size_t size_;
};

using Decision = std::vector<int>;

/// Assignment vectors with pairwise-distinct nonzero entries, the all-zero
/// vector excluded, in lexicographic order.
std::vector<Decision> enumerate_decisions(int goals, int uavs);

/// Closed-form count of enumerate_decisions.
std::uint64_t decision_count(int goals, int uavs);

std::string format_assignment(const std::vector<int>& a);

/// Goal bids reported by the UAVs: values[i][j-1] is UAV i's bid for goal j,
/// empty when the goal is out of its reach.
struct LiveBids {
  std::vector<std::vector<std::optional<double>>> values;
};

/// Per-UAV h2 input: the rank (0 best) of the goal a decision would give the
/// UAV, looked up from its bids. Unassigned UAVs fall into the last branch.
struct BidRanks {
  /// rank[i][j-1]: rank of goal j among UAV i's goal bids.
  std::vector<std::vector<int>> rank;
};

/// Ranks goals by bid, best first. A goal beats another only when its bid is
/// larger beyond `tie_tolerance` (relative), so ties share the better rank.
/// Missing bids (unreachable goals) rank below every present one.
std::vector<int> rank_bids(const std::vector<std::optional<double>>& goal_bids, double tie_tolerance = 1e-9);

BidRanks rank_all(const LiveBids& bids, double tie_tolerance = 1e-9);

/// Priority term of the cost, sum_j zeta_j g_j exp(g_j).
double priority_cost(const std::vector<int>& priority, const FleetCostParams& p);

/// Full cost with live bid ranks.
double fleet_cost(const FleetState& s, const Decision& d, const BidRanks& ranks, const FleetCostParams& p);

/// Cost used by the offline solve, with h2 replaced by its prior mean.
double offline_cost(const FleetState& s, const Decision& d, const FleetCostParams& p);

struct Transition {
  mdp::StateId next;
  double prob;
};

std::vector<Transition> fleet_transitions(const FleetCodec& codec, const FleetState& s, const Decision& d,
                                          const MissionConfig& config);

mdp::MdpModel build_fleet_mdp(const MissionConfig& config, unsigned workers = 1);

struct DecisionScore {
  std::size_t action;
  double q;
};

struct AssignmentChoice {
  std::size_t action = 0;
  Decision decision;
  /// Every decision's live q-value, best first.
  std::vector<DecisionScore> ranking;
};

/// Greedy decision for the live state: offline successor values, live bid
/// ranks in the cost. Among decisions tied on q the rule prefers, in order,
/// fewer UAVs sent to zero-priority goals, the larger total bid on goals
/// that still have priority (open_goal_bids rule only), and the
/// lexicographically smallest vector.
AssignmentChoice decide_assignment(const mdp::MdpModel& model, const std::vector<double>& values,
                                   const FleetCodec& codec, const FleetState& state, const LiveBids& bids,
                                   const MissionConfig& config, double tie_tolerance = 1e-9);

/// Same rule from precomputed discounted futures, future[a] = gamma * E[V(s')]
/// under decision a.
AssignmentChoice choose_assignment(const std::vector<double>& future, const std::vector<Decision>& decisions,
                                   const FleetState& state, const LiveBids& bids, const MissionConfig& config,
                                   double tie_tolerance = 1e-9);

}  // namespace searchmesh::fleet
