#pragma once

#include <optional>
#include <string>
#include <vector>

#include "searchmesh/config.hpp"
#include "searchmesh/mdp.hpp"

namespace searchmesh::uav {

/// Local view of one UAV: fault state, per-goal reach flags and priorities,
/// region and the goal it is committed to (0 = none).
struct UavState {
  int fault = 1;
  std::vector<int> reach;
  std::vector<int> priority;
  int location = 1;
  int commit = 0;

  friend bool operator==(const UavState&, const UavState&) = default;
};

/// Mixed-radix index over (fault, reach, priority, location, commit), fault
/// most significant.
class UavCodec {
 public:
  UavCodec(int goals, int regions);

  int goals() const { return goals_; }
  int regions() const { return regions_; }
  std::size_t size() const { return size_; }

  mdp::StateId encode(const UavState& s) const;
  UavState decode(mdp::StateId index) const;

  std::size_t fault_stride() const { return fault_stride_; }
  std::size_t reach_stride() const { return reach_stride_; }
  std::size_t priority_stride() const { return priority_stride_; }
  std::size_t location_stride() const { return location_stride_; }

 private:
  int goals_;
  int regions_;
  int pow3_;
  std::size_t location_stride_;
  std::size_t priority_stride_;
  std::size_t reach_stride_;
  std::size_t fault_stride_;
  std::size_t size_;
};

enum class DecisionKind { pursue, serv, charge, idle };

/// Actions 0..k-1 pursue goals 1..k; then serv, charge and continue.
struct UavDecision {
  DecisionKind kind = DecisionKind::idle;
  int goal = 0;  // 1-based, pursue only
};

UavDecision decision_of(mdp::ActionId action, int goals);
mdp::ActionId action_of(UavDecision d, int goals);
std::string decision_name(mdp::ActionId action, int goals);

inline mdp::ActionId serv_action(int goals) { return static_cast<mdp::ActionId>(goals); }
inline mdp::ActionId charge_action(int goals) { return static_cast<mdp::ActionId>(goals + 1); }
inline mdp::ActionId continue_action(int goals) { return static_cast<mdp::ActionId>(goals + 2); }

/// Pursuing goal j needs r_j = 1; everything else is always admissible.
bool admissible(const UavState& s, mdp::ActionId action);

/// Goal the decision actually works on: the pursued goal, or the committed
/// one under continue (when still reachable and open). 0 for none.
int worked_goal(const UavState& s, mdp::ActionId action);

double uav_cost(const UavState& s, mdp::ActionId action, const MissionConfig& config);

struct Transition {
  mdp::StateId next;
  double prob;
};

/// Successor distribution; empty for inadmissible actions.
std::vector<Transition> uav_transitions(const UavCodec& codec, const UavState& s, mdp::ActionId action,
                                        const MissionConfig& config);

mdp::MdpModel build_uav_mdp(const MissionConfig& config, unsigned workers = 1);

/// Task values of every decision at one state.
struct BidVector {
  mdp::StateId state = 0;
  std::vector<std::optional<double>> values;
  mdp::ActionId top = 0;

  /// Value of pursuing goal j (1-based); empty when it is out of reach.
  std::optional<double> goal_bid(int goal) const { return values.at(static_cast<std::size_t>(goal - 1)); }
};

BidVector compute_bids(const mdp::MdpModel& model, const std::vector<double>& values, mdp::StateId state,
                       double tie_tolerance = 1e-9);

}  // namespace searchmesh::uav
