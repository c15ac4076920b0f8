#pragma once

#include <string>
#include <utility>
#include <vector>

#include "searchmesh/config.hpp"
#include "searchmesh/mdp.hpp"

namespace searchmesh::analytics {

/// How often the states where `action` is optimal satisfy `condition`.
struct ConditionSummary {
  std::string action;
  std::string condition;
  std::size_t support = 0;
  std::size_t satisfied = 0;
  /// The clause that tells this row apart from the others (the unassigned
  /// goal is low, the idle UAV is excused); the rest of `condition` reads as
  /// a precondition. Empty when the row has no separate key clause.
  std::string key_condition;
  std::size_t key_satisfied = 0;

  /// 1 for an empty support.
  double fraction() const { return ratio(satisfied); }
  /// Same as fraction() when there is no key clause.
  double key_fraction() const { return key_condition.empty() ? fraction() : ratio(key_satisfied); }

 private:
  double ratio(std::size_t n) const {
    return support == 0 ? 1.0 : static_cast<double>(n) / static_cast<double>(support);
  }
};

struct PolicyTrendReport {
  std::string level;
  std::size_t total_states = 0;
  std::vector<ConditionSummary> actions;
  std::vector<std::pair<std::string, double>> aggregates;

  double aggregate(const std::string& name) const;
  const ConditionSummary& action(const std::string& name) const;
  std::string text() const;
  /// kind,name,condition,support,satisfied,fraction
  std::string csv() const;
};

/// Trends of the bidding policy: pursue, charge, serv and continue supports,
/// plus serv coverage of faulty states (f 2..9 and f > 9 reported apart),
/// mean reach over charge-optimal states and pursue violations.
PolicyTrendReport uav_policy_trends(const MissionConfig& config, const std::vector<mdp::ActionId>& policy);

/// Trends of the offline assignment policy alone (no bids). Conditions that
/// mention preferences or battery cannot be checked here and are dropped.
PolicyTrendReport offline_fleet_policy_trends(const MissionConfig& config, const std::vector<mdp::ActionId>& policy);

/// Which fleet states the live analysis sweeps.
enum class FleetDomain {
  /// Every priority, fault and availability combination.
  all,
  /// Only states the bidding level can produce: an available UAV is
  /// fault-free, since a faulty one always bids for service first.
  bid_consistent,
};

/// Trends of the live assignment rule. Each fleet state is paired with every
/// bid pattern per UAV (a set of reachable goals and a strict order over
/// them); decisions that only send UAVs to achieved goals count as idle and
/// belong to no support. The assignment component of the state does not
/// influence costs or dynamics and is held at zero.
PolicyTrendReport fleet_policy_trends(const MissionConfig& config, const mdp::MdpModel& model,
                                      const std::vector<double>& values, FleetDomain domain);

}  // namespace searchmesh::analytics
