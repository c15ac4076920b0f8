#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "searchmesh/energy_model.hpp"

namespace searchmesh {

/// Goal-bidding cost parameters. `search_cost[j][l]` is h(pursue goal j+1,
/// region l+1); the remaining decisions carry flat search costs.
struct UavCostParams {
  std::vector<double> eta;
  std::vector<double> delta;
  std::vector<std::vector<double>> search_cost;
  double serv_cost = 0.0;
  double charge_cost = 0.0;
  double continue_cost = 0.0;
  double fault_camera_failed = 500.0;  // per reachable goal, f > 9
  double fault_severe = 200.0;         // per reachable goal, 4 < f < 10
  double fault_other = 50.0;           // per reachable goal, 1 < f < 5
  double fault_healthy = 50.0;         // per reachable goal, f = 1
};

/// Fault kernel. Worsening out of the mild tier is split between the severe
/// tier and the camera-failed tier; the rest of the mass stays put. Mass
/// landing in a tier spreads uniformly over its indices.
struct FaultProbabilities {
  double healthy_to_mild = 0.1;
  double mild_worsens = 0.4;
  double worsened_to_camera = 0.6;
  double severe_to_camera = 0.0;
  double camera_persists = 1.0;
};

struct GoalProbabilities {
  double achieve_healthy = 0.9;
  double achieve_faulty = 0.2;
  double achieve_camera_failed = 0.0;
  /// Pr(g' != 0 | g = 0), split evenly between low and high.
  double recurrence = 0.05;
  /// Pr(g' = 3 - g | g in {1,2}) for goals nobody completes.
  double drift = 0.0;
};

struct FleetCostParams {
  std::vector<double> zeta;
  double h1_healthy = 0.0;
  double h1_mild = 50.0;
  double h1_severe = 100.0;
  /// h2 for first preference, second preference, anything else.
  std::vector<double> h2{0.0, 1.0, 2.0};
  /// Expected h2 of an assigned UAV when bids are not known (offline solve).
  double h2_prior = 1.0;
  double h3 = 20.0;
};

struct FleetDynamics {
  /// Pr(unavailable UAV is back, repaired and charged, next epoch).
  double return_probability = 1.0;
  /// Pr(healthy available UAV leaves to recharge next epoch).
  double recharge_probability = 0.0;
};

struct Geometry {
  std::vector<energy::Point2> centroids;
  /// Region (1-based) where each goal sits; pursuing goal j moves a UAV there.
  std::vector<int> goal_region;
  std::vector<std::vector<energy::Point2>> goal_waypoints;
};

struct SimulationParams {
  int service_epochs = 2;
  int charge_epochs = 1;
  double idle_soc_per_epoch = 0.0;
  /// Scales the SOC cost of flying: consumed = factor * meters / full range.
  double flight_soc_factor = 1.0;
};

/// How the live assignment breaks ties between decisions with equal q.
enum class TieBreak { lexicographic, open_goal_bids };

struct MissionConfig {
  int goals = 3;    // k
  int regions = 8;  // q
  int uavs = 2;     // z
  double gamma = 0.95;
  std::optional<std::uint64_t> expect_uav_states;
  std::optional<std::uint64_t> expect_fleet_states;
  std::optional<std::uint64_t> expect_decisions;

  UavCostParams uav_cost;
  FaultProbabilities fault;
  GoalProbabilities goal;
  /// reach_clears[j][m] != 0: pursuing goal j clears the reach flag of goal m.
  std::vector<std::vector<int>> reach_clears;
  FleetCostParams fleet_cost;
  FleetDynamics fleet;
  Geometry geometry;
  energy::PowerProfile power;
  SimulationParams sim;
  TieBreak tie_break = TieBreak::open_goal_bids;

  /// Hash of the source text; stamped into snapshots.
  std::uint64_t hash = 0;

  /// Throws StructuralError describing the first inconsistency.
  void validate() const;

  std::vector<energy::Assignment> goal_assignments() const;
};

MissionConfig load_config(const std::filesystem::path& path);
MissionConfig parse_config(std::string_view toml_text);

/// Case-study parameters with a line-shaped search grid; used by tests
/// and as the default when no file is given.
MissionConfig case_study_config();

/// Case-study parameters resized to `goals` goals, `regions` regions and
/// `uavs` UAVs (for reduced oracle instances).
MissionConfig reduced_config(int goals, int regions, int uavs);

}  // namespace searchmesh
