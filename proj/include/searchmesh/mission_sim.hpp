#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "searchmesh/config.hpp"
#include "searchmesh/fleet_assigner.hpp"
#include "searchmesh/mdp.hpp"
#include "searchmesh/uav_bidder.hpp"

namespace searchmesh::sim {

enum class OutcomeMode { sampled, expected };

std::string_view to_string(OutcomeMode m);
OutcomeMode parse_mode(std::string_view s);

/// Operator or scripted change applied at the start of an epoch.
struct WorldEvent {
  enum class Kind { priority, fault, soc };
  Kind kind = Kind::priority;
  int target = 1;      // goal (priority) or UAV (fault, soc), 1-based
  double value = 0.0;  // level, fault index or state of charge
};

struct ScheduledEvent {
  int epoch = 0;
  WorldEvent event;
};

struct UavInit {
  int location = 1;
  double soc = 1.0;
  int fault = 1;
  int commit = 0;
};

struct MissionScenario {
  std::string name = "scenario";
  std::vector<int> priority;
  std::vector<UavInit> uavs;
  std::uint64_t seed = 1;
  int epoch_limit = 20;
  OutcomeMode mode = OutcomeMode::sampled;
  std::vector<ScheduledEvent> events;

  /// Throws StructuralError when a value is outside its domain for `config`.
  void validate(const MissionConfig& config) const;
};

MissionScenario parse_scenario(std::string_view toml_text);
MissionScenario load_scenario(const std::filesystem::path& path);

/// Solved models of both decision levels. Models are rebuilt from the config;
/// values come from a solve or from snapshots.
struct Policies {
  MissionConfig config;
  uav::UavCodec uav_codec;
  mdp::MdpModel uav_model;
  std::vector<double> uav_values;
  fleet::FleetCodec fleet_codec;
  mdp::MdpModel fleet_model;
  std::vector<double> fleet_values;
};

/// Builds both models and attaches the given value vectors.
Policies make_policies(const MissionConfig& config, std::vector<double> uav_values, std::vector<double> fleet_values,
                       unsigned workers = 1);

/// Builds both models and loads values from snapshots, checking that each
/// snapshot was solved for this configuration.
Policies load_policies(const MissionConfig& config, const std::filesystem::path& uav_snapshot,
                       const std::filesystem::path& fleet_snapshot, unsigned workers = 1);

enum class AssignmentRule { mdp, greedy_nearest, random_feasible };

std::string_view to_string(AssignmentRule r);

enum class Activity { active, service, charge };

struct UavRuntime {
  int location = 1;
  double soc = 1.0;
  int fault = 1;
  int commit = 0;
  bool available = true;
  Activity activity = Activity::active;
  int busy_left = 0;
  std::vector<int> reach;
  uav::BidVector bids;
};

struct UavRecord {
  int assignment = 0;
  int fault = 1;
  bool available = true;
  int location = 1;
  double soc = 1.0;
  std::vector<int> reach;
  std::string top;
  /// Three best decisions of the UAV's own bid vector, best first.
  std::vector<std::pair<std::string, double>> top_bids;
  /// Goal bids, empty entries for unreachable goals.
  std::vector<std::optional<double>> goal_bids;
};

struct EpochRecord {
  int epoch = 0;
  std::vector<int> priority;
  /// Decision actually dispatched: the policy's choice with UAVs that are
  /// away zeroed. Cost accrues on the choice itself.
  std::vector<int> decision;
  /// Decision as displayed: all zeros when every assigned goal already has
  /// zero priority.
  std::vector<int> logged;
  bool idle = false;
  std::vector<UavRecord> uavs;
  /// Best three decisions by live q (MDP rule only).
  std::vector<std::pair<std::vector<int>, double>> top_q;
  double cost = 0.0;
};

struct MissionTrace {
  std::string scenario;
  std::uint64_t seed = 0;
  OutcomeMode mode = OutcomeMode::sampled;
  AssignmentRule rule = AssignmentRule::mdp;
  std::vector<EpochRecord> records;
  double discounted_cost = 0.0;
  /// First epoch at which every goal had zero priority; epoch limit if never.
  int completion_epoch = 0;

  /// Logged assignments up to and including the first idle epoch.
  std::vector<std::vector<int>> assignment_sequence() const;
};

/// Closed loop of one mission. The loop is single-writer; queue_event is the
/// only way to change the world from outside and takes effect at the next
/// epoch boundary.
class Simulator {
 public:
  Simulator(const Policies& policies, MissionScenario scenario, AssignmentRule rule = AssignmentRule::mdp);

  /// Runs one decision epoch and returns its record. Throws StructuralError
  /// past the epoch limit.
  const EpochRecord& step();
  /// True at the epoch limit, or once every goal is achieved with nothing
  /// scripted or queued; a queued event makes the mission resume.
  bool finished() const;
  int epoch() const { return epoch_; }
  const std::vector<int>& priority() const { return priority_; }
  const std::vector<UavRuntime>& uavs() const { return uavs_; }
  const MissionTrace& trace() const { return trace_; }
  const MissionScenario& scenario() const { return scenario_; }

  /// Validates and queues a change for the next epoch boundary; returns the
  /// epoch at which it takes effect. Throws StructuralError when invalid.
  int queue_event(const WorldEvent& e);

 private:
  void apply(const WorldEvent& e);
  void refresh_sensors();
  bool draw(double p);
  int draw_index(int n);
  void evolve_fault(UavRuntime& u);
  std::vector<int> choose(const fleet::FleetState& state, const fleet::LiveBids& bids, EpochRecord& rec);

  const Policies& policies_;
  MissionScenario scenario_;
  AssignmentRule rule_;
  std::mt19937_64 rng_;
  int epoch_ = 0;
  std::vector<int> priority_;
  std::vector<int> assign_;
  std::vector<UavRuntime> uavs_;
  std::vector<WorldEvent> queued_;
  MissionTrace trace_;
  double discount_ = 1.0;
  bool settled_ = false;
};

MissionTrace run_scenario(const Policies& policies, const MissionScenario& scenario,
                          AssignmentRule rule = AssignmentRule::mdp);

/// Long-format CSV: epoch,entity,id,variable,value.
std::string trace_csv(const MissionTrace& trace);
/// Telemetry message (schema version 1) for one epoch, serialized.
std::string telemetry_json(const EpochRecord& record, std::string_view scenario);
/// One telemetry message per line, one line per epoch.
std::string trace_jsonl(const MissionTrace& trace);

struct RuleStats {
  AssignmentRule rule = AssignmentRule::mdp;
  std::size_t runs = 0;
  double mean_cost = 0.0;
  double stderr_cost = 0.0;
  double mean_latency = 0.0;
  double stderr_latency = 0.0;
};

/// Seed of run `index` in a batch driven by `master`.
std::uint64_t run_seed(std::uint64_t master, std::uint64_t index);

/// Sampled-mode batch of `runs` missions per rule. Run r of every rule uses
/// the same seed.
std::vector<RuleStats> compare_baselines(const Policies& policies, const MissionScenario& scenario,
                                         const std::vector<AssignmentRule>& rules, std::size_t runs,
                                         unsigned workers = 1);

/// Per-run sampled traces of one rule (for epoch-count statistics).
std::vector<MissionTrace> monte_carlo(const Policies& policies, const MissionScenario& scenario, AssignmentRule rule,
                                      std::size_t runs, unsigned workers = 1);

}  // namespace searchmesh::sim
