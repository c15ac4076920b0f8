#include "searchmesh/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include "searchmesh/error.hpp"
#include "searchmesh/snapshot.hpp"

namespace searchmesh {
namespace {

bool is_probability(double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; }

template <typename T>
T required(const toml::table& root, std::string_view section, std::string_view key) {
  const auto node = root[section][key];
  if (!node) throw StructuralError("config is missing " + std::string(section) + "." + std::string(key));
  if constexpr (std::is_same_v<T, double>) {
    if (auto v = node.template value<double>()) return *v;
  } else {
    if (auto v = node.template value<T>()) return *v;
  }
  throw StructuralError("config value " + std::string(section) + "." + std::string(key) + " has the wrong type");
}

template <typename T>
T optional_value(const toml::table& root, std::string_view section, std::string_view key, T fallback) {
  const auto node = root[section][key];
  if (!node) return fallback;
  if (auto v = node.template value<T>()) return *v;
  throw StructuralError("config value " + std::string(section) + "." + std::string(key) + " has the wrong type");
}

std::vector<double> number_list(const toml::node* node, const std::string& what) {
  const auto* arr = node ? node->as_array() : nullptr;
  if (!arr) throw StructuralError("config value " + what + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& el : *arr) {
    auto v = el.value<double>();
    if (!v) throw StructuralError("config value " + what + " must contain only numbers");
    out.push_back(*v);
  }
  return out;
}

std::vector<std::vector<double>> number_table(const toml::node* node, const std::string& what) {
  const auto* arr = node ? node->as_array() : nullptr;
  if (!arr) throw StructuralError("config value " + what + " must be an array of arrays");
  std::vector<std::vector<double>> out;
  for (const auto& row : *arr) out.push_back(number_list(&row, what));
  return out;
}

std::vector<double> list_at(const toml::table& root, std::string_view section, std::string_view key) {
  return number_list(root[section][key].node(), std::string(section) + "." + std::string(key));
}

std::vector<std::vector<double>> table_at(const toml::table& root, std::string_view section, std::string_view key) {
  return number_table(root[section][key].node(), std::string(section) + "." + std::string(key));
}

energy::Point2 to_point(const std::vector<double>& xy, const std::string& what) {
  if (xy.size() != 2) throw StructuralError(what + " points must be [x, y]");
  return {xy[0], xy[1]};
}

}  // namespace

std::vector<energy::Assignment> MissionConfig::goal_assignments() const {
  std::vector<energy::Assignment> out;
  for (std::size_t j = 0; j < geometry.goal_waypoints.size(); ++j)
    out.push_back({static_cast<int>(j) + 1, geometry.goal_waypoints[j]});
  return out;
}

void MissionConfig::validate() const {
  if (goals < 1 || regions < 1 || uavs < 1) throw StructuralError("k, q and z must be positive");
  if (!(gamma > 0.0 && gamma < 1.0)) throw StructuralError("gamma must lie in (0, 1)");
  const auto k = static_cast<std::size_t>(goals);
  const auto q = static_cast<std::size_t>(regions);
  if (uav_cost.eta.size() != k || uav_cost.delta.size() != k) throw StructuralError("eta and delta need k entries");
  if (uav_cost.search_cost.size() != k) throw StructuralError("h needs one row per goal");
  for (const auto& row : uav_cost.search_cost) {
    if (row.size() != q) throw StructuralError("each h row needs q entries");
    for (double v : row)
      if (!std::isfinite(v) || v < 0) throw StructuralError("h entries must be nonnegative");
  }
  for (double v : uav_cost.eta)
    if (!(v >= 0)) throw StructuralError("eta must be nonnegative");
  for (double v : uav_cost.delta)
    if (!(v >= 0)) throw StructuralError("delta must be nonnegative");
  for (double v : {uav_cost.serv_cost, uav_cost.charge_cost, uav_cost.continue_cost, uav_cost.fault_camera_failed,
                   uav_cost.fault_severe, uav_cost.fault_other})
    if (!(v >= 0) || !std::isfinite(v)) throw StructuralError("UAV cost constants must be nonnegative");
  for (double p : {fault.healthy_to_mild, fault.mild_worsens, fault.worsened_to_camera, fault.severe_to_camera,
                   fault.camera_persists, goal.achieve_healthy, goal.achieve_faulty, goal.achieve_camera_failed,
                   goal.recurrence, goal.drift, fleet.return_probability, fleet.recharge_probability})
    if (!is_probability(p)) throw StructuralError("probabilities must lie in [0, 1]");
  if (fault.camera_persists != 1.0)
    throw StructuralError("camera failures are absorbing without service; camera_persists must be 1");
  if (reach_clears.size() != k) throw StructuralError("reach.clears needs one row per goal");
  for (const auto& row : reach_clears)
    if (row.size() != k) throw StructuralError("each reach.clears row needs k entries");
  if (fleet_cost.zeta.size() != k) throw StructuralError("zeta needs k entries");
  if (fleet_cost.h2.size() != 3) throw StructuralError("fleet_cost.h2 needs 3 entries");
  if (geometry.centroids.size() != q) throw StructuralError("geometry needs one centroid per region");
  if (geometry.goal_region.size() != k) throw StructuralError("geometry needs one region per goal");
  for (int r : geometry.goal_region)
    if (r < 1 || r > regions) throw StructuralError("goal region outside 1..q");
  if (geometry.goal_waypoints.size() != k) throw StructuralError("geometry needs waypoints for every goal");
  for (const auto& w : geometry.goal_waypoints)
    if (w.empty()) throw StructuralError("every goal needs at least one waypoint");
  power.validate();
  if (sim.service_epochs < 1 || sim.charge_epochs < 1) throw StructuralError("service and charge take at least one epoch");
  if (!(sim.idle_soc_per_epoch >= 0.0 && sim.flight_soc_factor >= 0.0))
    throw StructuralError("SOC drain parameters must be nonnegative");

  const auto uav_states = 18ULL * (1ULL << k) * static_cast<std::uint64_t>(std::pow(3.0, goals)) * q * (k + 1);
  if (expect_uav_states && *expect_uav_states != uav_states)
    throw StructuralError("n = " + std::to_string(*expect_uav_states) + " does not match k and q (" +
                          std::to_string(uav_states) + ")");
  std::uint64_t fleet_states = static_cast<std::uint64_t>(std::pow(3.0, goals));
  for (int u = 0; u < uavs; ++u) fleet_states *= static_cast<std::uint64_t>(k + 1) * 18 * 2;
  if (expect_fleet_states && *expect_fleet_states != fleet_states)
    throw StructuralError("N = " + std::to_string(*expect_fleet_states) + " does not match k and z (" +
                          std::to_string(fleet_states) + ")");
  // sum over m assigned UAVs of C(z, m) * k!/(k-m)!, minus the all-zero vector
  std::uint64_t decisions = 0;
  for (int m = 0; m <= std::min(goals, uavs); ++m) {
    std::uint64_t ways = 1;
    for (int i = 0; i < m; ++i) ways = ways * static_cast<std::uint64_t>(uavs - i) * static_cast<std::uint64_t>(goals - i) / static_cast<std::uint64_t>(i + 1);
    decisions += ways;
  }
  --decisions;
  if (expect_decisions && *expect_decisions != decisions)
    throw StructuralError("x = " + std::to_string(*expect_decisions) + " does not match k and z (" +
                          std::to_string(decisions) + ")");
}

MissionConfig parse_config(std::string_view toml_text) {
  toml::table root;
  try {
    root = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    throw StructuralError(std::string("config parse error: ") + std::string(e.description()));
  }
  MissionConfig c;
  c.goals = static_cast<int>(required<std::int64_t>(root, "problem", "k"));
  c.regions = static_cast<int>(required<std::int64_t>(root, "problem", "q"));
  c.uavs = static_cast<int>(required<std::int64_t>(root, "problem", "z"));
  c.gamma = required<double>(root, "problem", "gamma");
  if (auto n = root["problem"]["n"].value<std::int64_t>()) c.expect_uav_states = static_cast<std::uint64_t>(*n);
  if (auto n = root["problem"]["N"].value<std::int64_t>()) c.expect_fleet_states = static_cast<std::uint64_t>(*n);
  if (auto n = root["problem"]["x"].value<std::int64_t>()) c.expect_decisions = static_cast<std::uint64_t>(*n);

  c.uav_cost.eta = list_at(root, "uav_cost", "eta");
  c.uav_cost.delta = list_at(root, "uav_cost", "delta");
  c.uav_cost.search_cost = table_at(root, "uav_cost", "h");
  c.uav_cost.serv_cost = optional_value(root, "uav_cost", "h_serv", 0.0);
  c.uav_cost.charge_cost = optional_value(root, "uav_cost", "h_charge", 0.0);
  c.uav_cost.continue_cost = optional_value(root, "uav_cost", "h_continue", 0.0);
  c.uav_cost.fault_camera_failed = optional_value(root, "uav_cost", "f_camera_failed", 500.0);
  c.uav_cost.fault_severe = optional_value(root, "uav_cost", "f_severe", 200.0);
  c.uav_cost.fault_other = optional_value(root, "uav_cost", "f_other", 50.0);
  c.uav_cost.fault_healthy = optional_value(root, "uav_cost", "f_healthy", c.uav_cost.fault_other);

  c.fault.healthy_to_mild = optional_value(root, "fault_probability", "healthy_to_mild", 0.1);
  c.fault.mild_worsens = optional_value(root, "fault_probability", "mild_worsens", 0.4);
  c.fault.worsened_to_camera = optional_value(root, "fault_probability", "worsened_to_camera", 0.6);
  c.fault.severe_to_camera = optional_value(root, "fault_probability", "severe_to_camera", 0.0);
  c.fault.camera_persists = optional_value(root, "fault_probability", "camera_persists", 1.0);

  c.goal.achieve_healthy = optional_value(root, "goal_probability", "achieve_healthy", 0.9);
  c.goal.achieve_faulty = optional_value(root, "goal_probability", "achieve_faulty", 0.2);
  c.goal.achieve_camera_failed = optional_value(root, "goal_probability", "achieve_camera_failed", 0.0);
  c.goal.recurrence = optional_value(root, "goal_probability", "recurrence", 0.05);
  c.goal.drift = optional_value(root, "goal_probability", "drift", 0.0);

  for (const auto& row : table_at(root, "reach", "clears")) {
    std::vector<int> r;
    for (double v : row) r.push_back(v != 0.0 ? 1 : 0);
    c.reach_clears.push_back(std::move(r));
  }

  c.fleet_cost.zeta = list_at(root, "fleet_cost", "zeta");
  c.fleet_cost.h1_healthy = optional_value(root, "fleet_cost", "h1_healthy", 0.0);
  c.fleet_cost.h1_mild = optional_value(root, "fleet_cost", "h1_mild", 50.0);
  c.fleet_cost.h1_severe = optional_value(root, "fleet_cost", "h1_severe", 100.0);
  if (root["fleet_cost"]["h2"]) c.fleet_cost.h2 = list_at(root, "fleet_cost", "h2");
  c.fleet_cost.h2_prior = optional_value(root, "fleet_cost", "h2_prior", 1.0);
  c.fleet_cost.h3 = optional_value(root, "fleet_cost", "h3", 20.0);

  c.fleet.return_probability = optional_value(root, "fleet_dynamics", "return_probability", 1.0);
  c.fleet.recharge_probability = optional_value(root, "fleet_dynamics", "recharge_probability", 0.0);

  for (const auto& xy : table_at(root, "geometry", "centroids"))
    c.geometry.centroids.push_back(to_point(xy, "geometry.centroids"));
  for (double r : list_at(root, "geometry", "goal_region")) c.geometry.goal_region.push_back(static_cast<int>(r));
  const auto* wp = root["geometry"]["goal_waypoints"].as_array();
  if (!wp) throw StructuralError("config is missing geometry.goal_waypoints");
  for (const auto& goal : *wp) {
    std::vector<energy::Point2> pts;
    for (const auto& xy : number_table(&goal, "geometry.goal_waypoints"))
      pts.push_back(to_point(xy, "geometry.goal_waypoints"));
    c.geometry.goal_waypoints.push_back(std::move(pts));
  }

  c.power.motor_w = required<double>(root, "power", "p_m");
  c.power.payload_w = required<double>(root, "power", "p_p");
  c.power.electronics_w = required<double>(root, "power", "p_e");
  c.power.capacity_as = required<double>(root, "power", "bc");
  c.power.voltage_v = required<double>(root, "power", "v");
  c.power.speed_mps = required<double>(root, "power", "speed");

  c.sim.service_epochs = static_cast<int>(optional_value<std::int64_t>(root, "simulation", "service_epochs", 2));
  c.sim.charge_epochs = static_cast<int>(optional_value<std::int64_t>(root, "simulation", "charge_epochs", 1));
  c.sim.idle_soc_per_epoch = optional_value(root, "simulation", "idle_soc_per_epoch", 0.0);
  c.sim.flight_soc_factor = optional_value(root, "simulation", "flight_soc_factor", 1.0);

  const auto tie = optional_value<std::string>(root, "policy", "tie_break", "open_goal_bids");
  if (tie == "lexicographic") {
    c.tie_break = TieBreak::lexicographic;
  } else if (tie == "open_goal_bids") {
    c.tie_break = TieBreak::open_goal_bids;
  } else {
    throw StructuralError("policy.tie_break must be lexicographic or open_goal_bids");
  }

  c.hash = fnv1a(toml_text);
  c.validate();
  return c;
}

MissionConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw StructuralError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

namespace {

constexpr double kRegionSpacing = 500.0;
constexpr double kSweepHalfWidth = 100.0;

Geometry line_geometry(int regions, const std::vector<int>& goal_region) {
  Geometry g;
  for (int l = 0; l < regions; ++l) g.centroids.push_back({kRegionSpacing * l, 0.0});
  g.goal_region = goal_region;
  for (int r : goal_region) {
    const auto c = g.centroids[static_cast<std::size_t>(r - 1)];
    g.goal_waypoints.push_back({{c.x - kSweepHalfWidth, c.y - kSweepHalfWidth},
                                {c.x + kSweepHalfWidth, c.y - kSweepHalfWidth},
                                {c.x + kSweepHalfWidth, c.y + kSweepHalfWidth},
                                {c.x - kSweepHalfWidth, c.y + kSweepHalfWidth}});
  }
  return g;
}

energy::PowerProfile default_power() {
  energy::PowerProfile p;
  p.motor_w = 150.0;
  p.payload_w = 10.0;
  p.electronics_w = 5.0;
  p.capacity_as = 18000.0;
  p.voltage_v = 14.8;
  p.speed_mps = 5.0;
  return p;
}

}  // namespace

MissionConfig case_study_config() {
  MissionConfig c;
  c.goals = 3;
  c.regions = 8;
  c.uavs = 2;
  c.gamma = 0.95;
  c.expect_uav_states = 124416;
  c.expect_fleet_states = 559872;
  c.expect_decisions = 12;
  c.uav_cost.eta = {50.0, 70.0, 100.0};
  c.uav_cost.delta = {50.0, 70.0, 100.0};
  c.uav_cost.search_cost = {{1, 0, 1, 1, 1, 2, 2, 2}, {2, 1, 1, 1, 0, 1, 1, 1}, {2, 2, 2, 1, 1, 0, 1, 1}};
  c.uav_cost.serv_cost = 1.0;
  c.reach_clears = {{0, 0, 1}, {0, 0, 0}, {1, 0, 0}};
  c.fleet_cost.zeta = {100.0, 100.0, 100.0};
  c.geometry = line_geometry(8, {2, 5, 6});
  c.power = default_power();
  c.sim.idle_soc_per_epoch = 0.02;
  c.validate();
  return c;
}

MissionConfig reduced_config(int goals, int regions, int uavs) {
  if (goals < 1 || regions < 1 || uavs < 1) throw StructuralError("reduced config needs positive sizes");
  const MissionConfig base = case_study_config();
  MissionConfig c = base;
  c.goals = goals;
  c.regions = regions;
  c.uavs = uavs;
  c.expect_uav_states.reset();
  c.expect_fleet_states.reset();
  c.expect_decisions.reset();
  const auto k = static_cast<std::size_t>(goals);
  c.uav_cost.eta.clear();
  c.uav_cost.delta.clear();
  c.fleet_cost.zeta.clear();
  c.uav_cost.search_cost.assign(k, std::vector<double>(static_cast<std::size_t>(regions), 1.0));
  c.reach_clears.assign(k, std::vector<int>(k, 0));
  std::vector<int> goal_region;
  for (std::size_t j = 0; j < k; ++j) {
    c.uav_cost.eta.push_back(base.uav_cost.eta[j % base.uav_cost.eta.size()]);
    c.uav_cost.delta.push_back(base.uav_cost.delta[j % base.uav_cost.delta.size()]);
    c.fleet_cost.zeta.push_back(base.fleet_cost.zeta[j % base.fleet_cost.zeta.size()]);
    const int region = static_cast<int>((2 * j + 1) % static_cast<std::size_t>(regions)) + 1;
    goal_region.push_back(region);
    c.uav_cost.search_cost[j][static_cast<std::size_t>(region - 1)] = 0.0;
  }
  c.geometry = line_geometry(regions, goal_region);
  c.validate();
  return c;
}

}  // namespace searchmesh
