#include "searchmesh/mission_sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>
#include <sstream>
#include <thread>
#include <toml.hpp>

#include "searchmesh/error.hpp"
#include "searchmesh/kernels.hpp"
#include "searchmesh/snapshot.hpp"

namespace searchmesh::sim {

namespace {

constexpr int kSchemaVersion = 1;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

template <typename T>
T need(const toml::node_view<const toml::node>& node, std::string_view what) {
  auto v = node.value<T>();
  if (!v) throw StructuralError("scenario: missing or mistyped '" + std::string(what) + "'");
  return *v;
}

WorldEvent::Kind parse_kind(std::string_view s) {
  if (s == "priority") return WorldEvent::Kind::priority;
  if (s == "fault") return WorldEvent::Kind::fault;
  if (s == "soc") return WorldEvent::Kind::soc;
  throw StructuralError("scenario: unknown event kind '" + std::string(s) + "'");
}

void check_event(const WorldEvent& e, const MissionConfig& config) {
  switch (e.kind) {
    case WorldEvent::Kind::priority:
      if (e.target < 1 || e.target > config.goals) throw StructuralError("event goal out of range");
      if (e.value != 0.0 && e.value != 1.0 && e.value != 2.0) throw StructuralError("priority level must be 0, 1 or 2");
      break;
    case WorldEvent::Kind::fault:
      if (e.target < 1 || e.target > config.uavs) throw StructuralError("event UAV out of range");
      if (e.value < 1 || e.value > 18 || e.value != std::floor(e.value))
        throw StructuralError("fault index must be an integer in 1..18");
      break;
    case WorldEvent::Kind::soc:
      if (e.target < 1 || e.target > config.uavs) throw StructuralError("event UAV out of range");
      if (!(e.value >= 0.0 && e.value <= 1.0)) throw StructuralError("state of charge must lie in [0, 1]");
      break;
  }
}

double full_range(const MissionConfig& c) { return energy::flight_range(1.0, c.power); }

energy::Point2 centroid(const MissionConfig& c, int region) {
  return c.geometry.centroids.at(static_cast<std::size_t>(region - 1));
}

}  // namespace

std::string_view to_string(OutcomeMode m) { return m == OutcomeMode::expected ? "expected" : "sampled"; }

OutcomeMode parse_mode(std::string_view s) {
  if (s == "expected") return OutcomeMode::expected;
  if (s == "sampled") return OutcomeMode::sampled;
  throw StructuralError("mode must be 'sampled' or 'expected'");
}

std::string_view to_string(AssignmentRule r) {
  switch (r) {
    case AssignmentRule::mdp:
      return "mdp";
    case AssignmentRule::greedy_nearest:
      return "greedyNearest";
    case AssignmentRule::random_feasible:
      break;
  }
  return "randomFeasible";
}

void MissionScenario::validate(const MissionConfig& config) const {
  if (priority.size() != static_cast<std::size_t>(config.goals))
    throw StructuralError("scenario needs one priority per goal");
  for (int g : priority)
    if (g < 0 || g > 2) throw StructuralError("scenario priority outside 0..2");
  if (uavs.size() != static_cast<std::size_t>(config.uavs)) throw StructuralError("scenario needs one entry per UAV");
  for (const auto& u : uavs) {
    if (u.location < 1 || u.location > config.regions) throw StructuralError("UAV location outside 1..q");
    if (!(u.soc >= 0.0 && u.soc <= 1.0)) throw StructuralError("UAV state of charge outside [0, 1]");
    if (u.fault < 1 || u.fault > 18) throw StructuralError("UAV fault outside 1..18");
    if (u.commit < 0 || u.commit > config.goals) throw StructuralError("UAV commitment outside 0..k");
  }
  if (epoch_limit < 1) throw StructuralError("scenario needs at least one epoch");
  for (const auto& e : events) {
    if (e.epoch < 0) throw StructuralError("event epoch must be nonnegative");
    check_event(e.event, config);
  }
}

MissionScenario parse_scenario(std::string_view toml_text) {
  toml::table doc;
  try {
    doc = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    throw StructuralError(std::string("scenario: ") + std::string(e.description()));
  }
  const toml::table& root = doc;
  MissionScenario s;
  const auto head = root["scenario"];
  if (!head.is_table()) throw StructuralError("scenario: missing [scenario] table");
  s.name = head["name"].value_or(std::string("scenario"));
  s.seed = static_cast<std::uint64_t>(head["seed"].value_or<std::int64_t>(1));
  s.epoch_limit = static_cast<int>(head["epochs"].value_or<std::int64_t>(20));
  s.mode = parse_mode(head["mode"].value_or(std::string("sampled")));
  const auto* pri = head["priorities"].as_array();
  if (!pri) throw StructuralError("scenario: missing 'priorities'");
  for (const auto& v : *pri) {
    auto g = v.value<std::int64_t>();
    if (!g) throw StructuralError("scenario: priorities must be integers");
    s.priority.push_back(static_cast<int>(*g));
  }
  if (const auto* uavs = root["uav"].as_array()) {
    for (const auto& node : *uavs) {
      const auto* t = node.as_table();
      if (!t) throw StructuralError("scenario: [[uav]] entries must be tables");
      const toml::node_view<const toml::node> u{*t};
      UavInit init;
      init.location = static_cast<int>(need<std::int64_t>(u["location"], "uav.location"));
      init.soc = u["soc"].value_or(1.0);
      init.fault = static_cast<int>(u["fault"].value_or<std::int64_t>(1));
      init.commit = static_cast<int>(u["commit"].value_or<std::int64_t>(0));
      s.uavs.push_back(init);
    }
  }
  if (const auto* events = root["event"].as_array()) {
    for (const auto& node : *events) {
      const auto* t = node.as_table();
      if (!t) throw StructuralError("scenario: [[event]] entries must be tables");
      const toml::node_view<const toml::node> e{*t};
      ScheduledEvent ev;
      ev.epoch = static_cast<int>(need<std::int64_t>(e["epoch"], "event.epoch"));
      ev.event.kind = parse_kind(need<std::string>(e["kind"], "event.kind"));
      switch (ev.event.kind) {
        case WorldEvent::Kind::priority:
          ev.event.target = static_cast<int>(need<std::int64_t>(e["goal"], "event.goal"));
          ev.event.value = static_cast<double>(need<std::int64_t>(e["level"], "event.level"));
          break;
        case WorldEvent::Kind::fault:
          ev.event.target = static_cast<int>(need<std::int64_t>(e["uav"], "event.uav"));
          ev.event.value = static_cast<double>(need<std::int64_t>(e["fault"], "event.fault"));
          break;
        case WorldEvent::Kind::soc:
          ev.event.target = static_cast<int>(need<std::int64_t>(e["uav"], "event.uav"));
          ev.event.value = need<double>(e["soc"], "event.soc");
          break;
      }
      s.events.push_back(ev);
    }
  }
  std::stable_sort(s.events.begin(), s.events.end(),
                   [](const ScheduledEvent& a, const ScheduledEvent& b) { return a.epoch < b.epoch; });
  return s;
}

MissionScenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw StructuralError("cannot read scenario " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

Policies make_policies(const MissionConfig& config, std::vector<double> uav_values, std::vector<double> fleet_values,
                       unsigned workers) {
  Policies p{config,
             uav::UavCodec(config.goals, config.regions),
             uav::build_uav_mdp(config, workers),
             std::move(uav_values),
             fleet::FleetCodec(config.goals, config.uavs),
             fleet::build_fleet_mdp(config, workers),
             std::move(fleet_values)};
  if (p.uav_values.size() != p.uav_model.state_count() || p.fleet_values.size() != p.fleet_model.state_count())
    throw StructuralError("value vectors do not match the model sizes");
  return p;
}

Policies load_policies(const MissionConfig& config, const std::filesystem::path& uav_snapshot,
                       const std::filesystem::path& fleet_snapshot, unsigned workers) {
  auto check = [&](const PolicySnapshot& s, std::string_view kind) {
    if (s.kind != kind) throw StructuralError("snapshot kind is '" + s.kind + "', expected '" + std::string(kind) + "'");
    if (s.config_hash != config.hash)
      throw StructuralError("snapshot '" + s.kind + "' was solved for a different configuration");
  };
  auto u = read_snapshot(uav_snapshot);
  auto f = read_snapshot(fleet_snapshot);
  check(u, "uav");
  check(f, "fleet");
  return make_policies(config, std::move(u.values), std::move(f.values), workers);
}

std::vector<std::vector<int>> MissionTrace::assignment_sequence() const {
  std::vector<std::vector<int>> out;
  for (const auto& r : records) {
    out.push_back(r.logged);
    if (r.idle) break;
  }
  return out;
}

Simulator::Simulator(const Policies& policies, MissionScenario scenario, AssignmentRule rule)
    : policies_(policies), scenario_(std::move(scenario)), rule_(rule), rng_(scenario_.seed) {
  const auto& c = policies_.config;
  scenario_.validate(c);
  priority_ = scenario_.priority;
  assign_.assign(static_cast<std::size_t>(c.uavs), 0);
  for (const auto& init : scenario_.uavs) {
    UavRuntime u;
    u.location = init.location;
    u.soc = init.soc;
    u.fault = init.fault;
    u.commit = init.commit;
    uavs_.push_back(u);
  }
  trace_.scenario = scenario_.name;
  trace_.seed = scenario_.seed;
  trace_.mode = scenario_.mode;
  trace_.rule = rule_;
  trace_.completion_epoch = scenario_.epoch_limit;
}

int Simulator::queue_event(const WorldEvent& e) {
  check_event(e, policies_.config);
  queued_.push_back(e);
  return epoch_;
}

void Simulator::apply(const WorldEvent& e) {
  const auto i = static_cast<std::size_t>(e.target - 1);
  switch (e.kind) {
    case WorldEvent::Kind::priority:
      priority_[i] = static_cast<int>(e.value);
      break;
    case WorldEvent::Kind::fault:
      uavs_[i].fault = static_cast<int>(e.value);
      break;
    case WorldEvent::Kind::soc:
      uavs_[i].soc = e.value;
      break;
  }
}

bool Simulator::draw(double p) {
  if (scenario_.mode == OutcomeMode::expected) return p >= 0.5;
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < p;
}

int Simulator::draw_index(int n) {
  if (scenario_.mode == OutcomeMode::expected) return 0;
  return std::uniform_int_distribution<int>(0, n - 1)(rng_);
}

void Simulator::evolve_fault(UavRuntime& u) {
  const auto& p = policies_.config.fault;
  if (u.fault == 1) {
    if (draw(p.healthy_to_mild)) u.fault = 2 + draw_index(3);
  } else if (u.fault <= 4) {
    if (draw(p.mild_worsens)) u.fault = draw(p.worsened_to_camera) ? 10 + draw_index(9) : 5 + draw_index(5);
  } else if (u.fault <= 9) {
    if (draw(p.severe_to_camera)) u.fault = 10 + draw_index(9);
  }
}

void Simulator::refresh_sensors() {
  const auto& c = policies_.config;
  const auto goals = c.goal_assignments();
  for (auto& u : uavs_) u.reach = energy::feasibility_flags(u.soc, c.power, goals, centroid(c, u.location));
}

std::vector<int> Simulator::choose(const fleet::FleetState& state, const fleet::LiveBids& bids, EpochRecord& rec) {
  const auto& c = policies_.config;
  const auto z = static_cast<std::size_t>(c.uavs);
  std::vector<int> none(z, 0);
  auto usable = [&](std::size_t i, int goal) {
    const auto& u = uavs_[i];
    return u.available && u.reach[static_cast<std::size_t>(goal - 1)] == 1 &&
           priority_[static_cast<std::size_t>(goal - 1)] != 0;
  };
  switch (rule_) {
    case AssignmentRule::mdp: {
      const auto choice = fleet::decide_assignment(policies_.fleet_model, policies_.fleet_values,
                                                   policies_.fleet_codec, state, bids, c);
      const auto decisions = fleet::enumerate_decisions(c.goals, c.uavs);
      for (std::size_t r = 0; r < std::min<std::size_t>(3, choice.ranking.size()); ++r)
        rec.top_q.emplace_back(decisions[choice.ranking[r].action], choice.ranking[r].q);
      return choice.decision;
    }
    case AssignmentRule::greedy_nearest: {
      std::vector<int> order;
      for (int j = 1; j <= c.goals; ++j)
        if (priority_[static_cast<std::size_t>(j - 1)] != 0) order.push_back(j);
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return priority_[static_cast<std::size_t>(a - 1)] > priority_[static_cast<std::size_t>(b - 1)];
      });
      const auto goals = c.goal_assignments();
      std::vector<int> d = none;
      for (int j : order) {
        std::optional<std::size_t> best;
        double best_m = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < z; ++i) {
          if (d[i] != 0 || !usable(i, j)) continue;
          const double m =
              energy::assignment_distance(goals[static_cast<std::size_t>(j - 1)], centroid(c, uavs_[i].location)).meters;
          if (m < best_m) {
            best_m = m;
            best = i;
          }
        }
        if (best) d[*best] = j;
      }
      return d;
    }
    case AssignmentRule::random_feasible:
      break;
  }
  std::vector<std::vector<int>> feasible;
  for (const auto& d : fleet::enumerate_decisions(c.goals, c.uavs)) {
    bool ok = true;
    for (std::size_t i = 0; i < z && ok; ++i)
      if (d[i] != 0 && !usable(i, d[i])) ok = false;
    if (ok) feasible.push_back(d);
  }
  if (feasible.empty()) return none;
  return feasible[static_cast<std::size_t>(draw_index(static_cast<int>(feasible.size())))];
}

const EpochRecord& Simulator::step() {
  if (epoch_ >= scenario_.epoch_limit) throw StructuralError("mission reached its epoch limit");
  const auto& c = policies_.config;
  const int k = c.goals;
  const auto z = static_cast<std::size_t>(c.uavs);

  for (const auto& e : scenario_.events)
    if (e.epoch == epoch_) apply(e.event);
  for (const auto& e : queued_) apply(e);
  queued_.clear();
  for (auto& u : uavs_)
    if (u.commit != 0 && priority_[static_cast<std::size_t>(u.commit - 1)] == 0) u.commit = 0;
  refresh_sensors();

  EpochRecord rec;
  rec.epoch = epoch_;
  rec.priority = priority_;
  fleet::LiveBids live;
  for (auto& u : uavs_) {
    const uav::UavState st{u.fault, u.reach, priority_, u.location, u.commit};
    u.bids = uav::compute_bids(policies_.uav_model, policies_.uav_values, policies_.uav_codec.encode(st));
    if (u.activity == Activity::active) {
      const auto kind = uav::decision_of(u.bids.top, k).kind;
      if (kind == uav::DecisionKind::serv) {
        u.activity = Activity::service;
        u.busy_left = c.sim.service_epochs;
        u.commit = 0;
      } else if (kind == uav::DecisionKind::charge) {
        u.activity = Activity::charge;
        u.busy_left = c.sim.charge_epochs;
        u.commit = 0;
      }
    }
    u.available = u.activity == Activity::active;
    live.values.emplace_back(u.bids.values.begin(), u.bids.values.begin() + k);
  }

  fleet::FleetState state;
  state.priority = priority_;
  state.assign = assign_;
  for (const auto& u : uavs_) {
    state.fault.push_back(u.fault);
    state.avail.push_back(u.available ? 1 : 0);
  }
  const auto chosen = choose(state, live, rec);
  rec.cost = fleet::fleet_cost(state, chosen, fleet::rank_all(live), c.fleet_cost);
  // The decision set has no all-zero vector, so with every UAV away the
  // policy still names one; nothing is sent to a UAV that is away.
  auto decision = chosen;
  for (std::size_t i = 0; i < z; ++i)
    if (!uavs_[i].available) decision[i] = 0;
  rec.decision = decision;
  bool any_open = false;
  for (int g : decision)
    if (g != 0 && priority_[static_cast<std::size_t>(g - 1)] != 0) any_open = true;
  rec.idle = !any_open;
  rec.logged = rec.idle ? std::vector<int>(z, 0) : decision;
  for (std::size_t i = 0; i < z; ++i) {
    const auto& u = uavs_[i];
    UavRecord ur;
    ur.assignment = decision[i];
    ur.fault = u.fault;
    ur.available = u.available;
    ur.location = u.location;
    ur.soc = u.soc;
    ur.reach = u.reach;
    ur.top = uav::decision_name(u.bids.top, k);
    std::vector<std::pair<std::string, double>> ranked;
    for (std::size_t a = 0; a < u.bids.values.size(); ++a)
      if (u.bids.values[a]) ranked.emplace_back(uav::decision_name(static_cast<mdp::ActionId>(a), k), *u.bids.values[a]);
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) { return x.second > y.second; });
    ranked.resize(std::min<std::size_t>(3, ranked.size()));
    ur.top_bids = std::move(ranked);
    ur.goal_bids = live.values[i];
    rec.uavs.push_back(std::move(ur));
  }
  trace_.discounted_cost += discount_ * rec.cost;
  discount_ *= c.gamma;
  const bool all_clear = std::all_of(priority_.begin(), priority_.end(), [](int g) { return g == 0; });
  if (all_clear && trace_.completion_epoch == scenario_.epoch_limit) trace_.completion_epoch = epoch_;

  // Outcomes of this epoch land at the start of the next one.
  std::vector<bool> worked(static_cast<std::size_t>(k), false);
  std::vector<bool> achieved(static_cast<std::size_t>(k), false);
  const auto goals = c.goal_assignments();
  const double range = full_range(c);
  for (std::size_t i = 0; i < z; ++i) {
    auto& u = uavs_[i];
    if (u.activity != Activity::active) {
      if (--u.busy_left <= 0) {
        if (u.activity == Activity::service) u.fault = 1;
        u.soc = 1.0;
        u.activity = Activity::active;
      }
      continue;
    }
    const int a = decision[i];
    const bool flies = a != 0 && u.reach[static_cast<std::size_t>(a - 1)] == 1 &&
                       priority_[static_cast<std::size_t>(a - 1)] != 0;
    if (flies) {
      const auto& goal = goals[static_cast<std::size_t>(a - 1)];
      const double m = energy::assignment_distance(goal, centroid(c, u.location)).meters;
      u.soc = std::max(0.0, u.soc - c.sim.flight_soc_factor * m / range);
      u.location = c.geometry.goal_region[static_cast<std::size_t>(a - 1)];
      u.commit = a;
      worked[static_cast<std::size_t>(a - 1)] = true;
      if (draw(achievement_probability(u.fault, c.goal))) achieved[static_cast<std::size_t>(a - 1)] = true;
    } else {
      u.soc = std::max(0.0, u.soc - c.sim.idle_soc_per_epoch);
    }
    evolve_fault(u);
  }
  for (std::size_t j = 0; j < static_cast<std::size_t>(k); ++j) {
    int& g = priority_[j];
    if (achieved[j]) {
      g = 0;
    } else if (g == 0) {
      if (draw(c.goal.recurrence)) g = 1 + draw_index(2);
    } else if (!worked[j] && draw(c.goal.drift)) {
      g = 3 - g;
    }
  }
  assign_ = decision;

  ++epoch_;
  trace_.records.push_back(std::move(rec));
  settled_ = all_clear;
  return trace_.records.back();
}

bool Simulator::finished() const {
  if (epoch_ >= scenario_.epoch_limit) return true;
  if (!settled_ || !queued_.empty()) return false;
  return std::none_of(scenario_.events.begin(), scenario_.events.end(),
                      [&](const ScheduledEvent& e) { return e.epoch >= epoch_; });
}

MissionTrace run_scenario(const Policies& policies, const MissionScenario& scenario, AssignmentRule rule) {
  Simulator sim(policies, scenario, rule);
  while (!sim.finished()) sim.step();
  return sim.trace();
}

std::string trace_csv(const MissionTrace& trace) {
  std::ostringstream out;
  out.precision(10);
  out << "epoch,entity,id,variable,value\n";
  for (const auto& r : trace.records) {
    for (std::size_t j = 0; j < r.priority.size(); ++j) out << r.epoch << ",goal," << j + 1 << ",priority," << r.priority[j] << '\n';
    for (std::size_t i = 0; i < r.uavs.size(); ++i) {
      const auto& u = r.uavs[i];
      const auto id = i + 1;
      out << r.epoch << ",uav," << id << ",assignment," << r.logged[i] << '\n';
      out << r.epoch << ",uav," << id << ",fault," << u.fault << '\n';
      out << r.epoch << ",uav," << id << ",available," << (u.available ? 1 : 0) << '\n';
      out << r.epoch << ",uav," << id << ",location," << u.location << '\n';
      out << r.epoch << ",uav," << id << ",soc," << u.soc << '\n';
      out << r.epoch << ",uav," << id << ",top," << u.top << '\n';
      for (std::size_t j = 0; j < u.goal_bids.size(); ++j)
        if (u.goal_bids[j]) out << r.epoch << ",uav," << id << ",bid" << j + 1 << ',' << *u.goal_bids[j] << '\n';
    }
    out << r.epoch << ",fleet,0,cost," << r.cost << '\n';
    out << r.epoch << ",fleet,0,idle," << (r.idle ? 1 : 0) << '\n';
  }
  return out.str();
}

std::string telemetry_json(const EpochRecord& r, std::string_view scenario) {
  using nlohmann::json;
  json goals = json::array();
  for (std::size_t j = 0; j < r.priority.size(); ++j) goals.push_back({{"id", j + 1}, {"priority", r.priority[j]}});
  json uavs = json::array();
  for (std::size_t i = 0; i < r.uavs.size(); ++i) {
    const auto& u = r.uavs[i];
    json bids = json::array();
    for (const auto& b : u.goal_bids) bids.push_back(b ? json(*b) : json(nullptr));
    json top = json::array();
    for (const auto& [name, value] : u.top_bids) top.push_back({{"decision", name}, {"value", value}});
    uavs.push_back({{"id", i + 1},
                    {"assignment", r.logged[i]},
                    {"fault", u.fault},
                    {"available", u.available},
                    {"location", u.location},
                    {"soc", u.soc},
                    {"reach", u.reach},
                    {"top", u.top},
                    {"topBids", top},
                    {"goalBids", bids}});
  }
  json top_q = json::array();
  for (const auto& [d, q] : r.top_q) top_q.push_back({{"assignment", d}, {"q", q}});
  const json decision{
      {"assignment", r.logged}, {"dispatched", r.decision}, {"idle", r.idle}, {"cost", r.cost}, {"topQ", top_q}};
  const json msg{{"v", kSchemaVersion}, {"type", "telemetry"}, {"scenario", scenario}, {"epoch", r.epoch},
                 {"goals", goals},      {"uavs", uavs},         {"decision", decision}};
  return msg.dump();
}

std::string trace_jsonl(const MissionTrace& trace) {
  std::string out;
  for (const auto& r : trace.records) {
    out += telemetry_json(r, trace.scenario);
    out += '\n';
  }
  return out;
}

std::uint64_t run_seed(std::uint64_t master, std::uint64_t index) { return splitmix64(master ^ splitmix64(index)); }

std::vector<MissionTrace> monte_carlo(const Policies& policies, const MissionScenario& scenario, AssignmentRule rule,
                                      std::size_t runs, unsigned workers) {
  std::vector<MissionTrace> out(runs);
  const unsigned w = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(runs, 1))));
  auto body = [&](unsigned t) {
    for (std::size_t r = t; r < runs; r += w) {
      MissionScenario s = scenario;
      s.mode = OutcomeMode::sampled;
      s.seed = run_seed(scenario.seed, r);
      out[r] = run_scenario(policies, s, rule);
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < w; ++t) pool.emplace_back(body, t);
  body(0);
  for (auto& th : pool) th.join();
  return out;
}

std::vector<RuleStats> compare_baselines(const Policies& policies, const MissionScenario& scenario,
                                         const std::vector<AssignmentRule>& rules, std::size_t runs,
                                         unsigned workers) {
  if (runs < 2) throw StructuralError("a comparison needs at least two runs");
  std::vector<RuleStats> out;
  for (auto rule : rules) {
    const auto traces = monte_carlo(policies, scenario, rule, runs, workers);
    auto moments = [&](auto get) {
      double mean = 0.0;
      for (const auto& t : traces) mean += get(t);
      mean /= static_cast<double>(runs);
      double ss = 0.0;
      for (const auto& t : traces) ss += (get(t) - mean) * (get(t) - mean);
      const double sd = std::sqrt(ss / static_cast<double>(runs - 1));
      return std::pair{mean, sd / std::sqrt(static_cast<double>(runs))};
    };
    RuleStats s;
    s.rule = rule;
    s.runs = runs;
    std::tie(s.mean_cost, s.stderr_cost) = moments([](const MissionTrace& t) { return t.discounted_cost; });
    std::tie(s.mean_latency, s.stderr_latency) =
        moments([](const MissionTrace& t) { return static_cast<double>(t.completion_epoch); });
    out.push_back(s);
  }
  return out;
}

}  // namespace searchmesh::sim
