#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "searchmesh/config.hpp"
#include "searchmesh/coord_service.hpp"
#include "searchmesh/error.hpp"
#include "searchmesh/fleet_assigner.hpp"
#include "searchmesh/mission_sim.hpp"
#include "searchmesh/policy_analytics.hpp"
#include "searchmesh/snapshot.hpp"
#include "searchmesh/uav_bidder.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace searchmesh;

namespace {

struct Common {
  std::string config = "config/case_study.toml";
  std::string out = "out";
  std::string snapshots;
  unsigned workers = 1;
  std::optional<std::uint64_t> seed;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void configure_logging() {
  const char* env = std::getenv("SEARCHMESH_LOG");
  spdlog::set_level(env ? spdlog::level::from_str(env) : spdlog::level::info);
  spdlog::set_pattern("[%H:%M:%S.%e] %^%l%$ %v");
}

MissionConfig read_config(const std::string& path) {
  auto c = load_config(path);
  spdlog::info("config {} (hash {:016x})", path, c.hash);
  return c;
}

/// Records every artifact with its digest next to the run metadata.
class Manifest {
 public:
  Manifest(std::string command, const Common& common) : start_(std::chrono::steady_clock::now()) {
    doc_["command"] = std::move(command);
    doc_["config"] = common.config;
    doc_["out"] = common.out;
    if (common.seed) doc_["seed"] = *common.seed;
    doc_["artifacts"] = json::array();
  }
  json& operator[](const std::string& key) { return doc_[key]; }
  void artifact(const fs::path& path) {
    doc_["artifacts"].push_back({{"path", path.string()}, {"fnv1a", file_digest(path)}});
  }
  void write(const fs::path& dir) {
    doc_["seconds"] = seconds_since(start_);
    const auto path = dir / "manifest.json";
    std::ofstream(path) << doc_.dump(2) << '\n';
    spdlog::info("manifest {}", path.string());
  }

 private:
  json doc_;
  std::chrono::steady_clock::time_point start_;
};

void write_text(const fs::path& path, const std::string& text, Manifest& manifest) {
  std::ofstream out(path);
  if (!out) throw StructuralError("cannot write " + path.string());
  out << text;
  out.close();
  manifest.artifact(path);
}

struct SolveResult {
  PolicySnapshot snapshot;
  std::vector<double> residuals;
};

SolveResult solve_level(const std::string& kind, const mdp::MdpModel& model, const MissionConfig& config,
                        double eta, unsigned workers, std::size_t max_sweeps) {
  mdp::SolveOptions opt;
  opt.eta = eta;
  opt.workers = workers;
  opt.max_sweeps = max_sweeps;
  opt.progress = [&](std::size_t sweep, double residual) {
    if (sweep % 50 == 0) spdlog::debug("{} sweep {} residual {:.3e}", kind, sweep, residual);
  };
  const auto t0 = std::chrono::steady_clock::now();
  auto v = mdp::solve(model, opt);
  spdlog::info("{}: {} sweeps, residual {:.3e}, {} in {:.1f}s", kind, v.sweeps, v.residual,
               v.converged ? "converged" : "NOT converged", seconds_since(t0));
  SolveResult r;
  r.snapshot.kind = kind;
  r.snapshot.state_count = model.state_count();
  r.snapshot.action_count = static_cast<std::uint32_t>(model.action_count());
  r.snapshot.gamma = model.gamma();
  r.snapshot.eta = eta;
  r.snapshot.sweeps = v.sweeps;
  r.snapshot.residual = v.residual;
  r.snapshot.converged = v.converged;
  r.snapshot.config_hash = config.hash;
  r.snapshot.policy = mdp::extract_policy(model, v.values);
  r.snapshot.values = std::move(v.values);
  r.residuals = std::move(v.residual_history);
  return r;
}

int cmd_solve(const Common& common, double eta, std::size_t max_sweeps) {
  const auto config = read_config(common.config);
  const fs::path out = common.out;
  fs::create_directories(out);
  Manifest manifest("solve", common);
  manifest["eta"] = eta;
  bool converged = true;
  std::ofstream log(out / "convergence.csv");
  log << "level,sweep,residual\n";
  log.precision(17);
  for (const std::string kind : {"uav", "fleet"}) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto model = kind == "uav" ? uav::build_uav_mdp(config, common.workers)
                                     : fleet::build_fleet_mdp(config, common.workers);
    spdlog::info("{} model: {} states, {} actions, {} transitions, built in {:.1f}s", kind, model.state_count(),
                 model.action_count(), model.transition_count(), seconds_since(t0));
    const auto r = solve_level(kind, model, config, eta, common.workers, max_sweeps);
    for (std::size_t i = 0; i < r.residuals.size(); ++i) log << kind << ',' << i + 1 << ',' << r.residuals[i] << '\n';
    const auto path = out / (kind + ".snap");
    write_snapshot(r.snapshot, path);
    manifest.artifact(path);
    manifest[kind] = {{"states", model.state_count()},
                      {"actions", model.action_count()},
                      {"transitions", model.transition_count()},
                      {"sweeps", r.snapshot.sweeps},
                      {"residual", r.snapshot.residual},
                      {"converged", r.snapshot.converged}};
    converged = converged && r.snapshot.converged;
  }
  log.close();
  manifest.artifact(out / "convergence.csv");
  manifest["converged"] = converged;
  manifest.write(out);
  if (!converged) spdlog::error("solve did not converge within {} sweeps", max_sweeps);
  return converged ? 0 : 2;
}

fs::path snapshot_dir(const Common& common) { return common.snapshots.empty() ? fs::path(common.out) : fs::path(common.snapshots); }

sim::Policies policies_for(const Common& common, const MissionConfig& config) {
  const auto dir = snapshot_dir(common);
  for (const char* f : {"uav.snap", "fleet.snap"})
    if (!fs::exists(dir / f))
      throw StructuralError("missing snapshot " + (dir / f).string() + "; run 'searchmesh solve' first");
  spdlog::info("loading snapshots from {}", dir.string());
  return sim::load_policies(config, dir / "uav.snap", dir / "fleet.snap", common.workers);
}

int cmd_simulate(const Common& common, const std::string& scenario_path, std::size_t runs,
                 const std::string& mode) {
  const auto config = read_config(common.config);
  auto scenario = sim::load_scenario(scenario_path);
  if (common.seed) scenario.seed = *common.seed;
  if (!mode.empty()) scenario.mode = sim::parse_mode(mode);
  scenario.validate(config);
  const auto policies = policies_for(common, config);
  const fs::path out = common.out;
  fs::create_directories(out);
  Manifest manifest("simulate", common);
  manifest["scenario"] = scenario_path;
  manifest["runs"] = runs;

  const auto trace = sim::run_scenario(policies, scenario);
  std::string seq;
  for (const auto& a : trace.assignment_sequence()) seq += fleet::format_assignment(a) + " ";
  std::cout << scenario.name << " (" << sim::to_string(scenario.mode) << ", seed " << scenario.seed << "): " << seq
            << "\n  discounted cost " << trace.discounted_cost << ", completed at epoch " << trace.completion_epoch
            << '\n';
  write_text(out / (scenario.name + "_trace.csv"), sim::trace_csv(trace), manifest);
  write_text(out / (scenario.name + "_trace.jsonl"), sim::trace_jsonl(trace), manifest);
  manifest["sequence"] = trace.assignment_sequence();

  if (runs > 1) {
    const auto stats = sim::compare_baselines(
        policies, scenario,
        {sim::AssignmentRule::mdp, sim::AssignmentRule::greedy_nearest, sim::AssignmentRule::random_feasible}, runs,
        common.workers);
    std::ostringstream csv;
    csv.precision(10);
    csv << "rule,runs,mean_cost,stderr_cost,mean_latency,stderr_latency\n";
    json rows = json::array();
    for (const auto& s : stats) {
      csv << sim::to_string(s.rule) << ',' << s.runs << ',' << s.mean_cost << ',' << s.stderr_cost << ','
          << s.mean_latency << ',' << s.stderr_latency << '\n';
      std::printf("  %-15s cost %9.3f +- %7.3f   epochs %6.3f +- %5.3f\n", std::string(sim::to_string(s.rule)).c_str(),
                  s.mean_cost, s.stderr_cost, s.mean_latency, s.stderr_latency);
      rows.push_back({{"rule", sim::to_string(s.rule)}, {"mean_cost", s.mean_cost}, {"stderr_cost", s.stderr_cost}});
    }
    write_text(out / (scenario.name + "_baselines.csv"), csv.str(), manifest);
    manifest["baselines"] = rows;
  }
  manifest.write(out);
  return 0;
}

int cmd_analyze(const Common& common) {
  const auto config = read_config(common.config);
  const auto dir = snapshot_dir(common);
  const auto u = read_snapshot(dir / "uav.snap");
  const auto f = read_snapshot(dir / "fleet.snap");
  if (u.config_hash != config.hash || f.config_hash != config.hash)
    throw StructuralError("snapshots were solved for a different configuration");
  const fs::path out = common.out;
  fs::create_directories(out);
  Manifest manifest("analyze", common);

  std::vector<std::pair<std::string, analytics::PolicyTrendReport>> reports;
  reports.emplace_back("uav_trends", analytics::uav_policy_trends(config, u.policy));
  reports.emplace_back("fleet_offline_trends", analytics::offline_fleet_policy_trends(config, f.policy));
  const auto model = fleet::build_fleet_mdp(config, common.workers);
  reports.emplace_back("fleet_live_trends",
                       analytics::fleet_policy_trends(config, model, f.values, analytics::FleetDomain::bid_consistent));
  reports.emplace_back("fleet_live_trends_all",
                       analytics::fleet_policy_trends(config, model, f.values, analytics::FleetDomain::all));
  std::string text;
  for (const auto& [name, r] : reports) {
    text += r.text() + '\n';
    write_text(out / (name + ".csv"), r.csv(), manifest);
  }
  std::cout << text;
  write_text(out / "trends.txt", text, manifest);
  manifest.write(out);
  return 0;
}

int cmd_serve(const Common& common, const std::string& scenario_path, std::uint16_t port, int tick_ms,
              bool paused) {
  const auto config = read_config(common.config);
  auto scenario = sim::load_scenario(scenario_path);
  if (common.seed) scenario.seed = *common.seed;
  const auto policies = policies_for(common, config);
  service::ServiceOptions opt;
  opt.port = port;
  opt.tick_ms = tick_ms;
  opt.start_paused = paused;
  service::CoordService svc(policies, scenario, opt, fs::path(scenario_path).parent_path());
  svc.run();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"Fault-tolerant UAV task assignment: solve, simulate, analyze, serve"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "Mission configuration (TOML)")->capture_default_str();
    sub->add_option("--out", common.out, "Output directory")->capture_default_str();
    sub->add_option("--snapshots", common.snapshots, "Snapshot directory (defaults to --out)");
    sub->add_option("--workers", common.workers, "Worker threads")->capture_default_str()->check(CLI::Range(1u, 256u));
    sub->add_option("--seed", common.seed, "Master seed (overrides the scenario seed)");
  };

  double eta = 1e-6;
  std::size_t max_sweeps = 2000;
  auto* solve = app.add_subcommand("solve", "Build and solve both decision levels");
  add_common(solve);
  solve->add_option("--eta", eta, "Stopping tolerance on the sup-norm residual")->capture_default_str();
  solve->add_option("--max-sweeps", max_sweeps, "Sweep limit")->capture_default_str();

  std::string scenario;
  std::size_t runs = 1;
  std::string mode;
  auto* simulate = app.add_subcommand("simulate", "Run a scenario closed-loop");
  add_common(simulate);
  simulate->add_option("--scenario", scenario, "Scenario file (TOML)")->required();
  simulate->add_option("--runs", runs, "Monte-Carlo runs per rule (1 = single trace)")->capture_default_str();
  simulate->add_option("--mode", mode, "sampled or expected (overrides the scenario)")
      ->check(CLI::IsMember({"sampled", "expected"}));

  auto* analyze = app.add_subcommand("analyze", "Report policy trends");
  add_common(analyze);

  std::uint16_t port = 8080;
  int tick_ms = 1000;
  bool paused = false;
  auto* serve = app.add_subcommand("serve", "Run the coordination service");
  add_common(serve);
  serve->add_option("--scenario", scenario, "Scenario file (TOML)")->required();
  serve->add_option("--port", port, "TCP port")->capture_default_str();
  serve->add_option("--tick-ms", tick_ms, "Milliseconds per epoch")->capture_default_str()->check(CLI::Range(1, 3600000));
  serve->add_flag("--paused", paused, "Start paused");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*solve) return cmd_solve(common, eta, max_sweeps);
    if (*simulate) return cmd_simulate(common, scenario, runs, mode);
    if (*analyze) return cmd_analyze(common);
    if (*serve) return cmd_serve(common, scenario, port, tick_ms, paused);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 1;
}
