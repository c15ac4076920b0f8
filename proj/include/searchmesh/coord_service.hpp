#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "searchmesh/mission_sim.hpp"

namespace searchmesh::service {

inline constexpr int kSchemaVersion = 1;

/// Reply to one operator command. Serialized as
/// {"v":1,"type":"ack","accepted":bool,"effectiveEpoch":int,"reason":str?}.
struct Ack {
  bool accepted = false;
  int effective_epoch = 0;
  std::string reason;

  std::string json() const;
};

/// Base-station state machine around one simulator. Not thread-safe: the
/// service drives it from a single executor, which serializes commands from
/// every producer.
class MissionControl {
 public:
  /// `scenario_dir` resolves reset commands that name a scenario.
  MissionControl(const sim::Policies& policies, sim::MissionScenario scenario,
                 std::filesystem::path scenario_dir = {});

  /// Parses and applies one Command message {"v":1,"kind":...,"args":{...}}.
  /// World changes are queued for the next epoch boundary. Commands that
  /// change nothing observable (rejections, stepOnce) produce no refresh.
  Ack handle(std::string_view command_json);

  /// Runs one epoch when running and not finished; returns its telemetry.
  std::optional<std::string> tick();

  /// Latest telemetry message, or a status message before the first epoch.
  std::string latest() const;
  /// {"v":1,"type":"status",...}: epoch, paused, finished, pending commands.
  std::string status() const;

  bool paused() const { return paused_; }
  bool finished() const { return sim_->finished(); }
  int epoch() const { return sim_->epoch(); }
  const sim::Simulator& simulator() const { return *sim_; }

  /// Called with every message that must reach subscribers: one telemetry
  /// per epoch plus refreshes after accepted commands.
  std::function<void(const std::string&)> on_broadcast;

 private:
  std::optional<std::string> step_now();
  void reset(sim::MissionScenario scenario);
  void broadcast(const std::string& msg) {
    if (on_broadcast) on_broadcast(msg);
  }

  const sim::Policies& policies_;
  std::filesystem::path scenario_dir_;
  std::unique_ptr<sim::Simulator> sim_;
  bool paused_ = false;
  int pending_ = 0;
  std::string last_;
};

struct ServiceOptions {
  std::string address = "127.0.0.1";
  /// 0 picks a free port.
  std::uint16_t port = 8080;
  /// Wall-clock length of one epoch while running.
  int tick_ms = 1000;
  bool start_paused = false;
};

/// HTTP + WebSocket boundary. POST /command takes a Command and answers with
/// an Ack; GET /telemetry upgrades to a WebSocket that receives every
/// broadcast (slow subscribers are dropped to the latest message);
/// GET /status and GET /health answer plain JSON.
class CoordService {
 public:
  CoordService(const sim::Policies& policies, sim::MissionScenario scenario, ServiceOptions options,
               std::filesystem::path scenario_dir = {});
  ~CoordService();

  CoordService(const CoordService&) = delete;
  CoordService& operator=(const CoordService&) = delete;

  /// Port actually bound.
  std::uint16_t port() const;
  /// Serves on the calling thread until stop().
  void run();
  /// Thread-safe.
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace searchmesh::service
