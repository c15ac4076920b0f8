#include "searchmesh/coord_service.hpp"

#include <boost/asio.hpp>
#include <boost/beast.hpp>
#include <boost/beast/websocket.hpp>
#include <chrono>
#include <nlohmann/json.hpp>
#include <set>
#include <spdlog/spdlog.h>

#include "searchmesh/error.hpp"

namespace searchmesh::service {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using nlohmann::json;

std::string Ack::json() const {
  nlohmann::json j{{"v", kSchemaVersion}, {"type", "ack"}, {"accepted", accepted}, {"effectiveEpoch", effective_epoch}};
  if (!reason.empty()) j["reason"] = reason;
  return j.dump();
}

MissionControl::MissionControl(const sim::Policies& policies, sim::MissionScenario scenario,
                               std::filesystem::path scenario_dir)
    : policies_(policies), scenario_dir_(std::move(scenario_dir)) {
  reset(std::move(scenario));
}

void MissionControl::reset(sim::MissionScenario scenario) {
  sim_ = std::make_unique<sim::Simulator>(policies_, std::move(scenario));
  pending_ = 0;
  last_.clear();
}

std::string MissionControl::status() const {
  return json{{"v", kSchemaVersion},
              {"type", "status"},
              {"scenario", sim_->scenario().name},
              {"epoch", sim_->epoch()},
              {"paused", paused_},
              {"finished", sim_->finished()},
              {"pendingCommands", pending_}}
      .dump();
}

std::string MissionControl::latest() const { return last_.empty() ? status() : last_; }

std::optional<std::string> MissionControl::step_now() {
  if (sim_->finished()) return std::nullopt;
  const auto& rec = sim_->step();
  pending_ = 0;
  last_ = sim::telemetry_json(rec, sim_->scenario().name);
  broadcast(last_);
  return last_;
}

std::optional<std::string> MissionControl::tick() {
  if (paused_) return std::nullopt;
  return step_now();
}

Ack MissionControl::handle(std::string_view command_json) {
  Ack ack;
  ack.effective_epoch = sim_->epoch();
  json cmd;
  try {
    cmd = json::parse(command_json);
  } catch (const json::parse_error&) {
    ack.reason = "command is not valid JSON";
    return ack;
  }
  if (!cmd.is_object() || !cmd.contains("v") || cmd["v"] != kSchemaVersion) {
    ack.reason = "unsupported schema version";
    return ack;
  }
  if (!cmd.contains("kind") || !cmd["kind"].is_string()) {
    ack.reason = "command needs a kind";
    return ack;
  }
  const std::string kind = cmd["kind"];
  const json args = cmd.value("args", json::object());
  if (!args.is_object()) {
    ack.reason = "args must be an object";
    return ack;
  }
  auto int_arg = [&](const char* name) -> std::optional<int> {
    if (!args.contains(name) || !args[name].is_number_integer()) return std::nullopt;
    return args[name].get<int>();
  };
  try {
    if (kind == "setGoalPriority" || kind == "injectFault" || kind == "setSoc") {
      sim::WorldEvent e;
      if (kind == "setGoalPriority") {
        const auto goal = int_arg("goal");
        const auto level = int_arg("level");
        if (!goal || !level) throw StructuralError("setGoalPriority needs integer goal and level");
        e = {sim::WorldEvent::Kind::priority, *goal, static_cast<double>(*level)};
      } else if (kind == "injectFault") {
        const auto uav = int_arg("uav");
        const auto fault = int_arg("fault");
        if (!uav || !fault) throw StructuralError("injectFault needs integer uav and fault");
        e = {sim::WorldEvent::Kind::fault, *uav, static_cast<double>(*fault)};
      } else {
        const auto uav = int_arg("uav");
        if (!uav || !args.contains("soc") || !args["soc"].is_number())
          throw StructuralError("setSoc needs integer uav and numeric soc");
        e = {sim::WorldEvent::Kind::soc, *uav, args["soc"].get<double>()};
      }
      if (sim_->epoch() >= sim_->scenario().epoch_limit) throw StructuralError("mission reached its epoch limit");
      ack.effective_epoch = sim_->queue_event(e);
      ++pending_;
      ack.accepted = true;
      broadcast(status());
    } else if (kind == "pause" || kind == "resume") {
      paused_ = kind == "pause";
      ack.accepted = true;
      broadcast(status());
    } else if (kind == "stepOnce") {
      if (sim_->finished()) throw StructuralError("mission is finished");
      ack.effective_epoch = sim_->epoch();
      step_now();
      ack.accepted = true;
    } else if (kind == "reset") {
      sim::MissionScenario next;
      if (args.contains("toml") && args["toml"].is_string()) {
        next = sim::parse_scenario(args["toml"].get<std::string>());
      } else if (args.contains("scenario") && args["scenario"].is_string()) {
        const std::string name = args["scenario"];
        if (name.empty() || name.find_first_of("/\\") != std::string::npos || name.find("..") != std::string::npos)
          throw StructuralError("scenario must be a plain name");
        next = sim::load_scenario(scenario_dir_ / (name + ".toml"));
      } else {
        next = sim_->scenario();
      }
      next.validate(policies_.config);
      reset(std::move(next));
      ack.effective_epoch = 0;
      ack.accepted = true;
      broadcast(status());
    } else {
      ack.reason = "unknown command kind '" + kind + "'";
    }
  } catch (const StructuralError& e) {
    ack.accepted = false;
    ack.reason = e.what();
  }
  return ack;
}

namespace {

class WsSession;

/// Subscribers of the telemetry channel; touched only on the executor.
struct Hub {
  std::set<std::shared_ptr<WsSession>> sessions;
  void broadcast(const std::string& msg);
};

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket socket, Hub& hub) : ws_(std::move(socket)), hub_(hub) {}

  void start(http::request<http::string_body> req, std::string first) {
    ws_.text(true);
    ws_.async_accept(req, [self = shared_from_this(), first = std::move(first)](beast::error_code ec) {
      if (ec) return;
      self->hub_.sessions.insert(self);
      self->send(first);
      self->read();
    });
  }

  /// Keeps at most one message waiting behind the one in flight.
  void send(const std::string& msg) {
    if (writing_) {
      waiting_ = msg;
      return;
    }
    write(msg);
  }

 private:
  void write(std::string msg) {
    writing_ = true;
    out_ = std::move(msg);
    ws_.async_write(asio::buffer(out_), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->writing_ = false;
      if (ec) return self->close();
      if (self->waiting_) {
        auto next = std::move(*self->waiting_);
        self->waiting_.reset();
        self->write(std::move(next));
      }
    });
  }

  void read() {
    ws_.async_read(in_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->close();
      self->in_.consume(self->in_.size());
      self->read();
    });
  }

  void close() { hub_.sessions.erase(shared_from_this()); }

  websocket::stream<beast::tcp_stream> ws_;
  Hub& hub_;
  beast::flat_buffer in_;
  std::string out_;
  std::optional<std::string> waiting_;
  bool writing_ = false;
};

void Hub::broadcast(const std::string& msg) {
  const auto snapshot = sessions;
  for (const auto& s : snapshot) s->send(msg);
}

http::response<http::string_body> reply(const http::request<http::string_body>& req, http::status status,
                                         std::string body) {
  http::response<http::string_body> res{status, req.version()};
  res.set(http::field::content_type, "application/json");
  res.set(http::field::access_control_allow_origin, "*");
  res.keep_alive(req.keep_alive());
  res.body() = std::move(body);
  res.prepare_payload();
  return res;
}

}  // namespace

struct CoordService::Impl {
  Impl(const sim::Policies& policies, sim::MissionScenario scenario, ServiceOptions opts,
       std::filesystem::path scenario_dir)
      : options(opts),
        control(policies, std::move(scenario), std::move(scenario_dir)),
        acceptor(io),
        timer(io) {
    control.on_broadcast = [this](const std::string& msg) { hub.broadcast(msg); };
    if (options.start_paused) control.handle(R"({"v":1,"kind":"pause"})");
    const tcp::endpoint ep{asio::ip::make_address(options.address), options.port};
    acceptor.open(ep.protocol());
    acceptor.set_option(asio::socket_base::reuse_address(true));
    acceptor.bind(ep);
    acceptor.listen();
  }

  void accept() {
    acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
      if (!ec) serve_http(std::make_shared<Connection>(std::move(socket)));
      if (acceptor.is_open()) accept();
    });
  }

  struct Connection {
    explicit Connection(tcp::socket s) : stream(std::move(s)) {}
    beast::tcp_stream stream;
    beast::flat_buffer buffer;
    http::request<http::string_body> req;
    std::shared_ptr<http::response<http::string_body>> res;
  };

  void serve_http(std::shared_ptr<Connection> c) {
    c->req = {};
    c->stream.expires_after(std::chrono::seconds(30));
    http::async_read(c->stream, c->buffer, c->req, [this, c](beast::error_code ec, std::size_t) {
      if (ec) return;
      auto& req = c->req;
      if (websocket::is_upgrade(req)) {
        if (req.target() != "/telemetry") return;
        c->stream.expires_never();
        std::make_shared<WsSession>(c->stream.release_socket(), hub)->start(std::move(req), control.latest());
        return;
      }
      http::response<http::string_body> res;
      if (req.method() == http::verb::post && req.target() == "/command") {
        const auto ack = control.handle(req.body());
        spdlog::info("command {} -> {}", req.body(), ack.json());
        res = reply(req, ack.accepted ? http::status::ok : http::status::bad_request, ack.json());
      } else if (req.method() == http::verb::get && req.target() == "/status") {
        res = reply(req, http::status::ok, control.status());
      } else if (req.method() == http::verb::get && req.target() == "/telemetry/latest") {
        res = reply(req, http::status::ok, control.latest());
      } else if (req.method() == http::verb::get && req.target() == "/health") {
        res = reply(req, http::status::ok, json{{"v", kSchemaVersion}, {"status", "ok"}}.dump());
      } else {
        res = reply(req, http::status::not_found,
                    json{{"v", kSchemaVersion}, {"error", "no route " + std::string(req.target())}}.dump());
      }
      c->res = std::make_shared<http::response<http::string_body>>(std::move(res));
      http::async_write(c->stream, *c->res, [this, c](beast::error_code wec, std::size_t) {
        if (wec) return;
        if (!c->res->keep_alive()) {
          beast::error_code ignored;
          c->stream.socket().shutdown(tcp::socket::shutdown_send, ignored);
          return;
        }
        serve_http(c);
      });
    });
  }

  void schedule() {
    timer.expires_after(std::chrono::milliseconds(options.tick_ms));
    timer.async_wait([this](beast::error_code ec) {
      if (ec) return;
      try {
        control.tick();
      } catch (const std::exception& e) {
        spdlog::error("epoch failed: {}", e.what());
      }
      schedule();
    });
  }

  ServiceOptions options;
  asio::io_context io{1};
  MissionControl control;
  Hub hub;
  tcp::acceptor acceptor;
  asio::steady_timer timer;
};

CoordService::CoordService(const sim::Policies& policies, sim::MissionScenario scenario, ServiceOptions options,
                           std::filesystem::path scenario_dir)
    : impl_(std::make_unique<Impl>(policies, std::move(scenario), options, std::move(scenario_dir))) {}

CoordService::~CoordService() = default;

std::uint16_t CoordService::port() const { return impl_->acceptor.local_endpoint().port(); }

void CoordService::run() {
  impl_->accept();
  impl_->schedule();
  spdlog::info("coordination service on {}:{}", impl_->options.address, port());
  impl_->io.run();
}

void CoordService::stop() { impl_->io.stop(); }

}  // namespace searchmesh::service
