#include "edgetb/control/api.hpp"

#include <chrono>

#include <httplib.h>

#include "edgetb/common/error.hpp"

namespace edgetb::control {

namespace {

using Clock = std::chrono::steady_clock;

constexpr auto kStreamPoll = std::chrono::milliseconds(50);

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  if (status == 204) return;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message,
                const std::string& path = {}) {
  json body{{"error", message}};
  if (!path.empty()) body["path"] = path;
  send_json(res, status, body);
}

// Runs a command on the simulation thread and writes its result.
void dispatch(Runner& runner, httplib::Response& res, Runner::Command command) {
  const CommandResult r = runner.submit(std::move(command)).get();
  send_json(res, r.status, r.body);
}

// Maps request-validation failures to status codes.
template <typename F>
void guarded(httplib::Response& res, F&& f) {
  try {
    f();
  } catch (const json::exception& e) {
    send_error(res, 400, std::string("invalid JSON: ") + e.what());
  } catch (const ScenarioError& e) {
    send_error(res, e.unresolved() ? 404 : 400, e.what(), e.path());
  } catch (const Error& e) {
    send_error(res, 400, e.what());
  }
}

}  // namespace

Pace parse_pace(std::string_view text) {
  if (text == "REAL" || text == "real") return Pace::Real;
  if (text == "FAST" || text == "fast") return Pace::Fast;
  throw Error(Errc::InvalidArgument, "pace must be REAL or FAST");
}

// ------------------------------------------------------------------ runner

Runner::Runner(World& world, Options options) : world_(world), options_(options) {
  if (!(options_.speed > 0)) throw Error(Errc::InvalidArgument, "speed must be > 0");
  if (options_.chunk_ms <= 0) throw Error(Errc::InvalidArgument, "chunk_ms must be > 0");
  publish_snapshots();
}

Runner::~Runner() { stop(); }

void Runner::start() {
  if (thread_.joinable()) return;
  thread_ = std::thread([this] { loop(); });
}

void Runner::stop() {
  stop_ = true;
  queue_cv_.notify_all();
  if (thread_.joinable()) thread_.join();
  // Commands nobody will run.
  std::lock_guard lock(queue_mutex_);
  for (auto& [_, promise] : queue_) promise.set_value({503, {{"error", "runner stopped"}}});
  queue_.clear();
}

void Runner::wait() {
  std::unique_lock lock(done_mutex_);
  done_cv_.wait(lock, [this] { return done_.load() || stop_.load(); });
}

std::future<CommandResult> Runner::submit(Command command) {
  std::promise<CommandResult> promise;
  auto future = promise.get_future();
  {
    std::lock_guard lock(queue_mutex_);
    if (stop_) {
      promise.set_value({503, {{"error", "runner stopped"}}});
      return future;
    }
    queue_.emplace_back(std::move(command), std::move(promise));
  }
  queue_cv_.notify_all();
  return future;
}

void Runner::drain() {
  std::deque<std::pair<Command, std::promise<CommandResult>>> batch;
  {
    std::lock_guard lock(queue_mutex_);
    batch.swap(queue_);
  }
  if (batch.empty()) return;
  for (auto& [command, promise] : batch) {
    if (world_.finished()) {
      promise.set_value({409, {{"error", "run finished"}}});
      continue;
    }
    try {
      promise.set_value(command(world_));
    } catch (const ScenarioError& e) {
      promise.set_value({e.unresolved() ? 404 : 400, {{"error", e.what()}, {"path", e.path()}}});
    } catch (const std::exception& e) {
      promise.set_value({400, {{"error", e.what()}}});
    }
  }
  publish_snapshots();
}

void Runner::publish_snapshots() {
  std::string t = world_.topology().dump();
  std::string q = world_.queues().dump();
  std::string p = world_.placements().dump();
  std::lock_guard lock(snapshot_mutex_);
  topology_ = std::move(t);
  queues_ = std::move(q);
  placements_ = std::move(p);
}

void Runner::loop() {
  const auto wall_start = Clock::now();
  const SimTime sim_start = world_.now();
  auto wait_for_work = [this](Clock::duration d) {
    std::unique_lock lock(queue_mutex_);
    queue_cv_.wait_for(lock, d, [this] { return stop_.load() || !queue_.empty(); });
  };

  while (!stop_) {
    drain();
    if (world_.now() >= world_.duration()) {
      if (!world_.finished()) {
        world_.finish();
        publish_snapshots();
      }
      {
        std::lock_guard lock(done_mutex_);
        done_ = true;
      }
      done_cv_.notify_all();
      if (!options_.hold_at_end) break;
      wait_for_work(std::chrono::milliseconds(100));
      continue;
    }
    SimTime target = std::min(world_.now() + options_.chunk_ms, world_.duration());
    if (options_.pace == Pace::Real) {
      const double wall_ms =
          std::chrono::duration<double, std::milli>(Clock::now() - wall_start).count();
      const auto allowed = sim_start + static_cast<SimTime>(wall_ms * options_.speed);
      if (allowed < target) {
        const double behind = static_cast<double>(target - allowed) / options_.speed;
        wait_for_work(std::chrono::microseconds(static_cast<std::int64_t>(behind * 1000.0)));
        continue;
      }
    }
    world_.run_until(target);
    publish_snapshots();
  }
  std::lock_guard lock(done_mutex_);
  done_cv_.notify_all();
}

std::string Runner::topology() const {
  std::lock_guard lock(snapshot_mutex_);
  return topology_;
}

std::string Runner::queues() const {
  std::lock_guard lock(snapshot_mutex_);
  return queues_;
}

std::string Runner::placements() const {
  std::lock_guard lock(snapshot_mutex_);
  return placements_;
}

// ------------------------------------------------------------------ server

ControlServer::ControlServer(Runner& runner)
    : runner_(runner), server_(std::make_unique<httplib::Server>()) {
  routes();
}

ControlServer::~ControlServer() { stop(); }

int ControlServer::start(const std::string& host, int port) {
  port_ = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (port_ < 0) throw Error(Errc::InvalidArgument, "cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port_;
}

void ControlServer::stop() {
  stopping_ = true;
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

void ControlServer::routes() {
  auto snapshot = [](std::string (Runner::*get)() const, Runner& r) {
    return [get, &r](const httplib::Request&, httplib::Response& res) {
      res.set_content((r.*get)(), "application/json");
    };
  };
  server_->Get("/api/topology", snapshot(&Runner::topology, runner_));
  server_->Get("/api/queues", snapshot(&Runner::queues, runner_));
  server_->Get("/api/placements", snapshot(&Runner::placements, runner_));

  server_->Post("/api/pipelines", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = json::parse(req.body);
      const orch::PipelineSpec spec = pipeline_from_json(body, "");
      const std::string deploy = body.value("deploy", std::string("placed"));
      if (deploy != "placed" && deploy != "redundant") {
        throw ScenarioError("/deploy", "must be placed or redundant");
      }
      dispatch(runner_, res, [spec, deploy](World& w) {
        return w.request_pipeline(spec, deploy, "api");
      });
    });
  });

  server_->Post("/api/events", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = json::parse(req.body);
      dispatch(runner_, res, [body](World& w) {
        const TimedEvent ev = parse_event(body, w.scenario(), "", false);
        return w.apply(ev, "api");
      });
    });
  });

  server_->Post("/api/posture", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      json body = json::parse(req.body);
      if (!body.is_object()) throw ScenarioError("", "expected an object");
      body["type"] = "posture";
      dispatch(runner_, res, [body](World& w) {
        const TimedEvent ev = parse_event(body, w.scenario(), "", false);
        return w.apply(ev, "api");
      });
    });
  });

  server_->Get("/api/stream", [this](const httplib::Request& req, httplib::Response& res) {
    std::size_t from = 0;
    if (req.has_param("from")) from = std::stoull(req.get_param_value("from"));
    auto cursor = std::make_shared<std::size_t>(from);
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider(
        "text/event-stream", [this, cursor](std::size_t, httplib::DataSink& sink) {
          if (stopping_) return false;
          const auto lines = runner_.log().lines_since(*cursor);
          for (const auto& line : lines) {
            const std::string chunk = "id: " + std::to_string(*cursor) + "\ndata: " + line + "\n\n";
            if (!sink.write(chunk.data(), chunk.size())) return false;
            ++*cursor;
          }
          if (lines.empty()) {
            if (runner_.done()) {
              sink.done();
              return true;
            }
            std::this_thread::sleep_for(kStreamPoll);
          }
          return true;
        });
  });
}

}  // namespace edgetb::control
