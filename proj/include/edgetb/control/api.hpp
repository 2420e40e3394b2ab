#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <functional>
#include <future>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "edgetb/control/world.hpp"

namespace httplib {
class Server;
}

namespace edgetb::control {

enum class Pace { Real, Fast };

Pace parse_pace(std::string_view text);

// Owns the simulation thread. Everything that touches the World runs on that
// thread: chunks of simulated time and queued commands, which are applied
// between chunks. Readers get JSON snapshots republished after each chunk.
class Runner {
 public:
  using Command = std::function<CommandResult(World&)>;

  struct Options {
    Pace pace = Pace::Real;
    double speed = 1.0;      // sim ms per wall ms when pacing
    SimTime chunk_ms = 50;   // sim time advanced between command drains
    bool hold_at_end = true; // keep the thread alive for reads after the run
  };

  Runner(World& world, Options options);
  ~Runner();
  Runner(const Runner&) = delete;
  Runner& operator=(const Runner&) = delete;

  void start();
  // Stops the thread; the run is finished if it was not already.
  void stop();
  // Blocks until the world reaches its duration.
  void wait();
  bool done() const { return done_; }

  std::future<CommandResult> submit(Command command);

  std::string topology() const;
  std::string queues() const;
  std::string placements() const;
  const EventLog& log() const { return world_.log(); }

 private:
  void loop();
  void drain();
  void publish_snapshots();

  World& world_;
  Options options_;
  std::thread thread_;
  std::atomic<bool> stop_{false};
  std::atomic<bool> done_{false};

  std::mutex queue_mutex_;
  std::condition_variable queue_cv_;
  std::deque<std::pair<Command, std::promise<CommandResult>>> queue_;

  mutable std::mutex snapshot_mutex_;
  std::string topology_, queues_, placements_;
  std::mutex done_mutex_;
  std::condition_variable done_cv_;
};

// HTTP front end for a Runner. Serves /api/* on its own threads; mutations
// go through Runner::submit.
class ControlServer {
 public:
  explicit ControlServer(Runner& runner);
  ~ControlServer();

  // Binds and starts serving in a background thread. Port 0 picks a free port.
  int start(const std::string& host, int port);
  void stop();
  int port() const { return port_; }

 private:
  void routes();

  Runner& runner_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<bool> stopping_{false};
};

}  // namespace edgetb::control
