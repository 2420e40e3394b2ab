// edgetb: run, validate and inspect testbed scenarios.

#include <csignal>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "edgetb/control/api.hpp"
#include "edgetb/control/metrics.hpp"
#include "edgetb/control/scenario.hpp"
#include "edgetb/control/world.hpp"
#include "edgetb/gateway/codec.hpp"

namespace {

using namespace edgetb;

volatile std::sig_atomic_t g_interrupted = 0;

std::pair<std::string, int> split_address(const std::string& address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos) throw CLI::ValidationError("--serve", "expected HOST:PORT");
  return {address.substr(0, colon), std::stoi(address.substr(colon + 1))};
}

int cmd_validate(const std::string& path) {
  try {
    const auto s = control::load_scenario_file(path);
    std::cout << "ok: " << (s.name.empty() ? path : s.name) << " (" << s.nodes.size()
              << " nodes, " << s.links.size() << " links, " << s.pipelines.size()
              << " pipelines, " << s.events.size() << " events)\n";
    return 0;
  } catch (const control::ScenarioError& e) {
    std::cerr << "invalid: " << e.path() << ": " << e.what() << "\n";
  } catch (const Error& e) {
    std::cerr << "invalid: " << e.what() << "\n";
  }
  return 1;
}

struct RunArgs {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::optional<SimTime> duration;
  std::string out;
  std::string serve;
  std::string pace;
  double speed = 1.0;
  bool no_rebalance = false;
  bool hold = false;
};

int cmd_run(const RunArgs& a) {
  control::Scenario scenario;
  try {
    scenario = control::load_scenario_file(a.scenario);
  } catch (const Error& e) {
    std::cerr << "invalid scenario: " << e.what() << "\n";
    return 1;
  }

  // Log goes to --out; without it the log is stdout and the summary stderr.
  std::ofstream file;
  std::ostream* log_out = &std::cout;
  std::ostream* summary_out = &std::cerr;
  if (!a.out.empty()) {
    file.open(a.out, std::ios::binary | std::ios::trunc);
    if (!file) {
      std::cerr << "cannot open " << a.out << "\n";
      return 1;
    }
    log_out = &file;
    summary_out = &std::cout;
  }

  control::RunOptions options;
  options.seed = a.seed;
  options.duration_ms = a.duration;
  if (a.no_rebalance) options.rebalance = false;
  options.log_out = log_out;
  control::World world(std::move(scenario), options);

  const bool serving = !a.serve.empty();
  const control::Pace pace =
      a.pace.empty() ? (serving ? control::Pace::Real : control::Pace::Fast) : control::parse_pace(a.pace);

  if (!serving && pace == control::Pace::Fast) {
    world.run();
  } else {
    control::Runner::Options ro;
    ro.pace = pace;
    ro.speed = a.speed;
    control::Runner runner(world, ro);
    std::optional<control::ControlServer> server;
    if (serving) {
      const auto [host, port] = split_address(a.serve);
      server.emplace(runner);
      const int bound = server->start(host, port);
      std::cerr << "control API on http://" << host << ":" << bound << "/api\n";
    }
    std::signal(SIGINT, [](int) { g_interrupted = 1; });
    runner.start();
    while (!runner.done() && !g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(50));
    while (a.hold && serving && !g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    if (server) server->stop();
    runner.stop();
  }
  log_out->flush();
  *summary_out << control::reduce_metrics(world.log().records()).dump(2) << "\n";
  std::cerr << "log sha256 " << world.log().content_hash() << "\n";
  return 0;
}

int cmd_translate(const std::string& from, const std::string& to) {
  const gateway::CodecRegistry registry;
  std::cin >> std::noskipws;
  const std::string input{std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>()};
  try {
    const Bytes in(input.begin(), input.end());
    const auto r = gateway::translate_stream(registry, in, from, to);
    std::cout.write(reinterpret_cast<const char*>(r.output.data()),
                    static_cast<std::streamsize>(r.output.size()));
    std::cout.flush();
    std::cerr << r.messages << " messages\n";
    return 0;
  } catch (const Error& e) {
    std::cerr << "translate: " << e.what() << "\n";
    return 1;
  }
}

int cmd_metrics(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "cannot open " << path << "\n";
    return 1;
  }
  try {
    std::cout << control::reduce_metrics(in).dump(2) << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "metrics: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  std::ios::sync_with_stdio(false);
  CLI::App app{"edge testbed: deterministic simulation of tactical edge deployments"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "run a scenario");
  run_cmd->add_option("scenario", run.scenario, "scenario JSON")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--seed", run.seed, "override the scenario seed");
  run_cmd->add_option("--duration", run.duration, "override duration_ms")->check(CLI::PositiveNumber);
  run_cmd->add_option("--out", run.out, "event log path (JSON lines)");
  run_cmd->add_option("--serve", run.serve, "serve the control API on HOST:PORT");
  run_cmd->add_option("--pace", run.pace, "REAL or FAST")->check(CLI::IsMember({"REAL", "FAST", "real", "fast"}));
  run_cmd->add_option("--speed", run.speed, "sim ms per wall ms under REAL pacing")->check(CLI::PositiveNumber);
  run_cmd->add_flag("--no-rebalance", run.no_rebalance, "disable queue-based rebalancing");
  run_cmd->add_flag("--hold", run.hold, "keep serving after the run ends (Ctrl-C to exit)");

  std::string validate_path;
  auto* validate_cmd = app.add_subcommand("validate", "check a scenario file");
  validate_cmd->add_option("scenario", validate_path)->required();

  std::string from, to;
  auto* translate_cmd = app.add_subcommand("translate", "gateway filter, stdin to stdout");
  translate_cmd->add_option("--from", from, "source codec id")->required();
  translate_cmd->add_option("--to", to, "target codec id")->required();

  std::string metrics_path;
  auto* metrics_cmd = app.add_subcommand("metrics", "summarize an event log");
  metrics_cmd->add_option("events", metrics_path, "events.jsonl")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return cmd_run(run);
    if (*validate_cmd) return cmd_validate(validate_path);
    if (*translate_cmd) return cmd_translate(from, to);
    if (*metrics_cmd) return cmd_metrics(metrics_path);
  } catch (const std::exception& e) {
    std::cerr << "edgetb: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
