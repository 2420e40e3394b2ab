#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>
#include <sstream>

#include "edgetb/common/error.hpp"
#include "edgetb/control/metrics.hpp"
#include "edgetb/control/scenario.hpp"
#include "edgetb/control/world.hpp"
#include "edgetb/distrib/frame.hpp"
#include "edgetb/gateway/codec.hpp"

namespace py = pybind11;
using namespace edgetb;

namespace {

Bytes to_bytes(const py::bytes& b) {
  const std::string_view s = b;
  return Bytes(s.begin(), s.end());
}

py::bytes from_bytes(const Bytes& b) {
  return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
}

struct RunSummary {
  std::string log_hash;
  std::size_t events = 0;
  SimTime ended_at = 0;
  std::string metrics;  // JSON
};

RunSummary run(const std::string& scenario_text, std::optional<std::uint64_t> seed,
               std::optional<SimTime> duration_ms, std::optional<bool> rebalance,
               const std::string& log_path) {
  control::Scenario sc = control::load_scenario(scenario_text);
  std::ofstream out;
  control::RunOptions options{seed, duration_ms, rebalance, nullptr};
  if (!log_path.empty()) {
    out.open(log_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + log_path);
    options.log_out = &out;
  }
  RunSummary s;
  {
    py::gil_scoped_release release;
    control::World world(std::move(sc), options);
    world.run();
    s.log_hash = world.log().content_hash();
    s.events = world.log().size();
    s.ended_at = world.now();
    s.metrics = control::reduce_metrics(world.log().records()).dump();
  }
  return s;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Edge testbed core";

  // Message text starts with the error code name, e.g. "BadChecksum: ...".
  py::register_exception<Error>(m, "EdgeError", PyExc_RuntimeError);

  py::class_<distrib::Message>(m, "Message")
      .def(py::init<>())
      .def(py::init([](std::string topic, std::uint8_t priority, const py::bytes& payload) {
             distrib::Message msg;
             msg.topic = std::move(topic);
             msg.priority = priority;
             msg.payload = to_bytes(payload);
             return msg;
           }),
           py::arg("topic"), py::arg("priority") = 0, py::arg("payload") = py::bytes())
      .def_readwrite("topic", &distrib::Message::topic)
      .def_readwrite("priority", &distrib::Message::priority)
      .def_property(
          "payload", [](const distrib::Message& msg) { return from_bytes(msg.payload); },
          [](distrib::Message& msg, const py::bytes& b) { msg.payload = to_bytes(b); })
      .def_readwrite("origin", &distrib::Message::origin)
      .def_readwrite("created_at", &distrib::Message::created_at)
      .def_readwrite("seq", &distrib::Message::seq)
      .def("__eq__", [](const distrib::Message& a, const distrib::Message& b) { return a == b; })
      .def("__repr__", [](const distrib::Message& msg) {
        return "Message(topic='" + msg.topic + "', priority=" + std::to_string(msg.priority) +
               ", payload=<" + std::to_string(msg.payload.size()) + " bytes>)";
      });

  m.def("encode_frame", [](const distrib::Message& msg) { return from_bytes(distrib::encode_frame(msg)); });
  m.def("decode_frame", [](const py::bytes& b) { return distrib::decode_frame(to_bytes(b)); });

  py::class_<gateway::CodecRegistry>(m, "CodecRegistry")
      .def(py::init<>())
      .def("ids", &gateway::CodecRegistry::ids)
      .def("__contains__", &gateway::CodecRegistry::contains)
      .def("encode",
           [](const gateway::CodecRegistry& r, const std::string& id, const distrib::Message& msg) {
             return from_bytes(r.get(id).encode(msg));
           })
      .def("decode",
           [](const gateway::CodecRegistry& r, const std::string& id, const py::bytes& b) {
             return r.get(id).decode(to_bytes(b));
           })
      .def("translate",
           [](const gateway::CodecRegistry& r, const py::bytes& b, const std::string& from,
              const std::string& to) { return from_bytes(gateway::translate(r, to_bytes(b), from, to)); })
      .def("translate_stream",
           [](const gateway::CodecRegistry& r, const py::bytes& b, const std::string& from,
              const std::string& to) {
             const auto res = gateway::translate_stream(r, to_bytes(b), from, to);
             return py::make_tuple(from_bytes(res.output), res.messages);
           });

  py::class_<RunSummary>(m, "RunSummary")
      .def_readonly("log_hash", &RunSummary::log_hash)
      .def_readonly("events", &RunSummary::events)
      .def_readonly("ended_at", &RunSummary::ended_at)
      .def_readonly("metrics_json", &RunSummary::metrics);

  m.def("validate_scenario", [](const std::string& text) { control::load_scenario(text); },
        py::arg("text"));
  m.def("run_scenario", &run, py::arg("text"), py::arg("seed") = py::none(),
        py::arg("duration_ms") = py::none(), py::arg("rebalance") = py::none(),
        py::arg("log_path") = "");
  m.def(
      "reduce_metrics",
      [](const std::string& jsonl) {
        std::istringstream in(jsonl);
        return control::reduce_metrics(in).dump();
      },
      py::arg("jsonl"));
}
