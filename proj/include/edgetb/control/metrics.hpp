#pragma once

#include <istream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace edgetb::control {

// Post-hoc reducer over an event log. The log is the only input.
//
// Output keys: links (delivered/dropped bytes), stages (max/mean/steady_max
// queue depth, summed across replicas per sample time), migrations,
// bundles (stored/forwarded/expired), pipelines (output count, e2e
// p50/p90/p99, nearest rank), gateway (translations, bytes), alerts.
nlohmann::json reduce_metrics(const std::vector<nlohmann::json>& records);
nlohmann::json reduce_metrics(std::istream& jsonl);

// Nearest-rank percentile of an ascending sequence; 0 when empty.
double nearest_rank(const std::vector<double>& sorted, double pct);

}  // namespace edgetb::control
