#include "edgetb/control/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "edgetb/common/error.hpp"

namespace edgetb::control {

using nlohmann::json;

namespace {

std::string link_of(const json& r) {
  if (r.contains("link")) return r["link"].get<std::string>();
  auto a = r.at("src").get<std::string>();
  auto b = r.at("dst").get<std::string>();
  if (b < a) std::swap(a, b);
  return a + "~" + b;
}

struct StageSeries {
  std::map<std::int64_t, std::uint64_t> by_time;  // t -> summed depth
};

}  // namespace

double nearest_rank(const std::vector<double>& sorted, double pct) {
  if (sorted.empty()) return 0.0;
  const auto n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * n));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

json reduce_metrics(const std::vector<json>& records) {
  std::int64_t duration = 0;
  std::int64_t last_t = 0;
  std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> links;  // delivered, dropped
  std::map<std::string, StageSeries> stages;
  std::map<std::string, std::vector<double>> e2e;
  std::uint64_t migrations = 0, scale_outs = 0;
  std::uint64_t bundles_stored = 0, bundles_forwarded = 0, bundles_expired = 0;
  std::uint64_t translations = 0, gateway_in = 0, gateway_out = 0, gateway_errors = 0;
  std::map<std::string, std::uint64_t> alerts{
      {"Saturated", 0}, {"PostureDenied", 0}, {"node_down", 0}, {"bundle_expired", 0}};

  for (const json& r : records) {
    const std::string type = r.at("type").get<std::string>();
    last_t = std::max<std::int64_t>(last_t, r.at("t").get<std::int64_t>());
    if (auto a = alerts.find(type); a != alerts.end()) ++a->second;

    if (type == "run_start") {
      duration = r.value("duration_ms", std::int64_t{0});
    } else if (type == "frame_rx") {
      links[link_of(r)].first += r.at("bytes").get<std::uint64_t>();
    } else if (type == "frame_drop" || type == "frame_lost") {
      links[link_of(r)].second += r.at("bytes").get<std::uint64_t>();
    } else if (type == "queue_sample") {
      const std::string key = r.at("pipeline").get<std::string>() + "/" + r.at("stage").get<std::string>();
      stages[key].by_time[r.at("t").get<std::int64_t>()] += r.at("depth").get<std::uint64_t>();
    } else if (type == "rebalance") {
      if (r.value("action", "") == "migrate") ++migrations;
      else ++scale_outs;
    } else if (type == "bundle_stored") {
      ++bundles_stored;
    } else if (type == "bundle_forwarded") {
      ++bundles_forwarded;
    } else if (type == "bundle_expired") {
      ++bundles_expired;
    } else if (type == "pipeline_output") {
      e2e[r.at("pipeline").get<std::string>()].push_back(r.at("e2e_ms").get<double>());
    } else if (type == "gateway_translate") {
      ++translations;
      gateway_in += r.at("in_bytes").get<std::uint64_t>();
      gateway_out += r.at("out_bytes").get<std::uint64_t>();
    } else if (type == "gateway_error") {
      ++gateway_errors;
    }
  }
  if (duration == 0) duration = last_t;

  json out;
  out["duration_ms"] = duration;
  out["links"] = json::object();
  for (const auto& [id, v] : links) {
    out["links"][id] = {{"delivered_bytes", v.first}, {"dropped_bytes", v.second}};
  }

  out["stages"] = json::object();
  const std::int64_t steady_from = duration / 2;
  for (const auto& [key, s] : stages) {
    std::uint64_t max = 0, steady_max = 0, sum = 0;
    for (const auto& [t, depth] : s.by_time) {
      max = std::max(max, depth);
      sum += depth;
      if (t >= steady_from) steady_max = std::max(steady_max, depth);
    }
    out["stages"][key] = {{"samples", s.by_time.size()},
                          {"max_depth", max},
                          {"mean_depth", static_cast<double>(sum) / static_cast<double>(s.by_time.size())},
                          {"steady_max_depth", steady_max}};
  }

  // Every rebalance action moves work; scale-outs are reported separately too.
  out["migrations"] = migrations + scale_outs;
  out["rebalance"] = {{"migrate", migrations}, {"scale_out", scale_outs}};
  out["bundles"] = {
      {"stored", bundles_stored}, {"forwarded", bundles_forwarded}, {"expired", bundles_expired}};

  out["pipelines"] = json::object();
  for (auto& [id, samples] : e2e) {
    std::sort(samples.begin(), samples.end());
    out["pipelines"][id] = {{"outputs", samples.size()},
                            {"e2e_p50_ms", nearest_rank(samples, 50)},
                            {"e2e_p90_ms", nearest_rank(samples, 90)},
                            {"e2e_p99_ms", nearest_rank(samples, 99)}};
  }
  const double seconds = duration > 0 ? static_cast<double>(duration) / 1000.0 : 1.0;
  out["gateway"] = {{"translations", translations},
                    {"errors", gateway_errors},
                    {"in_bytes", gateway_in},
                    {"out_bytes", gateway_out},
                    {"messages_per_s", static_cast<double>(translations) / seconds}};
  out["alerts"] = alerts;
  return out;
}

json reduce_metrics(std::istream& jsonl) {
  std::vector<json> records;
  std::string line;
  std::size_t n = 0;
  while (std::getline(jsonl, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      records.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw Error(Errc::ParseError, "line " + std::to_string(n) + ": " + e.what());
    }
  }
  return reduce_metrics(records);
}

}  // namespace edgetb::control
