#include "edgetb/orchestrator/pipeline.hpp"

#include <set>

#include "edgetb/common/error.hpp"

namespace edgetb::orch {

void validate(const PipelineSpec& pipeline) {
  if (pipeline.id.empty()) throw Error(Errc::InvalidArgument, "empty pipeline id");
  if (pipeline.id.find('/') != std::string::npos || pipeline.id.find('#') != std::string::npos) {
    throw Error(Errc::InvalidArgument, "pipeline id may not contain '/' or '#': " + pipeline.id);
  }
  if (pipeline.stages.empty()) {
    throw Error(Errc::InvalidArgument, "pipeline " + pipeline.id + " has no stages");
  }
  std::set<std::string> names;
  std::set<std::string> seen_topics;
  for (std::size_t i = 0; i < pipeline.stages.size(); ++i) {
    const StageSpec& s = pipeline.stages[i];
    const std::string where = pipeline.id + "/" + s.name;
    if (s.name.empty() || s.name.find('#') != std::string::npos ||
        s.name.find('/') != std::string::npos || s.name.find('@') != std::string::npos) {
      throw Error(Errc::InvalidArgument, "bad stage name in " + pipeline.id);
    }
    if (!names.insert(s.name).second) throw Error(Errc::DuplicateId, where);
    if (!(s.cpu_demand > 0) || !(s.mem_demand > 0)) {
      throw Error(Errc::InvalidArgument, where + ": demands must be > 0");
    }
    if (!(s.per_item_cost > 0)) {
      throw Error(Errc::InvalidArgument, where + ": per_item_cost must be > 0");
    }
    if (s.priority > 3) throw Error(Errc::InvalidArgument, where + ": priority > 3");
    if (s.input_topic.empty() || s.output_topic.empty()) {
      throw Error(Errc::InvalidArgument, where + ": missing topic");
    }
    if (i + 1 < pipeline.stages.size() &&
        s.output_topic != pipeline.stages[i + 1].input_topic) {
      throw Error(Errc::InvalidArgument, where + ": output does not feed the next stage");
    }
    // A topic consumed twice along the chain would loop items back.
    if (!seen_topics.insert(s.input_topic).second || s.output_topic == s.input_topic) {
      throw Error(Errc::InvalidArgument, where + ": cycle through " + s.input_topic);
    }
  }
  if (seen_topics.count(pipeline.stages.back().output_topic)) {
    throw Error(Errc::InvalidArgument, pipeline.id + ": sink topic feeds back into the chain");
  }
  if (!pipeline.source_topic.empty() && pipeline.source_topic != pipeline.stages.front().input_topic) {
    throw Error(Errc::InvalidArgument, pipeline.id + ": source topic mismatch");
  }
  if (!pipeline.sink_topic.empty() && pipeline.sink_topic != pipeline.stages.back().output_topic) {
    throw Error(Errc::InvalidArgument, pipeline.id + ": sink topic mismatch");
  }
}

std::vector<std::string> Placement::instances_of(const std::string& pipeline,
                                                 const std::string& stage) const {
  std::vector<std::string> out;
  for (const auto& [id, inst] : instances) {
    if (inst.pipeline == pipeline && inst.stage.name == stage) out.push_back(id);
  }
  return out;
}

std::vector<std::string> Placement::instances_on(const NodeId& node) const {
  std::vector<std::string> out;
  for (const auto& [id, inst] : instances) {
    if (inst.node == node) out.push_back(id);
  }
  return out;
}

void Placement::merge(const Placement& other) {
  for (const auto& [id, inst] : other.instances) instances[id] = inst;
  epoch = std::max(epoch, other.epoch);
}

std::string stage_key(const std::string& pipeline, const std::string& stage) {
  return pipeline + "/" + stage;
}

std::string instance_id(const std::string& pipeline, const std::string& stage, int replica) {
  return stage_key(pipeline, stage) + "#" + std::to_string(replica);
}

}  // namespace edgetb::orch
