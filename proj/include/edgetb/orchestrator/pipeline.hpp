#pragma once

#include <map>
#include <string>
#include <vector>

#include "edgetb/common/types.hpp"
#include "edgetb/node/node.hpp"
#include "edgetb/node/stage.hpp"

namespace edgetb::orch {

using node::StageSpec;

struct PipelineSpec {
  std::string id;
  std::vector<StageSpec> stages;  // stage i output_topic == stage i+1 input_topic
  std::string source_topic;
  std::string sink_topic;
};

// Throws InvalidArgument on a broken chain, cycle or non-positive demand.
void validate(const PipelineSpec& pipeline);

struct PlacedInstance {
  std::string pipeline;
  StageSpec stage;
  NodeId node;
  node::SlotFilter slot;
  bool follow_membership = false;
};

struct Placement {
  std::map<std::string, PlacedInstance> instances;  // instance id -> placement
  std::uint64_t epoch = 0;

  std::vector<std::string> instances_of(const std::string& pipeline,
                                        const std::string& stage) const;
  std::vector<std::string> instances_on(const NodeId& node) const;
  void merge(const Placement& other);
  bool operator==(const Placement&) const = default;
};

std::string stage_key(const std::string& pipeline, const std::string& stage);
std::string instance_id(const std::string& pipeline, const std::string& stage, int replica);

}  // namespace edgetb::orch
