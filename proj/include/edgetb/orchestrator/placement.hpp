#pragma once

#include <map>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "edgetb/orchestrator/membership.hpp"
#include "edgetb/orchestrator/pipeline.hpp"

namespace edgetb::orch {

struct Infeasible {
  std::string stage;
};

using AllocationResult = std::variant<Placement, Infeasible>;

// First-fit-decreasing: stages by cpu_demand descending (declaration order
// on ties), each onto the first node, by free cpu descending then id, that
// admits it. Free capacity comes from the view's advertisements and is
// debited as stages land. Throws EmptyMembership on an empty view.
AllocationResult allocate(const PipelineSpec& pipeline, const MembershipView& view,
                          const std::set<NodeId>& exclude = {});

// Every service on every live node; consumers split work by message-id hash
// over the live set.
AllocationResult deploy_redundant(const std::vector<StageSpec>& services,
                                  const std::string& group, const MembershipView& view);

node::SlotFilter membership_slot(const NodeId& self, const std::set<NodeId>& live);

struct RebalanceConfig {
  std::size_t queue_high = 100;  // Q_hi
  int window = 3;                // consecutive samples over Q_hi
  SimTime cooldown_ms = 5000;
};

struct MigrationAction {
  enum class Kind { ScaleOut, Migrate } kind = Kind::ScaleOut;
  std::string pipeline;
  std::string stage;
  std::string instance_id;   // new instance
  std::string replaces;      // migrate: the instance being moved
  NodeId from;
  NodeId to;
};

std::string_view to_string(MigrationAction::Kind kind);

struct MigrationPlan {
  std::vector<MigrationAction> actions;
  std::vector<std::string> saturated;  // stage keys with no remedy
  bool empty() const { return actions.empty(); }
};

using QueueDepths = std::map<std::string, std::size_t>;  // instance id -> depth

// Queue-depth driven scale-out / migration with per-stage hysteresis.
class Rebalancer {
 public:
  explicit Rebalancer(RebalanceConfig config = {}) : config_(config) {}

  // Called once per 1 s sample.
  MigrationPlan rebalance(const Placement& placement, const QueueDepths& depths,
                          const MembershipView& view, SimTime now);

  const RebalanceConfig& config() const { return config_; }

 private:
  RebalanceConfig config_;
  std::map<std::string, int> over_;
  std::map<std::string, SimTime> last_action_;
};

// Applies a plan to a placement, re-spreading hash slots across each
// affected stage's replicas.
void apply_plan(Placement& placement, const MigrationPlan& plan);

}  // namespace edgetb::orch
