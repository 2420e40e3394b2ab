#include "edgetb/orchestrator/placement.hpp"

#include <algorithm>

#include "edgetb/common/error.hpp"

namespace edgetb::orch {

namespace {

constexpr double kEps = 1e-9;

struct Capacity {
  NodeId id;
  double cpu = 0.0;
  double mem = 0.0;
};

bool admits(const Capacity& c, const StageSpec& s) {
  return c.cpu + kEps >= s.cpu_demand && c.mem + kEps >= s.mem_demand;
}

void by_free_desc(std::vector<Capacity>& nodes) {
  std::sort(nodes.begin(), nodes.end(), [](const Capacity& a, const Capacity& b) {
    if (a.cpu != b.cpu) return a.cpu > b.cpu;
    return a.id < b.id;
  });
}

std::vector<Capacity> capacities(const MembershipView& view, const std::set<NodeId>& exclude) {
  std::vector<Capacity> out;
  for (const auto& [id, m] : view.live) {
    if (exclude.count(id)) continue;
    out.push_back({id, m.state.cpu_free, m.state.mem_free});
  }
  return out;
}

int replica_index(const std::string& instance) {
  const auto hash = instance.rfind('#');
  if (hash == std::string::npos) return 0;
  return std::stoi(instance.substr(hash + 1));
}

}  // namespace

AllocationResult allocate(const PipelineSpec& pipeline, const MembershipView& view,
                          const std::set<NodeId>& exclude) {
  if (view.empty()) throw Error(Errc::EmptyMembership, pipeline.id);
  validate(pipeline);

  std::vector<const StageSpec*> order;
  for (const StageSpec& s : pipeline.stages) order.push_back(&s);
  std::stable_sort(order.begin(), order.end(), [](const StageSpec* a, const StageSpec* b) {
    return a->cpu_demand > b->cpu_demand;
  });

  std::vector<Capacity> nodes = capacities(view, exclude);
  Placement placement;
  placement.epoch = view.epoch;
  for (const StageSpec* stage : order) {
    by_free_desc(nodes);
    auto host = std::find_if(nodes.begin(), nodes.end(),
                             [&](const Capacity& c) { return admits(c, *stage); });
    if (host == nodes.end()) return Infeasible{stage->name};
    host->cpu -= stage->cpu_demand;
    host->mem -= stage->mem_demand;
    PlacedInstance inst{pipeline.id, *stage, host->id, node::SlotFilter{}, false};
    placement.instances.emplace(instance_id(pipeline.id, stage->name, 0), std::move(inst));
  }
  return placement;
}

AllocationResult deploy_redundant(const std::vector<StageSpec>& services,
                                  const std::string& group, const MembershipView& view) {
  if (view.empty()) throw Error(Errc::EmptyMembership, group);
  Placement placement;
  placement.epoch = view.epoch;
  const std::set<NodeId> live = view.ids();
  for (const auto& [id, m] : view.live) {
    Capacity c{id, m.state.cpu_free, m.state.mem_free};
    for (const StageSpec& s : services) {
      if (!admits(c, s)) return Infeasible{s.name + "@" + id};
      c.cpu -= s.cpu_demand;
      c.mem -= s.mem_demand;
      PlacedInstance inst{group, s, id, membership_slot(id, live), true};
      placement.instances.emplace(stage_key(group, s.name) + "@" + id, std::move(inst));
    }
  }
  return placement;
}

node::SlotFilter membership_slot(const NodeId& self, const std::set<NodeId>& live) {
  auto it = live.find(self);
  if (it == live.end()) return node::SlotFilter{0, 1};
  return node::SlotFilter{static_cast<std::uint32_t>(std::distance(live.begin(), it)),
                          static_cast<std::uint32_t>(live.size())};
}

std::string_view to_string(MigrationAction::Kind kind) {
  return kind == MigrationAction::Kind::ScaleOut ? "scale_out" : "migrate";
}

MigrationPlan Rebalancer::rebalance(const Placement& placement, const QueueDepths& depths,
                                    const MembershipView& view, SimTime now) {
  // Stage -> its replicas (redundant deployments manage themselves).
  std::map<std::string, std::vector<std::string>> stages;
  for (const auto& [id, inst] : placement.instances) {
    if (inst.follow_membership || !view.contains(inst.node)) continue;
    stages[stage_key(inst.pipeline, inst.stage.name)].push_back(id);
  }

  std::vector<Capacity> free = capacities(view, {});
  MigrationPlan plan;
  for (const auto& [key, replicas] : stages) {
    std::size_t depth = 0;
    for (const std::string& id : replicas) {
      auto d = depths.find(id);
      if (d != depths.end()) depth += d->second;
    }
    int& over = over_[key];
    over = depth > config_.queue_high ? over + 1 : 0;
    if (over < config_.window) continue;
    auto last = last_action_.find(key);
    if (last != last_action_.end() && now - last->second < config_.cooldown_ms) continue;

    over = 0;
    last_action_[key] = now;
    const PlacedInstance& any = placement.instances.at(replicas.front());
    const StageSpec& stage = any.stage;

    by_free_desc(free);
    auto target = std::find_if(free.begin(), free.end(),
                               [&](const Capacity& c) { return admits(c, stage); });
    if (target != free.end()) {
      int next = 0;
      for (const auto& id : placement.instances_of(any.pipeline, stage.name)) {
        next = std::max(next, replica_index(id) + 1);
      }
      MigrationAction a;
      a.kind = MigrationAction::Kind::ScaleOut;
      a.pipeline = any.pipeline;
      a.stage = stage.name;
      a.instance_id = instance_id(any.pipeline, stage.name, next);
      a.from = placement.instances.at(replicas.front()).node;
      a.to = target->id;
      target->cpu -= stage.cpu_demand;
      target->mem -= stage.mem_demand;
      plan.actions.push_back(std::move(a));
      continue;
    }

    // No admitting node for an extra replica: move the deepest one to a
    // roomier host.
    std::string victim = replicas.front();
    for (const std::string& id : replicas) {
      const auto d = depths.count(id) ? depths.at(id) : 0;
      const auto best = depths.count(victim) ? depths.at(victim) : 0;
      if (d > best) victim = id;
    }
    const NodeId host = placement.instances.at(victim).node;
    double host_free = 0.0;
    for (const Capacity& c : free) {
      if (c.id == host) host_free = c.cpu;
    }
    auto roomier = std::find_if(free.begin(), free.end(), [&](const Capacity& c) {
      return c.id != host && c.cpu > host_free + kEps && admits(c, stage);
    });
    if (roomier != free.end()) {
      int next = 0;
      for (const auto& id : placement.instances_of(any.pipeline, stage.name)) {
        next = std::max(next, replica_index(id) + 1);
      }
      MigrationAction a;
      a.kind = MigrationAction::Kind::Migrate;
      a.pipeline = any.pipeline;
      a.stage = stage.name;
      a.instance_id = instance_id(any.pipeline, stage.name, next);
      a.replaces = victim;
      a.from = host;
      a.to = roomier->id;
      roomier->cpu -= stage.cpu_demand;
      roomier->mem -= stage.mem_demand;
      for (Capacity& c : free) {
        if (c.id == host) {
          c.cpu += stage.cpu_demand;
          c.mem += stage.mem_demand;
        }
      }
      plan.actions.push_back(std::move(a));
      continue;
    }
    plan.saturated.push_back(key);
  }
  return plan;
}

void apply_plan(Placement& placement, const MigrationPlan& plan) {
  std::set<std::pair<std::string, std::string>> touched;
  for (const MigrationAction& a : plan.actions) {
    const std::string source =
        a.kind == MigrationAction::Kind::Migrate ? a.replaces
                                                 : placement.instances_of(a.pipeline, a.stage).front();
    PlacedInstance inst = placement.instances.at(source);
    inst.node = a.to;
    if (a.kind == MigrationAction::Kind::Migrate) placement.instances.erase(a.replaces);
    placement.instances[a.instance_id] = std::move(inst);
    touched.emplace(a.pipeline, a.stage);
  }
  for (const auto& [pipeline, stage] : touched) {
    const auto replicas = placement.instances_of(pipeline, stage);
    for (std::size_t i = 0; i < replicas.size(); ++i) {
      placement.instances.at(replicas[i]).slot =
          node::SlotFilter{static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(replicas.size())};
    }
  }
}

}  // namespace edgetb::orch
