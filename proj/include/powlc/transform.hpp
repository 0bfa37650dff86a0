#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "powlc/model.hpp"

namespace powlc {

enum class NodeKind { Task, StartEvent, EndEvent, AndGateway, XorGateway, ThrowMsg, CatchMsg };

inline bool is_gateway(NodeKind k) {
  return k == NodeKind::AndGateway || k == NodeKind::XorGateway;
}
inline bool is_connector(NodeKind k) {
  return k == NodeKind::StartEvent || k == NodeKind::EndEvent;
}

struct FlowNode {
  std::string id;
  NodeKind kind;
  std::optional<std::string> label;  // defined iff kind == Task
};

using FlowEdge = std::pair<std::string, std::string>;
using FlowEdgeSet = std::set<FlowEdge>;

/// Flat node/flow graph produced by the recursive control-flow
/// translation; start/end are the connector nodes used for composition.
struct BpmnFragment {
  std::map<std::string, FlowNode> nodes;
  FlowEdgeSet flows;
  std::string start_id;
  std::string end_id;
};

using NodeAssignment = std::map<std::string, ResourceContext>;

struct MessageFlow {
  std::string throw_id;
  std::string catch_id;

  friend bool operator==(const MessageFlow&, const MessageFlow&) = default;
};

/// Pool-partitioned node and flow sets plus message flows and a total
/// node-to-context assignment; the pre-serialization form of a
/// collaboration diagram.
struct CollaborationSkeleton {
  std::vector<std::string> pools;                                // ordered
  std::map<std::string, std::vector<std::string>> lanes_by_pool; // ordered per pool
  std::map<std::string, std::map<std::string, FlowNode>> nodes_by_pool;
  std::map<std::string, FlowEdgeSet> flows_by_pool;
  std::vector<MessageFlow> message_flows;
  NodeAssignment assignment;
  std::map<std::string, std::string> event_labels;  // message event display names

  const FlowNode* find_node(const std::string& id) const {
    for (const auto& [pool, nodes] : nodes_by_pool) {
      auto it = nodes.find(id);
      if (it != nodes.end()) return &it->second;
    }
    return nullptr;
  }

  std::size_t node_count() const {
    std::size_t n = 0;
    for (const auto& [pool, nodes] : nodes_by_pool) n += nodes.size();
    return n;
  }
};

struct TransformError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::string sequence_flow_id(const std::string& u, const std::string& v) {
  return "sf__" + u + "__" + v;
}
inline std::string message_flow_id(const MessageFlow& m) {
  return "mf__" + m.throw_id + "__" + m.catch_id;
}

namespace transform_detail {

inline std::string root_path(const PowlModel& model) {
  return model.root && !model.root->id.empty() ? model.root->id : "root";
}

inline std::string child_path(const std::string& parent, int index) {
  return parent + "." + std::to_string(index + 1);
}

struct Builder {
  BpmnFragment frag;

  void add(std::string id, NodeKind kind, std::optional<std::string> label = std::nullopt) {
    frag.nodes.emplace(id, FlowNode{id, kind, std::move(label)});
  }
  void flow(const std::string& a, const std::string& b) { frag.flows.emplace(a, b); }
};

struct Ends {
  std::string start, end;
};

inline Ends translate_node(const PowlNodePtr& node, const std::string& path, Builder& b) {
  const std::string s = path + ".s", e = path + ".e";
  b.add(s, NodeKind::StartEvent);
  b.add(e, NodeKind::EndEvent);

  if (const auto* t = node->as_transition()) {
    if (t->visible()) {
      const std::string task = path + ".task";
      b.add(task, NodeKind::Task, *t->label);
      b.flow(s, task);
      b.flow(task, e);
    } else {
      b.flow(s, e);
    }
    return {s, e};
  }

  if (const auto* po = node->as_partial_order()) {
    const int n = static_cast<int>(po->children.size());
    const std::string split = path + ".split", join = path + ".join";
    b.add(split, NodeKind::AndGateway);
    b.add(join, NodeKind::AndGateway);
    b.flow(s, split);
    b.flow(join, e);

    const IndexEdgeSet closure = transitive_closure(po->order, n);
    const IndexEdgeSet reduced = transitive_reduction(po->order, n);
    std::vector<std::string> pre(static_cast<std::size_t>(n)), post(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const std::string cp = child_path(path, i);
      pre[static_cast<std::size_t>(i)] = cp + ".pre";
      post[static_cast<std::size_t>(i)] = cp + ".post";
      b.add(pre[static_cast<std::size_t>(i)], NodeKind::AndGateway);
      b.add(post[static_cast<std::size_t>(i)], NodeKind::AndGateway);
      Ends child = translate_node(po->children[static_cast<std::size_t>(i)], cp, b);
      b.flow(pre[static_cast<std::size_t>(i)], child.start);
      b.flow(child.end, post[static_cast<std::size_t>(i)]);
    }
    for (int i = 0; i < n; ++i) {
      bool has_pred = false, has_succ = false;
      for (int j = 0; j < n; ++j) {
        has_pred |= closure.count({j, i}) > 0;
        has_succ |= closure.count({i, j}) > 0;
      }
      if (!has_pred) b.flow(split, pre[static_cast<std::size_t>(i)]);
      if (!has_succ) b.flow(post[static_cast<std::size_t>(i)], join);
    }
    // Synchronization edges follow the transitive reduction, not the closure.
    for (const auto& [i, j] : reduced)
      b.flow(post[static_cast<std::size_t>(i)], pre[static_cast<std::size_t>(j)]);
    return {s, e};
  }

  const auto* cg = node->as_choice();
  const int n = static_cast<int>(cg->children.size());
  const std::string split = path + ".split", join = path + ".join";
  b.add(split, NodeKind::XorGateway);
  b.add(join, NodeKind::XorGateway);
  b.flow(s, split);
  b.flow(join, e);

  std::vector<std::string> pre(static_cast<std::size_t>(n)), post(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const std::string cp = child_path(path, i);
    pre[static_cast<std::size_t>(i)] = cp + ".pre";
    post[static_cast<std::size_t>(i)] = cp + ".post";
    b.add(pre[static_cast<std::size_t>(i)], NodeKind::XorGateway);
    b.add(post[static_cast<std::size_t>(i)], NodeKind::XorGateway);
    Ends child = translate_node(cg->children[static_cast<std::size_t>(i)], cp, b);
    b.flow(pre[static_cast<std::size_t>(i)], child.start);
    b.flow(child.end, post[static_cast<std::size_t>(i)]);
  }
  for (const auto& [a, c] : cg->edges) {
    const std::string from = a == kChoiceSource ? split : post[static_cast<std::size_t>(a)];
    const std::string to = c == kChoiceSink ? join : pre[static_cast<std::size_t>(c)];
    b.flow(from, to);
  }
  return {s, e};
}

inline void for_each_transition_path(
    const PowlNodePtr& node, const std::string& path,
    const std::function<void(const std::string&, const PowlNode&)>& fn) {
  if (node->as_transition()) {
    fn(path, *node);
    return;
  }
  const auto& children = node->as_partial_order() ? node->as_partial_order()->children
                                                  : node->as_choice()->children;
  for (std::size_t i = 0; i < children.size(); ++i)
    for_each_transition_path(children[i], child_path(path, static_cast<int>(i)), fn);
}

struct Adjacency {
  std::map<std::string, std::vector<std::string>> preds, succs;
};

inline Adjacency adjacency(const BpmnFragment& f) {
  Adjacency adj;
  for (const auto& [id, node] : f.nodes) {
    adj.preds[id];
    adj.succs[id];
  }
  for (const auto& [u, v] : f.flows) {
    adj.succs[u].push_back(v);
    adj.preds[v].push_back(u);
  }
  return adj;  // vectors come out sorted: flows is an ordered set
}

}  // namespace transform_detail

/// Exact recursive construction: tasks for visible transitions, a direct
/// connector flow for silent ones, 2 + 2n AND gateways per partial order
/// and 2 + 2n XOR gateways per choice graph. Node ids are deterministic
/// functions of the model path.
inline BpmnFragment translate(const PowlModel& model) {
  if (!model.root) throw TransformError("cannot translate an empty model");
  transform_detail::Builder b;
  auto ends = transform_detail::translate_node(model.root, transform_detail::root_path(model), b);
  b.frag.start_id = ends.start;
  b.frag.end_id = ends.end;
  return b.frag;
}

/// Removes semantically transparent structure: interior start/end
/// connectors first, then gateways with a single incoming and outgoing
/// flow, iterated to a fixed point. Parallel flows arising from
/// contraction collapse only when their (source, target) pair is
/// identical.
inline BpmnFragment prune(BpmnFragment frag) {
  auto contract_pass = [&frag](bool connectors) {
    bool any = false;
    bool progress = true;
    while (progress) {
      progress = false;
      auto adj = transform_detail::adjacency(frag);
      for (const auto& [id, node] : frag.nodes) {
        if (id == frag.start_id || id == frag.end_id) continue;
        if (connectors ? !is_connector(node.kind) : !is_gateway(node.kind)) continue;
        const auto& in = adj.preds[id];
        const auto& out = adj.succs[id];
        if (in.size() != 1 || out.size() != 1) continue;
        const std::string u = in[0], v = out[0];
        if (u == id || v == id || u == v) continue;
        frag.flows.erase({u, id});
        frag.flows.erase({id, v});
        frag.nodes.erase(id);
        frag.flows.emplace(u, v);
        progress = true;
        any = true;
        break;  // adjacency is stale; rescan
      }
    }
    return any;
  };

  bool changed = true;
  while (changed) {
    changed = contract_pass(true);
    changed |= contract_pass(false);
  }
  return frag;
}

/// Lifts the transition-level assignment to every flow node. Task nodes
/// seed the assignment; synchronous rounds then propagate it through the
/// direction-sensitive neighborhood of each node (splits look at
/// successors, joins at predecessors, boundary events along the flow,
/// pass-through nodes downstream first). Ties resolve to the context of
/// the lexicographically smallest neighbor id. A round that assigns
/// nothing while nodes remain falls back to the full neighborhood once;
/// this happens on loops whose repeat branch carries no task.
inline NodeAssignment lift_assignment(const BpmnFragment& frag, const PowlModel& model) {
  bool has_task = false;
  for (const auto& [id, node] : frag.nodes) has_task |= node.kind == NodeKind::Task;
  if (!has_task) throw TransformError("no assignment seed: model has no visible activity");

  NodeAssignment assigned;
  transform_detail::for_each_transition_path(
      model.root, transform_detail::root_path(model),
      [&](const std::string& path, const PowlNode& node) {
        const auto* t = node.as_transition();
        if (!t->visible()) return;
        const std::string task_id = path + ".task";
        if (!frag.nodes.count(task_id)) return;
        auto it = model.assignment.find(node.id);
        if (it == model.assignment.end())
          throw TransformError("assignment missing for transition '" + node.id + "'");
        assigned.emplace(task_id, it->second);
      });

  const auto adj = transform_detail::adjacency(frag);
  auto first_assigned = [](const std::vector<std::string>& ids,
                           const NodeAssignment& state) -> const std::string* {
    for (const auto& id : ids)  // ids sorted; first hit is the smallest
      if (state.count(id)) return &id;
    return nullptr;
  };

  while (assigned.size() < frag.nodes.size()) {
    const NodeAssignment snapshot = assigned;
    bool progress = false;

    auto run_round = [&](bool relaxed) {
      for (const auto& [id, node] : frag.nodes) {
        if (snapshot.count(id) || assigned.count(id)) continue;
        const auto& in = adj.preds.at(id);
        const auto& out = adj.succs.at(id);
        const std::string* source = nullptr;
        if (relaxed) {
          std::vector<std::string> all = in;
          all.insert(all.end(), out.begin(), out.end());
          std::sort(all.begin(), all.end());
          source = first_assigned(all, snapshot);
        } else if (node.kind == NodeKind::StartEvent) {
          source = first_assigned(out, snapshot);
        } else if (node.kind == NodeKind::EndEvent) {
          source = first_assigned(in, snapshot);
        } else if (is_gateway(node.kind) && out.size() > 1) {
          source = first_assigned(out, snapshot);
        } else if (is_gateway(node.kind) && in.size() > 1) {
          source = first_assigned(in, snapshot);
        } else {
          source = first_assigned(out, snapshot);
          if (!source) source = first_assigned(in, snapshot);
        }
        if (source) {
          assigned.emplace(id, snapshot.at(*source));
          progress = true;
        }
      }
    };

    run_round(false);
    if (!progress) run_round(true);
    if (!progress)
      throw TransformError("assignment propagation stalled; fragment is not connected");
  }
  return assigned;
}

/// Replaces each cross-pool sequence flow by a throw/catch message event
/// pair joined by a message flow, then partitions nodes and flows by
/// pool. No sequence flow crosses pools in the result.
inline CollaborationSkeleton insert_messages(const BpmnFragment& frag,
                                             const NodeAssignment& assignment) {
  auto context_of = [&assignment](const std::string& id) -> const ResourceContext& {
    auto it = assignment.find(id);
    if (it == assignment.end())
      throw TransformError("assignment not total: node '" + id + "' has no context");
    return it->second;
  };

  CollaborationSkeleton cs;
  cs.assignment = assignment;

  std::map<std::string, FlowNode> all_nodes = frag.nodes;
  FlowEdgeSet local_flows;
  std::vector<std::pair<FlowEdge, MessageFlow>> crossings;

  for (const auto& [u, v] : frag.flows) {
    if (context_of(u).pool == context_of(v).pool) {
      local_flows.emplace(u, v);
      continue;
    }
    const std::string base = u + ".to." + v;
    MessageFlow mf{base + ".throw", base + ".catch"};
    all_nodes.emplace(mf.throw_id, FlowNode{mf.throw_id, NodeKind::ThrowMsg, std::nullopt});
    all_nodes.emplace(mf.catch_id, FlowNode{mf.catch_id, NodeKind::CatchMsg, std::nullopt});
    cs.assignment.emplace(mf.throw_id, context_of(u));
    cs.assignment.emplace(mf.catch_id, context_of(v));
    const FlowNode& src = frag.nodes.at(u);
    const FlowNode& dst = frag.nodes.at(v);
    if (src.kind == NodeKind::Task) cs.event_labels[mf.throw_id] = "from " + *src.label;
    if (dst.kind == NodeKind::Task) cs.event_labels[mf.catch_id] = "to " + *dst.label;
    local_flows.emplace(u, mf.throw_id);
    local_flows.emplace(mf.catch_id, v);
    crossings.emplace_back(FlowEdge{u, v}, mf);
  }

  std::set<std::string> pool_names;
  std::map<std::string, std::set<std::string>> lane_names;
  for (const auto& [id, node] : all_nodes) {
    const ResourceContext& ctx = cs.assignment.at(id);
    pool_names.insert(ctx.pool);
    lane_names[ctx.pool].insert(ctx.lane);
    cs.nodes_by_pool[ctx.pool].emplace(id, node);
  }
  cs.pools.assign(pool_names.begin(), pool_names.end());
  for (const auto& [pool, lanes] : lane_names)
    cs.lanes_by_pool[pool].assign(lanes.begin(), lanes.end());
  for (const auto& pool : cs.pools) cs.flows_by_pool[pool];
  for (const auto& [u, v] : local_flows)
    cs.flows_by_pool[cs.assignment.at(u).pool].emplace(u, v);
  for (const auto& [edge, mf] : crossings) cs.message_flows.push_back(mf);
  return cs;
}

/// Full pipeline: translate, prune, lift, insert messages. Pure and
/// deterministic; identical input yields identical output including ids.
inline CollaborationSkeleton compile(const PowlModel& model) {
  ValidationReport report = validate_model(model);
  if (!report.clean()) {
    std::string msg = "invalid model:";
    for (const auto& v : report.violations) msg += " [" + v.rule + "] " + v.message + ";";
    throw TransformError(msg);
  }
  BpmnFragment pruned = prune(translate(model));
  NodeAssignment lifted = lift_assignment(pruned, model);
  return insert_messages(pruned, lifted);
}

}  // namespace powlc
