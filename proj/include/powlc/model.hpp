#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "powlc/digraph.hpp"

namespace powlc {

/// Organizational context of a visible activity: the pool is the
/// participant, the lane a role within it. Lane names are scoped to their
/// pool, so equal lane names under different pools compare unequal.
struct ResourceContext {
  std::string pool;
  std::string lane;

  friend bool operator==(const ResourceContext&, const ResourceContext&) = default;
  friend auto operator<=>(const ResourceContext&, const ResourceContext&) = default;
};

/// Atomic model element. A missing label marks a silent transition.
struct Transition {
  std::optional<std::string> label;

  bool visible() const { return label.has_value(); }
};

struct PowlNode;
using PowlNodePtr = std::shared_ptr<const PowlNode>;

/// Submodels plus an acyclic edge set over child indices. The strict
/// partial order is the transitive closure of `order`.
struct PartialOrder {
  std::vector<PowlNodePtr> children;
  IndexEdgeSet order;
};

// Choice-graph edge endpoints: a child index, or one of the two markers.
inline constexpr int kChoiceSource = -1;
inline constexpr int kChoiceSink = -2;

/// Directed graph over submodels with the distinguished source/sink
/// markers; exclusive routing, back edges permitted (loops).
struct ChoiceGraph {
  std::vector<PowlNodePtr> children;
  IndexEdgeSet edges;  // endpoints are kChoiceSource, kChoiceSink, or child indices
};

struct PowlNode {
  std::string id;
  std::variant<Transition, PartialOrder, ChoiceGraph> body;

  const Transition* as_transition() const { return std::get_if<Transition>(&body); }
  const PartialOrder* as_partial_order() const { return std::get_if<PartialOrder>(&body); }
  const ChoiceGraph* as_choice() const { return std::get_if<ChoiceGraph>(&body); }
};

inline PowlNodePtr make_transition(std::string id, std::optional<std::string> label) {
  return std::make_shared<PowlNode>(PowlNode{std::move(id), Transition{std::move(label)}});
}

inline PowlNodePtr make_partial_order(std::string id, std::vector<PowlNodePtr> children,
                                      IndexEdgeSet order = {}) {
  return std::make_shared<PowlNode>(
      PowlNode{std::move(id), PartialOrder{std::move(children), std::move(order)}});
}

inline PowlNodePtr make_choice(std::string id, std::vector<PowlNodePtr> children,
                               IndexEdgeSet edges) {
  return std::make_shared<PowlNode>(
      PowlNode{std::move(id), ChoiceGraph{std::move(children), std::move(edges)}});
}

/// A resource-aware process model: a recursive node tree plus the
/// assignment of visible transitions to organizational contexts.
struct PowlModel {
  std::string name;
  PowlNodePtr root;
  std::map<std::string, ResourceContext> assignment;
};

struct Violation {
  std::string node_id;
  std::string rule;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool clean() const { return violations.empty(); }
  void add(std::string node_id, std::string rule, std::string message) {
    violations.push_back({std::move(node_id), std::move(rule), std::move(message)});
  }
};

inline std::string trim_copy(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

namespace detail {

inline void walk(const PowlNodePtr& node, const std::function<void(const PowlNodePtr&)>& fn) {
  if (!node) return;
  fn(node);
  if (const auto* po = node->as_partial_order())
    for (const auto& c : po->children) walk(c, fn);
  else if (const auto* cg = node->as_choice())
    for (const auto& c : cg->children) walk(c, fn);
}

inline void validate_choice_edges(const PowlNode& node, const ChoiceGraph& cg,
                                  ValidationReport& report) {
  const int n = static_cast<int>(cg.children.size());
  auto valid_endpoint = [n](int v) {
    return v == kChoiceSource || v == kChoiceSink || (v >= 0 && v < n);
  };
  for (const auto& [a, b] : cg.edges) {
    if (!valid_endpoint(a) || !valid_endpoint(b)) {
      report.add(node.id, "choice-edge-out-of-range",
                 "edge (" + std::to_string(a) + "," + std::to_string(b) +
                     ") references no child of '" + node.id + "'");
      continue;
    }
    if (b == kChoiceSource)
      report.add(node.id, "edge-into-source", "choice graph start has an incoming edge");
    if (a == kChoiceSink)
      report.add(node.id, "edge-out-of-sink", "choice graph end has an outgoing edge");
  }

  // Every child must be reachable from the source and able to reach the
  // sink; revisits along the walk are fine (cycles model loops).
  std::vector<std::vector<int>> fwd(static_cast<std::size_t>(n + 2)), bwd(static_cast<std::size_t>(n + 2));
  auto slot = [n](int v) {
    if (v == kChoiceSource) return n;
    if (v == kChoiceSink) return n + 1;
    return v;
  };
  for (const auto& [a, b] : cg.edges) {
    if (!valid_endpoint(a) || !valid_endpoint(b)) continue;
    fwd[static_cast<std::size_t>(slot(a))].push_back(slot(b));
    bwd[static_cast<std::size_t>(slot(b))].push_back(slot(a));
  }
  auto reach = [&](int from, const std::vector<std::vector<int>>& adj) {
    std::vector<bool> seen(static_cast<std::size_t>(n + 2), false);
    std::vector<int> stack{from};
    seen[static_cast<std::size_t>(from)] = true;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int v : adj[static_cast<std::size_t>(u)])
        if (!seen[static_cast<std::size_t>(v)]) {
          seen[static_cast<std::size_t>(v)] = true;
          stack.push_back(v);
        }
    }
    return seen;
  };
  auto from_source = reach(slot(kChoiceSource), fwd);
  auto to_sink = reach(slot(kChoiceSink), bwd);
  for (int i = 0; i < n; ++i) {
    if (!from_source[static_cast<std::size_t>(i)] || !to_sink[static_cast<std::size_t>(i)])
      report.add(cg.children[static_cast<std::size_t>(i)]->id, "child-off-path",
                 "child '" + cg.children[static_cast<std::size_t>(i)]->id +
                     "' lies on no path from start to end");
  }
}

}  // namespace detail

/// Checks every structural invariant at every nesting level. Violations
/// are data; the report is empty iff the model is valid.
inline ValidationReport validate_model(const PowlModel& model) {
  ValidationReport report;
  if (!model.root) {
    report.add("", "empty-model", "model has no root node");
    return report;
  }

  std::map<std::string, int> transition_ids;
  detail::walk(model.root, [&](const PowlNodePtr& node) {
    if (const auto* t = node->as_transition()) {
      if (node->id.empty()) report.add(node->id, "empty-transition-id", "transition id is empty");
      if (t->label && trim_copy(*t->label).empty())
        report.add(node->id, "empty-label", "visible transition '" + node->id + "' has an empty label");
      ++transition_ids[node->id];
    } else if (const auto* po = node->as_partial_order()) {
      if (po->children.empty())
        report.add(node->id, "empty-operator", "partial order '" + node->id + "' has no children");
      const int n = static_cast<int>(po->children.size());
      bool in_range = true;
      for (const auto& [a, b] : po->order) {
        if (a == b)
          report.add(node->id, "self-edge-in-order",
                     "self-edge in partial order '" + node->id + "'");
        if (a < 0 || a >= n || b < 0 || b >= n) {
          report.add(node->id, "order-edge-out-of-range",
                     "order edge (" + std::to_string(a) + "," + std::to_string(b) +
                         ") references no child of '" + node->id + "'");
          in_range = false;
        }
      }
      if (in_range) {
        if (auto cycle = find_cycle(po->order, n)) {
          std::string names;
          for (std::size_t i = 0; i < cycle->size(); ++i) {
            if (i) names += " -> ";
            names += po->children[static_cast<std::size_t>((*cycle)[i])]->id;
          }
          report.add(node->id, "cycle-in-order", "cycle in order relation: " + names);
        }
      }
    } else if (const auto* cg = node->as_choice()) {
      if (cg->children.empty())
        report.add(node->id, "empty-operator", "choice graph '" + node->id + "' has no children");
      detail::validate_choice_edges(*node, *cg, report);
    }
  });

  for (const auto& [id, count] : transition_ids)
    if (count > 1)
      report.add(id, "duplicate-transition-id",
                 "transition id '" + id + "' occurs " + std::to_string(count) + " times");

  // Assignment must cover exactly the visible transitions.
  std::map<std::string, bool> visible_by_id;  // id -> visible?
  detail::walk(model.root, [&](const PowlNodePtr& node) {
    if (const auto* t = node->as_transition()) visible_by_id[node->id] = t->visible();
  });
  for (const auto& [id, visible] : visible_by_id) {
    if (visible && !model.assignment.count(id))
      report.add(id, "assignment-not-total",
                 "visible transition '" + id + "' has no pool/lane assignment");
    if (!visible && model.assignment.count(id))
      report.add(id, "assignment-on-silent",
                 "silent transition '" + id + "' must not carry an assignment");
  }
  for (const auto& [id, ctx] : model.assignment) {
    if (!visible_by_id.count(id))
      report.add(id, "assignment-unknown-id",
                 "assignment references unknown transition '" + id + "'");
    if (trim_copy(ctx.pool).empty())
      report.add(id, "empty-pool", "assignment of '" + id + "' has an empty pool");
    if (trim_copy(ctx.lane).empty())
      report.add(id, "empty-lane", "assignment of '" + id + "' has an empty lane");
  }
  return report;
}

/// Structural identity: same tree shape, ids, labels, relations, name and
/// assignment. Used for round-trip checks.
inline bool structurally_equal(const PowlNodePtr& a, const PowlNodePtr& b) {
  if (!a || !b) return a == b;
  if (a->id != b->id || a->body.index() != b->body.index()) return false;
  if (const auto* ta = a->as_transition()) return ta->label == b->as_transition()->label;
  if (const auto* pa = a->as_partial_order()) {
    const auto* pb = b->as_partial_order();
    if (pa->order != pb->order || pa->children.size() != pb->children.size()) return false;
    for (std::size_t i = 0; i < pa->children.size(); ++i)
      if (!structurally_equal(pa->children[i], pb->children[i])) return false;
    return true;
  }
  const auto* ca = a->as_choice();
  const auto* cb = b->as_choice();
  if (ca->edges != cb->edges || ca->children.size() != cb->children.size()) return false;
  for (std::size_t i = 0; i < ca->children.size(); ++i)
    if (!structurally_equal(ca->children[i], cb->children[i])) return false;
  return true;
}

inline bool structurally_equal(const PowlModel& a, const PowlModel& b) {
  return a.name == b.name && a.assignment == b.assignment && structurally_equal(a.root, b.root);
}

}  // namespace powlc
