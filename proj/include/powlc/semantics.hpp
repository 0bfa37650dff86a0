#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "powlc/model.hpp"
#include "powlc/transform.hpp"

namespace powlc {

using Trace = std::vector<std::string>;

struct LanguageResult {
  std::set<Trace> traces;
  bool truncated = false;  // a cap was hit; the set is a subset of the language
};

namespace semantics_detail {

// Guard against state explosion in cyclic models; hitting it marks the
// result truncated, never wrong.
inline constexpr std::size_t kStateCap = 1'000'000;

inline LanguageResult node_language(const PowlNodePtr& node, int max_len, std::size_t max_traces);

inline LanguageResult interleavings(const PartialOrder& po, int max_len, std::size_t max_traces) {
  const int n = static_cast<int>(po.children.size());
  LanguageResult result;
  std::vector<LanguageResult> child_langs;
  for (const auto& c : po.children) {
    child_langs.push_back(node_language(c, max_len, max_traces));
    result.truncated |= child_langs.back().truncated;
  }
  const IndexEdgeSet closure = transitive_closure(po.order, n);

  // For every tuple of child traces, enumerate the shuffles in which all
  // events of an ordered predecessor precede all events of its successor.
  std::vector<std::set<Trace>::const_iterator> pick(static_cast<std::size_t>(n));
  std::function<void(int)> choose = [&](int k) {
    if (result.truncated) return;
    if (k == n) {
      std::size_t total = 0;
      for (const auto& it : pick) total += it->size();
      if (total > static_cast<std::size_t>(std::max(max_len, 0))) return;

      std::vector<std::size_t> consumed(static_cast<std::size_t>(n), 0);
      Trace current;
      std::function<void()> step = [&]() {
        if (result.truncated) return;
        if (current.size() == total) {
          if (result.traces.size() >= max_traces) {
            result.truncated = true;
            return;
          }
          result.traces.insert(current);
          return;
        }
        for (int i = 0; i < n; ++i) {
          const Trace& t = *pick[static_cast<std::size_t>(i)];
          if (consumed[static_cast<std::size_t>(i)] == t.size()) continue;
          bool ready = true;
          for (int j = 0; j < n && ready; ++j)
            if (closure.count({j, i}))
              ready = consumed[static_cast<std::size_t>(j)] ==
                      pick[static_cast<std::size_t>(j)]->size();
          if (!ready) continue;
          current.push_back(t[consumed[static_cast<std::size_t>(i)]]);
          ++consumed[static_cast<std::size_t>(i)];
          step();
          --consumed[static_cast<std::size_t>(i)];
          current.pop_back();
        }
      };
      step();
      return;
    }
    for (auto it = child_langs[static_cast<std::size_t>(k)].traces.begin();
         it != child_langs[static_cast<std::size_t>(k)].traces.end(); ++it) {
      pick[static_cast<std::size_t>(k)] = it;
      choose(k + 1);
    }
  };
  if (n > 0) {
    bool any_empty_language = false;
    for (const auto& cl : child_langs) any_empty_language |= cl.traces.empty();
    if (!any_empty_language) choose(0);
  }
  return result;
}

inline LanguageResult choice_language(const ChoiceGraph& cg, int max_len,
                                      std::size_t max_traces) {
  const int n = static_cast<int>(cg.children.size());
  LanguageResult result;
  std::vector<LanguageResult> child_langs;
  for (const auto& c : cg.children) {
    child_langs.push_back(node_language(c, max_len, max_traces));
    result.truncated |= child_langs.back().truncated;
  }

  std::map<int, std::vector<int>> succ;
  for (const auto& [a, b] : cg.edges) succ[a].push_back(b);

  // Walks from the source marker; revisits are allowed and bounded by the
  // emitted trace length, which matches the token view of XOR back edges.
  std::set<std::pair<int, Trace>> visited;
  std::vector<std::pair<int, Trace>> stack{{kChoiceSource, {}}};
  while (!stack.empty() && !result.truncated) {
    auto [vertex, trace] = stack.back();
    stack.pop_back();
    if (!visited.insert({vertex, trace}).second) continue;
    if (visited.size() > kStateCap) {
      result.truncated = true;
      break;
    }
    if (vertex == kChoiceSink) {
      if (result.traces.size() >= max_traces) {
        result.truncated = true;
        break;
      }
      result.traces.insert(trace);
      continue;
    }
    auto it = succ.find(vertex);
    if (it == succ.end()) continue;
    for (int next : it->second) {
      if (next == kChoiceSink) {
        stack.emplace_back(kChoiceSink, trace);
        continue;
      }
      for (const Trace& t : child_langs[static_cast<std::size_t>(next)].traces) {
        if (trace.size() + t.size() > static_cast<std::size_t>(std::max(max_len, 0))) continue;
        Trace extended = trace;
        extended.insert(extended.end(), t.begin(), t.end());
        stack.emplace_back(next, std::move(extended));
      }
    }
  }
  return result;
}

inline LanguageResult node_language(const PowlNodePtr& node, int max_len,
                                    std::size_t max_traces) {
  LanguageResult result;
  if (const auto* t = node->as_transition()) {
    if (!t->visible())
      result.traces.insert(Trace{});
    else if (max_len >= 1)
      result.traces.insert(Trace{*t->label});
    return result;
  }
  if (const auto* po = node->as_partial_order()) return interleavings(*po, max_len, max_traces);
  return choice_language(*node->as_choice(), max_len, max_traces);
}

}  // namespace semantics_detail

/// All complete visible-label traces of length <= max_len derivable by
/// the recursive semantics: single labels for transitions, source-to-sink
/// walks for choice graphs, order-respecting interleavings for partial
/// orders.
inline LanguageResult powl_language(const PowlModel& model, int max_len,
                                    std::size_t max_traces) {
  if (!model.root) return {};
  return semantics_detail::node_language(model.root, max_len, max_traces);
}

/// Token-game trace language of a flat fragment (pre message insertion).
/// A trace is complete when the end event has consumed its token and no
/// tokens remain anywhere.
inline LanguageResult bpmn_language(const BpmnFragment& frag, int max_len,
                                    std::size_t max_traces) {
  for (const auto& [u, v] : frag.flows)
    if (!frag.nodes.count(u) || !frag.nodes.count(v))
      throw StructuralError("dangling flow (" + u + ", " + v + ")");
  if (!frag.nodes.count(frag.start_id) || !frag.nodes.count(frag.end_id))
    throw StructuralError("fragment start/end missing from node set");
  for (const auto& [id, node] : frag.nodes)
    if (node.kind == NodeKind::ThrowMsg || node.kind == NodeKind::CatchMsg)
      throw StructuralError("token game runs on pre-message fragments; found message event '" +
                            id + "'");

  const auto adj = transform_detail::adjacency(frag);
  using Marking = std::map<FlowEdge, int>;

  auto consume = [](Marking& m, const FlowEdge& e) {
    auto it = m.find(e);
    if (--it->second == 0) m.erase(it);
  };

  LanguageResult result;
  Marking initial;
  for (const auto& v : adj.succs.at(frag.start_id)) ++initial[{frag.start_id, v}];

  std::set<std::pair<Marking, Trace>> visited;
  std::vector<std::pair<Marking, Trace>> stack{{initial, {}}};
  while (!stack.empty() && !result.truncated) {
    auto [marking, trace] = stack.back();
    stack.pop_back();
    if (!visited.insert({marking, trace}).second) continue;
    if (visited.size() > semantics_detail::kStateCap) {
      result.truncated = true;
      break;
    }

    for (const auto& [id, node] : frag.nodes) {
      const auto& in = adj.preds.at(id);
      const auto& out = adj.succs.at(id);
      switch (node.kind) {
        case NodeKind::Task: {
          if (in.size() != 1 || out.size() != 1)
            throw StructuralError("task '" + id + "' must have one incoming and one outgoing flow");
          FlowEdge e{in[0], id};
          if (!marking.count(e)) break;
          if (trace.size() >= static_cast<std::size_t>(std::max(max_len, 0))) break;
          Marking next = marking;
          consume(next, e);
          ++next[{id, out[0]}];
          Trace t = trace;
          t.push_back(node.label.value_or(""));
          stack.emplace_back(std::move(next), std::move(t));
          break;
        }
        case NodeKind::AndGateway: {
          bool enabled = !in.empty();
          for (const auto& u : in) enabled &= marking.count({u, id}) > 0;
          if (!enabled) break;
          Marking next = marking;
          for (const auto& u : in) consume(next, {u, id});
          for (const auto& v : out) ++next[{id, v}];
          stack.emplace_back(std::move(next), trace);
          break;
        }
        case NodeKind::XorGateway: {
          for (const auto& u : in) {
            if (!marking.count({u, id})) continue;
            for (const auto& v : out) {
              Marking next = marking;
              consume(next, {u, id});
              ++next[{id, v}];
              stack.emplace_back(std::move(next), trace);
            }
          }
          break;
        }
        case NodeKind::EndEvent: {
          if (id != frag.end_id && !in.empty()) {
            // interior connectors behave as pass-through
            FlowEdge e{in[0], id};
            if (marking.count(e) && out.size() == 1) {
              Marking next = marking;
              consume(next, e);
              ++next[{id, out[0]}];
              stack.emplace_back(std::move(next), trace);
            }
            break;
          }
          if (in.empty()) break;
          FlowEdge e{in[0], id};
          if (!marking.count(e)) break;
          Marking next = marking;
          consume(next, e);
          if (next.empty()) {
            if (result.traces.size() >= max_traces) {
              result.truncated = true;
            } else {
              result.traces.insert(trace);
            }
          } else {
            stack.emplace_back(std::move(next), trace);
          }
          break;
        }
        case NodeKind::StartEvent: {
          if (id == frag.start_id) break;  // fired once, at initialization
          // interior start connectors pass tokens through
          if (in.size() == 1 && out.size() == 1) {
            FlowEdge e{in[0], id};
            if (!marking.count(e)) break;
            Marking next = marking;
            consume(next, e);
            ++next[{id, out[0]}];
            stack.emplace_back(std::move(next), trace);
          }
          break;
        }
        default:
          break;
      }
      if (result.truncated) break;
    }
  }
  return result;
}

enum class EquivalenceOutcome { Equal, Unequal, Inconclusive };

struct EquivalenceResult {
  EquivalenceOutcome outcome;
  std::optional<Trace> witness;  // present iff Unequal: in exactly one language
};

/// Compares the bounded languages of a model and a fragment. Returns
/// Inconclusive when either side hit a cap, otherwise a set equality
/// verdict with a witness trace on mismatch.
inline EquivalenceResult languages_equal(const PowlModel& model, const BpmnFragment& frag,
                                         int max_len, std::size_t max_traces) {
  LanguageResult lhs = powl_language(model, max_len, max_traces);
  LanguageResult rhs = bpmn_language(frag, max_len, max_traces);
  if (lhs.truncated || rhs.truncated) return {EquivalenceOutcome::Inconclusive, std::nullopt};
  if (lhs.traces == rhs.traces) return {EquivalenceOutcome::Equal, std::nullopt};
  std::vector<Trace> diff;
  std::set_symmetric_difference(lhs.traces.begin(), lhs.traces.end(), rhs.traces.begin(),
                                rhs.traces.end(), std::back_inserter(diff));
  return {EquivalenceOutcome::Unequal, diff.front()};
}

inline std::string format_trace(const Trace& trace) {
  std::string s = "<";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (i) s += ", ";
    s += trace[i];
  }
  return s + ">";
}

}  // namespace powlc
