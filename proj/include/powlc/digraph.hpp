#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace powlc {

// Edges over child indices. Relations are stored as arbitrary edge sets;
// the strict partial order they denote is the transitive closure.
using IndexEdge = std::pair<int, int>;
using IndexEdgeSet = std::set<IndexEdge>;

struct StructuralError : std::runtime_error {
  explicit StructuralError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline std::vector<std::vector<int>> adjacency(const IndexEdgeSet& edges, int n) {
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (const auto& [a, b] : edges) {
    if (a < 0 || a >= n || b < 0 || b >= n)
      throw StructuralError("edge (" + std::to_string(a) + "," + std::to_string(b) +
                            ") out of range for " + std::to_string(n) + " nodes");
    adj[static_cast<std::size_t>(a)].push_back(b);
  }
  return adj;
}

}  // namespace detail

/// Returns one directed cycle as a node sequence whose first and last
/// entries coincide, or nullopt when the graph is acyclic.
inline std::optional<std::vector<int>> find_cycle(const IndexEdgeSet& edges, int n) {
  auto adj = detail::adjacency(edges, n);
  enum class Color { White, Gray, Black };
  std::vector<Color> color(static_cast<std::size_t>(n), Color::White);
  std::vector<int> parent(static_cast<std::size_t>(n), -1);

  // Iterative DFS; a gray target closes a cycle.
  for (int root = 0; root < n; ++root) {
    if (color[static_cast<std::size_t>(root)] != Color::White) continue;
    std::vector<std::pair<int, std::size_t>> stack{{root, 0}};
    color[static_cast<std::size_t>(root)] = Color::Gray;
    while (!stack.empty()) {
      auto& [u, next] = stack.back();
      const auto& out = adj[static_cast<std::size_t>(u)];
      if (next < out.size()) {
        int v = out[next++];
        if (color[static_cast<std::size_t>(v)] == Color::Gray) {
          std::vector<int> cycle{v};
          for (int w = u; w != v; w = parent[static_cast<std::size_t>(w)]) cycle.push_back(w);
          cycle.push_back(v);
          std::reverse(cycle.begin() + 1, cycle.end() - 1);
          return cycle;
        }
        if (color[static_cast<std::size_t>(v)] == Color::White) {
          color[static_cast<std::size_t>(v)] = Color::Gray;
          parent[static_cast<std::size_t>(v)] = u;
          stack.emplace_back(v, 0);
        }
      } else {
        color[static_cast<std::size_t>(u)] = Color::Black;
        stack.pop_back();
      }
    }
  }
  return std::nullopt;
}

inline std::string format_cycle(const std::vector<int>& cycle) {
  std::string s;
  for (std::size_t i = 0; i < cycle.size(); ++i) {
    if (i) s += " -> ";
    s += std::to_string(cycle[i]);
  }
  return s;
}

/// Reachability closure of an acyclic relation; throws StructuralError
/// naming one cycle otherwise.
inline IndexEdgeSet transitive_closure(const IndexEdgeSet& edges, int n) {
  if (auto cycle = find_cycle(edges, n))
    throw StructuralError("cycle in order relation: " + format_cycle(*cycle));
  auto adj = detail::adjacency(edges, n);
  IndexEdgeSet closure;
  for (int s = 0; s < n; ++s) {
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    std::vector<int> stack{s};
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int v : adj[static_cast<std::size_t>(u)]) {
        if (seen[static_cast<std::size_t>(v)]) continue;
        seen[static_cast<std::size_t>(v)] = true;
        closure.emplace(s, v);
        stack.push_back(v);
      }
    }
  }
  return closure;
}

/// Unique minimal relation with the same closure: keeps x -> y iff no z
/// has both x -> z and z -> y in the closure.
inline IndexEdgeSet transitive_reduction(const IndexEdgeSet& edges, int n) {
  IndexEdgeSet closure = transitive_closure(edges, n);
  IndexEdgeSet reduced;
  for (const auto& [x, y] : closure) {
    bool shortcut = false;
    for (int z = 0; z < n && !shortcut; ++z)
      shortcut = closure.count({x, z}) && closure.count({z, y});
    if (!shortcut) reduced.emplace(x, y);
  }
  return reduced;
}

}  // namespace powlc
