#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "powlc/transform.hpp"

namespace powlc {

struct Point {
  double x = 0, y = 0;

  friend bool operator==(const Point&, const Point&) = default;
};

struct Shape {
  std::string element_id;
  double x = 0, y = 0;
  double width = 0, height = 0;

  double right() const { return x + width; }
  double bottom() const { return y + height; }
  double cx() const { return x + width / 2; }
  double cy() const { return y + height / 2; }
};

/// Orthogonal polyline: consecutive waypoints differ in exactly one
/// coordinate.
struct EdgePath {
  std::string element_id;
  std::vector<Point> waypoints;
};

struct Diagram {
  std::vector<Shape> pool_shapes;                         // ordered top to bottom
  std::map<std::string, std::vector<Shape>> lane_shapes;  // pool -> ordered lanes
  std::map<std::string, Shape> node_shapes;
  std::map<std::string, EdgePath> edge_paths;  // flow id -> path
  std::vector<std::string> routing_fallbacks;  // flows that got the emergency route
};

// Fixed geometry; the source material leaves all of it open.
namespace geo {
inline constexpr double kTaskW = 100, kTaskH = 80;
inline constexpr double kGatewayW = 50, kGatewayH = 50;
inline constexpr double kEventW = 36, kEventH = 36;
inline constexpr double kLanePadding = 20;
inline constexpr double kLayerGap = 60;
inline constexpr double kRowGap = 30;
inline constexpr double kRowHeight = 80;
inline constexpr double kPoolHeader = 30;
inline constexpr double kLaneHeader = 30;
inline constexpr double kPoolGap = 40;
inline constexpr double kMargin = 40;
inline constexpr double kGridStep = 10;
}  // namespace geo

inline double node_width(NodeKind k) {
  if (k == NodeKind::Task) return geo::kTaskW;
  if (is_gateway(k)) return geo::kGatewayW;
  return geo::kEventW;
}
inline double node_height(NodeKind k) {
  if (k == NodeKind::Task) return geo::kTaskH;
  if (is_gateway(k)) return geo::kGatewayH;
  return geo::kEventH;
}

namespace layout_detail {

struct FlatGraph {
  std::vector<std::string> ids;  // sorted
  std::vector<FlowEdge> edges;   // sequence flows plus message flows
};

inline FlatGraph flat_graph(const CollaborationSkeleton& cs) {
  FlatGraph g;
  for (const auto& [pool, nodes] : cs.nodes_by_pool)
    for (const auto& [id, node] : nodes) g.ids.push_back(id);
  std::sort(g.ids.begin(), g.ids.end());
  std::set<FlowEdge> edges;
  for (const auto& [pool, flows] : cs.flows_by_pool)
    edges.insert(flows.begin(), flows.end());
  for (const auto& mf : cs.message_flows) edges.emplace(mf.throw_id, mf.catch_id);
  g.edges.assign(edges.begin(), edges.end());
  return g;
}

// Drops back edges found by a DFS over sorted adjacency so the layering
// step sees a DAG.
inline std::vector<FlowEdge> acyclic_edges(const FlatGraph& g) {
  std::map<std::string, std::vector<std::string>> succs;
  for (const auto& [u, v] : g.edges) succs[u].push_back(v);
  std::map<std::string, int> color;  // 0 white, 1 gray, 2 black
  std::set<FlowEdge> back;
  std::function<void(const std::string&)> dfs = [&](const std::string& u) {
    color[u] = 1;
    for (const auto& v : succs[u]) {
      if (color[v] == 1)
        back.emplace(u, v);
      else if (color[v] == 0)
        dfs(v);
    }
    color[u] = 2;
  };
  for (const auto& id : g.ids)
    if (color[id] == 0) dfs(id);

  std::vector<FlowEdge> kept;
  for (const auto& e : g.edges)
    if (!back.count(e)) kept.push_back(e);
  return kept;
}

}  // namespace layout_detail

/// L1: layered left-to-right placement over the flat graph of all flow
/// nodes, sequence flows and message flows together; resource assignments
/// play no part yet.
inline std::map<std::string, Shape> initial_layout(const CollaborationSkeleton& cs) {
  using namespace layout_detail;
  FlatGraph g = flat_graph(cs);
  std::vector<FlowEdge> dag = acyclic_edges(g);

  std::map<std::string, std::vector<std::string>> preds, succs;
  std::map<std::string, int> in_degree;
  for (const auto& id : g.ids) in_degree[id] = 0;
  for (const auto& [u, v] : dag) {
    succs[u].push_back(v);
    preds[v].push_back(u);
    ++in_degree[v];
  }

  // Longest-path rank via Kahn ordering.
  std::map<std::string, int> rank;
  std::vector<std::string> queue;
  for (const auto& id : g.ids)
    if (in_degree[id] == 0) {
      queue.push_back(id);
      rank[id] = 0;
    }
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const std::string u = queue[head];
    for (const auto& v : succs[u]) {
      rank[v] = std::max(rank.count(v) ? rank[v] : 0, rank[u] + 1);
      if (--in_degree[v] == 0) queue.push_back(v);
    }
  }

  int max_rank = 0;
  for (const auto& [id, r] : rank) max_rank = std::max(max_rank, r);
  std::vector<std::vector<std::string>> layers(static_cast<std::size_t>(max_rank + 1));
  for (const auto& id : g.ids) layers[static_cast<std::size_t>(rank[id])].push_back(id);

  // Median crossing-reduction, one left-to-right sweep.
  std::map<std::string, int> slot;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto& layer = layers[l];
    std::sort(layer.begin(), layer.end());
    if (l > 0) {
      auto median_of = [&](const std::string& id) {
        std::vector<int> positions;
        for (const auto& p : preds[id])
          if (slot.count(p)) positions.push_back(slot[p]);
        if (positions.empty()) return std::numeric_limits<double>::max();
        std::sort(positions.begin(), positions.end());
        return static_cast<double>(positions[positions.size() / 2]);
      };
      std::stable_sort(layer.begin(), layer.end(), [&](const auto& a, const auto& b) {
        return median_of(a) < median_of(b);
      });
    }
    for (std::size_t i = 0; i < layer.size(); ++i) slot[layer[i]] = static_cast<int>(i);
  }

  auto kind_of = [&cs](const std::string& id) { return cs.find_node(id)->kind; };
  std::map<std::string, Shape> placement;
  double x = geo::kMargin;
  for (const auto& layer : layers) {
    double col_width = 0;
    for (const auto& id : layer) col_width = std::max(col_width, node_width(kind_of(id)));
    for (const auto& id : layer) {
      NodeKind k = kind_of(id);
      double w = node_width(k), h = node_height(k);
      double y = geo::kMargin + slot[id] * (geo::kRowHeight + geo::kRowGap) +
                 (geo::kRowHeight - h) / 2;
      placement[id] = Shape{id, x + (col_width - w) / 2, y, w, h};
    }
    x += col_width + geo::kLayerGap;
  }
  return placement;
}

/// L2: pools top to bottom by the leftmost node each holds in the initial
/// placement; ties break alphabetically.
inline std::vector<std::string> order_pools(const CollaborationSkeleton& cs,
                                            const std::map<std::string, Shape>& rho0) {
  std::vector<std::pair<double, std::string>> keyed;
  for (const auto& [pool, nodes] : cs.nodes_by_pool) {
    double min_x = std::numeric_limits<double>::max();
    for (const auto& [id, node] : nodes) min_x = std::min(min_x, rho0.at(id).x);
    keyed.emplace_back(min_x, pool);
  }
  std::sort(keyed.begin(), keyed.end());
  std::vector<std::string> ordered;
  for (const auto& [x, pool] : keyed) ordered.push_back(pool);
  return ordered;
}

/// L3: lanes within one pool, same rule as pools.
inline std::vector<std::string> order_lanes(const CollaborationSkeleton& cs,
                                            const std::string& pool,
                                            const std::map<std::string, Shape>& rho0) {
  std::map<std::string, double> min_x;
  for (const auto& lane : cs.lanes_by_pool.at(pool))
    min_x[lane] = std::numeric_limits<double>::max();
  for (const auto& [id, node] : cs.nodes_by_pool.at(pool)) {
    const std::string& lane = cs.assignment.at(id).lane;
    min_x[lane] = std::min(min_x[lane], rho0.at(id).x);
  }
  std::vector<std::pair<double, std::string>> keyed;
  for (const auto& [lane, x] : min_x) keyed.emplace_back(x, lane);
  std::sort(keyed.begin(), keyed.end());
  std::vector<std::string> ordered;
  for (const auto& [x, lane] : keyed) ordered.push_back(lane);
  return ordered;
}

/// L4: shifts each node into its pool/lane band. Horizontal positions
/// from the initial layout are preserved; only y changes. Lanes grow to
/// fit their rows and tile the pool vertically.
inline Diagram place_nodes(const CollaborationSkeleton& cs,
                           const std::map<std::string, Shape>& rho0,
                           const std::vector<std::string>& pool_order,
                           const std::map<std::string, std::vector<std::string>>& lane_orders) {
  Diagram d;
  double min_x = std::numeric_limits<double>::max(), max_right = 0;
  for (const auto& [id, shape] : rho0) {
    min_x = std::min(min_x, shape.x);
    max_right = std::max(max_right, shape.right());
  }
  const double pool_x = min_x - geo::kLanePadding - geo::kLaneHeader - geo::kPoolHeader;
  const double pool_w = max_right + geo::kLanePadding - pool_x;

  double y = geo::kMargin;
  for (const auto& pool : pool_order) {
    const double pool_top = y;
    for (const auto& lane : lane_orders.at(pool)) {
      // Nodes of this lane, left to right; greedy interval packing keeps
      // x untouched and stacks overlapping nodes into rows.
      std::vector<std::pair<double, std::string>> members;
      for (const auto& [id, node] : cs.nodes_by_pool.at(pool))
        if (cs.assignment.at(id).lane == lane) members.emplace_back(rho0.at(id).x, id);
      std::sort(members.begin(), members.end());

      std::vector<double> row_right;
      std::map<std::string, std::size_t> row_of;
      for (const auto& [x0, id] : members) {
        std::size_t r = 0;
        for (; r < row_right.size(); ++r)
          if (x0 > row_right[r] + geo::kGridStep) break;
        if (r == row_right.size()) row_right.push_back(0);
        row_of[id] = r;
        row_right[r] = rho0.at(id).right();
      }
      const std::size_t rows = std::max<std::size_t>(row_right.size(), 1);
      const double lane_h = 2 * geo::kLanePadding + static_cast<double>(rows) * geo::kRowHeight +
                            static_cast<double>(rows - 1) * geo::kRowGap;

      d.lane_shapes[pool].push_back(
          Shape{pool + "/" + lane, pool_x + geo::kPoolHeader, y, pool_w - geo::kPoolHeader, lane_h});
      for (const auto& [x0, id] : members) {
        const Shape& init = rho0.at(id);
        double ny = y + geo::kLanePadding +
                    static_cast<double>(row_of[id]) * (geo::kRowHeight + geo::kRowGap) +
                    (geo::kRowHeight - init.height) / 2;
        d.node_shapes[id] = Shape{id, init.x, ny, init.width, init.height};
      }
      y += lane_h;
    }
    d.pool_shapes.push_back(Shape{pool, pool_x, pool_top, pool_w, y - pool_top});
    y += geo::kPoolGap;
  }
  return d;
}

namespace layout_detail {

inline bool horizontal_blocked(double y, double x1, double x2, const Shape& r) {
  if (x2 < x1) std::swap(x1, x2);
  return y > r.y && y < r.bottom() && x2 > r.x && x1 < r.right();
}

inline bool vertical_blocked(double x, double y1, double y2, const Shape& r) {
  if (y2 < y1) std::swap(y1, y2);
  return x > r.x && x < r.right() && y2 > r.y && y1 < r.bottom();
}

inline bool segment_blocked(const Point& a, const Point& b, const std::vector<Shape>& obstacles) {
  for (const auto& r : obstacles) {
    if (a.x == b.x) {
      if (vertical_blocked(a.x, a.y, b.y, r)) return true;
    } else if (horizontal_blocked(a.y, a.x, b.x, r)) {
      return true;
    }
  }
  return false;
}

struct Region {
  double x1, y1, x2, y2;

  bool contains(const Point& p) const {
    return p.x >= x1 && p.x <= x2 && p.y >= y1 && p.y <= y2;
  }
};

// Orthogonal grid router: Dijkstra over (grid point, heading) with a turn
// penalty, all segments checked against node interiors.
class GridRouter {
 public:
  GridRouter(Region region, std::vector<Shape> obstacles)
      : region_(region), obstacles_(std::move(obstacles)) {
    gx0_ = std::floor(region.x1 / geo::kGridStep) * geo::kGridStep;
    gy0_ = std::floor(region.y1 / geo::kGridStep) * geo::kGridStep;
    nx_ = static_cast<int>((region.x2 - gx0_) / geo::kGridStep) + 1;
    ny_ = static_cast<int>((region.y2 - gy0_) / geo::kGridStep) + 1;
  }

  // Returns grid waypoints from `from` to `to` (inclusive), or empty.
  std::vector<Point> route(Point from, int start_dir, Point to) {
    const int sx = index_x(from.x), sy = index_y(from.y);
    const int tx = index_x(to.x), ty = index_y(to.y);
    if (!valid(sx, sy) || !valid(tx, ty)) return {};

    const std::size_t states = static_cast<std::size_t>(nx_) * ny_ * 4;
    std::vector<double> dist(states, std::numeric_limits<double>::max());
    std::vector<int> parent(states, -1);
    using Entry = std::pair<double, int>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;

    auto push = [&](int state, double cost, int from_state) {
      if (cost < dist[static_cast<std::size_t>(state)]) {
        dist[static_cast<std::size_t>(state)] = cost;
        parent[static_cast<std::size_t>(state)] = from_state;
        heap.emplace(cost, state);
      }
    };
    push(id(sx, sy, start_dir), 0, -1);

    static constexpr int dx[4] = {1, -1, 0, 0};
    static constexpr int dy[4] = {0, 0, 1, -1};
    int goal_state = -1;
    while (!heap.empty()) {
      auto [cost, state] = heap.top();
      heap.pop();
      if (cost > dist[static_cast<std::size_t>(state)]) continue;
      auto [x, y, dir] = unpack(state);
      if (x == tx && y == ty) {
        goal_state = state;
        break;
      }
      for (int nd = 0; nd < 4; ++nd) {
        int nxp = x + dx[nd], nyp = y + dy[nd];
        if (!valid(nxp, nyp)) continue;
        Point a = point(x, y), b = point(nxp, nyp);
        if (!region_.contains(b) || segment_blocked(a, b, obstacles_)) continue;
        double step_cost = geo::kGridStep + (nd == dir ? 0 : kTurnPenalty);
        push(id(nxp, nyp, nd), cost + step_cost, state);
      }
    }
    if (goal_state < 0) return {};

    std::vector<Point> rev;
    for (int s = goal_state; s >= 0; s = parent[static_cast<std::size_t>(s)]) {
      auto [x, y, dir] = unpack(s);
      rev.push_back(point(x, y));
    }
    std::reverse(rev.begin(), rev.end());
    return rev;
  }

 private:
  static constexpr double kTurnPenalty = 25;

  int index_x(double x) const {
    return static_cast<int>(std::llround((x - gx0_) / geo::kGridStep));
  }
  int index_y(double y) const {
    return static_cast<int>(std::llround((y - gy0_) / geo::kGridStep));
  }
  bool valid(int x, int y) const { return x >= 0 && x < nx_ && y >= 0 && y < ny_; }
  int id(int x, int y, int dir) const { return ((x * ny_) + y) * 4 + dir; }
  std::tuple<int, int, int> unpack(int state) const {
    return {state / (ny_ * 4), (state / 4) % ny_, state % 4};
  }
  Point point(int x, int y) const {
    return {gx0_ + x * geo::kGridStep, gy0_ + y * geo::kGridStep};
  }

  Region region_;
  std::vector<Shape> obstacles_;
  double gx0_, gy0_;
  int nx_, ny_;
};

inline void simplify(std::vector<Point>& pts) {
  std::vector<Point> out;
  for (const auto& p : pts) {
    if (!out.empty() && out.back() == p) continue;
    while (out.size() >= 2) {
      const Point& a = out[out.size() - 2];
      const Point& b = out.back();
      if ((a.x == b.x && b.x == p.x) || (a.y == b.y && b.y == p.y))
        out.pop_back();
      else
        break;
    }
    out.push_back(p);
  }
  pts = std::move(out);
}

// 0:+x 1:-x 2:+y 3:-y
inline Point step_toward_grid(const Point& p, int dir) {
  switch (dir) {
    case 0: return {std::floor(p.x / geo::kGridStep + 1) * geo::kGridStep, p.y};
    case 1: return {std::ceil(p.x / geo::kGridStep - 1) * geo::kGridStep, p.y};
    case 2: return {p.x, std::floor(p.y / geo::kGridStep + 1) * geo::kGridStep};
    default: return {p.x, std::ceil(p.y / geo::kGridStep - 1) * geo::kGridStep};
  }
}

inline Point snap_perpendicular(const Point& p, int dir) {
  if (dir == 0 || dir == 1) return {p.x, std::round(p.y / geo::kGridStep) * geo::kGridStep};
  return {std::round(p.x / geo::kGridStep) * geo::kGridStep, p.y};
}

struct RouteRequest {
  std::string flow_id;
  Point from, to;
  int exit_dir, approach_dir;  // 0:+x 1:-x 2:+y 3:-y
  Region region;
};

inline EdgePath route_one(const RouteRequest& rq, const std::vector<Shape>& obstacles,
                          std::vector<std::string>& fallbacks) {
  auto make = [&rq](std::vector<Point> pts) {
    simplify(pts);
    return EdgePath{rq.flow_id, std::move(pts)};
  };

  // Straight shot when the ports line up and nothing is in the way.
  const bool horizontal = rq.exit_dir < 2;
  if (horizontal && rq.from.y == rq.to.y && rq.exit_dir == 0 && rq.to.x > rq.from.x &&
      !segment_blocked(rq.from, rq.to, obstacles)) {
    return make({rq.from, rq.to});
  }
  if (!horizontal && rq.from.x == rq.to.x &&
      ((rq.exit_dir == 2 && rq.to.y > rq.from.y) || (rq.exit_dir == 3 && rq.to.y < rq.from.y)) &&
      !segment_blocked(rq.from, rq.to, obstacles)) {
    return make({rq.from, rq.to});
  }

  const Point out1 = step_toward_grid(rq.from, rq.exit_dir);
  const Point out2 = snap_perpendicular(out1, rq.exit_dir);
  const int back_dir = rq.approach_dir ^ 1;  // opposite heading
  const Point in1 = step_toward_grid(rq.to, back_dir);
  const Point in2 = snap_perpendicular(in1, back_dir);

  bool stubs_ok = !segment_blocked(rq.from, out1, obstacles) &&
                  !segment_blocked(out1, out2, obstacles) &&
                  !segment_blocked(in2, in1, obstacles) &&
                  !segment_blocked(in1, rq.to, obstacles) && rq.region.contains(out2) &&
                  rq.region.contains(in2);
  if (stubs_ok) {
    int start_dir = out2 == out1 ? rq.exit_dir : (rq.exit_dir < 2 ? (out2.y > out1.y ? 2 : 3)
                                                                   : (out2.x > out1.x ? 0 : 1));
    GridRouter router(rq.region, obstacles);
    std::vector<Point> grid = router.route(out2, start_dir, in2);
    if (!grid.empty()) {
      std::vector<Point> pts{rq.from, out1};
      pts.insert(pts.end(), grid.begin(), grid.end());
      pts.push_back(in1);
      pts.push_back(rq.to);
      return make(std::move(pts));
    }
  }

  fallbacks.push_back(rq.flow_id);
  if (horizontal) {
    double mid_x = (rq.from.x + rq.to.x) / 2;
    return make({rq.from, {mid_x, rq.from.y}, {mid_x, rq.to.y}, rq.to});
  }
  double mid_y = (rq.from.y + rq.to.y) / 2;
  return make({rq.from, {rq.from.x, mid_y}, {rq.to.x, mid_y}, rq.to});
}

}  // namespace layout_detail

/// L5: orthogonal, obstacle-aware waypoints for every sequence and
/// message flow. Sequence flows stay inside their pool; a 3-segment
/// emergency route is emitted and flagged when the grid search fails.
inline Diagram route_edges(Diagram d, const CollaborationSkeleton& cs) {
  using namespace layout_detail;

  std::vector<Shape> obstacles;
  for (const auto& [id, shape] : d.node_shapes) obstacles.push_back(shape);

  std::map<std::string, const Shape*> pool_rects;
  for (const auto& shape : d.pool_shapes) pool_rects[shape.element_id] = &shape;

  std::vector<RouteRequest> requests;
  for (const auto& [pool, flows] : cs.flows_by_pool) {
    const Shape& pr = *pool_rects.at(pool);
    Region region{pr.x + geo::kPoolHeader + geo::kLaneHeader, pr.y, pr.right(), pr.bottom()};
    for (const auto& [u, v] : flows) {
      const Shape& su = d.node_shapes.at(u);
      const Shape& sv = d.node_shapes.at(v);
      requests.push_back({sequence_flow_id(u, v),
                          {su.right(), su.cy()},
                          {sv.x, sv.cy()},
                          0,
                          0,
                          region});
    }
  }

  double min_x = std::numeric_limits<double>::max(), min_y = min_x, max_x = 0, max_y = 0;
  for (const auto& shape : d.pool_shapes) {
    min_x = std::min(min_x, shape.x);
    min_y = std::min(min_y, shape.y);
    max_x = std::max(max_x, shape.right());
    max_y = std::max(max_y, shape.bottom());
  }
  Region everywhere{min_x - geo::kMargin, min_y - geo::kMargin, max_x + geo::kMargin,
                    max_y + geo::kMargin};
  for (const auto& mf : cs.message_flows) {
    const Shape& st = d.node_shapes.at(mf.throw_id);
    const Shape& sc = d.node_shapes.at(mf.catch_id);
    if (st.cy() < sc.cy())  // throwing pool sits above; leave through the bottom
      requests.push_back({message_flow_id(mf),
                          {st.cx(), st.bottom()},
                          {sc.cx(), sc.y},
                          2,
                          2,
                          everywhere});
    else
      requests.push_back({message_flow_id(mf),
                          {st.cx(), st.y},
                          {sc.cx(), sc.bottom()},
                          3,
                          3,
                          everywhere});
  }

  for (const auto& rq : requests)
    d.edge_paths[rq.flow_id] = route_one(rq, obstacles, d.routing_fallbacks);
  return d;
}

/// Runs the five layout steps in sequence.
inline Diagram layout(const CollaborationSkeleton& cs) {
  auto rho0 = initial_layout(cs);
  auto pool_order = order_pools(cs, rho0);
  std::map<std::string, std::vector<std::string>> lane_orders;
  for (const auto& pool : pool_order) lane_orders[pool] = order_lanes(cs, pool, rho0);
  Diagram d = place_nodes(cs, rho0, pool_order, lane_orders);
  return route_edges(std::move(d), cs);
}

}  // namespace powlc
