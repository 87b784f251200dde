#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <queue>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "geoground/error.hpp"
#include "geoground/geo_math.hpp"

namespace geoground::nav {

// x grows east (columns), y grows south (rows).
struct GridCoord {
  int x = 0;
  int y = 0;

  friend auto operator<=>(const GridCoord&, const GridCoord&) = default;
};

inline constexpr double kSqrt2 = std::numbers::sqrt2;

// Compass order starting at north, clockwise.
inline constexpr std::array<GridCoord, 8> kDirections = {
    GridCoord{0, -1}, GridCoord{1, -1}, GridCoord{1, 0},  GridCoord{1, 1},
    GridCoord{0, 1},  GridCoord{-1, 1}, GridCoord{-1, 0}, GridCoord{-1, -1}};

inline double euclidean(GridCoord a, GridCoord b) { return std::hypot(double(a.x - b.x), double(a.y - b.y)); }

inline int chebyshev(GridCoord a, GridCoord b) { return std::max(std::abs(a.x - b.x), std::abs(a.y - b.y)); }

inline double octile(GridCoord a, GridCoord b) {
  const int dx = std::abs(a.x - b.x), dy = std::abs(a.y - b.y);
  return std::abs(dx - dy) + kSqrt2 * std::min(dx, dy);
}

class OccupancyGrid {
 public:
  OccupancyGrid() = default;
  OccupancyGrid(int width, int height, double cell_size_m = 1.0)
      : width_(width), height_(height), cell_size_m_(cell_size_m),
        blocked_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0) {
    if (width <= 0 || height <= 0) fail(ErrorCode::MalformedWorld, "grid dimensions must be positive");
    if (!(cell_size_m > 0.0)) fail(ErrorCode::MalformedWorld, "cell size must be positive");
  }

  int width() const { return width_; }
  int height() const { return height_; }
  double cell_size_m() const { return cell_size_m_; }

  bool in_bounds(GridCoord c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }
  bool walkable(GridCoord c) const { return in_bounds(c) && !blocked_[index(c)]; }
  void set_blocked(GridCoord c, bool blocked = true) { blocked_.at(index(c)) = blocked ? 1 : 0; }

  // One 8-connected move. Diagonals may not cut a blocked corner.
  bool can_step(GridCoord from, GridCoord to) const {
    const int dx = to.x - from.x, dy = to.y - from.y;
    if ((dx == 0 && dy == 0) || std::abs(dx) > 1 || std::abs(dy) > 1) return false;
    if (!walkable(to)) return false;
    if (dx != 0 && dy != 0) return walkable({from.x + dx, from.y}) && walkable({from.x, from.y + dy});
    return true;
  }

  static double step_cost(GridCoord from, GridCoord to) { return (from.x != to.x && from.y != to.y) ? kSqrt2 : 1.0; }

  std::size_t index(GridCoord c) const { return static_cast<std::size_t>(c.y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(c.x); }

  const std::vector<std::uint8_t>& cells() const { return blocked_; }

 private:
  int width_ = 0;
  int height_ = 0;
  double cell_size_m_ = 1.0;
  std::vector<std::uint8_t> blocked_;
};

struct RoadEdge {
  int a = 0;
  int b = 0;
};

struct RoadGraph {
  std::vector<GridCoord> nodes;
  std::vector<RoadEdge> edges;
};

// 8-connected digital line from a to b (both included), Bresenham style.
inline std::vector<GridCoord> digital_line(GridCoord a, GridCoord b) {
  std::vector<GridCoord> out{a};
  const int dx = std::abs(b.x - a.x), dy = std::abs(b.y - a.y);
  const int sx = a.x < b.x ? 1 : -1, sy = a.y < b.y ? 1 : -1;
  int err = dx - dy;
  GridCoord c = a;
  while (c != b) {
    const int e2 = 2 * err;
    GridCoord next = c;
    if (e2 > -dy) {
      err -= dy;
      next.x += sx;
    }
    if (e2 < dx) {
      err += dx;
      next.y += sy;
    }
    c = next;
    out.push_back(c);
  }
  return out;
}

struct World {
  OccupancyGrid grid;
  RoadGraph roads;
  GridCoord start;
  GridCoord goal;

  // Identity of the world contents, carried by every PathResult.
  std::uint64_t fingerprint() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](std::uint64_t v) {
      for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xff;
        h *= 1099511628211ULL;
      }
    };
    mix(static_cast<std::uint64_t>(grid.width()));
    mix(static_cast<std::uint64_t>(grid.height()));
    std::uint64_t cs;
    const double cell = grid.cell_size_m();
    static_assert(sizeof(cs) == sizeof(cell));
    std::memcpy(&cs, &cell, sizeof(cs));
    mix(cs);
    for (auto b : grid.cells()) mix(b);
    for (auto c : {start, goal}) {
      mix(static_cast<std::uint64_t>(c.x));
      mix(static_cast<std::uint64_t>(c.y));
    }
    for (auto n : roads.nodes) {
      mix(static_cast<std::uint64_t>(n.x));
      mix(static_cast<std::uint64_t>(n.y));
    }
    for (auto e : roads.edges) {
      mix(static_cast<std::uint64_t>(e.a));
      mix(static_cast<std::uint64_t>(e.b));
    }
    return h;
  }

  void validate() const {
    if (!grid.walkable(start)) fail(ErrorCode::MalformedWorld, "start cell is blocked or out of bounds");
    if (!grid.walkable(goal)) fail(ErrorCode::MalformedWorld, "goal cell is blocked or out of bounds");
    for (auto n : roads.nodes)
      if (!grid.walkable(n)) fail(ErrorCode::MalformedWorld, "road node on a blocked cell");
    for (auto e : roads.edges) {
      if (e.a < 0 || e.b < 0 || e.a >= static_cast<int>(roads.nodes.size()) || e.b >= static_cast<int>(roads.nodes.size()))
        fail(ErrorCode::MalformedWorld, "road edge references a missing node");
      const auto line = digital_line(roads.nodes[static_cast<std::size_t>(e.a)], roads.nodes[static_cast<std::size_t>(e.b)]);
      for (std::size_t i = 1; i < line.size(); ++i)
        if (!grid.can_step(line[i - 1], line[i])) fail(ErrorCode::MalformedWorld, "road edge crosses a blocked cell");
    }
  }
};

struct PathResult {
  std::vector<GridCoord> waypoints;
  double length_m = 0.0;
  bool reached = false;
  int steps = 0;
  std::uint64_t world_fingerprint = 0;
};

namespace detail {

inline void append(PathResult& path, const std::vector<GridCoord>& cells, double cell_size) {
  for (const auto& c : cells) {
    if (!path.waypoints.empty()) {
      if (path.waypoints.back() == c) continue;
      path.length_m += OccupancyGrid::step_cost(path.waypoints.back(), c) * cell_size;
      ++path.steps;
    }
    path.waypoints.push_back(c);
  }
}

// Uniform-cost search on the walkable grid.
inline std::optional<std::vector<GridCoord>> grid_shortest_path(const OccupancyGrid& grid, GridCoord from, GridCoord to) {
  if (!grid.walkable(from) || !grid.walkable(to)) return std::nullopt;
  const std::size_t n = static_cast<std::size_t>(grid.width()) * static_cast<std::size_t>(grid.height());
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  std::vector<std::int64_t> parent(n, -1);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  dist[grid.index(from)] = 0.0;
  open.push({0.0, grid.index(from)});
  const std::size_t target = grid.index(to);
  while (!open.empty()) {
    auto [d, idx] = open.top();
    open.pop();
    if (d > dist[idx]) continue;
    if (idx == target) break;
    const GridCoord c{static_cast<int>(idx % static_cast<std::size_t>(grid.width())),
                      static_cast<int>(idx / static_cast<std::size_t>(grid.width()))};
    for (auto dir : kDirections) {
      const GridCoord nb{c.x + dir.x, c.y + dir.y};
      if (!grid.can_step(c, nb)) continue;
      const double nd = d + OccupancyGrid::step_cost(c, nb);
      const auto ni = grid.index(nb);
      if (nd < dist[ni]) {
        dist[ni] = nd;
        parent[ni] = static_cast<std::int64_t>(idx);
        open.push({nd, ni});
      }
    }
  }
  if (!std::isfinite(dist[target])) return std::nullopt;
  std::vector<GridCoord> path;
  for (std::int64_t i = static_cast<std::int64_t>(target); i >= 0; i = parent[static_cast<std::size_t>(i)]) {
    path.push_back({static_cast<int>(static_cast<std::size_t>(i) % static_cast<std::size_t>(grid.width())),
                    static_cast<int>(static_cast<std::size_t>(i) / static_cast<std::size_t>(grid.width()))});
    if (static_cast<std::size_t>(i) == grid.index(from)) break;
  }
  std::reverse(path.begin(), path.end());
  return path;
}

inline std::optional<int> nearest_road_node(const World& w, GridCoord c, double max_cells) {
  std::optional<int> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < w.roads.nodes.size(); ++i) {
    const double d = euclidean(c, w.roads.nodes[i]);
    if (d <= max_cells && d < best_d) {
      best_d = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

}  // namespace detail

inline constexpr double kRampReachCells = 10.0;

// Shortest route constrained to the road graph, joined to start and goal by
// grid ramps to the nearest road node (within ten cells).
inline PathResult plan_turn_by_turn(const World& w) {
  w.validate();
  const auto entry = detail::nearest_road_node(w, w.start, kRampReachCells);
  const auto exit = detail::nearest_road_node(w, w.goal, kRampReachCells);
  if (!entry || !exit) fail(ErrorCode::Unreachable, "start or goal is more than ten cells from any road node");

  const auto& nodes = w.roads.nodes;
  std::vector<std::vector<std::pair<int, double>>> adj(nodes.size());
  for (const auto& e : w.roads.edges) {
    const double cost = octile(nodes[static_cast<std::size_t>(e.a)], nodes[static_cast<std::size_t>(e.b)]);
    adj[static_cast<std::size_t>(e.a)].push_back({e.b, cost});
    adj[static_cast<std::size_t>(e.b)].push_back({e.a, cost});
  }
  std::vector<double> dist(nodes.size(), std::numeric_limits<double>::infinity());
  std::vector<int> parent(nodes.size(), -1);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  dist[static_cast<std::size_t>(*entry)] = 0.0;
  open.push({0.0, *entry});
  while (!open.empty()) {
    auto [d, u] = open.top();
    open.pop();
    if (d > dist[static_cast<std::size_t>(u)]) continue;
    for (auto [v, cost] : adj[static_cast<std::size_t>(u)]) {
      if (d + cost < dist[static_cast<std::size_t>(v)]) {
        dist[static_cast<std::size_t>(v)] = d + cost;
        parent[static_cast<std::size_t>(v)] = u;
        open.push({d + cost, v});
      }
    }
  }
  if (!std::isfinite(dist[static_cast<std::size_t>(*exit)])) fail(ErrorCode::Unreachable, "road graph does not connect start and goal");

  const auto ramp_in = detail::grid_shortest_path(w.grid, w.start, nodes[static_cast<std::size_t>(*entry)]);
  const auto ramp_out = detail::grid_shortest_path(w.grid, nodes[static_cast<std::size_t>(*exit)], w.goal);
  if (!ramp_in || !ramp_out) fail(ErrorCode::Unreachable, "no walkable ramp between endpoints and the road");

  std::vector<int> route;
  for (int v = *exit; v != -1; v = parent[static_cast<std::size_t>(v)]) route.push_back(v);
  std::reverse(route.begin(), route.end());

  PathResult path;
  path.world_fingerprint = w.fingerprint();
  const double cs = w.grid.cell_size_m();
  detail::append(path, *ramp_in, cs);
  // Edges are rasterized a -> b exactly as validate() checked them; a line
  // drawn from the other end can pick different cells.
  for (std::size_t i = 1; i < route.size(); ++i) {
    const int u = route[i - 1], v = route[i];
    const bool forward = std::any_of(w.roads.edges.begin(), w.roads.edges.end(), [&](const RoadEdge& e) { return e.a == u && e.b == v; });
    auto line = forward ? digital_line(nodes[static_cast<std::size_t>(u)], nodes[static_cast<std::size_t>(v)])
                        : digital_line(nodes[static_cast<std::size_t>(v)], nodes[static_cast<std::size_t>(u)]);
    if (!forward) std::reverse(line.begin(), line.end());
    detail::append(path, line, cs);
  }
  detail::append(path, *ramp_out, cs);
  path.reached = path.waypoints.back() == w.goal;
  return path;
}

namespace detail {

// Compass bearing in grid space (north is -y).
inline double grid_bearing(GridCoord from, GridCoord to) {
  return normalize_degrees(rad_to_deg(std::atan2(double(to.x - from.x), double(from.y - to.y))));
}

// Signed deviation of direction d from a bearing, in (-180, 180].
inline double deviation(int dir, double bearing) {
  double r = normalize_degrees(dir * 45.0 - bearing);
  return r > 180.0 ? r - 360.0 : r;
}

inline bool touches_obstacle(const OccupancyGrid& g, GridCoord c) {
  for (auto d : kDirections)
    if (!g.walkable({c.x + d.x, c.y + d.y})) return true;
  return false;
}

}  // namespace detail

// Human-centered guidance: at every step walk to the walkable neighbour that
// best matches the live relative direction to the goal. When every forward
// neighbour is blocked, follow the obstacle boundary (hand picked by the side
// with the smaller deviation) until the goal direction reopens closer to the
// goal than where the wall was hit. Stops after 10 * L-inf(start, goal) steps.
inline PathResult simulate_bearing_follower(const World& w) {
  w.validate();
  const auto& g = w.grid;
  PathResult path;
  path.world_fingerprint = w.fingerprint();
  path.waypoints.push_back(w.start);
  const int budget = 10 * chebyshev(w.start, w.goal);

  GridCoord pos = w.start;
  bool following = false;
  int hand = 0;  // +1: turned right, obstacle on the left; -1 mirrored
  int dir = 0;
  double hit_distance = 0.0;

  auto step_to = [&](int d) {
    const GridCoord next{pos.x + kDirections[static_cast<std::size_t>(d)].x, pos.y + kDirections[static_cast<std::size_t>(d)].y};
    path.length_m += OccupancyGrid::step_cost(pos, next) * g.cell_size_m();
    ++path.steps;
    pos = next;
    dir = d;
    path.waypoints.push_back(pos);
  };
  auto legal = [&](int d) {
    return g.can_step(pos, {pos.x + kDirections[static_cast<std::size_t>(d)].x, pos.y + kDirections[static_cast<std::size_t>(d)].y});
  };
  // Best forward move (|deviation| < 90), ties toward the lower direction index.
  auto greedy_choice = [&](double bearing) -> std::optional<int> {
    std::optional<int> best;
    double best_dev = 0.0;
    for (int d = 0; d < 8; ++d) {
      const double dev = std::abs(detail::deviation(d, bearing));
      if (dev >= 90.0 || !legal(d)) continue;
      if (!best || dev < best_dev) {
        best = d;
        best_dev = dev;
      }
    }
    return best;
  };

  while (pos != w.goal && path.steps < budget) {
    const double bearing = detail::grid_bearing(pos, w.goal);
    const auto forward = greedy_choice(bearing);
    if (following && forward && euclidean(pos, w.goal) < hit_distance - 1e-9) following = false;
    if (!following) {
      if (forward) {
        step_to(*forward);
        continue;
      }
      std::optional<int> best;
      double best_dev = 0.0;
      for (int d = 0; d < 8; ++d) {
        if (!legal(d)) continue;
        const double dev = detail::deviation(d, bearing);
        if (!best || std::abs(dev) < std::abs(best_dev) || (std::abs(dev) == std::abs(best_dev) && dev > best_dev)) {
          best = d;
          best_dev = dev;
        }
      }
      if (!best) break;  // boxed in
      following = true;
      hand = best_dev >= 0.0 ? 1 : -1;
      hit_distance = euclidean(pos, w.goal);
      step_to(*best);
      continue;
    }
    // Boundary following: sweep from the obstacle side toward the open side
    // and prefer moves that keep contact with the obstacle.
    std::optional<int> chosen, fallback;
    for (int k = -2; k <= 4; ++k) {
      const int d = ((dir + (hand > 0 ? k : -k)) % 8 + 8) % 8;
      if (!legal(d)) continue;
      const GridCoord next{pos.x + kDirections[static_cast<std::size_t>(d)].x, pos.y + kDirections[static_cast<std::size_t>(d)].y};
      if (!fallback) fallback = d;
      if (detail::touches_obstacle(g, next)) {
        chosen = d;
        break;
      }
    }
    if (!chosen) chosen = fallback;
    if (!chosen) break;
    step_to(*chosen);
  }
  path.reached = pos == w.goal;
  return path;
}

struct DetourReport {
  double straight_line_m = 0.0;
  double length_a_m = 0.0;
  double length_b_m = 0.0;
  double detour_a = 1.0;  // path length / straight-line distance
  double detour_b = 1.0;
  double length_ratio = 1.0;  // a / b
  bool both_reached = false;
};

inline DetourReport compare_paths(const PathResult& a, const PathResult& b, const World& w) {
  const auto fp = w.fingerprint();
  if (a.world_fingerprint != fp || b.world_fingerprint != fp)
    fail(ErrorCode::IncomparablePaths, "paths were computed on different worlds");
  DetourReport r;
  r.straight_line_m = euclidean(w.start, w.goal) * w.grid.cell_size_m();
  r.length_a_m = a.length_m;
  r.length_b_m = b.length_m;
  if (r.straight_line_m > 0.0) {
    r.detour_a = a.length_m / r.straight_line_m;
    r.detour_b = b.length_m / r.straight_line_m;
  }
  if (b.length_m > 0.0) r.length_ratio = a.length_m / b.length_m;
  else r.length_ratio = a.length_m > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
  r.both_reached = a.reached && b.reached;
  return r;
}

inline nlohmann::json to_json(const DetourReport& r) {
  return {{"straight_line_m", r.straight_line_m}, {"length_a_m", r.length_a_m}, {"length_b_m", r.length_b_m},
          {"detour_a", r.detour_a},               {"detour_b", r.detour_b},     {"length_ratio", r.length_ratio},
          {"both_reached", r.both_reached}};
}

inline std::string format_table(const DetourReport& r, std::string_view name_a = "bearing", std::string_view name_b = "turn-by-turn") {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "| path | length (m) | detour |\n|---|---|---|\n| %.*s | %.2f | %.3f |\n| %.*s | %.2f | %.3f |\n"
                "| straight line | %.2f | 1.000 |\n\nratio %.*s/%.*s = %.3f, both reached: %s\n",
                static_cast<int>(name_a.size()), name_a.data(), r.length_a_m, r.detour_a,
                static_cast<int>(name_b.size()), name_b.data(), r.length_b_m, r.detour_b, r.straight_line_m,
                static_cast<int>(name_a.size()), name_a.data(), static_cast<int>(name_b.size()), name_b.data(),
                r.length_ratio, r.both_reached ? "yes" : "no");
  return buf;
}

inline nlohmann::json to_json(const PathResult& p) {
  auto pts = nlohmann::json::array();
  for (auto c : p.waypoints) pts.push_back({c.x, c.y});
  return {{"waypoints", std::move(pts)}, {"length_m", p.length_m}, {"reached", p.reached}, {"steps", p.steps}};
}

// ASCII world: '#' blocked, '.' walkable, 'S' start, 'G' goal.
inline World parse_world(std::string_view ascii, const nlohmann::json& roads = nlohmann::json::object()) {
  std::vector<std::string> rows;
  std::stringstream ss{std::string(ascii)};
  std::string line;
  while (std::getline(ss, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    rows.push_back(line);
  }
  if (rows.empty()) fail(ErrorCode::MalformedWorld, "world grid is empty");
  const int width = static_cast<int>(rows.front().size());
  double cell = 1.0;
  try {
    cell = roads.value("cell_size_m", 1.0);
  } catch (const nlohmann::json::exception&) {
    fail(ErrorCode::MalformedWorld, "cell_size_m must be a number");
  }
  World w{OccupancyGrid(width, static_cast<int>(rows.size()), cell), {}, {}, {}};
  int starts = 0, goals = 0;
  for (int y = 0; y < static_cast<int>(rows.size()); ++y) {
    if (static_cast<int>(rows[static_cast<std::size_t>(y)].size()) != width)
      fail(ErrorCode::MalformedWorld, "world rows have different lengths");
    for (int x = 0; x < width; ++x) {
      switch (rows[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)]) {
        case '#': w.grid.set_blocked({x, y}); break;
        case '.': break;
        case 'S': w.start = {x, y}; ++starts; break;
        case 'G': w.goal = {x, y}; ++goals; break;
        default: fail(ErrorCode::MalformedWorld, "unexpected character in world grid");
      }
    }
  }
  if (starts != 1 || goals != 1) fail(ErrorCode::MalformedWorld, "world needs exactly one S and one G");
  try {
    for (const auto& n : roads.value("nodes", nlohmann::json::array()))
      w.roads.nodes.push_back({n.at(0).get<int>(), n.at(1).get<int>()});
    for (const auto& e : roads.value("edges", nlohmann::json::array()))
      w.roads.edges.push_back({e.at(0).get<int>(), e.at(1).get<int>()});
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::MalformedWorld, std::string("malformed road graph: ") + e.what());
  }
  w.validate();
  return w;
}

inline World load_world(const std::string& grid_path, const std::optional<std::string>& roads_path = {}) {
  auto slurp = [](const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::MalformedWorld, "cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
  };
  nlohmann::json roads = nlohmann::json::object();
  if (roads_path) {
    try {
      roads = nlohmann::json::parse(slurp(*roads_path));
    } catch (const nlohmann::json::parse_error& e) {
      fail(ErrorCode::MalformedWorld, std::string("road sidecar is not JSON: ") + e.what());
    }
  }
  return parse_world(slurp(grid_path), roads);
}

}  // namespace geoground::nav
