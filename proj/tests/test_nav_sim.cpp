#include <random>

#include <gtest/gtest.h>

#include "geoground/nav_sim.hpp"

using namespace geoground;
using namespace geoground::nav;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Independent validity check: 8-adjacent, walkable, no corner cutting, and
// length equal to the sum of step costs.
::testing::AssertionResult valid_path(const PathResult& p, const World& w) {
  if (p.waypoints.empty()) return ::testing::AssertionFailure() << "empty path";
  if (p.waypoints.front() != w.start) return ::testing::AssertionFailure() << "does not start at S";
  double len = 0.0;
  for (std::size_t i = 0; i < p.waypoints.size(); ++i) {
    const auto c = p.waypoints[i];
    if (!w.grid.walkable(c)) return ::testing::AssertionFailure() << "blocked waypoint " << i;
    if (i == 0) continue;
    const auto b = p.waypoints[i - 1];
    const int dx = c.x - b.x, dy = c.y - b.y;
    if (std::max(std::abs(dx), std::abs(dy)) != 1) return ::testing::AssertionFailure() << "non-adjacent step " << i;
    if (dx != 0 && dy != 0 && (!w.grid.walkable({b.x + dx, b.y}) || !w.grid.walkable({b.x, b.y + dy})))
      return ::testing::AssertionFailure() << "corner cut at " << i;
    len += (dx != 0 && dy != 0 ? std::sqrt(2.0) : 1.0) * w.grid.cell_size_m();
  }
  if (std::abs(len - p.length_m) > 1e-9 * std::max(1.0, len)) return ::testing::AssertionFailure() << "length " << p.length_m << " != " << len;
  if (static_cast<std::size_t>(p.steps) + 1 != p.waypoints.size()) return ::testing::AssertionFailure() << "step count";
  if (p.reached != (p.waypoints.back() == w.goal)) return ::testing::AssertionFailure() << "reached flag";
  return ::testing::AssertionSuccess();
}

// Bellman-Ford relaxation sweeps over the grid, single source.
std::vector<double> grid_distances(const OccupancyGrid& g, GridCoord src) {
  std::vector<double> d(static_cast<std::size_t>(g.width() * g.height()), kInf);
  d[g.index(src)] = 0.0;
  for (bool changed = true; changed;) {
    changed = false;
    for (int y = 0; y < g.height(); ++y) {
      for (int x = 0; x < g.width(); ++x) {
        const GridCoord c{x, y};
        if (!std::isfinite(d[g.index(c)])) continue;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const GridCoord n{x + dx, y + dy};
            if ((dx == 0 && dy == 0) || !g.walkable(n)) continue;
            if (dx != 0 && dy != 0 && (!g.walkable({x + dx, y}) || !g.walkable({x, y + dy}))) continue;
            const double nd = d[g.index(c)] + ((dx != 0 && dy != 0) ? std::sqrt(2.0) : 1.0);
            if (nd < d[g.index(n)] - 1e-12) {
              d[g.index(n)] = nd;
              changed = true;
            }
          }
        }
      }
    }
  }
  return d;
}

// Optimal turn-by-turn length: grid ramps plus Floyd-Warshall on the roads.
double oracle_length(const World& w) {
  auto nearest = [&](GridCoord c) {
    int best = -1;
    double bd = kInf;
    for (std::size_t i = 0; i < w.roads.nodes.size(); ++i) {
      const auto n = w.roads.nodes[i];
      const double d = std::hypot(double(n.x - c.x), double(n.y - c.y));
      if (d <= 10.0 && d < bd) {
        bd = d;
        best = static_cast<int>(i);
      }
    }
    return best;
  };
  const int in = nearest(w.start), out = nearest(w.goal);
  if (in < 0 || out < 0) return kInf;
  const std::size_t n = w.roads.nodes.size();
  std::vector<std::vector<double>> fw(n, std::vector<double>(n, kInf));
  for (std::size_t i = 0; i < n; ++i) fw[i][i] = 0.0;
  for (const auto& e : w.roads.edges) {
    const auto a = w.roads.nodes[static_cast<std::size_t>(e.a)], b = w.roads.nodes[static_cast<std::size_t>(e.b)];
    const int dx = std::abs(a.x - b.x), dy = std::abs(a.y - b.y);
    const double c = std::max(dx, dy) - std::min(dx, dy) + std::sqrt(2.0) * std::min(dx, dy);
    fw[static_cast<std::size_t>(e.a)][static_cast<std::size_t>(e.b)] = std::min(fw[static_cast<std::size_t>(e.a)][static_cast<std::size_t>(e.b)], c);
    fw[static_cast<std::size_t>(e.b)][static_cast<std::size_t>(e.a)] = std::min(fw[static_cast<std::size_t>(e.b)][static_cast<std::size_t>(e.a)], c);
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) fw[i][j] = std::min(fw[i][j], fw[i][k] + fw[k][j]);
  const double ramp_in = grid_distances(w.grid, w.start)[w.grid.index(w.roads.nodes[static_cast<std::size_t>(in)])];
  const double ramp_out = grid_distances(w.grid, w.roads.nodes[static_cast<std::size_t>(out)])[w.grid.index(w.goal)];
  return (ramp_in + fw[static_cast<std::size_t>(in)][static_cast<std::size_t>(out)] + ramp_out) * w.grid.cell_size_m();
}

World random_world(std::mt19937_64& rng) {
  const int W = 16 + static_cast<int>(rng() % 20), H = 16 + static_cast<int>(rng() % 20);
  World w{OccupancyGrid(W, H, 0.5 + (rng() % 4) * 0.5), {}, {}, {}};
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      if (rng() % 100 < 18) w.grid.set_blocked({x, y});
  auto free_cell = [&] {
    for (;;) {
      GridCoord c{static_cast<int>(rng() % static_cast<unsigned>(W)), static_cast<int>(rng() % static_cast<unsigned>(H))};
      if (w.grid.walkable(c)) return c;
    }
  };
  w.start = free_cell();
  w.goal = free_cell();
  const int nodes = 3 + static_cast<int>(rng() % 8);
  for (int i = 0; i < nodes; ++i) w.roads.nodes.push_back(free_cell());
  // roads are carved through the obstacles so most worlds stay connected;
  // the ramps still have to find their way around the clutter
  for (int a = 0; a < nodes; ++a) {
    for (int b = a + 1; b < nodes; ++b) {
      if (rng() % 3) continue;
      const auto line = digital_line(w.roads.nodes[static_cast<std::size_t>(a)], w.roads.nodes[static_cast<std::size_t>(b)]);
      for (std::size_t i = 0; i < line.size(); ++i) {
        w.grid.set_blocked(line[i], false);
        if (i > 0) {
          w.grid.set_blocked({line[i].x, line[i - 1].y}, false);
          w.grid.set_blocked({line[i - 1].x, line[i].y}, false);
        }
      }
      w.roads.edges.push_back({a, b});
    }
  }
  return w;
}

World open_world(int w, int h, GridCoord s, GridCoord g) { return World{OccupancyGrid(w, h), {}, s, g}; }

World parking_lot() { return load_world(GEOGROUND_DATA_DIR "/parking_lot.txt", GEOGROUND_DATA_DIR "/parking_lot_roads.json"); }

}  // namespace

TEST(TurnByTurn, Examples) {
  World same = open_world(20, 20, {3, 3}, {5, 4});
  same.roads.nodes = {{4, 4}};
  const auto p = plan_turn_by_turn(same);
  EXPECT_TRUE(p.reached);
  EXPECT_NEAR(p.length_m, std::sqrt(2.0) + 1.0, 1e-12);  // the two ramps

  World line = open_world(20, 5, {2, 2}, {12, 2});
  line.grid = OccupancyGrid(20, 5, 2.5);
  line.roads.nodes = {{2, 2}, {12, 2}};
  line.roads.edges = {{0, 1}};
  const auto q = plan_turn_by_turn(line);
  EXPECT_DOUBLE_EQ(q.length_m, 10 * 2.5);
  EXPECT_TRUE(valid_path(q, line));
}

TEST(TurnByTurn, Unreachable) {
  World far = open_world(40, 5, {1, 1}, {38, 1});
  far.roads.nodes = {{20, 2}};
  EXPECT_THROW(plan_turn_by_turn(far), Error);
  World split = open_world(40, 5, {1, 1}, {38, 1});
  split.roads.nodes = {{2, 2}, {37, 2}};
  try {
    plan_turn_by_turn(split);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Unreachable);
  }
}

TEST(TurnByTurn, EqualsShortestPathOracleOn100RandomWorlds) {
  std::mt19937_64 rng(2024);
  int solved = 0, unreachable = 0;
  for (int t = 0; t < 100; ++t) {
    const auto w = random_world(rng);
    const double want = oracle_length(w);
    if (!std::isfinite(want)) {
      EXPECT_THROW(plan_turn_by_turn(w), Error) << "world " << t;
      ++unreachable;
      continue;
    }
    const auto p = plan_turn_by_turn(w);
    ASSERT_TRUE(valid_path(p, w)) << "world " << t;
    ASSERT_TRUE(p.reached);
    ASSERT_NEAR(p.length_m, want, 1e-9 * want + 1e-9) << "world " << t;
    ++solved;
  }
  EXPECT_GT(solved, 30);
  EXPECT_GT(unreachable, 0);
}

TEST(BearingFollower, OpenGridTracksTheStraightLine) {
  for (GridCoord g : {GridCoord{45, 5}, GridCoord{5, 45}, GridCoord{45, 45}, GridCoord{45, 25}, GridCoord{40, 15}, GridCoord{15, 40}}) {
    const auto w = open_world(50, 50, {5, 5}, g);
    const auto p = simulate_bearing_follower(w);
    ASSERT_TRUE(p.reached);
    EXPECT_TRUE(valid_path(p, w));
    const auto r = compare_paths(p, p, w);
    EXPECT_EQ(r.length_ratio, 1.0);
    EXPECT_LE(r.detour_a, 1.08) << g.x << "," << g.y;
  }
}

TEST(BearingFollower, WalledGoalExhaustsBudget) {
  auto w = open_world(30, 30, {2, 2}, {20, 20});
  for (int d = -2; d <= 2; ++d)
    for (int e = -2; e <= 2; ++e)
      if (std::max(std::abs(d), std::abs(e)) == 2) w.grid.set_blocked({20 + d, 20 + e});
  const auto p = simulate_bearing_follower(w);
  EXPECT_FALSE(p.reached);
  EXPECT_LE(p.steps, 10 * chebyshev(w.start, w.goal));
  EXPECT_TRUE(valid_path(p, w));
}

TEST(BearingFollower, WallFollowingGetsAroundAnObstacle) {
  auto w = open_world(40, 40, {20, 35}, {20, 4});
  for (int x = 10; x <= 30; ++x) w.grid.set_blocked({x, 20});
  const auto p = simulate_bearing_follower(w);
  EXPECT_TRUE(p.reached);
  EXPECT_TRUE(valid_path(p, w));
}

TEST(BearingFollower, TerminatesOnFuzzedWorlds) {
  std::mt19937_64 rng(77);
  int reached = 0;
  for (int t = 0; t < 300; ++t) {
    const auto w = random_world(rng);
    const auto p = simulate_bearing_follower(w);
    ASSERT_LE(p.steps, 10 * chebyshev(w.start, w.goal));
    ASSERT_TRUE(valid_path(p, w)) << "world " << t;
    reached += p.reached;
  }
  EXPECT_GT(reached, 100);
}

TEST(Compare, ParkingLotBearingBeatsTurnByTurn) {
  const auto w = parking_lot();
  const auto bearing = simulate_bearing_follower(w);
  const auto road = plan_turn_by_turn(w);
  EXPECT_TRUE(valid_path(bearing, w));
  EXPECT_TRUE(valid_path(road, w));
  const auto r = compare_paths(bearing, road, w);
  EXPECT_TRUE(r.both_reached);
  EXPECT_LT(bearing.length_m, road.length_m);
  EXPECT_LT(r.length_ratio, 1.0);
  EXPECT_GE(r.detour_a, 1.0);
  EXPECT_EQ(to_json(r).at("both_reached"), true);
  EXPECT_NE(format_table(r).find("turn-by-turn"), std::string::npos);
}

TEST(Compare, DifferentWorldsAreIncomparable) {
  const auto a = open_world(10, 10, {1, 1}, {8, 8});
  auto b = a;
  b.grid.set_blocked({5, 1});
  const auto pa = simulate_bearing_follower(a), pb = simulate_bearing_follower(b);
  try {
    compare_paths(pa, pb, a);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IncomparablePaths);
  }
}

TEST(WorldFile, ParsingAndValidation) {
  const auto w = parse_world("#####\n#S.G#\n#####\n");
  EXPECT_EQ(w.start, (GridCoord{1, 1}));
  EXPECT_EQ(w.goal, (GridCoord{3, 1}));
  for (const char* bad : {"", "S..\n..", "S.G\n..", "S.X.G", "#S#G\n"}) {
    try {
      auto r = nlohmann::json::object();
      if (std::string(bad) == "#S#G\n") r = {{"nodes", {{0, 0}}}};
      parse_world(bad, r);
      FAIL() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::MalformedWorld);
    }
  }
  EXPECT_THROW(parse_world("S.G", {{"nodes", {{0, 0}, {2, 0}}}, {"edges", {{0, 5}}}}), Error);
  EXPECT_THROW(parse_world("S#G", {{"nodes", {{0, 0}, {2, 0}}}, {"edges", {{0, 1}}}}), Error);
  EXPECT_THROW(load_world("/nonexistent/world.txt"), Error);
}
