// One PASS/FAIL line per primary acceptance criterion. Exit status is the
// number of failed criteria.
#include <chrono>
#include <cstdio>
#include <numbers>
#include <random>
#include <regex>
#include <set>
#include <string>

#include "geoground/agents/orchestrator.hpp"
#include "geoground/eval/maps_eval.hpp"
#include "geoground/eval/ranker_eval.hpp"
#include "geoground/nav_sim.hpp"
#include "geoground/scene_graph.hpp"
#include "geoground/service.hpp"

using namespace geoground;
using nlohmann::json;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
};

// Collects the first failure; later checks still run so the timing is honest.
struct Checker {
  Outcome out;
  void expect(bool cond, const std::string& what) {
    if (!cond && out.ok) {
      out.ok = false;
      out.detail = what;
    }
  }
};

int g_failed = 0;

void criterion(const char* name, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (limit_s > 0 && s >= limit_s && o.ok) o = {false, "runtime over " + std::to_string(static_cast<int>(limit_s)) + " s"};
  g_failed += !o.ok;
  std::printf("[%s] %-26s %7.2f s", o.ok ? "PASS" : "FAIL", name, s);
  if (limit_s > 0) std::printf(" (limit %.0f s)", limit_s);
  if (!o.detail.empty()) std::printf("  %s", o.detail.c_str());
  std::printf("\n");
  std::fflush(stdout);
}

double angle_gap(double a, double b) {
  const double d = std::fmod(std::abs(a - b), 360.0);
  return std::min(d, 360.0 - d);
}

// Bearing from the local east/north tangent basis at `a`.
double tangent_bearing(const GeoPoint& a, const GeoPoint& b) {
  const double la = a.lat * std::numbers::pi / 180, lo = a.lon * std::numbers::pi / 180;
  const double lb = b.lat * std::numbers::pi / 180, mb = b.lon * std::numbers::pi / 180;
  const double px = std::cos(lb) * std::cos(mb), py = std::cos(lb) * std::sin(mb), pz = std::sin(lb);
  const double east = -std::sin(lo) * px + std::cos(lo) * py;
  const double north = -std::sin(la) * std::cos(lo) * px - std::sin(la) * std::sin(lo) * py + std::cos(la) * pz;
  return normalize_degrees(std::atan2(east, north) * 180 / std::numbers::pi);
}

Outcome geo_math() {
  Checker c;
  c.expect(haversine_distance({0, 0}, {0, 0}) == 0.0, "haversine of a point to itself");
  c.expect(std::abs(haversine_distance({0, 0}, {0, 180}) - 20015087.0) < 1.0, "half circumference");
  c.expect(std::abs(haversine_distance({0, 0}, {0, 1}) - 111195.0) < 1.0, "one degree of longitude");
  c.expect(initial_bearing({0, 0}, {10, 0}) == 0.0 && initial_bearing({0, 0}, {0, 90}) == 90.0 &&
               initial_bearing({0, 0}, {0, -90}) == 270.0,
           "bearing examples");
  c.expect(relative_direction(90, 90) == 0.0 && relative_direction(180, 0) == 180.0 && relative_direction(10, 350) == 20.0,
           "relative direction examples");
  c.expect(project_mercator({0, 0}, 0) == PixelCoord{128, 128, 0} && project_mercator({0, 0}, 2) == PixelCoord{512, 512, 2},
           "mercator examples");
  c.expect(unproject_mercator({128, 128, 0}) == GeoPoint{0, 0}, "unproject example");
  try {
    initial_bearing({10, 10}, {10, 10});
    c.expect(false, "identical points must be degenerate");
  } catch (const Error& e) {
    c.expect(e.code() == ErrorCode::DegenerateBearing, "degenerate bearing code");
  }
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> any(-2000.0, 2000.0), lat(-80.0, 80.0), lon(-180.0, 180.0);
  for (int i = 0; i < 10000 && c.out.ok; ++i) {
    const double b = any(rng), h = any(rng), d = any(rng);
    const double r = relative_direction(b, h);
    c.expect(r >= 0.0 && r < 360.0, "relative direction range");
    c.expect(angle_gap(relative_direction(b + d, h + d), r) < 1e-9, "rotation invariance");
    c.expect(angle_gap(relative_direction(b + 360.0, h - 720.0), r) < 1e-9, "wrap-around");
    const double n = normalize_degrees(any(rng));
    c.expect(n >= 0.0 && n < 360.0, "normalization range");
    const GeoPoint p = GeoPoint::make(lat(rng), lon(rng)), q = GeoPoint::make(lat(rng), lon(rng));
    const double dist = haversine_distance(p, q);
    if (dist < 1.0 || dist > 0.99 * std::numbers::pi * kEarthRadiusM) continue;
    const double t = initial_bearing(p, q);
    c.expect(t >= 0.0 && t < 360.0 && angle_gap(t, tangent_bearing(p, q)) < 1e-6, "bearing against the tangent oracle");
  }
  if (c.out.ok) c.out.detail = "examples exact, 10000 fuzzed inputs";
  return c.out;
}

Outcome index_oracle() {
  Checker c;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> lat(47.4, 47.8), lon(-122.5, -122.0), u(0, 1);
  const char* cats[] = {"cafe", "park", "lake", "restaurant", "cinema"};
  std::vector<Poi> pois;
  for (int i = 0; i < 1000; ++i)
    pois.push_back({"p" + std::to_string(i), "Place " + std::to_string(i), cats[rng() % 5],
                    GeoPoint::make(std::round(lat(rng) * 200) / 200, std::round(lon(rng) * 200) / 200)});
  PoiIndex index;
  index.insert(pois);
  auto brute = [&](const GeoPoint& at, const std::optional<std::string>& cat, const std::function<bool(const Poi&, double)>& keep) {
    std::vector<std::pair<double, std::string>> out;
    for (const auto& p : pois) {
      if (cat && p.category != *cat) continue;
      const double d = haversine_distance(at, p.location);
      if (keep(p, d)) out.emplace_back(d, p.id);
    }
    std::sort(out.begin(), out.end());
    std::vector<std::string> ids;
    for (const auto& h : out) ids.push_back(h.second);
    return ids;
  };
  auto ids_of = [](const auto& hits) {
    std::vector<std::string> out;
    for (const auto& h : hits) out.push_back(h.poi->id);
    return out;
  };
  const std::optional<std::string> filters[] = {std::nullopt, "cafe", "lake", "coffee shop"};
  for (int q = 0; q < 250; ++q) {
    const GeoPoint at = GeoPoint::make(lat(rng), lon(rng));
    const auto filter = filters[rng() % 4];
    const auto canon = filter ? std::optional<std::string>(index.lexicon().canonical_or_self(*filter)) : std::nullopt;
    if (q % 3 == 0) {
      const double r = 50.0 + u(rng) * 8000.0;
      c.expect(ids_of(index.query_radius(at, r, filter)) == brute(at, canon, [&](const Poi&, double d) { return d <= r; }),
               "radius query " + std::to_string(q));
    } else if (q % 3 == 1) {
      const std::size_t k = 1 + rng() % 40;
      auto want = brute(at, canon, [](const Poi&, double) { return true; });
      if (want.size() > k) want.resize(k);
      c.expect(ids_of(index.nearest_k(at, k, filter)) == want, "nearest query " + std::to_string(q));
    } else {
      const double la2 = lat(rng), lo2 = lon(rng);
      const auto box = BoundingBox::make(std::min(at.lat, la2), std::min(at.lon, lo2), std::max(at.lat, la2), std::max(at.lon, lo2));
      std::vector<std::string> got;
      for (const Poi* p : index.query_bbox(box, filter)) got.push_back(p->id);
      std::vector<std::string> want;
      for (const auto& p : pois)
        if ((!canon || p.category == *canon) && box.contains(p.location)) want.push_back(p.id);
      std::sort(got.begin(), got.end());
      std::sort(want.begin(), want.end());
      c.expect(got == want, "bbox query " + std::to_string(q));
    }
  }
  if (c.out.ok) c.out.detail = "1000 POIs, 250 queries";
  return c.out;
}

Outcome map_questions() {
  Checker c;
  const auto r = eval::run_maps_eval(10, 430, 42);
  const eval::AccuracyReport *plus = nullptr, *single = nullptr;
  for (const auto& v : r.variants) {
    if (v.variant == "maps_plus") plus = &v;
    if (v.variant == "single_model") single = &v;
  }
  c.expect(r.queries == 430 && plus && single, "430 queries over every variant");
  if (!c.out.ok) return c.out;
  c.expect(plus->accuracy >= 0.95, "maps_plus below 95%");
  c.expect(std::abs(single->accuracy - single->chance_level) <= 0.10, "single_model not within 10 pp of chance");
  char buf[160];
  std::snprintf(buf, sizeof(buf), "maps_plus %.1f%%, single_model %.1f%% vs chance %.1f%%", 100 * plus->accuracy,
                100 * single->accuracy, 100 * single->chance_level);
  c.out.detail = c.out.ok ? buf : c.out.detail + " (" + buf + ")";
  return c.out;
}

Outcome grounding_ranker() {
  Checker c;
  const auto rep = eval::run_ranker_eval(500, 50, 7);
  const auto &rk = rep.row("boosted ranker"), &dist = rep.row("distance"), &sim = rep.row("similarity");
  c.expect(rk.p_at_1 >= dist.p_at_1, "ranker P@1 below distance");
  c.expect(rk.r_at_3 >= dist.r_at_3, "ranker R@3 below distance");
  c.expect(sim.p_at_1 < dist.p_at_1 && sim.p_at_1 < rk.p_at_1, "similarity not last on P@1");
  std::mt19937_64 rng(77);
  std::vector<std::string> items;
  for (int i = 0; i < 20; ++i) items.push_back("i" + std::to_string(i));
  for (int trial = 0; trial < 1000; ++trial) {
    std::shuffle(items.begin(), items.end(), rng);
    std::set<std::string> relevant;
    const std::size_t nrel = 1 + rng() % 5;
    while (relevant.size() < nrel) relevant.insert("i" + std::to_string(rng() % 20));
    for (std::size_t k = 1; k <= 22; ++k) {
      std::size_t hits = 0;
      for (std::size_t i = 0; i < k && i < items.size(); ++i) hits += relevant.count(items[i]);
      const auto m = precision_recall_at_k(items, relevant, k);
      c.expect(m.hits == hits && m.precision == static_cast<double>(hits) / static_cast<double>(k) &&
                   m.recall == static_cast<double>(hits) / static_cast<double>(nrel),
               "metric differs from the counting oracle");
    }
  }
  char buf[200];
  std::snprintf(buf, sizeof(buf), "P@1 %.2f/%.2f/%.2f, R@3 %.2f/%.2f/%.2f (ranker/distance/similarity); 1000 permutations",
                rk.p_at_1, dist.p_at_1, sim.p_at_1, rk.r_at_3, dist.r_at_3, sim.r_at_3);
  c.out.detail = c.out.ok ? buf : c.out.detail + " (" + buf + ")";
  return c.out;
}

// Grid Dijkstra on an explicit 8-neighbour graph (no corner cutting), in cells.
std::vector<double> grid_distances(const nav::OccupancyGrid& g, nav::GridCoord src) {
  std::vector<double> d(static_cast<std::size_t>(g.width() * g.height()), std::numeric_limits<double>::infinity());
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  d[g.index(src)] = 0.0;
  open.push({0.0, g.index(src)});
  while (!open.empty()) {
    const auto [du, u] = open.top();
    open.pop();
    if (du > d[u]) continue;
    const nav::GridCoord c{static_cast<int>(u % static_cast<std::size_t>(g.width())), static_cast<int>(u / static_cast<std::size_t>(g.width()))};
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const nav::GridCoord n{c.x + dx, c.y + dy};
        if ((dx == 0 && dy == 0) || !g.walkable(n)) continue;
        if (dx && dy && (!g.walkable({c.x + dx, c.y}) || !g.walkable({c.x, c.y + dy}))) continue;
        const double nd = du + (dx && dy ? std::sqrt(2.0) : 1.0);
        if (nd < d[g.index(n)]) {
          d[g.index(n)] = nd;
          open.push({nd, g.index(n)});
        }
      }
    }
  }
  return d;
}

double turn_by_turn_oracle(const nav::World& w) {
  const double inf = std::numeric_limits<double>::infinity();
  auto nearest = [&](nav::GridCoord c) {
    int best = -1;
    double bd = inf;
    for (std::size_t i = 0; i < w.roads.nodes.size(); ++i) {
      const double d = nav::euclidean(w.roads.nodes[i], c);
      if (d <= 10.0 && d < bd) {
        bd = d;
        best = static_cast<int>(i);
      }
    }
    return best;
  };
  const int in = nearest(w.start), out = nearest(w.goal);
  if (in < 0 || out < 0) return inf;
  const std::size_t n = w.roads.nodes.size();
  std::vector<std::vector<double>> fw(n, std::vector<double>(n, inf));
  for (std::size_t i = 0; i < n; ++i) fw[i][i] = 0.0;
  for (const auto& e : w.roads.edges) {
    const auto a = static_cast<std::size_t>(e.a), b = static_cast<std::size_t>(e.b);
    const double cost = nav::octile(w.roads.nodes[a], w.roads.nodes[b]);
    fw[a][b] = fw[b][a] = std::min(fw[a][b], cost);
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) fw[i][j] = std::min(fw[i][j], fw[i][k] + fw[k][j]);
  const auto& nodes = w.roads.nodes;
  return (grid_distances(w.grid, w.start)[w.grid.index(nodes[static_cast<std::size_t>(in)])] +
          fw[static_cast<std::size_t>(in)][static_cast<std::size_t>(out)] +
          grid_distances(w.grid, nodes[static_cast<std::size_t>(out)])[w.grid.index(w.goal)]) *
         w.grid.cell_size_m();
}

Outcome navigation() {
  Checker c;
  const auto lot = nav::load_world(GEOGROUND_DATA_DIR "/parking_lot.txt", GEOGROUND_DATA_DIR "/parking_lot_roads.json");
  const auto bearing = nav::simulate_bearing_follower(lot);
  const auto road = nav::plan_turn_by_turn(lot);
  c.expect(bearing.reached && road.reached, "a parking-lot path misses the goal");
  c.expect(bearing.length_m < road.length_m, "bearing path not shorter than turn-by-turn");
  std::mt19937_64 rng(2024);
  int solved = 0;
  for (int t = 0; t < 100; ++t) {
    const int W = 16 + static_cast<int>(rng() % 20), H = 16 + static_cast<int>(rng() % 20);
    nav::World w{nav::OccupancyGrid(W, H, 0.5 + static_cast<double>(rng() % 4) * 0.5), {}, {}, {}};
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x)
        if (rng() % 100 < 18) w.grid.set_blocked({x, y});
    auto free_cell = [&] {
      for (;;) {
        nav::GridCoord g{static_cast<int>(rng() % static_cast<unsigned>(W)), static_cast<int>(rng() % static_cast<unsigned>(H))};
        if (w.grid.walkable(g)) return g;
      }
    };
    w.start = free_cell();
    w.goal = free_cell();
    const int nodes = 3 + static_cast<int>(rng() % 8);
    for (int i = 0; i < nodes; ++i) w.roads.nodes.push_back(free_cell());
    for (int a = 0; a < nodes; ++a) {
      for (int b = a + 1; b < nodes; ++b) {
        if (rng() % 3) continue;
        const auto line = nav::digital_line(w.roads.nodes[static_cast<std::size_t>(a)], w.roads.nodes[static_cast<std::size_t>(b)]);
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
    const double want = turn_by_turn_oracle(w);
    try {
      const auto p = nav::plan_turn_by_turn(w);
      c.expect(std::isfinite(want) && std::abs(p.length_m - want) <= 1e-9 * want + 1e-9, "world " + std::to_string(t) + " differs");
      ++solved;
    } catch (const Error& e) {
      c.expect(!std::isfinite(want) && e.code() == ErrorCode::Unreachable, "world " + std::to_string(t) + " wrongly unreachable");
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf), "parking lot %.1f m vs %.1f m; 100 worlds (%d routable)", bearing.length_m, road.length_m, solved);
  c.out.detail = c.out.ok ? buf : c.out.detail + " (" + buf + ")";
  return c.out;
}

Outcome scene() {
  Checker c;
  using Triple = std::tuple<std::size_t, SpatialRelation, std::size_t>;
  auto edges_of = [](const SceneGraph& g) {
    std::set<Triple> s;
    for (const auto& e : g.edges) s.emplace(e.from, e.relation, e.to);
    return s;
  };
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 600; ++t) {
    std::vector<DetectionRecord> dets;
    const int n = 1 + static_cast<int>(rng() % 12);
    for (int i = 0; i < n; ++i) {
      const double w = 1 + u(rng) * 200, h = 1 + u(rng) * 200;
      dets.push_back({"obj" + std::to_string(i),
                      {std::floor(u(rng) * (640 - w) / 8) * 8, std::floor(u(rng) * (480 - h) / 8) * 8, w, h},
                      0.5 + std::floor(u(rng) * 40) / 4,
                      1.0});
    }
    const RelationThresholds th;
    const auto g = derive_relations(dets, 640, 480, th);
    const auto edges = edges_of(g);
    if (t < 100) {
      std::set<Triple> want;
      for (std::size_t a = 0; a < dets.size(); ++a) {
        for (std::size_t b = 0; b < dets.size(); ++b) {
          if (a == b) continue;
          const double ax = dets[a].box.x + dets[a].box.w / 2, bx = dets[b].box.x + dets[b].box.w / 2;
          const double ay = dets[a].box.y + dets[a].box.h / 2, by = dets[b].box.y + dets[b].box.h / 2;
          if (bx - ax > th.x_fraction * 640) want.emplace(a, SpatialRelation::LeftOf, b);
          if (ax - bx > th.x_fraction * 640) want.emplace(a, SpatialRelation::RightOf, b);
          if (by - ay > th.y_fraction * 480) want.emplace(a, SpatialRelation::Above, b);
          if (ay - by > th.y_fraction * 480) want.emplace(a, SpatialRelation::Below, b);
          if (dets[b].depth_m - dets[a].depth_m > th.depth_m) want.emplace(a, SpatialRelation::InFrontOf, b);
          if (dets[a].depth_m - dets[b].depth_m > th.depth_m) want.emplace(a, SpatialRelation::Behind, b);
        }
      }
      c.expect(edges == want && edges.size() == g.edges.size(), "scene " + std::to_string(t) + " differs from the pairwise oracle");
    }
    for (const auto& [a, r, b] : edges) c.expect(edges.count({b, dual(r), a}) && !edges.count({b, r, a}), "antisymmetry");
    auto flipped = dets;
    for (auto& d : flipped) d.box.x = 640 - d.box.x - d.box.w;
    std::set<Triple> mirrored;
    for (const auto& [a, r, b] : edges_of(derive_relations(flipped, 640, 480, th)))
      mirrored.emplace(a, (r == SpatialRelation::LeftOf || r == SpatialRelation::RightOf) ? dual(r) : r, b);
    c.expect(mirrored == edges, "mirror invariance");
  }
  if (c.out.ok) c.out.detail = "100 oracle scenes, 600 property scenes";
  return c.out;
}

const Engine& fixture_engine() {
  static const Engine e = [] {
    Config c;
    c.deterministic_trace_clock = true;
    return Engine::load(c, std::string(GEOGROUND_DATA_DIR "/bellevue.geojson"));
  }();
  return e;
}

const UserPose kUser = UserPose::make(GeoPoint::make(47.6101, -122.2015), 0.0);
const Viewport kLakeView{GeoPoint::make(47.625, -122.15), 15, 768, 768};

Outcome agent_stack() {
  Checker c;
  const auto& e = fixture_engine();
  auto run = [&](const std::string& q) {
    const auto reg = agents::standard_registry(e.tool_context(kUser, kLakeView));
    auto lm = e.stub_lm();
    return agents::orchestrate(q, lm, reg, {agents::kDefaultMaxSteps, agents::frozen_clock(), {}});
  };
  const auto boba = run("Take me to the closest boba tea shop");
  std::vector<std::string> tools;
  for (const auto& s : boba.trace.steps)
    if (s.action == agents::StepAction::ToolCall) tools.push_back(s.payload.at("tool"));
  c.expect(tools == std::vector<std::string>{"search", "rank", "navigate"}, "boba tool sequence");
  c.expect(boba.answer.find("Boba Express") != std::string::npos && boba.answer.find("1.6 miles") != std::string::npos,
           "boba answer: " + boba.answer);
  c.expect(agents::to_json(boba.trace).dump() == agents::to_json(run("Take me to the closest boba tea shop").trace).dump(),
           "boba trace not deterministic");

  const char* fixture_queries[] = {"Take me to the closest boba tea shop", "Navigate to the nearest coffee shop", "Guide me to Harbor Grill",
                                   "How far is Downtown Park", "What is the lake at the top right part of the map?",
                                   "What is the coffee shop below the cinema?", "What is this place?", "Guide me to Atlantis"};
  static const std::regex word(R"(([.:?!]\s+|^)?([A-Z][\w']*))");
  for (const char* q : fixture_queries) {
    const auto r = run(q);
    std::string evidence;
    for (const auto& s : r.trace.steps)
      if (s.action == agents::StepAction::ToolCall) evidence += s.payload.at("result").dump();
    for (auto it = std::sregex_iterator(r.answer.begin(), r.answer.end(), word); it != std::sregex_iterator(); ++it)
      c.expect((*it)[1].matched || evidence.find((*it)[2].str()) != std::string::npos,
               std::string("ungrounded '") + (*it)[2].str() + "' in: " + r.answer);
  }

  struct Endless final : agents::LmClient {
    int calls = 0;
    agents::LmResponse complete(const agents::LmRequest&) override {
      ++calls;
      return agents::LmResponse::call("search", {{"category", "cafe"}});
    }
  } endless;
  const auto reg = agents::standard_registry(e.tool_context(kUser));
  const auto looped = agents::orchestrate("loop", endless, reg);
  c.expect(looped.trace.tool_calls() <= 8 && looped.trace.outcome == agents::TraceOutcome::StepBudgetExceeded, "step budget exceeded");
  if (c.out.ok) c.out.detail = "\"" + boba.answer + "\"";
  return c.out;
}

Outcome service_layer() {
  Checker c;
  const auto& e = fixture_engine();
  service::Service svc(e);
  auto post = [&](const std::string& path, const json& body) { return svc.handle({"POST", path, body.dump(), {}, {}}); };
  const json view = {{"lat", 47.625}, {"lon", -122.15}, {"zoom", 15}, {"width_px", 768}, {"height_px", 768}};
  const json pose = {{"lat", 47.6101}, {"lon", -122.2015}, {"heading", 0.0}};

  const auto h = svc.handle({"GET", "/v1/healthz", "", {}, {}});
  c.expect(h.status == 200 && h.body.at("pois") == e.index().stats().count, "healthz");

  const auto grid = viewport_to_grid(kLakeView, 3, 3);
  c.expect(svc.handle({"GET", "/v1/map/grid", "", {}, {{"lat", "47.625"}, {"lon", "-122.15"}}}).body ==
               io::to_json(grid, assign_from_index(grid, e.index())),
           "map/grid differs from the library");

  const std::string lake = "What is the lake at the top right part of the map?";
  const auto q = post("/v1/query", {{"query", lake}, {"viewport", view}});
  const auto lib = io::to_json(resolve_intent(parse_query(lake, e.index().lexicon()), grid, assign_from_index(grid, e.index()), e.index()), e.index());
  c.expect(q.status == 200 && q.body.at("matches") == lib.at("matches") && q.body.at("cells") == lib.at("cells"), "query differs from the library");

  const Poi& grill = *e.index().find("harbor-grill");
  const auto ref = "descriptor:" + place_descriptor(grill);
  const auto g = post("/v1/ground", {{"pose", pose}, {"image_ref", ref}});
  const CameraObservation obs{e.provider().embed_image(ref), kUser, 0.0};
  json want = json::array();
  for (const auto& a : agents::location_intel_answer(e.index(), e.provider(), e.model(), {kUser.position, std::nullopt, 1000.0, 20, 3}, obs))
    want.push_back(agents::to_json(a));
  c.expect(g.status == 200 && g.body.at("candidates") == want, "ground differs from the library");

  const auto start = post("/v1/nav/start", {{"destination", {{"poi_id", "boba-express"}}}, {"pose", pose}});
  const auto step = post("/v1/nav/step", {{"session_id", start.body.at("session_id")}, {"pose", pose}});
  c.expect(step.status == 200 && step.body == agents::to_json(agents::navigation_step(kUser, *e.index().find("boba-express"))),
           "nav/step differs from the library");

  std::mt19937_64 rng(99);
  const std::vector<json> values = {nullptr, true, 0, -1, 3.5, 1e308, 91.0, 1e9, "", "x", json::array(), json::object(), json{{"lat", 1}}};
  const std::vector<std::pair<std::string, json>> seeds = {
      {"/v1/query", {{"query", lake}, {"viewport", view}, {"pose", pose}, {"grid", {{"rows", 3}, {"cols", 3}}}}},
      {"/v1/ground", {{"pose", pose}, {"image_ref", ref}, {"category", "cafe"}, {"radius_m", 500}, {"k", 5}, {"top_m", 2}}},
      {"/v1/nav/start", {{"destination", {{"poi_id", "boba-express"}}}, {"pose", pose}}},
      {"/v1/nav/step", {{"session_id", start.body.at("session_id")}, {"pose", pose}}}};
  int requests = 0;
  for (int i = 0; i < 2000; ++i) {
    const auto& [path, seed] = seeds[rng() % seeds.size()];
    json body = seed;
    for (auto& [k, v] : body.items()) {
      if (rng() % 5 == 0) v = values[rng() % values.size()];
      else if (v.is_object() && rng() % 4 == 0 && !v.empty()) v[v.begin().key()] = values[rng() % values.size()];
    }
    if (rng() % 5 == 0 && !body.empty()) body.erase(std::next(body.begin(), static_cast<long>(rng() % body.size())).key());
    std::string text = body.dump();
    if (rng() % 10 == 0) text.resize(rng() % (text.size() + 1));
    const auto r = svc.handle({"POST", path, text, {}, {}});
    ++requests;
    c.expect(r.status != 500, "unmapped error on " + path + ": " + text);
  }
  if (c.out.ok) c.out.detail = "5 endpoints equal the library; " + std::to_string(requests) + " fuzzed requests, 0 unmapped";
  return c.out;
}

}  // namespace

int main() {
  criterion("geo-math", 5, geo_math);
  criterion("index oracle equivalence", 10, index_oracle);
  criterion("map-question accuracy", 60, map_questions);
  criterion("grounding ranker", 30, grounding_ranker);
  criterion("navigation comparison", 20, navigation);
  criterion("scene graph", 10, scene);
  criterion("agent stack", 0, agent_stack);
  criterion("service", 0, service_layer);
  std::printf("%d of 8 criteria failed\n", g_failed);
  return g_failed;
}
