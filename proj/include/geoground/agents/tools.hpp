#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "geoground/agents/location_intel.hpp"
#include "geoground/agents/navigation.hpp"
#include "geoground/agents/protocol.hpp"
#include "geoground/deictic.hpp"
#include "geoground/embedding.hpp"
#include "geoground/geo_index.hpp"
#include "geoground/grid.hpp"
#include "geoground/json_io.hpp"
#include "geoground/ranker.hpp"

namespace geoground::agents {

// What the tools may see for one request. Pointers must outlive the registry.
struct ToolContext {
  const PoiIndex* index = nullptr;
  const EmbeddingProvider* provider = nullptr;
  const RankerModel* model = nullptr;
  std::optional<UserPose> pose;
  std::optional<Viewport> viewport;
  std::optional<CameraObservation> observation;
  int grid_rows = 3;
  int grid_cols = 3;
  double search_radius_m = 10000.0;
  double identify_radius_m = 1000.0;
  std::size_t retrieval_k = 20;
  std::size_t top_m = 3;
  double arrival_radius_m = kArrivalRadiusM;
};

namespace detail {

using nlohmann::json;

inline const UserPose& need_pose(const ToolContext& ctx) {
  if (!ctx.pose) fail(ErrorCode::InvalidArgument, "the user position is unknown");
  return *ctx.pose;
}

inline const Viewport& need_viewport(const ToolContext& ctx) {
  if (!ctx.viewport) fail(ErrorCode::InvalidArgument, "no map view is available");
  return *ctx.viewport;
}

// Id first, then case-insensitive name (nearest to the user when repeated).
inline const Poi& find_place(const ToolContext& ctx, const std::string& ref) {
  if (const Poi* p = ctx.index->find(ref)) return *p;
  auto named = ctx.index->find_by_name(ref);
  if (named.empty()) fail(ErrorCode::NoCandidates, "no place named '" + ref + "'");
  if (ctx.pose && named.size() > 1) {
    std::stable_sort(named.begin(), named.end(), [&](const Poi* a, const Poi* b) {
      return haversine_distance(ctx.pose->position, a->location) < haversine_distance(ctx.pose->position, b->location);
    });
  }
  return *named.front();
}

inline double miles(double m) { return m / kMetersPerMile; }

inline json place_row(const Poi& p, double distance_m) {
  return {{"id", p.id}, {"name", p.name}, {"category", p.category}, {"distance_m", distance_m}, {"distance_mi", miles(distance_m)}};
}

}  // namespace detail

inline ToolRegistry standard_registry(const ToolContext& ctx) {
  using nlohmann::json;
  if (!ctx.index || !ctx.provider || !ctx.model) fail(ErrorCode::InvalidArgument, "tool context is incomplete");
  ToolRegistry reg;

  reg.add({"search",
           "Find places of a category near the user, nearest first.",
           {{"category", ParamType::String, true}, {"radius_m", ParamType::Number, false}, {"limit", ParamType::Integer, false}},
           AgentRole::LocationIntel,
           [ctx](const json& a) {
             const auto& pose = detail::need_pose(ctx);
             const auto category = ctx.index->lexicon().canonical(a.at("category").get<std::string>());
             if (!category) fail(ErrorCode::UnknownCategory, "unknown category '" + a.at("category").get<std::string>() + "'");
             const double radius = a.value("radius_m", ctx.search_radius_m);
             const auto limit = a.value("limit", static_cast<long long>(ctx.retrieval_k));
             if (limit < 1) fail(ErrorCode::InvalidArgument, "limit must be positive");
             json places = json::array();
             for (const auto& hit : ctx.index->nearest_k(pose.position, static_cast<std::size_t>(limit), *category)) {
               if (hit.distance_m > radius) break;
               places.push_back(detail::place_row(*hit.poi, hit.distance_m));
             }
             return json{{"category", *category}, {"places", std::move(places)}};
           }});

  reg.add({"distance",
           "Distance from the user to a place given by id or name.",
           {{"place", ParamType::String, true}},
           AgentRole::LocationIntel,
           [ctx](const json& a) {
             const auto& pose = detail::need_pose(ctx);
             const Poi& p = detail::find_place(ctx, a.at("place").get<std::string>());
             return detail::place_row(p, haversine_distance(pose.position, p.location));
           }});

  reg.add({"rank",
           "Order places by distance from the user, or by the grounding model when a camera observation exists.",
           {{"ids", ParamType::StringList, true}, {"by", ParamType::String, false}},
           AgentRole::LocationIntel,
           [ctx](const json& a) {
             const auto& pose = detail::need_pose(ctx);
             const auto by = a.value("by", std::string("distance"));
             if (by != "distance" && by != "model") fail(ErrorCode::InvalidArgument, "rank 'by' must be distance or model");
             std::vector<RankCandidate> cands;
             for (const auto& id : a.at("ids")) {
               const Poi* p = ctx.index->find(id.get<std::string>());
               if (!p) fail(ErrorCode::NoCandidates, "unknown place id '" + id.get<std::string>() + "'");
               cands.push_back({p, describe_place(*p, *ctx.provider)});
             }
             if (cands.empty()) fail(ErrorCode::NoCandidates, "nothing to rank");
             std::vector<RankedCandidate> ranked;
             if (by == "model") {
               if (!ctx.observation) fail(ErrorCode::InvalidArgument, "model ranking needs a camera observation");
               ranked = rank_candidates(*ctx.model, *ctx.observation, cands);
             } else {
               CameraObservation blind;
               blind.pose = pose;
               blind.image_embedding = Embedding(ctx.provider->dimension(), 0.0);
               ranked = baseline_rank(BaselineMode::Distance, blind, cands);
             }
             json out = json::array();
             for (const auto& r : ranked) {
               auto row = detail::place_row(*ctx.index->find(r.poi_id), r.features.distance_m);
               row["score"] = r.score;
               out.push_back(std::move(row));
             }
             return json{{"by", by}, {"ranked", std::move(out)}};
           }});

  reg.add({"bearing",
           "Compass bearing and relative direction from the user to a place.",
           {{"place", ParamType::String, true}},
           AgentRole::Navigation,
           [ctx](const json& a) {
             const auto& pose = detail::need_pose(ctx);
             const Poi& p = detail::find_place(ctx, a.at("place").get<std::string>());
             const double b = initial_bearing(pose.position, p.location);
             return json{{"id", p.id}, {"name", p.name}, {"bearing_deg", b},
                         {"relative_direction_deg", relative_direction(b, pose.heading)}};
           }});

  reg.add({"navigate",
           "Next guidance instruction toward a place.",
           {{"place", ParamType::String, true}},
           AgentRole::Navigation,
           [ctx](const json& a) {
             const auto& pose = detail::need_pose(ctx);
             const Poi& p = detail::find_place(ctx, a.at("place").get<std::string>());
             json out = to_json(navigation_step(pose, p, ctx.arrival_radius_m));
             out["id"] = p.id;
             out["name"] = p.name;
             out["distance_mi"] = detail::miles(out["distance_m"].get<double>());
             return out;
           }});

  reg.add({"grid",
           "Split the current map view into cells and list the places in each.",
           {{"rows", ParamType::Integer, false}, {"cols", ParamType::Integer, false}},
           AgentRole::LocationIntel,
           [ctx](const json& a) {
             const auto grid = viewport_to_grid(detail::need_viewport(ctx), a.value("rows", ctx.grid_rows), a.value("cols", ctx.grid_cols));
             return io::to_json(grid, assign_from_index(grid, *ctx.index));
           }});

  reg.add({"resolve",
           "Resolve a question about the current map view (regions, relations) to places.",
           {{"query", ParamType::String, true}},
           AgentRole::LocationIntel,
           [ctx](const json& a) {
             const auto intent = parse_query(a.at("query").get<std::string>(), ctx.index->lexicon());
             const auto grid = viewport_to_grid(detail::need_viewport(ctx), ctx.grid_rows, ctx.grid_cols);
             const auto answer = resolve_intent(intent, grid, assign_from_index(grid, *ctx.index), *ctx.index);
             json out = io::to_json(answer, *ctx.index);
             out["intent"] = io::to_json(intent);
             return out;
           }});

  reg.add({"identify",
           "Identify the place the camera is looking at and attach what is known about it.",
           {{"category", ParamType::String, false}},
           AgentRole::LocationIntel,
           [ctx](const json& a) {
             const auto& pose = detail::need_pose(ctx);
             PlaceQuery q{pose.position, std::nullopt, ctx.identify_radius_m, ctx.retrieval_k, ctx.top_m};
             if (a.contains("category")) {
               q.category = ctx.index->lexicon().canonical(a.at("category").get<std::string>());
               if (!q.category) fail(ErrorCode::UnknownCategory, "unknown category '" + a.at("category").get<std::string>() + "'");
             }
             json places = json::array();
             for (const auto& ans : location_intel_answer(*ctx.index, *ctx.provider, *ctx.model, q, ctx.observation))
               places.push_back(to_json(ans));
             return json{{"places", std::move(places)}};
           }});

  return reg;
}

}  // namespace geoground::agents
