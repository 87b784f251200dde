#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "geoground/deictic.hpp"
#include "geoground/error.hpp"
#include "geoground/geo_index.hpp"
#include "geoground/geo_math.hpp"
#include "geoground/grid.hpp"

// Wire shapes shared by the agent tools and the HTTP service.
namespace geoground::io {

using nlohmann::json;

inline double number_field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key) || !j.at(key).is_number())
    fail(ErrorCode::InvalidArgument, std::string("field '") + key + "' must be a number");
  return j.at(key).get<double>();
}

inline int int_field(const json& j, const char* key, int fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number_integer()) fail(ErrorCode::InvalidArgument, std::string("field '") + key + "' must be an integer");
  const auto v = j.at(key).get<long long>();
  if (v < -1'000'000'000LL || v > 1'000'000'000LL) fail(ErrorCode::InvalidArgument, std::string("field '") + key + "' is out of range");
  return static_cast<int>(v);
}

inline GeoPoint parse_point(const json& j) {
  if (!j.is_object()) fail(ErrorCode::InvalidArgument, "expected an object with lat and lon");
  return GeoPoint::make(number_field(j, "lat"), number_field(j, "lon"));
}

inline UserPose parse_pose(const json& j) {
  return UserPose::make(parse_point(j), number_field(j, "heading"));
}

inline Viewport parse_viewport(const json& j) {
  if (!j.is_object()) fail(ErrorCode::InvalidArgument, "viewport must be an object");
  Viewport v;
  v.center = parse_point(j);
  v.zoom = int_field(j, "zoom", v.zoom);
  v.width_px = int_field(j, "width_px", v.width_px);
  v.height_px = int_field(j, "height_px", v.height_px);
  return v;
}

inline json to_json(const GeoPoint& p) { return {{"lat", p.lat}, {"lon", p.lon}}; }

inline json to_json(const UserPose& p) { return {{"lat", p.position.lat}, {"lon", p.position.lon}, {"heading", p.heading}}; }

inline json to_json(const Viewport& v) {
  return {{"lat", v.center.lat}, {"lon", v.center.lon}, {"zoom", v.zoom}, {"width_px", v.width_px}, {"height_px", v.height_px}};
}

inline json to_json(const BoundingBox& b) {
  return {{"south", b.south}, {"west", b.west}, {"north", b.north}, {"east", b.east}};
}

inline json to_json(const PixelRect& r) {
  return {{"left", r.left}, {"top", r.top}, {"right", r.right}, {"bottom", r.bottom}};
}

inline json to_json(CellRef c) { return json::array({c.row, c.col}); }

inline json poi_summary(const Poi& p) {
  return {{"id", p.id}, {"name", p.name}, {"category", p.category}, {"lat", p.location.lat}, {"lon", p.location.lon}};
}

inline json to_json(const ResolutionStep& s) {
  return {{"action", s.action}, {"description", s.description}, {"items", s.items}};
}

inline json to_json(const ResolvedAnswer& a, const PoiIndex& index) {
  json matches = json::array();
  for (const auto& id : a.matches)
    if (const Poi* p = index.find(id)) matches.push_back(poi_summary(*p));
  json cells = json::array();
  for (auto c : a.cells) cells.push_back(to_json(c));
  json steps = json::array();
  for (const auto& s : a.explanation) steps.push_back(to_json(s));
  return {{"status", to_string(a.status)}, {"matches", std::move(matches)}, {"cells", std::move(cells)},
          {"explanation", std::move(steps)}};
}

inline json to_json(const DeicticIntent& i) {
  json j = {{"category", i.category}, {"raw", i.raw}};
  j["region"] = i.region ? json(std::string(to_string(*i.region))) : json();
  j["relation"] = i.relation ? json(std::string(to_string(*i.relation))) : json();
  j["anchor"] = i.anchor ? json(*i.anchor) : json();
  return j;
}

inline json to_json(const TileGrid& grid, const std::vector<CellAssignment>& assignments) {
  json cells = json::array();
  for (const auto& a : assignments) {
    const auto& c = grid.cell(a.cell);
    cells.push_back({{"row", c.row},
                     {"col", c.col},
                     {"px_bbox", to_json(c.px_bbox)},
                     {"geo_bbox", to_json(c.geo_bbox)},
                     {"entities", a.entities}});
  }
  return {{"rows", grid.rows()}, {"cols", grid.cols()}, {"viewport", to_json(grid.viewport())}, {"cells", std::move(cells)}};
}

}  // namespace geoground::io
