#pragma once

#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "geoground/geo_index.hpp"
#include "geoground/geo_math.hpp"

namespace geoground::agents {

inline constexpr double kArrivalRadiusM = 15.0;
inline constexpr double kMetersPerMile = 1609.344;

struct NavInstruction {
  std::optional<double> relative_direction_deg;  // absent once arrived
  double distance_m = 0.0;
  bool arrived = false;
  std::optional<std::string> preview_ref;
  std::string cue;

  friend bool operator==(const NavInstruction&, const NavInstruction&) = default;
};

// Spoken form of a relative direction in [0, 360).
inline std::string direction_cue(double rel) {
  if (rel < 10.0 || rel > 350.0) return "straight ahead";
  if (rel <= 45.0) return "slight right";
  if (rel <= 135.0) return "turn right";
  if (rel < 225.0) return "turn around";
  if (rel < 315.0) return "turn left";
  return "slight left";
}

inline NavInstruction navigation_step(const UserPose& pose, const GeoPoint& destination,
                                      std::optional<std::string> preview_ref = std::nullopt,
                                      double arrival_radius_m = kArrivalRadiusM) {
  NavInstruction out;
  out.distance_m = haversine_distance(pose.position, destination);
  out.preview_ref = std::move(preview_ref);
  if (out.distance_m < arrival_radius_m) {
    out.arrived = true;
    out.cue = "arrived";
    return out;
  }
  const double rel = relative_direction(initial_bearing(pose.position, destination), pose.heading);
  out.relative_direction_deg = rel;
  out.cue = direction_cue(rel);
  return out;
}

// Destination POIs may carry a "street_view" attribute naming a preview asset.
inline NavInstruction navigation_step(const UserPose& pose, const Poi& destination,
                                      double arrival_radius_m = kArrivalRadiusM) {
  std::optional<std::string> preview;
  if (auto it = destination.attributes.find("street_view"); it != destination.attributes.end()) preview = it->second;
  return navigation_step(pose, destination.location, preview, arrival_radius_m);
}

inline nlohmann::json to_json(const NavInstruction& n) {
  nlohmann::json j = {{"distance_m", n.distance_m}, {"arrived", n.arrived}, {"cue", n.cue}};
  j["relative_direction_deg"] = n.relative_direction_deg ? nlohmann::json(*n.relative_direction_deg) : nlohmann::json();
  j["preview_ref"] = n.preview_ref ? nlohmann::json(*n.preview_ref) : nlohmann::json();
  return j;
}

}  // namespace geoground::agents
