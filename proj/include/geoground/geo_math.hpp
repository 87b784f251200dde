#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "geoground/error.hpp"

namespace geoground {

// Mean Earth radius. All distances in the library are computed on a sphere
// of this radius.
inline constexpr double kEarthRadiusM = 6371000.0;

inline constexpr double kTileSize = 256.0;
inline constexpr int kMaxZoom = 22;

// Latitude at which the square Web-Mercator world ends: atan(sinh(pi)).
inline constexpr double kMercatorMaxLat = 85.0511287798066;
// Accepted input bound; values between kMercatorMaxLat and this are clamped
// onto the world edge.
inline constexpr double kMercatorLatLimit = 85.05113;

inline constexpr double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline constexpr double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

// ((x mod 360) + 360) mod 360, folded into [0, 360).
inline double normalize_degrees(double deg) {
  double r = std::fmod(deg, 360.0);
  if (r < 0.0) r += 360.0;
  // fmod of a tiny negative value plus 360 can round up to exactly 360.
  if (r >= 360.0) r -= 360.0;
  return r;
}

// Longitude folded into the half-open range [-180, 180).
inline double normalize_longitude(double lon) {
  return normalize_degrees(lon + 180.0) - 180.0;
}

// Smallest absolute angle between two directions, in [0, 180].
inline double angular_difference(double a_deg, double b_deg) {
  const double d = normalize_degrees(a_deg - b_deg);
  return std::min(d, 360.0 - d);
}

struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;

  // Validates latitude and folds longitude into [-180, 180).
  static GeoPoint make(double lat, double lon) {
    if (!std::isfinite(lat) || !std::isfinite(lon))
      fail(ErrorCode::InvalidArgument, "coordinates must be finite");
    if (lat < -90.0 || lat > 90.0)
      fail(ErrorCode::InvalidArgument, "latitude out of range: " + std::to_string(lat));
    return GeoPoint{lat, normalize_longitude(lon)};
  }

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

struct UserPose {
  GeoPoint position;
  double heading = 0.0;  // degrees clockwise from true north, [0, 360)

  static UserPose make(GeoPoint position, double heading) {
    if (!std::isfinite(heading)) fail(ErrorCode::InvalidArgument, "heading must be finite");
    return UserPose{position, normalize_degrees(heading)};
  }

  friend bool operator==(const UserPose&, const UserPose&) = default;
};

// Web-Mercator world pixel coordinate: x grows east, y grows south.
struct PixelCoord {
  double x = 0.0;
  double y = 0.0;
  int zoom = 0;

  friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
};

inline double world_size_px(int zoom) { return kTileSize * std::ldexp(1.0, zoom); }

inline double haversine_distance(const GeoPoint& a, const GeoPoint& b) {
  const double phi1 = deg_to_rad(a.lat);
  const double phi2 = deg_to_rad(b.lat);
  const double dphi = phi2 - phi1;
  const double dlambda = deg_to_rad(b.lon - a.lon);
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  h = std::clamp(h, 0.0, 1.0);
  return 2.0 * kEarthRadiusM * std::asin(std::sqrt(h));
}

// Great-circle initial bearing, clockwise from north in [0, 360). The
// two-argument arctangent keeps the quadrant.
inline double initial_bearing(const GeoPoint& from, const GeoPoint& to) {
  if (from == to) fail(ErrorCode::DegenerateBearing, "bearing undefined between identical points");
  const double phi1 = deg_to_rad(from.lat);
  const double phi2 = deg_to_rad(to.lat);
  const double dlambda = deg_to_rad(to.lon - from.lon);
  const double y = std::sin(dlambda) * std::cos(phi2);
  const double x = std::cos(phi1) * std::sin(phi2) - std::sin(phi1) * std::cos(phi2) * std::cos(dlambda);
  if (std::abs(x) < 1e-15 && std::abs(y) < 1e-15)
    fail(ErrorCode::DegenerateBearing, "bearing undefined between coincident or antipodal points");
  return normalize_degrees(rad_to_deg(std::atan2(y, x)));
}

// Bearing of the destination relative to where the user faces; 0 means dead
// ahead, 90 to the right.
inline double relative_direction(double bearing_deg, double heading_deg) {
  return normalize_degrees(bearing_deg - heading_deg);
}

// Point reached by travelling `distance_m` along the great circle that starts
// at `origin` with the given initial bearing.
inline GeoPoint destination_point(const GeoPoint& origin, double bearing_deg, double distance_m) {
  const double delta = distance_m / kEarthRadiusM;
  const double theta = deg_to_rad(bearing_deg);
  const double phi1 = deg_to_rad(origin.lat);
  const double lambda1 = deg_to_rad(origin.lon);
  const double sin_phi2 = std::sin(phi1) * std::cos(delta) + std::cos(phi1) * std::sin(delta) * std::cos(theta);
  const double phi2 = std::asin(std::clamp(sin_phi2, -1.0, 1.0));
  const double lambda2 = lambda1 + std::atan2(std::sin(theta) * std::sin(delta) * std::cos(phi1),
                                              std::cos(delta) - std::sin(phi1) * sin_phi2);
  return GeoPoint::make(rad_to_deg(phi2), rad_to_deg(lambda2));
}

inline PixelCoord project_mercator(const GeoPoint& p, int zoom) {
  if (zoom < 0 || zoom > kMaxZoom) fail(ErrorCode::InvalidArgument, "zoom out of range: " + std::to_string(zoom));
  if (std::abs(p.lat) > kMercatorLatLimit)
    fail(ErrorCode::LatitudeOutOfProjection, "latitude beyond Web-Mercator limit: " + std::to_string(p.lat));
  const double world = world_size_px(zoom);
  const double x = (p.lon + 180.0) / 360.0 * world;
  const double sin_lat = std::sin(deg_to_rad(p.lat));
  const double y = (0.5 - std::log((1.0 + sin_lat) / (1.0 - sin_lat)) / (4.0 * std::numbers::pi)) * world;
  return PixelCoord{x, std::clamp(y, 0.0, world), zoom};
}

inline GeoPoint unproject_mercator(const PixelCoord& px) {
  if (px.zoom < 0 || px.zoom > kMaxZoom) fail(ErrorCode::InvalidArgument, "zoom out of range: " + std::to_string(px.zoom));
  const double world = world_size_px(px.zoom);
  if (!(px.x >= 0.0 && px.x <= world && px.y >= 0.0 && px.y <= world))
    fail(ErrorCode::PixelOutOfWorld, "pixel outside world bounds at zoom " + std::to_string(px.zoom));
  const double lon = px.x / world * 360.0 - 180.0;
  const double n = std::numbers::pi * (1.0 - 2.0 * px.y / world);
  const double lat = rad_to_deg(std::atan(std::sinh(n)));
  return GeoPoint{lat, normalize_longitude(lon)};
}

}  // namespace geoground
