#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "geoground/geo_math.hpp"

using namespace geoground;

namespace {

using Vec3 = std::array<double, 3>;

Vec3 unit_vector(const GeoPoint& p) {
  const double la = p.lat * std::numbers::pi / 180.0, lo = p.lon * std::numbers::pi / 180.0;
  return {std::cos(la) * std::cos(lo), std::cos(la) * std::sin(lo), std::sin(la)};
}

// Chord-length great-circle distance; shares no code with the haversine path.
double chord_distance(const GeoPoint& a, const GeoPoint& b) {
  const auto u = unit_vector(a), v = unit_vector(b);
  const double c = std::sqrt((u[0] - v[0]) * (u[0] - v[0]) + (u[1] - v[1]) * (u[1] - v[1]) + (u[2] - v[2]) * (u[2] - v[2]));
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, c / 2.0));
}

// Bearing from the local east/north basis at `from`.
double tangent_bearing(const GeoPoint& from, const GeoPoint& to) {
  const double la = from.lat * std::numbers::pi / 180.0, lo = from.lon * std::numbers::pi / 180.0;
  const Vec3 east{-std::sin(lo), std::cos(lo), 0.0};
  const Vec3 north{-std::sin(la) * std::cos(lo), -std::sin(la) * std::sin(lo), std::cos(la)};
  const auto v = unit_vector(to);
  const double e = v[0] * east[0] + v[1] * east[1] + v[2] * east[2];
  const double n = v[0] * north[0] + v[1] * north[1] + v[2] * north[2];
  double deg = std::atan2(e, n) * 180.0 / std::numbers::pi;
  return deg < 0 ? deg + 360.0 : deg;
}

double angle_gap(double a, double b) {
  const double d = std::fmod(std::abs(a - b), 360.0);
  return std::min(d, 360.0 - d);
}

GeoPoint random_point(std::mt19937_64& rng, double max_lat = 89.0) {
  std::uniform_real_distribution<double> lat(-max_lat, max_lat), lon(-180.0, 180.0);
  return GeoPoint::make(lat(rng), lon(rng));
}

}  // namespace

TEST(Haversine, Examples) {
  EXPECT_EQ(haversine_distance({0, 0}, {0, 0}), 0.0);
  EXPECT_NEAR(haversine_distance({0, 0}, {0, 180}), std::numbers::pi * kEarthRadiusM, 1e-6);
  EXPECT_NEAR(haversine_distance({0, 0}, {0, 180}), 20015087.0, 1.0);
  EXPECT_NEAR(haversine_distance({0, 0}, {0, 1}), 2.0 * std::numbers::pi * kEarthRadiusM / 360.0, 1e-6);
  EXPECT_NEAR(haversine_distance({0, 0}, {0, 1}), 111195.0, 1.0);
}

TEST(Haversine, MatchesChordOracleAndIsAMetric) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 2000; ++i) {
    const auto a = random_point(rng), b = random_point(rng), c = random_point(rng);
    const double ab = haversine_distance(a, b);
    EXPECT_NEAR(ab, chord_distance(a, b), 1e-6 * std::max(1.0, ab));
    EXPECT_EQ(ab, haversine_distance(b, a));
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, haversine_distance(a, c) + haversine_distance(c, b) + 1e-6 * ab);
  }
}

TEST(Bearing, Examples) {
  EXPECT_EQ(initial_bearing({0, 0}, {10, 0}), 0.0);
  EXPECT_EQ(initial_bearing({0, 0}, {0, 90}), 90.0);
  EXPECT_EQ(initial_bearing({0, 0}, {0, -90}), 270.0);
}

TEST(Bearing, IdenticalOrAntipodalPointsAreDegenerate) {
  try {
    initial_bearing({12, 34}, {12, 34});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateBearing);
  }
  EXPECT_THROW(initial_bearing({0, 0}, {0, -180}), Error);
}

TEST(Bearing, FuzzAgainstTangentOracle) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> lon(-180.0, 179.0);
  for (int i = 0; i < 10000; ++i) {
    const auto a = random_point(rng, 80.0), b = random_point(rng, 80.0);
    if (haversine_distance(a, b) < 1.0 || haversine_distance(a, b) > 0.99 * std::numbers::pi * kEarthRadiusM) continue;
    const double t = initial_bearing(a, b);
    ASSERT_GE(t, 0.0);
    ASSERT_LT(t, 360.0);
    ASSERT_LT(angle_gap(t, tangent_bearing(a, b)), 1e-6);
    // due east along the equator is exactly 90
    const double l = lon(rng);
    ASSERT_NEAR(initial_bearing({0, l}, GeoPoint::make(0, l + 0.5)), 90.0, 1e-9);
  }
}

TEST(RelativeDirection, Examples) {
  EXPECT_EQ(relative_direction(90, 90), 0.0);
  EXPECT_EQ(relative_direction(180, 0), 180.0);
  EXPECT_EQ(relative_direction(10, 350), 20.0);
}

TEST(RelativeDirection, PropertiesOnFuzzedInputs) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> any(-2000.0, 2000.0);
  for (int i = 0; i < 10000; ++i) {
    const double b = any(rng), h = any(rng), d = any(rng);
    const double r = relative_direction(b, h);
    ASSERT_GE(r, 0.0);
    ASSERT_LT(r, 360.0);
    ASSERT_EQ(relative_direction(b, b), 0.0);
    // rotation invariance, modulo floating-point rounding of b+d and h+d
    ASSERT_LT(angle_gap(relative_direction(b + d, h + d), r), 1e-9);
    // wrap-around: whole turns on either input change nothing
    ASSERT_LT(angle_gap(relative_direction(b + 360.0, h - 720.0), r), 1e-9);
    const double n = normalize_degrees(any(rng));
    ASSERT_GE(n, 0.0);
    ASSERT_LT(n, 360.0);
  }
}

TEST(Mercator, Examples) {
  EXPECT_EQ(project_mercator({0, 0}, 0), (PixelCoord{128, 128, 0}));
  EXPECT_EQ(project_mercator({0, 0}, 2), (PixelCoord{512, 512, 2}));
  const auto edge = project_mercator({0, 180 - 1e-9}, 0);
  EXPECT_NEAR(edge.x, 256.0, 1e-6);
  EXPECT_LT(edge.x, 256.0);
  EXPECT_EQ(unproject_mercator({128, 128, 0}), (GeoPoint{0, 0}));
  EXPECT_EQ(unproject_mercator({0, 128, 0}), (GeoPoint{0, -180}));
}

TEST(Mercator, Errors) {
  EXPECT_THROW(project_mercator({85.1, 0}, 3), Error);
  try {
    project_mercator({-86, 0}, 3);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::LatitudeOutOfProjection);
  }
  try {
    unproject_mercator({257, 5, 0});
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PixelOutOfWorld);
  }
  EXPECT_THROW(unproject_mercator({-1, 5, 0}), Error);
}

TEST(Mercator, RoundTrip) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> lat(-kMercatorLatLimit, kMercatorLatLimit), lon(-180.0, 180.0);
  std::uniform_int_distribution<int> zoom(0, kMaxZoom);
  for (int i = 0; i < 1000; ++i) {
    const auto p = GeoPoint::make(lat(rng), lon(rng));
    const auto q = unproject_mercator(project_mercator(p, zoom(rng)));
    ASSERT_LT(std::abs(q.lat - p.lat), 1e-9);
    ASSERT_LT(angle_gap(q.lon, p.lon), 1e-9);
  }
}

TEST(GeoPoint, NormalizesLongitudeAndRejectsBadLatitude) {
  EXPECT_EQ(GeoPoint::make(0, 180).lon, -180.0);
  EXPECT_EQ(GeoPoint::make(0, 190).lon, -170.0);
  EXPECT_THROW(GeoPoint::make(90.5, 0), Error);
  EXPECT_THROW(GeoPoint::make(NAN, 0), Error);
  EXPECT_EQ(UserPose::make({0, 0}, -90).heading, 270.0);
}
