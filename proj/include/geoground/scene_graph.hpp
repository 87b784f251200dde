#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "geoground/error.hpp"

namespace geoground {

struct BoxPx {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double center_x() const { return x + w / 2.0; }
  double center_y() const { return y + h / 2.0; }
  double area() const { return w * h; }
  friend bool operator==(const BoxPx&, const BoxPx&) = default;
};

struct DetectionRecord {
  std::string label;
  BoxPx box;
  double depth_m = 1.0;  // depth at box center
  double confidence = 1.0;

  friend bool operator==(const DetectionRecord&, const DetectionRecord&) = default;
};

struct SceneRecord {
  std::string image_ref;
  int width_px = 0;
  int height_px = 0;
  std::vector<DetectionRecord> detections;
};

enum class SpatialRelation { LeftOf, RightOf, Above, Below, InFrontOf, Behind };

inline constexpr std::string_view to_string(SpatialRelation r) {
  switch (r) {
    case SpatialRelation::LeftOf: return "left-of";
    case SpatialRelation::RightOf: return "right-of";
    case SpatialRelation::Above: return "above";
    case SpatialRelation::Below: return "below";
    case SpatialRelation::InFrontOf: return "in-front-of";
    case SpatialRelation::Behind: return "behind";
  }
  return "left-of";
}

inline constexpr SpatialRelation dual(SpatialRelation r) {
  switch (r) {
    case SpatialRelation::LeftOf: return SpatialRelation::RightOf;
    case SpatialRelation::RightOf: return SpatialRelation::LeftOf;
    case SpatialRelation::Above: return SpatialRelation::Below;
    case SpatialRelation::Below: return SpatialRelation::Above;
    case SpatialRelation::InFrontOf: return SpatialRelation::Behind;
    case SpatialRelation::Behind: return SpatialRelation::InFrontOf;
  }
  return r;
}

// left-of, above and in-front-of are canonical; the others are their duals.
inline constexpr bool is_canonical(SpatialRelation r) {
  return r == SpatialRelation::LeftOf || r == SpatialRelation::Above || r == SpatialRelation::InFrontOf;
}

struct SceneEdge {
  std::size_t from = 0;  // node index
  SpatialRelation relation = SpatialRelation::LeftOf;
  std::size_t to = 0;

  friend auto operator<=>(const SceneEdge&, const SceneEdge&) = default;
};

struct SceneGraph {
  std::vector<DetectionRecord> nodes;  // salience order
  std::vector<SceneEdge> edges;
};

struct RelationThresholds {
  double x_fraction = 0.05;  // of image width
  double y_fraction = 0.05;  // of image height
  double depth_m = 0.5;
};

inline double salience(const DetectionRecord& d, int width_px, int height_px) {
  const double image_area = static_cast<double>(width_px) * height_px;
  return d.confidence * std::sqrt(d.box.area() / image_area);
}

inline void validate_scene(const SceneRecord& scene) {
  if (scene.width_px <= 0 || scene.height_px <= 0) fail(ErrorCode::MalformedScene, "image dimensions must be positive");
  for (const auto& d : scene.detections) {
    const auto& b = d.box;
    if (!(b.w > 0.0 && b.h > 0.0) || b.x < 0.0 || b.y < 0.0 || b.x + b.w > scene.width_px || b.y + b.h > scene.height_px)
      fail(ErrorCode::MalformedScene, "detection '" + d.label + "' box lies outside the image");
    if (!(d.depth_m > 0.0) || !std::isfinite(d.depth_m))
      fail(ErrorCode::MalformedScene, "detection '" + d.label + "' needs a positive finite depth");
    if (!(d.confidence >= 0.0 && d.confidence <= 1.0))
      fail(ErrorCode::MalformedScene, "detection '" + d.label + "' confidence outside [0, 1]");
  }
}

// Top max_n detections by confidence * sqrt(box area / image area); ties by
// label, then input order.
inline std::vector<DetectionRecord> salient_filter(const SceneRecord& scene, std::size_t max_n = 10) {
  if (max_n < 1) fail(ErrorCode::InvalidArgument, "max_n must be at least 1");
  std::vector<std::size_t> order(scene.detections.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<double> score(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) score[i] = salience(scene.detections[i], scene.width_px, scene.height_px);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (score[a] != score[b]) return score[a] > score[b];
    return scene.detections[a].label < scene.detections[b].label;
  });
  if (order.size() > max_n) order.resize(max_n);
  std::vector<DetectionRecord> out;
  out.reserve(order.size());
  for (auto i : order) out.push_back(scene.detections[i]);
  return out;
}

// Threshold-gated pairwise relations. Every emitted edge comes with its dual.
inline SceneGraph derive_relations(std::vector<DetectionRecord> nodes, int width_px, int height_px,
                                   const RelationThresholds& th = {}) {
  SceneGraph g;
  g.nodes = std::move(nodes);
  const double tau_x = th.x_fraction * width_px;
  const double tau_y = th.y_fraction * height_px;
  auto emit = [&g](std::size_t a, SpatialRelation r, std::size_t b) {
    g.edges.push_back({a, r, b});
    g.edges.push_back({b, dual(r), a});
  };
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    for (std::size_t j = i + 1; j < g.nodes.size(); ++j) {
      const auto& a = g.nodes[i];
      const auto& b = g.nodes[j];
      const double dx = b.box.center_x() - a.box.center_x();
      if (std::abs(dx) > tau_x) dx > 0 ? emit(i, SpatialRelation::LeftOf, j) : emit(j, SpatialRelation::LeftOf, i);
      const double dy = b.box.center_y() - a.box.center_y();
      if (std::abs(dy) > tau_y) dy > 0 ? emit(i, SpatialRelation::Above, j) : emit(j, SpatialRelation::Above, i);
      const double dd = b.depth_m - a.depth_m;
      if (std::abs(dd) > th.depth_m)
        dd > 0 ? emit(i, SpatialRelation::InFrontOf, j) : emit(j, SpatialRelation::InFrontOf, i);
    }
  }
  return g;
}

inline SceneGraph build_scene_graph(const SceneRecord& scene, std::size_t max_n = 10, const RelationThresholds& th = {}) {
  validate_scene(scene);
  return derive_relations(salient_filter(scene, max_n), scene.width_px, scene.height_px, th);
}

inline std::string relation_phrase(SpatialRelation r) {
  switch (r) {
    case SpatialRelation::LeftOf: return "to the left of";
    case SpatialRelation::RightOf: return "to the right of";
    case SpatialRelation::Above: return "above";
    case SpatialRelation::Below: return "below";
    case SpatialRelation::InFrontOf: return "in front of";
    case SpatialRelation::Behind: return "behind";
  }
  return "near";
}

inline std::vector<SceneEdge> canonical_edges(const SceneGraph& g) {
  std::vector<SceneEdge> out;
  for (const auto& e : g.edges)
    if (is_canonical(e.relation)) out.push_back(e);
  std::sort(out.begin(), out.end());
  return out;
}

// One templated sentence per canonical edge, in salience order of the
// subject node.
inline std::string describe_scene(const SceneGraph& g) {
  if (g.nodes.empty()) return "No salient objects detected.";
  const auto edges = canonical_edges(g);
  if (edges.empty()) return "No spatial relations between the salient objects.";
  std::string out;
  for (const auto& e : edges) {
    if (!out.empty()) out += ' ';
    out += "The " + g.nodes[e.from].label + " is " + relation_phrase(e.relation) + " the " + g.nodes[e.to].label + ".";
  }
  return out;
}

// Labels of objects standing in `relation` to the anchor, e.g. "what is to
// the left of the store sign" -> related(g, LeftOf, "store sign").
inline std::vector<std::string> related_objects(const SceneGraph& g, SpatialRelation relation, std::string_view anchor) {
  std::vector<std::string> out;
  for (const auto& e : g.edges) {
    if (e.relation == relation && g.nodes[e.to].label == anchor) out.push_back(g.nodes[e.from].label);
  }
  return out;
}

inline void from_json(const nlohmann::json& j, DetectionRecord& d) {
  d.label = j.at("label").get<std::string>();
  const auto& b = j.at("box");
  d.box = BoxPx{b.at("x").get<double>(), b.at("y").get<double>(), b.at("w").get<double>(), b.at("h").get<double>()};
  d.depth_m = j.at("depth_m").get<double>();
  d.confidence = j.value("confidence", 1.0);
}

inline void to_json(nlohmann::json& j, const DetectionRecord& d) {
  j = {{"label", d.label},
       {"box", {{"x", d.box.x}, {"y", d.box.y}, {"w", d.box.w}, {"h", d.box.h}}},
       {"depth_m", d.depth_m},
       {"confidence", d.confidence}};
}

inline SceneRecord parse_scene(const nlohmann::json& j) {
  SceneRecord s;
  try {
    s.image_ref = j.value("image_ref", "");
    s.width_px = j.at("width_px").get<int>();
    s.height_px = j.at("height_px").get<int>();
    s.detections = j.at("detections").get<std::vector<DetectionRecord>>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::MalformedScene, std::string("malformed scene record: ") + e.what());
  }
  validate_scene(s);
  return s;
}

inline nlohmann::json to_json(const SceneGraph& g) {
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : g.edges)
    edges.push_back({{"from", e.from}, {"relation", to_string(e.relation)}, {"to", e.to}});
  return {{"nodes", g.nodes}, {"edges", std::move(edges)}};
}

}  // namespace geoground
