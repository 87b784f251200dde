#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <iostream>
#include <istream>
#include <map>
#include <optional>
#include <queue>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "geoground/error.hpp"
#include "geoground/geo_math.hpp"
#include "geoground/lexicon.hpp"

namespace geoground {

struct Poi {
  std::string id;
  std::string name;
  std::string category;
  GeoPoint location;
  double popularity = 0.0;
  std::map<std::string, std::string> attributes;

  friend bool operator==(const Poi&, const Poi&) = default;
};

struct BoundingBox {
  double south = 0.0;
  double west = 0.0;
  double north = 0.0;
  double east = 0.0;

  static BoundingBox make(double south, double west, double north, double east) {
    if (!(south <= north)) fail(ErrorCode::InvalidArgument, "bounding box south must not exceed north");
    if (!(west <= east))
      fail(ErrorCode::InvalidArgument, "bounding box crosses the antimeridian; split it into two boxes");
    if (south < -90.0 || north > 90.0 || west < -180.0 || east > 180.0)
      fail(ErrorCode::InvalidArgument, "bounding box outside coordinate domain");
    return BoundingBox{south, west, north, east};
  }

  bool contains(const GeoPoint& p) const {
    return p.lat >= south && p.lat <= north && p.lon >= west && p.lon <= east;
  }

  bool intersects(const BoundingBox& o) const {
    return !(o.south > north || o.north < south || o.west > east || o.east < west);
  }

  GeoPoint center() const { return GeoPoint{(south + north) / 2.0, (west + east) / 2.0}; }

  void expand(const GeoPoint& p) {
    south = std::min(south, p.lat);
    north = std::max(north, p.lat);
    west = std::min(west, p.lon);
    east = std::max(east, p.lon);
  }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct IndexStats {
  std::size_t count = 0;
  std::map<std::string, std::size_t> categories;
  std::optional<BoundingBox> bbox;  // empty index has no extent
  // Per-ingestion counters; zero when stats come from PoiIndex::stats().
  std::size_t skipped_geometry = 0;
  std::size_t skipped_invalid = 0;
  std::size_t duplicate_ids = 0;

  friend bool operator==(const IndexStats&, const IndexStats&) = default;
};

struct PoiHit {
  const Poi* poi = nullptr;
  double distance_m = 0.0;
};

// Sink for non-fatal ingestion diagnostics. Defaults to stderr.
inline std::function<void(const std::string&)>& warning_sink() {
  static std::function<void(const std::string&)> sink = [](const std::string& msg) {
    std::clog << "warning: " << msg << '\n';
  };
  return sink;
}

// Deterministic id for features that carry none: FNV-1a over name and
// coordinates printed with fixed precision.
inline std::string synthesize_poi_id(std::string_view name, const GeoPoint& p) {
  char coords[64];
  std::snprintf(coords, sizeof(coords), "|%.7f|%.7f", p.lat, p.lon);
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
  };
  mix(name);
  mix(coords);
  char out[32];
  std::snprintf(out, sizeof(out), "poi-%016llx", static_cast<unsigned long long>(h));
  return out;
}

namespace detail {

// Lower bound, in meters, of the great-circle distance from p to any point
// inside box. Exact when p's longitude lies within the box.
inline double min_distance_to_box(const GeoPoint& p, const BoundingBox& box) {
  double lat_gap = 0.0;
  if (p.lat < box.south) lat_gap = box.south - p.lat;
  else if (p.lat > box.north) lat_gap = p.lat - box.north;
  double bound = deg_to_rad(lat_gap) * kEarthRadiusM;
  if (p.lon < box.west || p.lon > box.east) {
    // Distance to the great circle through each edge meridian.
    const double cos_lat = std::cos(deg_to_rad(p.lat));
    auto cross_track = [&](double edge_lon) {
      const double s = std::abs(std::sin(deg_to_rad(p.lon - edge_lon))) * cos_lat;
      return std::asin(std::clamp(s, 0.0, 1.0)) * kEarthRadiusM;
    };
    bound = std::max(bound, std::min(cross_track(box.west), cross_track(box.east)));
  }
  return std::max(0.0, bound * (1.0 - 1e-12) - 1e-6);
}

inline bool hit_less(const PoiHit& a, const PoiHit& b) {
  if (a.distance_m != b.distance_m) return a.distance_m < b.distance_m;
  return a.poi->id < b.poi->id;
}

}  // namespace detail

// Point index over POIs backed by a sort-tile-recursive packed R-tree over
// (lat, lon). Mutation (ingest/insert) is exclusive and repacks the tree;
// const queries are safe from any number of threads once mutation stops.
class PoiIndex {
 public:
  static constexpr std::size_t kNodeCapacity = 16;

  explicit PoiIndex(CategoryLexicon lexicon = CategoryLexicon::with_defaults()) : lexicon_(std::move(lexicon)) {}

  const CategoryLexicon& lexicon() const { return lexicon_; }
  std::size_t size() const { return pois_.size(); }
  bool empty() const { return pois_.empty(); }
  const std::vector<Poi>& pois() const { return pois_; }

  const Poi* find(std::string_view id) const {
    auto it = by_id_.find(std::string(id));
    return it == by_id_.end() ? nullptr : &pois_[it->second];
  }

  // Case-insensitive exact name match, ordered by id.
  std::vector<const Poi*> find_by_name(std::string_view name) const {
    std::vector<const Poi*> out;
    const auto wanted = normalize_phrase(name);
    for (const auto& p : pois_) {
      if (normalize_phrase(p.name) == wanted) out.push_back(&p);
    }
    std::sort(out.begin(), out.end(), [](const Poi* a, const Poi* b) { return a->id < b->id; });
    return out;
  }

  // Adds or replaces POIs (last one wins on id) and repacks the tree.
  void insert(std::vector<Poi> batch) {
    for (auto& p : batch) {
      validate(p);
      p.category = lexicon_.canonical_or_self(p.category);
      upsert(std::move(p));
    }
    rebuild();
  }

  IndexStats ingest_geojson(std::string_view text) {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      fail(ErrorCode::MalformedGeoJson, std::string("GeoJSON parse failure: ") + e.what());
    }
    return ingest_document(doc);
  }

  IndexStats ingest_geojson(std::istream& in) {
    std::stringstream buffer;
    buffer << in.rdbuf();
    return ingest_geojson(buffer.str());
  }

  IndexStats stats() const {
    IndexStats s;
    s.count = pois_.size();
    for (const auto& p : pois_) {
      ++s.categories[p.category];
      if (!s.bbox) s.bbox = BoundingBox{p.location.lat, p.location.lon, p.location.lat, p.location.lon};
      else s.bbox->expand(p.location);
    }
    return s;
  }

  // POIs inside the box (edges inclusive), ordered by distance to the box
  // center and then id.
  std::vector<const Poi*> query_bbox(const BoundingBox& box, const std::optional<std::string>& category = {}) const {
    const auto filter = resolve_filter(category);
    std::vector<PoiHit> hits;
    if (!nodes_.empty() && !(filter && filter->empty())) {
      std::vector<std::uint32_t> stack{root_};
      while (!stack.empty()) {
        const Node& n = nodes_[stack.back()];
        stack.pop_back();
        if (!n.box.intersects(box)) continue;
        if (n.leaf) {
          for (std::uint32_t i = n.first; i < n.first + n.count; ++i) {
            const Poi& p = pois_[order_[i]];
            if (box.contains(p.location) && matches(p, filter)) hits.push_back({&p, 0.0});
          }
        } else {
          for (std::uint32_t c = n.first; c < n.first + n.count; ++c) stack.push_back(c);
        }
      }
    }
    const GeoPoint center = box.center();
    for (auto& h : hits) h.distance_m = haversine_distance(center, h.poi->location);
    return sorted_pois(hits);
  }

  std::vector<PoiHit> query_radius(const GeoPoint& center, double radius_m,
                                   const std::optional<std::string>& category = {}) const {
    if (!(radius_m > 0.0)) fail(ErrorCode::InvalidArgument, "radius must be positive");
    const auto filter = resolve_filter(category);
    std::vector<PoiHit> hits;
    if (!nodes_.empty() && !(filter && filter->empty())) {
      std::vector<std::uint32_t> stack{root_};
      while (!stack.empty()) {
        const Node& n = nodes_[stack.back()];
        stack.pop_back();
        if (detail::min_distance_to_box(center, n.box) > radius_m) continue;
        if (n.leaf) {
          for (std::uint32_t i = n.first; i < n.first + n.count; ++i) {
            const Poi& p = pois_[order_[i]];
            if (!matches(p, filter)) continue;
            const double d = haversine_distance(center, p.location);
            if (d <= radius_m) hits.push_back({&p, d});
          }
        } else {
          for (std::uint32_t c = n.first; c < n.first + n.count; ++c) stack.push_back(c);
        }
      }
    }
    std::sort(hits.begin(), hits.end(), detail::hit_less);
    return hits;
  }

  // Best-first search. Keeps expanding while the frontier could still hold
  // a POI tied with the k-th distance so the id tie-break stays exact.
  std::vector<PoiHit> nearest_k(const GeoPoint& center, std::size_t k,
                                const std::optional<std::string>& category = {}) const {
    if (k < 1) fail(ErrorCode::InvalidArgument, "k must be at least 1");
    const auto filter = resolve_filter(category);
    std::vector<PoiHit> found;
    if (nodes_.empty() || (filter && filter->empty())) return found;

    struct Item {
      double key;
      bool is_poi;
      std::uint32_t index;
      bool operator>(const Item& o) const { return key > o.key; }
    };
    std::priority_queue<Item, std::vector<Item>, std::greater<>> frontier;
    frontier.push({0.0, false, root_});
    while (!frontier.empty()) {
      const Item top = frontier.top();
      if (found.size() >= k) {
        // found is filled in non-decreasing distance order
        if (top.key > found[k - 1].distance_m) break;
      }
      frontier.pop();
      if (top.is_poi) {
        found.push_back({&pois_[top.index], top.key});
        continue;
      }
      const Node& n = nodes_[top.index];
      if (n.leaf) {
        for (std::uint32_t i = n.first; i < n.first + n.count; ++i) {
          const Poi& p = pois_[order_[i]];
          if (matches(p, filter)) frontier.push({haversine_distance(center, p.location), true, order_[i]});
        }
      } else {
        for (std::uint32_t c = n.first; c < n.first + n.count; ++c)
          frontier.push({detail::min_distance_to_box(center, nodes_[c].box), false, c});
      }
    }
    std::sort(found.begin(), found.end(), detail::hit_less);
    if (found.size() > k) found.resize(k);
    return found;
  }

 private:
  struct Node {
    BoundingBox box;
    std::uint32_t first = 0;
    std::uint32_t count = 0;
    bool leaf = true;
  };

  // nullopt: no filter. Empty string: filter that matches nothing.
  std::optional<std::string> resolve_filter(const std::optional<std::string>& category) const {
    if (!category) return std::nullopt;
    return lexicon_.canonical_or_self(*category);
  }

  static bool matches(const Poi& p, const std::optional<std::string>& filter) {
    return !filter || p.category == *filter;
  }

  static std::vector<const Poi*> sorted_pois(std::vector<PoiHit>& hits) {
    std::sort(hits.begin(), hits.end(), detail::hit_less);
    std::vector<const Poi*> out;
    out.reserve(hits.size());
    for (const auto& h : hits) out.push_back(h.poi);
    return out;
  }

  static void validate(const Poi& p) {
    if (p.id.empty()) fail(ErrorCode::InvalidArgument, "POI id must not be empty");
    if (trim(p.category).empty()) fail(ErrorCode::InvalidArgument, "POI " + p.id + " has no category");
    if (!(p.popularity >= 0.0) || !std::isfinite(p.popularity))
      fail(ErrorCode::InvalidArgument, "POI " + p.id + " has negative popularity");
    GeoPoint::make(p.location.lat, p.location.lon);
  }

  // Returns true when an existing entry was replaced.
  bool upsert(Poi p) {
    p.location = GeoPoint::make(p.location.lat, p.location.lon);
    if (auto it = by_id_.find(p.id); it != by_id_.end()) {
      pois_[it->second] = std::move(p);
      return true;
    }
    by_id_.emplace(p.id, pois_.size());
    pois_.push_back(std::move(p));
    return false;
  }

  IndexStats ingest_document(const nlohmann::json& doc) {
    if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" || !doc.contains("features") ||
        !doc["features"].is_array()) {
      fail(ErrorCode::MalformedGeoJson, "expected a GeoJSON FeatureCollection with a features array");
    }
    std::size_t skipped_geometry = 0;
    std::size_t skipped_invalid = 0;
    std::size_t duplicates = 0;
    std::unordered_map<std::string, std::size_t> seen;
    std::vector<Poi> parsed;
    std::size_t feature_no = 0;
    for (const auto& feature : doc["features"]) {
      ++feature_no;
      if (!feature.is_object() || feature.value("type", "") != "Feature") {
        ++skipped_invalid;
        warning_sink()("feature " + std::to_string(feature_no) + " is not a GeoJSON Feature; skipped");
        continue;
      }
      const auto geometry = feature.find("geometry");
      if (geometry == feature.end() || !geometry->is_object() || geometry->value("type", "") != "Point") {
        ++skipped_geometry;
        continue;
      }
      auto poi = parse_point_feature(feature);
      if (!poi) {
        ++skipped_invalid;
        warning_sink()("feature " + std::to_string(feature_no) + " lacks valid coordinates, name or category; skipped");
        continue;
      }
      if (auto it = seen.find(poi->id); it != seen.end()) {
        ++duplicates;
        warning_sink()("duplicate POI id '" + poi->id + "'; keeping the later feature");
        parsed[it->second] = std::move(*poi);
        continue;
      }
      if (find(poi->id)) warning_sink()("POI id '" + poi->id + "' already indexed; replacing it");
      seen.emplace(poi->id, parsed.size());
      parsed.push_back(std::move(*poi));
    }
    for (auto& p : parsed) upsert(std::move(p));
    rebuild();
    IndexStats s = stats();
    s.skipped_geometry = skipped_geometry;
    s.skipped_invalid = skipped_invalid;
    s.duplicate_ids = duplicates;
    return s;
  }

  std::optional<Poi> parse_point_feature(const nlohmann::json& feature) const {
    const auto& coords = feature["geometry"].value("coordinates", nlohmann::json());
    if (!coords.is_array() || coords.size() < 2 || !coords[0].is_number() || !coords[1].is_number()) return std::nullopt;
    const double lon = coords[0].get<double>();
    const double lat = coords[1].get<double>();
    if (!std::isfinite(lat) || !std::isfinite(lon) || lat < -90.0 || lat > 90.0 || lon < -180.0 || lon > 180.0)
      return std::nullopt;
    const auto props = feature.value("properties", nlohmann::json::object());
    if (!props.is_object()) return std::nullopt;
    const auto name_it = props.find("name");
    const auto cat_it = props.find("category");
    if (name_it == props.end() || !name_it->is_string() || cat_it == props.end() || !cat_it->is_string())
      return std::nullopt;
    Poi p;
    p.name = name_it->get<std::string>();
    p.category = lexicon_.canonical_or_self(cat_it->get<std::string>());
    p.location = GeoPoint::make(lat, lon);
    if (p.category.empty() || trim(p.name).empty()) return std::nullopt;
    if (auto pop = props.find("popularity"); pop != props.end() && !pop->is_null()) {
      if (!pop->is_number() || pop->get<double>() < 0.0) return std::nullopt;
      p.popularity = pop->get<double>();
    }
    const nlohmann::json* id = nullptr;
    if (auto it = props.find("id"); it != props.end() && !it->is_null()) id = &*it;
    else if (auto top = feature.find("id"); top != feature.end() && !top->is_null()) id = &*top;
    if (id) p.id = id->is_string() ? id->get<std::string>() : id->dump();
    if (p.id.empty()) p.id = synthesize_poi_id(p.name, p.location);
    for (const auto& [key, value] : props.items()) {
      if (key == "id" || key == "name" || key == "category" || key == "popularity") continue;
      p.attributes[key] = value.is_string() ? value.get<std::string>() : value.dump();
    }
    return p;
  }

  void rebuild() {
    nodes_.clear();
    order_.resize(pois_.size());
    for (std::uint32_t i = 0; i < order_.size(); ++i) order_[i] = i;
    if (pois_.empty()) return;

    // Sort-tile-recursive packing of the leaves: slice by longitude, then
    // sort each slice by latitude.
    const std::size_t n = order_.size();
    const std::size_t leaves = (n + kNodeCapacity - 1) / kNodeCapacity;
    const auto slices = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(leaves))));
    const std::size_t per_slice = slices * kNodeCapacity;
    auto by_lon = [this](std::uint32_t a, std::uint32_t b) {
      const auto &pa = pois_[a].location, &pb = pois_[b].location;
      return pa.lon != pb.lon ? pa.lon < pb.lon : a < b;
    };
    auto by_lat = [this](std::uint32_t a, std::uint32_t b) {
      const auto &pa = pois_[a].location, &pb = pois_[b].location;
      return pa.lat != pb.lat ? pa.lat < pb.lat : a < b;
    };
    std::sort(order_.begin(), order_.end(), by_lon);
    for (std::size_t s = 0; s < n; s += per_slice) {
      auto end = order_.begin() + static_cast<std::ptrdiff_t>(std::min(n, s + per_slice));
      std::sort(order_.begin() + static_cast<std::ptrdiff_t>(s), end, by_lat);
    }

    std::vector<std::uint32_t> level;
    for (std::size_t i = 0; i < n; i += kNodeCapacity) {
      Node leaf;
      leaf.first = static_cast<std::uint32_t>(i);
      leaf.count = static_cast<std::uint32_t>(std::min(kNodeCapacity, n - i));
      const auto& p0 = pois_[order_[i]].location;
      leaf.box = BoundingBox{p0.lat, p0.lon, p0.lat, p0.lon};
      for (std::uint32_t j = leaf.first; j < leaf.first + leaf.count; ++j) leaf.box.expand(pois_[order_[j]].location);
      level.push_back(static_cast<std::uint32_t>(nodes_.size()));
      nodes_.push_back(leaf);
    }
    // Upper levels group consecutive nodes; children of one parent are
    // contiguous in nodes_.
    while (level.size() > 1) {
      std::vector<std::uint32_t> parents;
      for (std::size_t i = 0; i < level.size(); i += kNodeCapacity) {
        Node parent;
        parent.leaf = false;
        parent.first = level[i];
        parent.count = static_cast<std::uint32_t>(std::min(kNodeCapacity, level.size() - i));
        parent.box = nodes_[level[i]].box;
        for (std::uint32_t c = parent.first; c < parent.first + parent.count; ++c) {
          const auto& b = nodes_[c].box;
          parent.box.expand(GeoPoint{b.south, b.west});
          parent.box.expand(GeoPoint{b.north, b.east});
        }
        parents.push_back(static_cast<std::uint32_t>(nodes_.size()));
        nodes_.push_back(parent);
      }
      level = std::move(parents);
    }
    root_ = level.front();
  }

  CategoryLexicon lexicon_;
  std::vector<Poi> pois_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
  std::uint32_t root_ = 0;
};

}  // namespace geoground
