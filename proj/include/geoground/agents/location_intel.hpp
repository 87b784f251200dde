#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "geoground/embedding.hpp"
#include "geoground/error.hpp"
#include "geoground/geo_index.hpp"
#include "geoground/ranker.hpp"

namespace geoground::agents {

struct PlaceQuery {
  GeoPoint position;
  std::optional<std::string> category;
  double radius_m = 1000.0;
  std::size_t k = 20;
  std::size_t top_m = 3;
};

struct PlaceAnswer {
  std::string poi_id;
  std::string name;
  std::string category;
  double score = 0.0;
  GroundingFeatures features;
  std::map<std::string, std::string> attributes;
  std::string digest;  // "key: value; key: value"
};

inline std::string attributes_digest(const std::map<std::string, std::string>& attrs) {
  std::string out;
  for (const auto& [k, v] : attrs) {
    if (k == "street_view") continue;
    if (!out.empty()) out += "; ";
    out += k + ": " + v;
  }
  return out;
}

// Retrieval -> features -> ranking -> top-m. Without an observation the
// candidates fall back to distance order (the features are still reported).
inline std::vector<PlaceAnswer> location_intel_answer(const PoiIndex& index, const EmbeddingProvider& provider,
                                                      const RankerModel& model, const PlaceQuery& q,
                                                      const std::optional<CameraObservation>& obs = std::nullopt) {
  if (q.top_m < 1 || q.k < 1) fail(ErrorCode::InvalidArgument, "k and top_m must be at least 1");
  std::vector<RankCandidate> cands;
  for (const auto& hit : index.nearest_k(q.position, q.k, q.category)) {
    if (hit.distance_m > q.radius_m) break;
    cands.push_back({hit.poi, describe_place(*hit.poi, provider)});
  }
  if (cands.empty()) fail(ErrorCode::NoCandidates, "no places within " + std::to_string(static_cast<int>(q.radius_m)) + " m");

  std::vector<RankedCandidate> ranked;
  if (obs) {
    ranked = rank_candidates(model, *obs, cands);
  } else {
    CameraObservation blind;
    blind.pose = UserPose{q.position, 0.0};
    blind.image_embedding = Embedding(provider.dimension(), 0.0);
    ranked = baseline_rank(BaselineMode::Distance, blind, cands);
  }
  if (ranked.size() > q.top_m) ranked.resize(q.top_m);
  std::vector<PlaceAnswer> out;
  for (const auto& r : ranked) {
    const Poi* p = index.find(r.poi_id);
    out.push_back({p->id, p->name, p->category, r.score, r.features, p->attributes, attributes_digest(p->attributes)});
  }
  return out;
}

inline nlohmann::json to_json(const PlaceAnswer& a) {
  return {{"id", a.poi_id},         {"name", a.name},     {"category", a.category},
          {"score", a.score},       {"features", a.features}, {"attributes", a.attributes},
          {"digest", a.digest}};
}

}  // namespace geoground::agents
