#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "geoground/embedding.hpp"
#include "geoground/error.hpp"
#include "geoground/gbdt.hpp"
#include "geoground/geo_index.hpp"
#include "geoground/geo_math.hpp"

namespace geoground {

struct CameraObservation {
  Embedding image_embedding;
  UserPose pose;
  double timestamp = 0.0;
};

struct PlaceDescriptor {
  std::string poi_id;
  Embedding text_embedding;
};

struct GroundingFeatures {
  double cos_sim = 0.0;
  double distance_m = 0.0;
  double heading_diff_deg = 0.0;
  double popularity = 0.0;

  friend bool operator==(const GroundingFeatures&, const GroundingFeatures&) = default;
};

inline constexpr std::size_t kGroundingFeatureCount = 4;

inline void to_json(nlohmann::json& j, const GroundingFeatures& f) {
  j = {{"cos_sim", f.cos_sim},
       {"distance_m", f.distance_m},
       {"heading_diff_deg", f.heading_diff_deg},
       {"popularity", f.popularity}};
}

inline PlaceDescriptor describe_place(const Poi& p, const EmbeddingProvider& provider) {
  return PlaceDescriptor{p.id, provider.embed_text(place_descriptor(p))};
}

// Heading consistency: minimal angle between where the user faces and the
// bearing to the candidate. A user standing on the candidate gets 0.
inline double heading_consistency(const UserPose& pose, const GeoPoint& target) {
  if (pose.position == target) return 0.0;
  try {
    return angular_difference(pose.heading, initial_bearing(pose.position, target));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::DegenerateBearing) return 0.0;
    throw;
  }
}

inline GroundingFeatures extract_features(const CameraObservation& obs, const Poi& cand, const PlaceDescriptor& desc) {
  if (obs.image_embedding.size() != desc.text_embedding.size())
    fail(ErrorCode::DimensionMismatch, "image and place embeddings differ in dimension");
  GroundingFeatures f;
  f.cos_sim = std::clamp(dot(obs.image_embedding, desc.text_embedding), -1.0, 1.0);
  f.distance_m = haversine_distance(obs.pose.position, cand.location);
  f.heading_diff_deg = heading_consistency(obs.pose, cand.location);
  f.popularity = cand.popularity;
  return f;
}

enum class FeatureTransform { Identity, Log1p, Scale };

struct FeatureSlot {
  std::string name;
  FeatureTransform transform = FeatureTransform::Identity;
  double divisor = 1.0;
};

// How raw GroundingFeatures become model inputs. Stored with the model so a
// dumped model is self-describing.
struct FeatureSpec {
  std::vector<FeatureSlot> slots;

  static FeatureSpec standard() {
    return FeatureSpec{{{"cos_sim", FeatureTransform::Identity, 1.0},
                        {"distance_m", FeatureTransform::Log1p, 1.0},
                        {"heading_diff_deg", FeatureTransform::Scale, 180.0},
                        {"popularity", FeatureTransform::Log1p, 1.0}}};
  }

  std::array<double, kGroundingFeatureCount> apply(const GroundingFeatures& f) const {
    const std::array<double, kGroundingFeatureCount> raw{f.cos_sim, f.distance_m, f.heading_diff_deg, f.popularity};
    std::array<double, kGroundingFeatureCount> out{};
    for (std::size_t i = 0; i < kGroundingFeatureCount; ++i) {
      const auto& s = slots[i];
      switch (s.transform) {
        case FeatureTransform::Identity: out[i] = raw[i]; break;
        case FeatureTransform::Log1p: out[i] = std::log1p(raw[i]); break;
        case FeatureTransform::Scale: out[i] = raw[i] / s.divisor; break;
      }
    }
    return out;
  }
};

inline std::string_view to_string(FeatureTransform t) {
  switch (t) {
    case FeatureTransform::Identity: return "identity";
    case FeatureTransform::Log1p: return "log1p";
    case FeatureTransform::Scale: return "scale";
  }
  return "identity";
}

struct LabeledExample {
  GroundingFeatures features;
  int label = 0;
};

class RankerModel {
 public:
  static constexpr std::string_view kFormat = "geoground-ranker";
  static constexpr int kVersion = 1;
  static constexpr std::string_view kObjective = "pointwise:squared_error";

  BoostedTrees booster;
  FeatureSpec feature_spec = FeatureSpec::standard();
  BoostParams params;
  bool degenerate = false;  // all training labels were equal

  double score(const GroundingFeatures& f) const {
    const auto x = feature_spec.apply(f);
    return booster.predict(x);
  }

  nlohmann::json to_json() const {
    auto slots = nlohmann::json::array();
    for (const auto& s : feature_spec.slots) {
      nlohmann::json slot = {{"name", s.name}, {"transform", to_string(s.transform)}};
      if (s.transform == FeatureTransform::Scale) slot["divisor"] = s.divisor;
      slots.push_back(std::move(slot));
    }
    nlohmann::json j = booster;
    j["format"] = kFormat;
    j["version"] = kVersion;
    j["objective"] = kObjective;
    j["degenerate"] = degenerate;
    j["params"] = params;
    j["feature_spec"] = {{"features", std::move(slots)}};
    return j;
  }

  static RankerModel from_json(const nlohmann::json& j) {
    RankerModel m;
    try {
      if (j.at("format").get<std::string>() != kFormat || j.at("version").get<int>() != kVersion)
        fail(ErrorCode::MalformedModel, "unsupported model format or version");
      if (j.at("objective").get<std::string>() != kObjective)
        fail(ErrorCode::MalformedModel, "unsupported model objective");
      m.booster = j.get<BoostedTrees>();
      m.degenerate = j.value("degenerate", false);
      if (j.contains("params")) m.params = j.at("params").get<BoostParams>();
      m.feature_spec.slots.clear();
      for (const auto& s : j.at("feature_spec").at("features")) {
        FeatureSlot slot;
        slot.name = s.at("name").get<std::string>();
        const auto t = s.at("transform").get<std::string>();
        if (t == "identity") slot.transform = FeatureTransform::Identity;
        else if (t == "log1p") slot.transform = FeatureTransform::Log1p;
        else if (t == "scale") {
          slot.transform = FeatureTransform::Scale;
          slot.divisor = s.at("divisor").get<double>();
        } else {
          fail(ErrorCode::MalformedModel, "unknown feature transform '" + t + "'");
        }
        m.feature_spec.slots.push_back(std::move(slot));
      }
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::MalformedModel, std::string("malformed model file: ") + e.what());
    }
    if (m.feature_spec.slots.size() != kGroundingFeatureCount || m.booster.feature_count != kGroundingFeatureCount)
      fail(ErrorCode::MalformedModel, "model must use exactly four feature slots");
    return m;
  }

  std::string serialize() const { return to_json().dump(); }

  static RankerModel deserialize(std::string_view text) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      fail(ErrorCode::MalformedModel, std::string("model file is not JSON: ") + e.what());
    }
    return from_json(j);
  }

  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) fail(ErrorCode::InvalidArgument, "cannot write model to " + path);
    out << to_json().dump(2) << '\n';
  }

  static RankerModel load(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::InvalidArgument, "cannot open model file " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return deserialize(buf.str());
  }
};

// Pointwise boosted regression onto binary relevance.
inline RankerModel train_ranker(const std::vector<LabeledExample>& dataset, const BoostParams& params = {}) {
  if (dataset.empty()) fail(ErrorCode::EmptyDataset, "ranker training set is empty");
  RankerModel model;
  model.params = params;
  FeatureMatrix X(kGroundingFeatureCount);
  std::vector<double> y;
  y.reserve(dataset.size());
  bool any_pos = false, any_neg = false;
  for (const auto& ex : dataset) {
    if (ex.label != 0 && ex.label != 1) fail(ErrorCode::InvalidArgument, "relevance labels must be 0 or 1");
    any_pos |= ex.label == 1;
    any_neg |= ex.label == 0;
    X.add_row(model.feature_spec.apply(ex.features));
    y.push_back(ex.label);
  }
  model.degenerate = !(any_pos && any_neg);
  if (model.degenerate) {
    BoostParams none = params;
    none.trees = 0;
    model.booster = BoostedTrees::fit(X, y, none);
  } else {
    model.booster = BoostedTrees::fit(X, y, params);
  }
  return model;
}

struct RankCandidate {
  const Poi* poi = nullptr;
  PlaceDescriptor descriptor;
};

struct RankedCandidate {
  std::string poi_id;
  double score = 0.0;
  GroundingFeatures features;
};

namespace detail {

inline void sort_ranked(std::vector<RankedCandidate>& v) {
  std::sort(v.begin(), v.end(), [](const RankedCandidate& a, const RankedCandidate& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.features.distance_m != b.features.distance_m) return a.features.distance_m < b.features.distance_m;
    return a.poi_id < b.poi_id;
  });
}

inline std::vector<RankedCandidate> featurize(const CameraObservation& obs, const std::vector<RankCandidate>& cands) {
  std::vector<RankedCandidate> out;
  out.reserve(cands.size());
  for (const auto& c : cands) out.push_back({c.poi->id, 0.0, extract_features(obs, *c.poi, c.descriptor)});
  return out;
}

}  // namespace detail

// Descending model score; ties by distance then id.
inline std::vector<RankedCandidate> rank_candidates(const RankerModel& model, const CameraObservation& obs,
                                                    const std::vector<RankCandidate>& cands) {
  auto out = detail::featurize(obs, cands);
  for (auto& r : out) r.score = model.score(r.features);
  detail::sort_ranked(out);
  return out;
}

enum class BaselineMode { Distance, Similarity };

inline std::vector<RankedCandidate> baseline_rank(BaselineMode mode, const CameraObservation& obs,
                                                  const std::vector<RankCandidate>& cands) {
  auto out = detail::featurize(obs, cands);
  for (auto& r : out) r.score = mode == BaselineMode::Distance ? -r.features.distance_m : r.features.cos_sim;
  detail::sort_ranked(out);
  return out;
}

struct MetricsAtK {
  int k = 1;
  double precision = 0.0;
  double recall = 0.0;
  std::size_t hits = 0;
};

inline MetricsAtK precision_recall_at_k(const std::vector<std::string>& ranked, const std::set<std::string>& relevant,
                                        int k) {
  if (k < 1) fail(ErrorCode::InvalidArgument, "k must be at least 1");
  if (relevant.empty()) fail(ErrorCode::EmptyRelevantSet, "relevant set is empty");
  std::size_t hits = 0;
  const auto top = std::min(ranked.size(), static_cast<std::size_t>(k));
  std::set<std::string> counted;
  for (std::size_t i = 0; i < top; ++i) {
    if (relevant.count(ranked[i]) && counted.insert(ranked[i]).second) ++hits;
  }
  return MetricsAtK{k, static_cast<double>(hits) / k, static_cast<double>(hits) / static_cast<double>(relevant.size()),
                    hits};
}

// Per-k metrics averaged over queries.
struct RankingMetrics {
  std::map<int, double> precision_at_k;
  std::map<int, double> recall_at_k;
};

}  // namespace geoground
