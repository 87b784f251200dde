#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "geoground/agents/orchestrator.hpp"
#include "geoground/agents/protocol.hpp"
#include "geoground/agents/tools.hpp"
#include "geoground/deictic.hpp"
#include "geoground/embedding.hpp"
#include "geoground/geo_index.hpp"
#include "geoground/grid.hpp"
#include "geoground/ranker.hpp"

namespace geoground::eval {

struct SyntheticCity {
  std::string name;
  std::uint64_t seed = 0;
  GeoPoint center;
  std::vector<Poi> pois;
};

inline const std::vector<std::pair<std::string, GeoPoint>>& us_city_centers() {
  static const std::vector<std::pair<std::string, GeoPoint>> centers = {
      {"Seattle", {47.6062, -122.3321}},  {"San Francisco", {37.7749, -122.4194}}, {"Los Angeles", {34.0522, -118.2437}},
      {"Chicago", {41.8781, -87.6298}},   {"New York", {40.7128, -74.0060}},      {"Boston", {42.3601, -71.0589}},
      {"Austin", {30.2672, -97.7431}},    {"Denver", {39.7392, -104.9903}},       {"Miami", {25.7617, -80.1918}},
      {"Atlanta", {33.7490, -84.3880}}};
  return centers;
}

struct CityParams {
  double radius_m = 20000.0;
  std::vector<std::string> categories;  // empty: every lexicon category
};

namespace detail {

inline const std::vector<std::string>& name_first() {
  static const std::vector<std::string> w = {"Golden", "Silver", "Maple",   "Cedar",  "Harbor", "Summit", "River",
                                             "Willow", "Granite", "Juniper", "Aspen",  "Copper", "Lantern", "Meadow",
                                             "Orchard", "Pioneer", "Quarry", "Sparrow", "Thistle", "Violet"};
  return w;
}

inline const std::vector<std::string>& name_second() {
  static const std::vector<std::string> w = {"Oak",   "Bay",   "Hill",   "Creek",  "Grove", "Point", "Ridge",
                                             "Stone", "Field", "Brook",  "Crest",  "Haven", "Gate",  "Harvest",
                                             "Ember", "Fern",  "Lark",   "Mill",   "Pine",  "Vale"};
  return w;
}

inline std::string title_case(std::string s) {
  bool start = true;
  for (char& c : s) {
    if (start && std::isalpha(static_cast<unsigned char>(c))) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    start = c == ' ';
  }
  return s;
}

}  // namespace detail

inline std::vector<SyntheticCity> generate_cities(std::size_t n_cities, std::size_t pois_per_city, std::uint64_t seed,
                                                  const CityParams& params = {},
                                                  const CategoryLexicon& lexicon = CategoryLexicon::with_defaults()) {
  if (n_cities < 1) fail(ErrorCode::InvalidArgument, "need at least one city");
  std::vector<std::string> cats = params.categories;
  if (cats.empty()) cats.assign(lexicon.categories().begin(), lexicon.categories().end());
  const auto& centers = us_city_centers();
  std::vector<SyntheticCity> out;
  for (std::size_t ci = 0; ci < n_cities; ++ci) {
    const auto& [city_name, center] = centers[ci % centers.size()];
    SyntheticCity city;
    city.seed = seed * 1000003ULL + ci;
    city.name = ci < centers.size() ? city_name : city_name + " " + std::to_string(ci / centers.size() + 1);
    city.center = center;
    GaussianSource rng(city.seed);
    auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng.uniform() * static_cast<double>(n)) % n; };
    std::set<std::string> names;
    for (std::size_t i = 0; i < pois_per_city; ++i) {
      Poi p;
      char id[48];
      std::snprintf(id, sizeof(id), "c%02zu-p%04zu", ci, i);
      p.id = id;
      p.category = cats[pick(cats.size())];
      do {
        p.name = detail::name_first()[pick(detail::name_first().size())] + " " +
                 detail::name_second()[pick(detail::name_second().size())] + " " + detail::title_case(p.category);
        if (names.count(p.name)) p.name += " " + std::to_string(i);
      } while (names.count(p.name));
      names.insert(p.name);
      // uniform over the disc
      p.location = destination_point(center, rng.uniform() * 360.0, params.radius_m * std::sqrt(rng.uniform()));
      p.popularity = std::floor(rng.uniform() * 1000.0);
      city.pois.push_back(std::move(p));
    }
    out.push_back(std::move(city));
  }
  return out;
}

struct MapQuery {
  std::string id;
  std::string text;
  Viewport viewport;
  std::string truth_id;
  std::string template_id;
  std::vector<std::string> in_view;  // every POI id drawn in the view
};

struct QuerySet {
  std::string city;
  std::uint64_t seed = 0;
  std::vector<MapQuery> queries;
};

struct QueryParams {
  int zoom = 14;
  int width_px = 768;
  int height_px = 768;
  int rows = 3;
  int cols = 3;
  int attempts_per_query = 400;
};

namespace detail {

inline std::string relation_words(Relation r) {
  switch (r) {
    case Relation::LeftOf: return "to the left of";
    case Relation::RightOf: return "to the right of";
    case Relation::Above: return "above";
    case Relation::Below: return "below";
    case Relation::NextTo: return "next to";
    case Relation::Near: return "near";
  }
  return "near";
}

inline std::string region_words(Region r) {
  std::string s(to_string(r));
  for (char& c : s)
    if (c == '-') c = ' ';
  return s;
}

// Viewport whose screen position `s` shows geographic point p.
inline std::optional<Viewport> view_placing(const GeoPoint& p, ScreenPoint s, const QueryParams& qp) {
  if (std::abs(p.lat) > kMercatorLatLimit) return std::nullopt;
  const auto px = project_mercator(p, qp.zoom);
  PixelCoord c{px.x - s.x + qp.width_px / 2.0, px.y - s.y + qp.height_px / 2.0, qp.zoom};
  const double world = world_size_px(qp.zoom);
  if (c.x < 0 || c.y < 0 || c.x >= world || c.y >= world) return std::nullopt;
  return Viewport{unproject_mercator(c), qp.zoom, qp.width_px, qp.height_px};
}

}  // namespace detail

inline std::size_t template_count() { return std::size(kAllRegions) + std::size(kAllRelations); }

// Template instantiations cycling through nine region and six relation
// templates. Each query is accepted only when the rule-based resolver returns
// exactly its ground truth, so every emitted query is unambiguous.
inline QuerySet generate_queries(const SyntheticCity& city, std::size_t n, std::uint64_t seed, const QueryParams& qp = {},
                                 const CategoryLexicon& lexicon = CategoryLexicon::with_defaults()) {
  if (city.pois.size() < 2) fail(ErrorCode::InsufficientPois, "city " + city.name + " has too few places");
  PoiIndex index(lexicon);
  index.insert(city.pois);
  GaussianSource rng(seed ^ (city.seed * 0x9e3779b97f4a7c15ULL));
  auto pick = [&](std::size_t k) { return static_cast<std::size_t>(rng.uniform() * static_cast<double>(k)) % k; };

  QuerySet qs{city.name, seed, {}};
  for (std::size_t qi = 0; qi < n; ++qi) {
    const std::size_t t = qi % template_count();
    bool accepted = false;
    for (int attempt = 0; attempt < qp.attempts_per_query && !accepted; ++attempt) {
      MapQuery q;
      char id[64];
      std::snprintf(id, sizeof(id), "%s-q%04zu", city.name.c_str(), qi);
      q.id = id;
      for (char& c : q.id)
        if (c == ' ') c = '_';
      const Poi& target = city.pois[pick(city.pois.size())];
      std::optional<Viewport> view;
      if (t < std::size(kAllRegions)) {
        const Region region = kAllRegions[t];
        const auto cells = resolve_region(region, qp.rows, qp.cols);
        // any grid works for pixel rectangles; they only depend on the shape
        const double cw = static_cast<double>(qp.width_px) / qp.cols, ch = static_cast<double>(qp.height_px) / qp.rows;
        const double left = cells.front().col * cw, top = cells.front().row * ch;
        const double right = (cells.back().col + 1) * cw, bottom = (cells.back().row + 1) * ch;
        const double margin = 12.0;
        ScreenPoint s{left + margin + rng.uniform() * (right - left - 2 * margin),
                      top + margin + rng.uniform() * (bottom - top - 2 * margin)};
        view = detail::view_placing(target.location, s, qp);
        q.text = "What is the " + target.category + " at the " + detail::region_words(region) + " part of the map?";
        q.template_id = "region:" + std::string(to_string(region));
      } else {
        const Relation rel = kAllRelations[t - std::size(kAllRegions)];
        const auto near = index.query_radius(target.location, 4000.0);
        std::vector<const Poi*> anchors;
        for (const auto& h : near)
          if (h.poi->id != target.id) anchors.push_back(h.poi);
        if (anchors.empty()) continue;
        const Poi& anchor = *anchors[pick(anchors.size())];
        const GeoPoint mid{(target.location.lat + anchor.location.lat) / 2.0, (target.location.lon + anchor.location.lon) / 2.0};
        ScreenPoint s{qp.width_px / 2.0 + (rng.uniform() - 0.5) * 160.0, qp.height_px / 2.0 + (rng.uniform() - 0.5) * 160.0};
        view = detail::view_placing(mid, s, qp);
        q.text = "What is the " + target.category + " " + detail::relation_words(rel) + " " + anchor.name + "?";
        q.template_id = "relation:" + std::string(to_string(rel));
      }
      if (!view) continue;
      try {
        const auto grid = viewport_to_grid(*view, qp.rows, qp.cols);
        const auto assignments = assign_from_index(grid, index);
        const auto answer = resolve_intent(parse_query(q.text, lexicon), grid, assignments, index);
        if (answer.status != ResolutionStatus::Matched || answer.matches != std::vector<std::string>{target.id}) continue;
        for (const auto& a : assignments) q.in_view.insert(q.in_view.end(), a.entities.begin(), a.entities.end());
        std::sort(q.in_view.begin(), q.in_view.end());
      } catch (const Error&) {
        continue;
      }
      q.viewport = *view;
      q.truth_id = target.id;
      qs.queries.push_back(std::move(q));
      accepted = true;
    }
    if (!accepted) fail(ErrorCode::InsufficientPois, "cannot build an unambiguous query for template " + std::to_string(t) + " in " + city.name);
  }
  return qs;
}

enum class Variant { SingleModel, ModelLocation, ModelVerboseLocation, MapsPlus };

inline constexpr Variant kAllVariants[] = {Variant::SingleModel, Variant::ModelLocation, Variant::ModelVerboseLocation,
                                           Variant::MapsPlus};

inline constexpr std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::SingleModel: return "single_model";
    case Variant::ModelLocation: return "model_location";
    case Variant::ModelVerboseLocation: return "model_verbose_location";
    case Variant::MapsPlus: return "maps_plus";
  }
  return "single_model";
}

inline constexpr std::string_view kVisibleLabelsHeader = "Visible map labels:";

// Knowledge-free stand-in for a multimodal model. With the resolve tool on
// offer it grounds the query and answers with the top match's name; without
// tools it can only read the labels drawn on the map and picks one uniformly
// (seeded by the request text), which is chance level by construction.
class EvalStubLm final : public agents::LmClient {
 public:
  explicit EvalStubLm(std::uint64_t seed = 0) : seed_(seed) {}

  agents::LmResponse complete(const agents::LmRequest& req) override {
    const std::string& query = req.messages.front().content;
    bool can_resolve = false;
    for (const auto* t : req.tools) can_resolve |= t->name == "resolve";
    if (can_resolve) {
      for (const auto& m : req.messages) {
        if (m.role != "tool" || m.tool != "resolve") continue;
        auto r = nlohmann::json::parse(m.content, nullptr, false);
        if (r.is_discarded() || r.contains("error") || r.at("matches").empty()) return agents::LmResponse::final_text("unknown");
        return agents::LmResponse::final_text(r.at("matches").at(0).at("name").get<std::string>());
      }
      return agents::LmResponse::call("resolve", {{"query", query}});
    }
    std::vector<std::string> labels;
    if (auto pos = req.system.find(kVisibleLabelsHeader); pos != std::string::npos) {
      std::stringstream ss(req.system.substr(pos + kVisibleLabelsHeader.size()));
      std::string line;
      while (std::getline(ss, line))
        if (line.starts_with("- ")) labels.push_back(line.substr(2));
    }
    if (labels.empty()) return agents::LmResponse::final_text("unknown");
    GaussianSource rng(fnv1a64(req.system + "\n" + query, seed_));
    return agents::LmResponse::final_text(labels[static_cast<std::size_t>(rng.uniform() * static_cast<double>(labels.size())) % labels.size()]);
  }

 private:
  std::uint64_t seed_;
};

struct QueryLogRow {
  std::string query_id;
  std::string city;
  std::string template_id;
  std::string variant;
  std::string truth_id;
  std::string prediction;
  bool correct = false;
  std::size_t in_view = 0;
  double chance = 0.0;
};

struct AccuracyReport {
  std::string variant;
  std::size_t total = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;
  double chance_level = 0.0;  // mean of 1 / |POIs in view|
  std::map<std::string, std::pair<std::size_t, std::size_t>> per_template;  // correct, total
  std::vector<QueryLogRow> log;
};

struct VariantContext {
  const PoiIndex* index = nullptr;
  const EmbeddingProvider* provider = nullptr;
  const RankerModel* model = nullptr;
  int rows = 3;
  int cols = 3;
};

namespace detail {

// Text context each workflow hands the model. The label list stands in for
// the map screenshot every variant receives.
inline std::string variant_context(Variant v, const MapQuery& q, const PoiIndex& index) {
  std::string ctx;
  char buf[160];
  if (v == Variant::ModelLocation || v == Variant::ModelVerboseLocation) {
    std::snprintf(buf, sizeof(buf), "Map center: %.6f, %.6f (zoom %d)\n", q.viewport.center.lat, q.viewport.center.lon,
                  q.viewport.zoom);
    ctx += buf;
  }
  if (v == Variant::ModelVerboseLocation) {
    const auto hits = index.nearest_k(q.viewport.center, 1);
    if (!hits.empty()) ctx += "The view is centred near " + hits.front().poi->name + ".\n";
  }
  ctx += std::string(kVisibleLabelsHeader) + "\n";
  for (const auto& id : q.in_view)
    if (const Poi* p = index.find(id)) ctx += "- " + p->name + "\n";
  return ctx;
}

}  // namespace detail

inline AccuracyReport run_variant(Variant variant, const QuerySet& qs, agents::LmClient& lm, const VariantContext& vc) {
  if (!vc.index || !vc.provider || !vc.model) fail(ErrorCode::InvalidArgument, "variant context is incomplete");
  AccuracyReport rep;
  rep.variant = std::string(to_string(variant));
  for (const auto& q : qs.queries) {
    std::string prediction;
    if (variant == Variant::MapsPlus) {
      agents::ToolContext ctx;
      ctx.index = vc.index;
      ctx.provider = vc.provider;
      ctx.model = vc.model;
      ctx.viewport = q.viewport;
      ctx.grid_rows = vc.rows;
      ctx.grid_cols = vc.cols;
      const auto registry = agents::standard_registry(ctx);
      agents::OrchestratorOptions opts;
      opts.clock = agents::frozen_clock();
      prediction = agents::orchestrate(q.text, lm, registry, opts).answer;
    } else {
      agents::LmRequest req;
      req.system = std::string(agents::kSystemPrompt) + "\n" + detail::variant_context(variant, q, *vc.index);
      req.messages.push_back({"user", q.text, {}});
      const auto resp = lm.complete(req);
      prediction = resp.tool_call ? std::string() : resp.text;
    }
    const Poi* truth = vc.index->find(q.truth_id);
    const bool correct = truth && (prediction == truth->id || prediction == truth->name);
    const double chance = q.in_view.empty() ? 0.0 : 1.0 / static_cast<double>(q.in_view.size());
    rep.log.push_back({q.id, qs.city, q.template_id, rep.variant, q.truth_id, prediction, correct, q.in_view.size(), chance});
    ++rep.total;
    rep.correct += correct;
    rep.chance_level += chance;
    auto& cell = rep.per_template[q.template_id];
    cell.first += correct;
    ++cell.second;
  }
  if (rep.total) {
    rep.accuracy = static_cast<double>(rep.correct) / static_cast<double>(rep.total);
    rep.chance_level /= static_cast<double>(rep.total);
  }
  return rep;
}

// Concatenate per-city reports of one variant, keeping query-id order.
inline AccuracyReport merge_reports(const std::vector<AccuracyReport>& parts) {
  AccuracyReport out;
  if (parts.empty()) return out;
  out.variant = parts.front().variant;
  double chance_sum = 0.0;
  for (const auto& p : parts) {
    out.total += p.total;
    out.correct += p.correct;
    for (const auto& [k, v] : p.per_template) {
      out.per_template[k].first += v.first;
      out.per_template[k].second += v.second;
    }
    for (const auto& row : p.log) chance_sum += row.chance;
    out.log.insert(out.log.end(), p.log.begin(), p.log.end());
  }
  std::sort(out.log.begin(), out.log.end(), [](const QueryLogRow& a, const QueryLogRow& b) { return a.query_id < b.query_id; });
  if (out.total) {
    out.accuracy = static_cast<double>(out.correct) / static_cast<double>(out.total);
    out.chance_level = chance_sum / static_cast<double>(out.total);
  }
  return out;
}

struct MapsEvalResult {
  std::vector<AccuracyReport> variants;  // in kAllVariants order
  std::size_t cities = 0;
  std::size_t queries = 0;
  std::uint64_t seed = 0;
};

// Full protocol: cities -> unambiguous query sets -> every variant.
// `total_queries` is spread evenly over the cities (remainder to the first).
inline MapsEvalResult run_maps_eval(std::size_t n_cities, std::size_t total_queries, std::uint64_t seed,
                                    std::size_t pois_per_city = 500) {
  const auto lexicon = CategoryLexicon::with_defaults();
  const auto cities = generate_cities(n_cities, pois_per_city, seed, {}, lexicon);
  HashEmbeddingProvider provider(64, seed);
  RankerModel model;  // the map workflow never ranks
  model.booster.feature_count = kGroundingFeatureCount;
  EvalStubLm lm(seed);

  MapsEvalResult res{{}, n_cities, 0, seed};
  std::vector<std::vector<AccuracyReport>> parts(std::size(kAllVariants));
  for (std::size_t ci = 0; ci < cities.size(); ++ci) {
    const std::size_t n = total_queries / n_cities + (ci < total_queries % n_cities ? 1 : 0);
    if (n == 0) continue;
    PoiIndex index(lexicon);
    index.insert(cities[ci].pois);
    const auto qs = generate_queries(cities[ci], n, seed, {}, lexicon);
    res.queries += qs.queries.size();
    const VariantContext vc{&index, &provider, &model, 3, 3};
    for (std::size_t vi = 0; vi < std::size(kAllVariants); ++vi) parts[vi].push_back(run_variant(kAllVariants[vi], qs, lm, vc));
  }
  for (auto& p : parts) res.variants.push_back(merge_reports(p));
  return res;
}

inline std::vector<std::pair<std::string, double>> maps_reference_rows() {
  return {{"single_model (reference)", 0.3930},
          {"model_location (reference)", 0.4146},
          {"model_verbose_location (reference)", 0.4274},
          {"maps_plus (reference)", 0.8983}};
}

inline std::string maps_markdown(const MapsEvalResult& r) {
  std::string out = "| variant | correct | total | accuracy | chance level |\n|---|---|---|---|---|\n";
  char buf[200];
  for (const auto& v : r.variants) {
    std::snprintf(buf, sizeof(buf), "| %s | %zu | %zu | %.2f%% | %.2f%% |\n", v.variant.c_str(), v.correct, v.total,
                  100 * v.accuracy, 100 * v.chance_level);
    out += buf;
  }
  for (const auto& [name, acc] : maps_reference_rows()) {
    std::snprintf(buf, sizeof(buf), "| %s | | | %.2f%% | |\n", name.c_str(), 100 * acc);
    out += buf;
  }
  out += "\nA prediction counts when it equals the ground-truth id or its exact name. Reference rows are external "
         "figures obtained with a hosted multimodal model and are not produced by this run.\n\n";
  out += "| template |";
  for (const auto& v : r.variants) out += " " + v.variant + " |";
  out += "\n|---|";
  for (std::size_t i = 0; i < r.variants.size(); ++i) out += "---|";
  out += "\n";
  if (!r.variants.empty()) {
    for (const auto& [tmpl, _] : r.variants.front().per_template) {
      out += "| " + tmpl + " |";
      for (const auto& v : r.variants) {
        const auto& [c, n] = v.per_template.at(tmpl);
        std::snprintf(buf, sizeof(buf), " %zu/%zu |", c, n);
        out += buf;
      }
      out += "\n";
    }
  }
  std::snprintf(buf, sizeof(buf), "\n%zu cities, %zu queries, seed %llu.\n", r.cities, r.queries,
                static_cast<unsigned long long>(r.seed));
  out += buf;
  return out;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string maps_csv(const MapsEvalResult& r) {
  std::string out = "query_id,city,template,variant,truth_id,prediction,correct,in_view,chance\n";
  char buf[64];
  for (const auto& v : r.variants) {
    for (const auto& row : v.log) {
      std::snprintf(buf, sizeof(buf), "%zu,%.6f", row.in_view, row.chance);
      out += csv_field(row.query_id) + "," + csv_field(row.city) + "," + row.template_id + "," + row.variant + "," +
             row.truth_id + "," + csv_field(row.prediction) + "," + (row.correct ? "1" : "0") + "," + buf + "\n";
    }
  }
  return out;
}

}  // namespace geoground::eval
