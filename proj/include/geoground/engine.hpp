#pragma once

#include <fstream>
#include <memory>
#include <optional>
#include <string>

#include "geoground/agents/stub_lm.hpp"
#include "geoground/agents/tools.hpp"
#include "geoground/agents/trace.hpp"
#include "geoground/config.hpp"
#include "geoground/embedding.hpp"
#include "geoground/eval/grounding_bench.hpp"
#include "geoground/geo_index.hpp"
#include "geoground/lexicon.hpp"
#include "geoground/ranker.hpp"

namespace geoground {

// Everything a request needs, frozen after construction.
class Engine {
 public:
  Engine(Config config, PoiIndex index, RankerModel model)
      : config_(std::move(config)),
        index_(std::move(index)),
        provider_(std::make_unique<HashEmbeddingProvider>(static_cast<std::size_t>(config_.embedding_dim), config_.embedding_seed)),
        model_(std::move(model)) {}

  static CategoryLexicon lexicon_for(const Config& config) {
    auto lex = CategoryLexicon::with_defaults();
    if (!config.lexicon_path.empty()) lex.load_file(config.lexicon_path);
    return lex;
  }

  static RankerModel model_for(const Config& config) {
    if (!config.ranker_model_path.empty()) return RankerModel::load(config.ranker_model_path);
    BoostParams params;
    params.trees = config.ranker_trees;
    params.max_depth = config.ranker_max_depth;
    params.learning_rate = config.ranker_learning_rate;
    return eval::default_ranker_model(config.ranker_seed, params);
  }

  // Loads the lexicon, the GeoJSON index (optional) and the ranker model.
  static Engine load(const Config& config, const std::optional<std::string>& geojson_path) {
    PoiIndex index(lexicon_for(config));
    if (geojson_path) {
      std::ifstream in(*geojson_path);
      if (!in) fail(ErrorCode::InvalidArgument, "cannot open index file " + *geojson_path);
      index.ingest_geojson(in);
    }
    return Engine(config, std::move(index), model_for(config));
  }

  const Config& config() const { return config_; }
  const PoiIndex& index() const { return index_; }
  const EmbeddingProvider& provider() const { return *provider_; }
  const RankerModel& model() const { return model_; }

  agents::Clock trace_clock() const {
    return config_.deterministic_trace_clock ? agents::frozen_clock() : agents::steady_clock_ms();
  }

  agents::ToolContext tool_context(std::optional<UserPose> pose = std::nullopt, std::optional<Viewport> viewport = std::nullopt,
                                   std::optional<CameraObservation> obs = std::nullopt) const {
    agents::ToolContext ctx;
    ctx.index = &index_;
    ctx.provider = provider_.get();
    ctx.model = &model_;
    ctx.pose = pose;
    ctx.viewport = viewport;
    ctx.observation = std::move(obs);
    ctx.grid_rows = config_.grid_rows;
    ctx.grid_cols = config_.grid_cols;
    ctx.search_radius_m = config_.search_radius_m;
    ctx.identify_radius_m = config_.identify_radius_m;
    ctx.retrieval_k = static_cast<std::size_t>(config_.retrieval_k);
    ctx.top_m = static_cast<std::size_t>(config_.answer_top_m);
    ctx.arrival_radius_m = config_.arrival_radius_m;
    return ctx;
  }

  agents::RuleTableLm stub_lm() const { return agents::RuleTableLm(index_.lexicon()); }

 private:
  Config config_;
  PoiIndex index_;
  std::unique_ptr<EmbeddingProvider> provider_;
  RankerModel model_;
};

}  // namespace geoground
