#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "geoground/eval/maps_eval.hpp"
#include "geoground/eval/ranker_eval.hpp"
#include "geoground/nav_sim.hpp"
#include "geoground/scene_graph.hpp"
#include "geoground/service.hpp"

using namespace geoground;

namespace {

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::InvalidArgument, "cannot write " + path);
  out << text;
}

std::optional<std::string> opt(const std::string& s) { return s.empty() ? std::nullopt : std::optional<std::string>(s); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"geoground: grounded place questions over a POI index"};
  app.require_subcommand(1);

  std::string config_path, index_path, host = "127.0.0.1";
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "run the HTTP API");
  serve->add_option("--index", index_path, "GeoJSON FeatureCollection of POIs")->check(CLI::ExistingFile);
  serve->add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
  serve->add_option("--host", host);
  serve->add_option("--port", port);

  std::string ingest_path;
  auto* ingest = app.add_subcommand("ingest", "load a GeoJSON file and print index statistics");
  ingest->add_option("geojson", ingest_path)->required()->check(CLI::ExistingFile);
  ingest->add_option("--config", config_path)->check(CLI::ExistingFile);

  auto* eval = app.add_subcommand("eval", "run an evaluation protocol");
  eval->require_subcommand(1);
  std::size_t cities = 10, queries = 430, pois = 500, train = 500, test = 50;
  std::uint64_t seed = 42;
  std::string out_prefix;
  auto* maps = eval->add_subcommand("maps", "deictic map-question accuracy per workflow variant");
  maps->add_option("--cities", cities);
  maps->add_option("--queries", queries);
  maps->add_option("--pois-per-city", pois);
  maps->add_option("--seed", seed);
  maps->add_option("--out", out_prefix, "write <out>.md and <out>.csv");
  auto* ranker = eval->add_subcommand("ranker", "grounding ranker against sorting baselines");
  ranker->add_option("--train", train);
  ranker->add_option("--test", test);
  ranker->add_option("--seed", seed);
  ranker->add_option("--out", out_prefix, "write <out>.md and <out>.csv");

  std::string world_path, roads_path;
  bool as_json = false;
  auto* sim = app.add_subcommand("sim", "compare bearing following with turn-by-turn routing");
  sim->add_option("world", world_path)->required()->check(CLI::ExistingFile);
  sim->add_option("--roads", roads_path)->check(CLI::ExistingFile);
  sim->add_flag("--json", as_json);

  std::string scene_path;
  auto* scene = app.add_subcommand("scene", "build a scene graph from a detection record");
  scene->add_option("record", scene_path)->required()->check(CLI::ExistingFile);
  scene->add_option("--config", config_path)->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*serve) {
      const auto config = load_config(opt(config_path));
      const auto engine = Engine::load(config, opt(index_path));
      service::Service svc(engine);
      httplib::Server server;
      svc.mount(server);
      std::fprintf(stderr, "listening on %s:%d with %zu places\n", host.c_str(), port, engine.index().stats().count);
      if (!server.listen(host, port)) fail(ErrorCode::InvalidArgument, "cannot listen on " + host + ":" + std::to_string(port));
    } else if (*ingest) {
      PoiIndex index(Engine::lexicon_for(load_config(opt(config_path))));
      std::ifstream in(ingest_path);
      index.ingest_geojson(in);
      const auto st = index.stats();
      nlohmann::json j = {{"count", st.count},
                          {"categories", st.categories},
                          {"skipped_geometry", st.skipped_geometry},
                          {"skipped_invalid", st.skipped_invalid},
                          {"duplicate_ids", st.duplicate_ids}};
      if (st.bbox) j["bbox"] = io::to_json(*st.bbox);
      std::cout << j.dump(2) << "\n";
    } else if (*maps) {
      const auto r = eval::run_maps_eval(cities, queries, seed, pois);
      std::cout << eval::maps_markdown(r);
      if (!out_prefix.empty()) {
        write_file(out_prefix + ".md", eval::maps_markdown(r));
        write_file(out_prefix + ".csv", eval::maps_csv(r));
      }
    } else if (*ranker) {
      const auto r = eval::run_ranker_eval(train, test, seed);
      std::cout << eval::ranker_markdown(r);
      if (!out_prefix.empty()) {
        write_file(out_prefix + ".md", eval::ranker_markdown(r));
        write_file(out_prefix + ".csv", eval::ranker_csv(r));
      }
    } else if (*sim) {
      const auto world = roads_path.empty() ? nav::load_world(world_path) : nav::load_world(world_path, roads_path);
      const auto bearing = nav::simulate_bearing_follower(world);
      std::optional<nav::PathResult> road;
      try {
        road = nav::plan_turn_by_turn(world);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::Unreachable) throw;
        std::fprintf(stderr, "turn-by-turn: %s\n", e.what());
      }
      if (as_json) {
        nlohmann::json j = {{"bearing", nav::to_json(bearing)}};
        if (road) {
          j["turn_by_turn"] = nav::to_json(*road);
          j["report"] = nav::to_json(nav::compare_paths(bearing, *road, world));
        }
        std::cout << j.dump(2) << "\n";
      } else if (road) {
        std::cout << nav::format_table(nav::compare_paths(bearing, *road, world));
      } else {
        std::printf("bearing: %.2f m, reached %s\n", bearing.length_m, bearing.reached ? "yes" : "no");
      }
    } else if (*scene) {
      const auto config = load_config(opt(config_path));
      std::ifstream in(scene_path);
      const auto record = parse_scene(nlohmann::json::parse(in));
      const auto graph = build_scene_graph(record, 8, {config.scene_x_fraction, config.scene_y_fraction, config.scene_depth_m});
      std::cout << to_json(graph).dump(2) << "\n" << describe_scene(graph) << "\n";
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error (%s): %s\n", std::string(to_string(e.code())).c_str(), e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
