#include <random>
#include <thread>

#include <gtest/gtest.h>

#include "geoground/service.hpp"

using namespace geoground;
using namespace geoground::service;
using nlohmann::json;

namespace {

const Engine& engine() {
  static const Engine e = [] {
    Config c;
    c.deterministic_trace_clock = true;
    return Engine::load(c, std::string(GEOGROUND_DATA_DIR "/bellevue.geojson"));
  }();
  return e;
}

const json kLakeView = {{"lat", 47.625}, {"lon", -122.15}, {"zoom", 15}, {"width_px", 768}, {"height_px", 768}};
const json kUserPose = {{"lat", 47.6101}, {"lon", -122.2015}, {"heading", 0.0}};

ApiResponse post(Service& s, const std::string& path, const json& body) { return s.handle({"POST", path, body.dump(), {}, {}}); }

ApiResponse get(Service& s, const std::string& path, std::map<std::string, std::string> params = {}) {
  return s.handle({"GET", path, "", {}, std::move(params)});
}

std::string error_code(const ApiResponse& r) { return r.body.at("error").at("code"); }

struct FakeClock {
  double now = 1000.0;
  SecondsClock fn() {
    return [this] { return now; };
  }
};

}  // namespace

TEST(Status, MappingIsTotal) {
  for (int c = 0; c <= static_cast<int>(kLastErrorCode); ++c) {
    const int s = http_status(static_cast<ErrorCode>(c));
    EXPECT_TRUE(s == 400 || s == 401 || s == 404 || s == 409 || s == 422) << to_string(static_cast<ErrorCode>(c));
  }
  EXPECT_EQ(http_status(ErrorCode::UnparsableQuery), 422);
  EXPECT_EQ(http_status(ErrorCode::SessionNotFound), 404);
  EXPECT_EQ(http_status(ErrorCode::DimensionMismatch), 400);
}

TEST(Endpoints, HealthAndGridMatchTheLibrary) {
  Service s(engine());
  const auto h = get(s, "/v1/healthz");
  ASSERT_EQ(h.status, 200);
  EXPECT_EQ(h.body.at("pois"), engine().index().stats().count);
  EXPECT_EQ(h.body.at("embedding_dim"), 512);

  const auto g = get(s, "/v1/map/grid", {{"lat", "47.625"}, {"lon", "-122.15"}, {"zoom", "15"}});
  ASSERT_EQ(g.status, 200) << g.body;
  const auto grid = viewport_to_grid(Viewport{GeoPoint::make(47.625, -122.15), 15, 768, 768}, 3, 3);
  EXPECT_EQ(g.body, io::to_json(grid, assign_from_index(grid, engine().index())));
  EXPECT_EQ(g.body.at("cells").at(2).at("entities"), json::array({"bonnet-lake"}));

  EXPECT_EQ(get(s, "/v1/map/grid", {{"lat", "47.6"}}).status, 400);
  EXPECT_EQ(get(s, "/v1/map/grid", {{"lat", "47.6"}, {"lon", "east"}}).status, 400);
  EXPECT_EQ(get(s, "/v1/map/grid", {{"lat", "89"}, {"lon", "0"}}).status, 400);
  EXPECT_EQ(get(s, "/v1/map/grid", {{"lat", "47.6"}, {"lon", "-122"}, {"rows", "2.5"}}).status, 400);
}

TEST(Endpoints, LakeQueryHighlightsTheTopRightCell) {
  Service s(engine());
  const auto r = post(s, "/v1/query", {{"query", "What is the lake at the top right part of the map?"}, {"viewport", kLakeView}});
  ASSERT_EQ(r.status, 200) << r.body;
  EXPECT_EQ(r.body.at("answer"), "That is Bonnet Lake.");
  EXPECT_EQ(r.body.at("status"), "matched");
  EXPECT_EQ(r.body.at("cells"), json::array({json::array({0, 2})}));
  EXPECT_EQ(r.body.at("matches").at(0).at("id"), "bonnet-lake");
  EXPECT_EQ(r.body.at("intent").at("region"), "top-right");

  // same payload as the library call
  const auto grid = viewport_to_grid(io::parse_viewport(kLakeView), 3, 3);
  const auto intent = parse_query("What is the lake at the top right part of the map?", engine().index().lexicon());
  const auto lib = io::to_json(resolve_intent(intent, grid, assign_from_index(grid, engine().index()), engine().index()), engine().index());
  EXPECT_EQ(r.body.at("matches"), lib.at("matches"));
  EXPECT_EQ(r.body.at("explanation"), lib.at("explanation"));
  EXPECT_EQ(r.body.at("intent"), io::to_json(intent));
}

TEST(Endpoints, QueryResponsesAreByteIdentical) {
  Service s(engine());
  for (const char* q : {"What is the coffee shop below the cinema?", "Take me to the closest boba tea shop", "How far is Harbor Grill?"}) {
    const json body = {{"query", q}, {"viewport", kLakeView}, {"pose", kUserPose}};
    const auto a = post(s, "/v1/query", body), b = post(s, "/v1/query", body);
    ASSERT_EQ(a.status, 200) << q << a.body;
    EXPECT_EQ(a.body.dump(), b.body.dump());
  }
  const auto boba = post(s, "/v1/query", {{"query", "Take me to the closest boba tea shop"}, {"viewport", kLakeView}, {"pose", kUserPose}});
  EXPECT_NE(boba.body.at("answer").get<std::string>().find("Boba Express"), std::string::npos);
  EXPECT_EQ(boba.body.at("trace").at("steps").size(), 6u);
}

TEST(Endpoints, QueryErrors) {
  Service s(engine());
  const auto empty = post(s, "/v1/query", {{"query", "   "}, {"viewport", kLakeView}});
  EXPECT_EQ(empty.status, 422);
  EXPECT_EQ(error_code(empty), "unparsable_query");
  EXPECT_EQ(post(s, "/v1/query", {{"query", "sing me a song"}, {"viewport", kLakeView}}).status, 422);
  EXPECT_EQ(error_code(post(s, "/v1/query", {{"query", "What is the spaceship at the top left?"}, {"viewport", kLakeView}})), "unknown_category");
  EXPECT_EQ(post(s, "/v1/query", {{"query", 5}, {"viewport", kLakeView}}).status, 400);
  EXPECT_EQ(post(s, "/v1/query", {{"query", "What is the lake at the top?"}}).status, 400);
  auto polar = kLakeView;
  polar["lat"] = 86.0;
  EXPECT_EQ(error_code(post(s, "/v1/query", {{"query", "What is the lake at the top?"}, {"viewport", polar}})), "viewport_out_of_projection");
  EXPECT_EQ(s.handle({"POST", "/v1/query", "{not json", {}, {}}).status, 400);
  EXPECT_EQ(s.handle({"POST", "/v1/query", "[]", {}, {}}).status, 400);
  EXPECT_EQ(s.handle({"GET", "/v1/nowhere", "", {}, {}}).status, 404);
  EXPECT_EQ(s.handle({"DELETE", "/v1/query", "", {}, {}}).status, 404);
}

TEST(Endpoints, GroundMatchesLocationIntel) {
  Service s(engine());
  const Poi& grill = *engine().index().find("harbor-grill");
  const auto ref = "descriptor:" + place_descriptor(grill);
  const json pose = {{"lat", 47.6101}, {"lon", -122.2015}, {"heading", 180.0}};
  const auto r = post(s, "/v1/ground", {{"pose", pose}, {"image_ref", ref}});
  ASSERT_EQ(r.status, 200) << r.body;
  const CameraObservation obs{engine().provider().embed_image(ref), io::parse_pose(pose), 0.0};
  const auto lib = agents::location_intel_answer(engine().index(), engine().provider(), engine().model(),
                                                 {obs.pose.position, std::nullopt, 1000.0, 20, 3}, obs);
  ASSERT_EQ(r.body.at("candidates").size(), lib.size());
  for (std::size_t i = 0; i < lib.size(); ++i) EXPECT_EQ(r.body.at("candidates").at(i), agents::to_json(lib[i]));
  EXPECT_EQ(r.body.at("candidates").at(0).at("id"), "harbor-grill");

  json emb = obs.image_embedding;
  EXPECT_EQ(post(s, "/v1/ground", {{"pose", pose}, {"image_embedding", emb}}).body, r.body);

  EXPECT_EQ(error_code(post(s, "/v1/ground", {{"pose", pose}, {"image_embedding", {1.0, 0.0}}})), "dimension_mismatch");
  const json far = {{"lat", 0.0}, {"lon", 0.0}, {"heading", 0.0}};
  EXPECT_EQ(post(s, "/v1/ground", {{"pose", far}, {"image_ref", ref}}).status, 404);
  EXPECT_EQ(error_code(post(s, "/v1/ground", {{"pose", pose}, {"image_ref", ref}, {"category", "spaceship"}})), "unknown_category");
  EXPECT_EQ(post(s, "/v1/ground", {{"pose", pose}, {"image_ref", ref}, {"k", 0}}).status, 400);
  EXPECT_EQ(post(s, "/v1/ground", {{"pose", pose}}).status, 400);
  EXPECT_EQ(post(s, "/v1/ground", {{"pose", pose}, {"image_ref", ref}, {"top_m", 1}}).body.at("candidates").size(), 1u);
}

TEST(Navigation, SessionLifecycle) {
  FakeClock clock;
  Service s(engine(), clock.fn());
  const auto start = post(s, "/v1/nav/start", {{"destination", {{"poi_id", "boba-express"}}}, {"pose", kUserPose}});
  ASSERT_EQ(start.status, 200) << start.body;
  const auto id = start.body.at("session_id").get<std::string>();
  EXPECT_EQ(start.body.at("destination").at("id"), "boba-express");
  EXPECT_EQ(start.body.at("instruction").at("cue"), "slight right");

  const auto step1 = post(s, "/v1/nav/step", {{"session_id", id}, {"pose", kUserPose}});
  const auto step2 = post(s, "/v1/nav/step", {{"session_id", id}, {"pose", kUserPose}});
  ASSERT_EQ(step1.status, 200) << step1.body;
  EXPECT_EQ(step1.body, step2.body);
  EXPECT_EQ(step1.body, agents::to_json(agents::navigation_step(io::parse_pose(kUserPose), *engine().index().find("boba-express"))));

  const Poi& boba = *engine().index().find("boba-express");
  const auto near = destination_point(boba.location, 270.0, 5.0);
  const auto arrived = post(s, "/v1/nav/step", {{"session_id", id}, {"pose", {{"lat", near.lat}, {"lon", near.lon}, {"heading", 90.0}}}});
  EXPECT_EQ(arrived.body.at("arrived"), true);
  EXPECT_EQ(arrived.body.at("relative_direction_deg"), nullptr);

  const auto other = post(s, "/v1/nav/start", {{"destination", {{"lat", 47.62}, {"lon", -122.2}}}});
  EXPECT_NE(other.body.at("session_id"), id);
  EXPECT_FALSE(other.body.contains("instruction"));

  const auto blank = post(s, "/v1/nav/start", json::object());
  EXPECT_EQ(error_code(post(s, "/v1/nav/step", {{"session_id", blank.body.at("session_id")}, {"pose", kUserPose}})), "no_active_destination");
  EXPECT_EQ(post(s, "/v1/nav/step", {{"session_id", blank.body.at("session_id")}, {"pose", kUserPose}}).status, 409);
  EXPECT_EQ(post(s, "/v1/nav/step", {{"session_id", "s-nope"}, {"pose", kUserPose}}).status, 404);
  EXPECT_EQ(post(s, "/v1/nav/start", {{"destination", {{"poi_id", "atlantis"}}}}).status, 404);
  EXPECT_EQ(post(s, "/v1/nav/step", {{"session_id", id}}).status, 400);
}

TEST(Navigation, SessionsExpireAfterTheTtl) {
  FakeClock clock;
  Service s(engine(), clock.fn());
  const auto id = post(s, "/v1/nav/start", {{"destination", {{"poi_id", "harbor-grill"}}}}).body.at("session_id");
  clock.now += 1700.0;
  EXPECT_EQ(post(s, "/v1/nav/step", {{"session_id", id}, {"pose", kUserPose}}).status, 200);
  clock.now += 1700.0;  // the step refreshed the session
  EXPECT_EQ(post(s, "/v1/nav/step", {{"session_id", id}, {"pose", kUserPose}}).status, 200);
  clock.now += 1801.0;
  const auto gone = post(s, "/v1/nav/step", {{"session_id", id}, {"pose", kUserPose}});
  EXPECT_EQ(gone.status, 404);
  EXPECT_EQ(error_code(gone), "session_not_found");
  EXPECT_EQ(s.sessions().size(), 0u);
}

TEST(Auth, ApiKeyIsCheckedExceptForHealth) {
  Config c;
  c.api_key = "k1";
  const Engine e(c, PoiIndex(), RankerModel::deserialize(engine().model().serialize()));
  Service s(e);
  EXPECT_EQ(s.handle({"GET", "/v1/healthz", "", {}, {}}).status, 200);
  EXPECT_EQ(s.handle({"GET", "/v1/map/grid", "", {}, {{"lat", "1"}, {"lon", "1"}}}).status, 401);
  EXPECT_EQ(s.handle({"GET", "/v1/map/grid", "", {{"x-api-key", "nope"}}, {{"lat", "1"}, {"lon", "1"}}}).status, 401);
  EXPECT_EQ(s.handle({"GET", "/v1/map/grid", "", {{"x-api-key", "k1"}}, {{"lat", "1"}, {"lon", "1"}}}).status, 200);
}

TEST(Fuzz, NoUnmappedServerErrors) {
  Service s(engine());
  std::mt19937_64 rng(99);
  const std::vector<json> values = {nullptr, true, 0, -1, 1, 3.5, 1e308, -1e308, 91.0, 1e9, 2147483648LL, "", "x", "top right",
                                    json::array(), json::array({1, "a"}), json::object(), json{{"lat", 1}}};
  const std::vector<std::pair<std::string, json>> seeds = {
      {"/v1/query", {{"query", "What is the lake at the top right part of the map?"}, {"viewport", kLakeView}, {"pose", kUserPose}, {"grid", {{"rows", 3}, {"cols", 3}}}}},
      {"/v1/query", {{"query", "Take me to the closest boba tea shop"}, {"viewport", kLakeView}, {"pose", kUserPose}}},
      {"/v1/ground", {{"pose", kUserPose}, {"image_ref", "sv/x.jpg"}, {"category", "cafe"}, {"radius_m", 500}, {"k", 5}, {"top_m", 2}}},
      {"/v1/nav/start", {{"destination", {{"poi_id", "boba-express"}}}, {"pose", kUserPose}}},
      {"/v1/nav/step", {{"session_id", "s-0"}, {"pose", kUserPose}}}};
  auto mutate = [&](json j, int depth, auto& self) -> json {
    if (!j.is_object()) return j;
    for (auto& [k, v] : j.items()) {
      const auto roll = rng() % 10;
      if (roll == 0) v = values[rng() % values.size()];
      else if (roll == 1 && depth < 2) v = self(v, depth + 1, self);
    }
    if (rng() % 4 == 0 && !j.empty()) j.erase(std::next(j.begin(), static_cast<long>(rng() % j.size())).key());
    if (rng() % 8 == 0) j["extra"] = values[rng() % values.size()];
    return j;
  };
  std::map<int, int> statuses;
  for (int i = 0; i < 1500; ++i) {
    const auto& [path, seed] = seeds[rng() % seeds.size()];
    std::string body = mutate(seed, 0, mutate).dump();
    if (rng() % 10 == 0) body.resize(rng() % (body.size() + 1));
    const auto r = s.handle({rng() % 15 == 0 ? "GET" : "POST", path, body, {}, {}});
    ++statuses[r.status];
    ASSERT_NE(r.status, 500) << path << " " << body << " -> " << r.body;
    if (r.status != 200) {
      ASSERT_TRUE(r.body.at("error").at("code").is_string());
      ASSERT_TRUE(r.body.at("error").at("message").is_string());
    }
  }
  for (int i = 0; i < 300; ++i) {
    std::map<std::string, std::string> params;
    for (const char* k : {"lat", "lon", "zoom", "width_px", "height_px", "rows", "cols"}) {
      if (rng() % 3 == 0) continue;
      const char* vals[] = {"0", "47.6", "-122.1", "1e9", "nan", "inf", "-5", "22", "3", "abc", "", "1.5", "99999999999"};
      params[k] = vals[rng() % std::size(vals)];
    }
    ASSERT_NE(get(s, "/v1/map/grid", params).status, 500);
  }
  EXPECT_GT(statuses[200], 50);
  EXPECT_GT(statuses.size(), 3u);
}

TEST(Http, ServesOverLoopback) {
  Service s(engine());
  httplib::Server server;
  s.mount(server);
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  httplib::Client client("127.0.0.1", port);
  const auto h = client.Get("/v1/healthz");
  ASSERT_TRUE(h);
  EXPECT_EQ(h->status, 200);
  const auto q = client.Post("/v1/query", json{{"query", "What is the lake at the top right part of the map?"}, {"viewport", kLakeView}}.dump(),
                             "application/json");
  ASSERT_TRUE(q);
  EXPECT_EQ(q->status, 200);
  EXPECT_EQ(json::parse(q->body).at("answer"), "That is Bonnet Lake.");
  const auto g = client.Get("/v1/map/grid?lat=47.625&lon=-122.15");
  ASSERT_TRUE(g);
  EXPECT_EQ(json::parse(g->body).at("rows"), 3);
  const auto missing = client.Get("/v1/missing");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  server.stop();
  t.join();
}
