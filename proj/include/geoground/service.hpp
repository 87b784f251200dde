#pragma once

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <string>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "geoground/agents/location_intel.hpp"
#include "geoground/agents/navigation.hpp"
#include "geoground/agents/orchestrator.hpp"
#include "geoground/deictic.hpp"
#include "geoground/engine.hpp"
#include "geoground/error.hpp"
#include "geoground/grid.hpp"
#include "geoground/json_io.hpp"

namespace geoground::service {

using nlohmann::json;

// Total mapping from engine errors to HTTP statuses.
inline constexpr int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::LatitudeOutOfProjection:
    case ErrorCode::PixelOutOfWorld:
    case ErrorCode::MalformedGeoJson:
    case ErrorCode::UnsupportedGeometry:
    case ErrorCode::ViewportOutOfProjection:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::MalformedWorld:
    case ErrorCode::MalformedScene:
      return 400;
    case ErrorCode::Unauthorized:
      return 401;
    case ErrorCode::NoCandidates:
    case ErrorCode::SessionNotFound:
    case ErrorCode::RouteNotFound:
      return 404;
    case ErrorCode::NoActiveDestination:
      return 409;
    case ErrorCode::DegenerateBearing:
    case ErrorCode::UnknownRegion:
    case ErrorCode::UnparsableQuery:
    case ErrorCode::UnknownCategory:
    case ErrorCode::AnchorNotFound:
    case ErrorCode::EmptyDataset:
    case ErrorCode::EmptyRelevantSet:
    case ErrorCode::MalformedModel:
    case ErrorCode::StepBudgetExceeded:
    case ErrorCode::MalformedToolCall:
    case ErrorCode::ToolError:
    case ErrorCode::Unreachable:
    case ErrorCode::IncomparablePaths:
    case ErrorCode::InsufficientPois:
      return 422;
  }
  return 500;
}

struct ApiRequest {
  std::string method;
  std::string path;
  std::string body;
  std::map<std::string, std::string> headers;  // lower-case names
  std::map<std::string, std::string> params;   // query string
};

struct ApiResponse {
  int status = 200;
  json body;
};

inline ApiResponse error_response(ErrorCode code, const std::string& message, json details = json::object()) {
  return {http_status(code), {{"error", {{"code", to_string(code)}, {"message", message}, {"details", std::move(details)}}}}};
}

struct SessionState {
  std::string session_id;
  std::optional<std::string> destination_id;
  std::optional<GeoPoint> destination;
  std::optional<UserPose> last_pose;
  double created_s = 0.0;
  double updated_s = 0.0;
};

using SecondsClock = std::function<double()>;

inline SecondsClock steady_seconds() {
  return [] { return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count(); };
}

// The only mutable shared state; one mutex makes per-session updates linearizable.
class SessionStore {
 public:
  SessionStore(double ttl_s, SecondsClock clock) : ttl_s_(ttl_s), clock_(std::move(clock)) {
    std::random_device rd;
    salt_ = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  }

  SessionState create(std::optional<std::string> dest_id, std::optional<GeoPoint> dest, std::optional<UserPose> pose) {
    std::lock_guard lock(mu_);
    purge_locked();
    const double now = clock_();
    char id[40];
    std::snprintf(id, sizeof(id), "s-%016llx-%llu", static_cast<unsigned long long>(salt_ ^ (counter_ * 0x9e3779b97f4a7c15ULL)),
                  static_cast<unsigned long long>(counter_));
    ++counter_;
    SessionState s{id, std::move(dest_id), dest, pose, now, now};
    sessions_[s.session_id] = s;
    return s;
  }

  // Applies `fn` to a live session under the lock; expired sessions are gone.
  template <class Fn>
  auto with_session(const std::string& id, Fn&& fn) {
    std::lock_guard lock(mu_);
    purge_locked();
    auto it = sessions_.find(id);
    if (it == sessions_.end()) fail(ErrorCode::SessionNotFound, "unknown or expired session '" + id + "'");
    return fn(it->second, clock_());
  }

  std::size_t size() {
    std::lock_guard lock(mu_);
    purge_locked();
    return sessions_.size();
  }

 private:
  void purge_locked() {
    const double now = clock_();
    for (auto it = sessions_.begin(); it != sessions_.end();) {
      if (now - it->second.updated_s > ttl_s_) it = sessions_.erase(it);
      else ++it;
    }
  }

  double ttl_s_;
  SecondsClock clock_;
  std::mutex mu_;
  std::map<std::string, SessionState> sessions_;
  std::uint64_t counter_ = 0;
  std::uint64_t salt_ = 0;
};

class Service {
 public:
  explicit Service(const Engine& engine, SecondsClock session_clock = steady_seconds())
      : engine_(engine), sessions_(engine.config().session_ttl_s, std::move(session_clock)) {}

  // Transport-free entry point; the HTTP binding only forwards to it.
  ApiResponse handle(const ApiRequest& req) {
    try {
      if (!engine_.config().api_key.empty() && req.path != "/v1/healthz") {
        auto it = req.headers.find("x-api-key");
        if (it == req.headers.end() || it->second != engine_.config().api_key)
          fail(ErrorCode::Unauthorized, "missing or wrong X-API-Key header");
      }
      if (req.method == "GET" && req.path == "/v1/healthz") return healthz();
      if (req.method == "GET" && req.path == "/v1/map/grid") return map_grid(req.params);
      if (req.method == "POST") {
        if (req.path == "/v1/query") return query(body_of(req));
        if (req.path == "/v1/ground") return ground(body_of(req));
        if (req.path == "/v1/nav/start") return nav_start(body_of(req));
        if (req.path == "/v1/nav/step") return nav_step(body_of(req));
      }
      fail(ErrorCode::RouteNotFound, "no route for " + req.method + " " + req.path);
    } catch (const Error& e) {
      return error_response(e.code(), e.what());
    } catch (const json::exception& e) {
      return error_response(ErrorCode::InvalidArgument, e.what());
    } catch (const std::exception& e) {
      return {500, {{"error", {{"code", "internal"}, {"message", e.what()}, {"details", json::object()}}}}};
    }
  }

  void mount(httplib::Server& server) {
    auto forward = [this](const httplib::Request& hreq, httplib::Response& hres) {
      ApiRequest req;
      req.method = hreq.method;
      req.path = hreq.path;
      req.body = hreq.body;
      for (const auto& [k, v] : hreq.headers) req.headers[to_lower(k)] = v;
      for (const auto& [k, v] : hreq.params) req.params[k] = v;
      const auto res = handle(req);
      hres.status = res.status;
      hres.set_content(res.body.dump(), "application/json");
    };
    server.Get(".*", forward);
    server.Post(".*", forward);
    server.Put(".*", forward);
    server.Delete(".*", forward);
    server.Patch(".*", forward);
  }

  SessionStore& sessions() { return sessions_; }

 private:
  const Engine& engine_;
  SessionStore sessions_;

  static json body_of(const ApiRequest& req) {
    auto j = json::parse(req.body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) fail(ErrorCode::InvalidArgument, "request body must be a JSON object");
    return j;
  }

  ApiResponse healthz() const {
    const auto st = engine_.index().stats();
    return {200,
            {{"status", "ok"},
             {"pois", st.count},
             {"model_trees", engine_.model().booster.trees.size()},
             {"embedding_dim", engine_.provider().dimension()}}};
  }

  ApiResponse map_grid(const std::map<std::string, std::string>& params) const {
    auto num = [&](const char* key, std::optional<double> fallback) -> double {
      auto it = params.find(key);
      if (it == params.end()) {
        if (!fallback) fail(ErrorCode::InvalidArgument, std::string("query parameter '") + key + "' is required");
        return *fallback;
      }
      try {
        std::size_t used = 0;
        const double v = std::stod(it->second, &used);
        if (used != it->second.size() || !std::isfinite(v)) throw std::invalid_argument(key);
        return v;
      } catch (const std::exception&) {
        fail(ErrorCode::InvalidArgument, std::string("query parameter '") + key + "' must be a number");
      }
    };
    auto integer = [&](const char* key, int fallback) {
      const double v = num(key, fallback);
      if (v != std::floor(v) || std::abs(v) > 1e9) fail(ErrorCode::InvalidArgument, std::string("query parameter '") + key + "' must be an integer");
      return static_cast<int>(v);
    };
    Viewport v;
    v.center = GeoPoint::make(num("lat", std::nullopt), num("lon", std::nullopt));
    v.zoom = integer("zoom", engine_.config().default_zoom);
    v.width_px = integer("width_px", v.width_px);
    v.height_px = integer("height_px", v.height_px);
    const auto grid = viewport_to_grid(v, integer("rows", engine_.config().grid_rows), integer("cols", engine_.config().grid_cols));
    return {200, io::to_json(grid, assign_from_index(grid, engine_.index()))};
  }

  ApiResponse query(const json& body) const {
    if (!body.contains("query") || !body.at("query").is_string()) fail(ErrorCode::InvalidArgument, "field 'query' must be a string");
    const auto text = body.at("query").get<std::string>();
    if (trim(text).empty()) fail(ErrorCode::UnparsableQuery, "query is empty");
    if (!body.contains("viewport")) fail(ErrorCode::InvalidArgument, "field 'viewport' is required");
    const auto viewport = io::parse_viewport(body.at("viewport"));
    int rows = engine_.config().grid_rows, cols = engine_.config().grid_cols;
    if (body.contains("grid")) {
      if (!body.at("grid").is_object()) fail(ErrorCode::InvalidArgument, "field 'grid' must be an object");
      rows = io::int_field(body.at("grid"), "rows", rows);
      cols = io::int_field(body.at("grid"), "cols", cols);
    }
    viewport_to_grid(viewport, rows, cols);  // validates the view before any work
    std::optional<UserPose> pose;
    if (body.contains("pose")) pose = io::parse_pose(body.at("pose"));

    std::optional<Error> parse_error;
    try {
      parse_query(text, engine_.index().lexicon());
    } catch (const Error& e) {
      parse_error = e;
    }

    auto ctx = engine_.tool_context(pose, viewport);
    ctx.grid_rows = rows;
    ctx.grid_cols = cols;
    const auto registry = agents::standard_registry(ctx);
    auto lm = engine_.stub_lm();
    agents::OrchestratorOptions opts;
    opts.max_steps = engine_.config().max_steps;
    opts.clock = engine_.trace_clock();
    const auto run = agents::orchestrate(text, lm, registry, opts);
    if (run.trace.tool_calls() == 0 && run.trace.outcome == agents::TraceOutcome::Answered) {
      if (parse_error) throw *parse_error;
      fail(ErrorCode::UnparsableQuery, "query matches no supported question form");
    }

    json out = {{"answer", run.answer},
                {"status", "answered"},
                {"intent", nullptr},
                {"matches", json::array()},
                {"cells", json::array()},
                {"explanation", json::array()},
                {"grid", {{"rows", rows}, {"cols", cols}}},
                {"trace", agents::to_json(run.trace)}};
    for (const auto& step : run.trace.steps) {
      if (step.action != agents::StepAction::ToolCall || step.payload.at("tool") != "resolve") continue;
      const auto& r = step.payload.at("result");
      if (r.contains("error")) {
        const auto cause = r.value("cause", std::string());
        for (int c = 0; c <= static_cast<int>(kLastErrorCode); ++c)
          if (to_string(static_cast<ErrorCode>(c)) == cause) fail(static_cast<ErrorCode>(c), r.value("message", cause));
        fail(ErrorCode::ToolError, r.value("message", cause));
      }
      out["status"] = r.at("status");
      out["intent"] = r.at("intent");
      out["matches"] = r.at("matches");
      out["cells"] = r.at("cells");
      out["explanation"] = r.at("explanation");
    }
    return {200, std::move(out)};
  }

  ApiResponse ground(const json& body) const {
    if (!body.contains("pose")) fail(ErrorCode::InvalidArgument, "field 'pose' is required");
    const auto pose = io::parse_pose(body.at("pose"));
    CameraObservation obs;
    obs.pose = pose;
    if (body.contains("image_embedding")) {
      const auto& e = body.at("image_embedding");
      if (!e.is_array() || e.empty()) fail(ErrorCode::InvalidArgument, "image_embedding must be a non-empty array");
      for (const auto& x : e) {
        if (!x.is_number()) fail(ErrorCode::InvalidArgument, "image_embedding must hold numbers");
        obs.image_embedding.push_back(x.get<double>());
      }
      if (obs.image_embedding.size() != engine_.provider().dimension())
        fail(ErrorCode::DimensionMismatch, "image_embedding has " + std::to_string(obs.image_embedding.size()) +
                                               " dimensions, expected " + std::to_string(engine_.provider().dimension()));
    } else if (body.contains("image_ref") && body.at("image_ref").is_string()) {
      obs.image_embedding = engine_.provider().embed_image(body.at("image_ref").get<std::string>());
    } else {
      fail(ErrorCode::InvalidArgument, "either image_embedding or image_ref is required");
    }
    agents::PlaceQuery q{pose.position, std::nullopt, engine_.config().identify_radius_m,
                         static_cast<std::size_t>(engine_.config().retrieval_k), static_cast<std::size_t>(engine_.config().answer_top_m)};
    if (body.contains("category")) {
      if (!body.at("category").is_string()) fail(ErrorCode::InvalidArgument, "category must be a string");
      q.category = engine_.index().lexicon().canonical(body.at("category").get<std::string>());
      if (!q.category) fail(ErrorCode::UnknownCategory, "unknown category");
    }
    if (body.contains("radius_m")) q.radius_m = io::number_field(body, "radius_m");
    if (!(q.radius_m > 0)) fail(ErrorCode::InvalidArgument, "radius_m must be positive");
    const int k = io::int_field(body, "k", static_cast<int>(q.k));
    const int m = io::int_field(body, "top_m", static_cast<int>(q.top_m));
    if (k < 1 || m < 1 || k > 1000 || m > 1000) fail(ErrorCode::InvalidArgument, "k and top_m must be in [1, 1000]");
    q.k = static_cast<std::size_t>(k);
    q.top_m = static_cast<std::size_t>(m);
    json cands = json::array();
    for (const auto& a : agents::location_intel_answer(engine_.index(), engine_.provider(), engine_.model(), q, obs))
      cands.push_back(agents::to_json(a));
    return {200, {{"candidates", std::move(cands)}}};
  }

  ApiResponse nav_start(const json& body) {
    std::optional<std::string> dest_id;
    std::optional<GeoPoint> dest;
    json dest_json = nullptr;
    if (body.contains("destination") && !body.at("destination").is_null()) {
      const auto& d = body.at("destination");
      if (!d.is_object()) fail(ErrorCode::InvalidArgument, "destination must be an object");
      if (d.contains("poi_id")) {
        if (!d.at("poi_id").is_string()) fail(ErrorCode::InvalidArgument, "poi_id must be a string");
        const Poi* p = engine_.index().find(d.at("poi_id").get<std::string>());
        if (!p) fail(ErrorCode::NoCandidates, "unknown destination poi_id");
        dest_id = p->id;
        dest = p->location;
        dest_json = io::poi_summary(*p);
      } else {
        dest = io::parse_point(d);
        dest_json = io::to_json(*dest);
      }
    }
    std::optional<UserPose> pose;
    if (body.contains("pose")) pose = io::parse_pose(body.at("pose"));
    const auto s = sessions_.create(dest_id, dest, pose);
    json out = {{"session_id", s.session_id}, {"destination", dest_json}};
    if (pose && dest) out["instruction"] = agents::to_json(instruction_for(s, *pose));
    return {200, std::move(out)};
  }

  ApiResponse nav_step(const json& body) {
    if (!body.contains("session_id") || !body.at("session_id").is_string())
      fail(ErrorCode::InvalidArgument, "field 'session_id' must be a string");
    if (!body.contains("pose")) fail(ErrorCode::InvalidArgument, "field 'pose' is required");
    const auto pose = io::parse_pose(body.at("pose"));
    return sessions_.with_session(body.at("session_id").get<std::string>(), [&](SessionState& s, double now) {
      if (!s.destination) fail(ErrorCode::NoActiveDestination, "session has no active destination");
      const auto instr = instruction_for(s, pose);
      s.last_pose = pose;
      s.updated_s = std::max(s.updated_s, now);
      return ApiResponse{200, agents::to_json(instr)};
    });
  }

  agents::NavInstruction instruction_for(const SessionState& s, const UserPose& pose) const {
    if (s.destination_id) {
      if (const Poi* p = engine_.index().find(*s.destination_id))
        return agents::navigation_step(pose, *p, engine_.config().arrival_radius_m);
    }
    return agents::navigation_step(pose, *s.destination, std::nullopt, engine_.config().arrival_radius_m);
  }
};

}  // namespace geoground::service
