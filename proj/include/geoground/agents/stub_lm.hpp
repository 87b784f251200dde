#pragma once

#include <cctype>
#include <cstdio>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "geoground/agents/protocol.hpp"
#include "geoground/deictic.hpp"
#include "geoground/lexicon.hpp"

namespace geoground::agents {

// Deterministic keyword router standing in for a hosted model. Each rule is a
// fixed tool plan; the next action depends only on the query and the tool
// results seen so far.
class RuleTableLm final : public LmClient {
 public:
  explicit RuleTableLm(CategoryLexicon lexicon) : lexicon_(std::move(lexicon)) {}

  LmResponse complete(const LmRequest& req) override {
    std::string query;
    std::vector<std::pair<std::string, nlohmann::json>> results;
    for (const auto& m : req.messages) {
      if (m.role == "user" && query.empty()) query = m.content;
      if (m.role == "tool") {
        auto j = nlohmann::json::parse(m.content, nullptr, false);
        if (!j.is_discarded() && !j.contains("rejected")) results.emplace_back(m.tool, std::move(j));
      }
    }
    const std::string q = normalize_spaces(to_lower(trim(query)));
    std::smatch m;

    static const std::regex nearest_nav(
        R"(^(?:please\s+)?(?:navigate|take|guide|walk|direct|bring)\s+(?:me\s+)?(?:to|toward|towards)\s+(?:the\s+)?(?:closest|nearest)\s+(.+?)[?.!]*$)");
    static const std::regex named_nav(
        R"(^(?:please\s+)?(?:navigate|take|guide|walk|direct|bring)\s+(?:me\s+)?(?:to|toward|towards)\s+(?:the\s+)?(.+?)[?.!]*$)");
    static const std::regex how_far(R"(^how\s+far\s+(?:away\s+)?is\s+(?:the\s+)?(.+?)(?:\s+from\s+here)?[?.!]*$)");
    static const std::regex look(R"((?:\bthis\b|\bhere\b|in front of me|looking at))");

    if (std::regex_match(q, m, nearest_nav)) return nearest_plan(m[1].str(), results);
    if (std::regex_match(q, m, named_nav)) return named_plan(m[1].str(), results);
    if (std::regex_match(q, m, how_far)) return distance_plan(m[1].str(), results);
    bool deictic = false;
    try {
      parse_query(query, lexicon_);
      deictic = true;
    } catch (const Error&) {
    }
    if (deictic) return resolve_plan(query, results);
    if (std::regex_search(q, look)) return identify_plan(results);
    return LmResponse::final_text("Sorry, only questions about places, distances, directions and the map view are supported.");
  }

 private:
  CategoryLexicon lexicon_;

  static std::string normalize_spaces(const std::string& s) {
    std::string out;
    for (char c : s) {
      if (std::isspace(static_cast<unsigned char>(c))) {
        if (!out.empty() && out.back() != ' ') out += ' ';
      } else {
        out += c;
      }
    }
    return out;
  }

  static bool failed(const nlohmann::json& r) { return r.contains("error"); }

  static std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, v);
    return buf;
  }

  // "boba tea shop" -> "boba tea"; drops generic trailing nouns until the
  // lexicon recognises the phrase.
  std::optional<std::string> category_of(std::string phrase) const {
    for (;;) {
      if (auto c = lexicon_.canonical(phrase)) return c;
      const auto sp = phrase.rfind(' ');
      if (sp == std::string::npos) return std::nullopt;
      phrase.resize(sp);
    }
  }

  static std::string arrival_or_direction(const nlohmann::json& nav) {
    if (nav.value("arrived", false)) return "You have arrived.";
    const double rel = nav.at("relative_direction_deg").get<double>();
    const double side = rel > 180.0 ? 360.0 - rel : rel;
    std::string cue = nav.at("cue").get<std::string>();
    cue[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(cue[0])));
    if (side < 10.0 || rel < 10.0 || rel > 350.0) return cue + ".";
    return cue + ": the destination is " + fmt("%.0f", side) + " degrees to your " + (rel < 180.0 ? "right." : "left.");
  }

  LmResponse nearest_plan(const std::string& phrase, const std::vector<std::pair<std::string, nlohmann::json>>& results) const {
    const auto category = category_of(phrase);
    if (!category) return LmResponse::final_text("Sorry, that kind of place is not on the map.");
    switch (results.size()) {
      case 0: return LmResponse::call("search", {{"category", *category}});
      case 1: {
        const auto& r = results[0].second;
        if (failed(r) || r.at("places").empty()) return LmResponse::final_text("No " + *category + " places were found nearby.");
        nlohmann::json ids = nlohmann::json::array();
        for (const auto& p : r.at("places")) ids.push_back(p.at("id"));
        return LmResponse::call("rank", {{"ids", ids}, {"by", "distance"}});
      }
      case 2: {
        const auto& r = results[1].second;
        if (failed(r) || r.at("ranked").empty()) return LmResponse::final_text("Sorry, the candidates could not be ranked.");
        return LmResponse::call("navigate", {{"place", r.at("ranked").at(0).at("id")}});
      }
      default: {
        const auto& nav = results[2].second;
        if (failed(nav)) return LmResponse::final_text("Sorry, directions are not available right now.");
        const auto name = nav.at("name").get<std::string>();
        return LmResponse::final_text(name + " is the closest " + *category + ", " + fmt("%.1f", nav.at("distance_mi").get<double>()) +
                                      " miles away. " + arrival_or_direction(nav));
      }
    }
  }

  LmResponse named_plan(const std::string& place, const std::vector<std::pair<std::string, nlohmann::json>>& results) const {
    if (results.empty()) return LmResponse::call("navigate", {{"place", place}});
    const auto& nav = results[0].second;
    if (failed(nav)) return LmResponse::final_text("That place could not be found on the map.");
    return LmResponse::final_text(nav.at("name").get<std::string>() + " is " + fmt("%.1f", nav.at("distance_mi").get<double>()) +
                                  " miles away. " + arrival_or_direction(nav));
  }

  LmResponse distance_plan(const std::string& place, const std::vector<std::pair<std::string, nlohmann::json>>& results) const {
    if (results.empty()) return LmResponse::call("distance", {{"place", place}});
    const auto& r = results[0].second;
    if (failed(r)) return LmResponse::final_text("That place could not be found on the map.");
    return LmResponse::final_text(r.at("name").get<std::string>() + " is " + fmt("%.1f", r.at("distance_mi").get<double>()) +
                                  " miles (" + fmt("%.0f", r.at("distance_m").get<double>()) + " m) away.");
  }

  LmResponse resolve_plan(const std::string& query, const std::vector<std::pair<std::string, nlohmann::json>>& results) const {
    if (results.empty()) return LmResponse::call("resolve", {{"query", query}});
    const auto& r = results[0].second;
    if (failed(r)) return LmResponse::final_text("Sorry, the question could not be resolved against the map view.");
    const auto status = r.at("status").get<std::string>();
    if (status == "anchor_not_found") return LmResponse::final_text("The reference place is not in the current view.");
    const auto& matches = r.at("matches");
    if (matches.empty())
      return LmResponse::final_text("No matching " + r.at("intent").at("category").get<std::string>() + " is in the current view.");
    std::string text = "That is " + matches.at(0).at("name").get<std::string>() + ".";
    if (matches.size() > 1) {
      text += " Other candidates: ";
      for (std::size_t i = 1; i < matches.size() && i < 3; ++i) {
        if (i > 1) text += ", ";
        text += matches.at(i).at("name").get<std::string>();
      }
      text += ".";
    }
    return LmResponse::final_text(text);
  }

  LmResponse identify_plan(const std::vector<std::pair<std::string, nlohmann::json>>& results) const {
    if (results.empty()) return LmResponse::call("identify");
    const auto& r = results[0].second;
    if (failed(r) || r.at("places").empty()) return LmResponse::final_text("No nearby place matches what the camera sees.");
    const auto& top = r.at("places").at(0);
    std::string text = "This looks like " + top.at("name").get<std::string>() + " (" + top.at("category").get<std::string>() +
                       "), " + fmt("%.0f", top.at("features").at("distance_m").get<double>()) + " m away.";
    const auto digest = top.at("digest").get<std::string>();
    if (!digest.empty()) text += " What is known about it: " + digest + ".";
    return LmResponse::final_text(text);
  }
};

}  // namespace geoground::agents
