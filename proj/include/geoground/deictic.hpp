#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <initializer_list>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "geoground/error.hpp"
#include "geoground/geo_index.hpp"
#include "geoground/grid.hpp"
#include "geoground/lexicon.hpp"

namespace geoground {

enum class Relation { LeftOf, RightOf, Above, Below, NextTo, Near };

inline constexpr std::string_view to_string(Relation r) {
  switch (r) {
    case Relation::LeftOf: return "left-of";
    case Relation::RightOf: return "right-of";
    case Relation::Above: return "above";
    case Relation::Below: return "below";
    case Relation::NextTo: return "next-to";
    case Relation::Near: return "near";
  }
  return "near";
}

inline constexpr Relation kAllRelations[] = {Relation::LeftOf, Relation::RightOf, Relation::Above,
                                             Relation::Below,  Relation::NextTo,  Relation::Near};

inline std::optional<Relation> parse_relation(std::string_view token) {
  const auto t = normalize_phrase(token);
  for (Relation r : kAllRelations) {
    if (normalize_phrase(to_string(r)) == t) return r;
  }
  return std::nullopt;
}

struct DeicticIntent {
  std::string category;
  std::optional<Region> region;
  std::optional<Relation> relation;
  std::optional<std::string> anchor;
  std::string raw;

  friend bool operator==(const DeicticIntent&, const DeicticIntent&) = default;
};

enum class ResolutionStatus { Matched, NoCandidates, AnchorNotFound };

inline constexpr std::string_view to_string(ResolutionStatus s) {
  switch (s) {
    case ResolutionStatus::Matched: return "matched";
    case ResolutionStatus::NoCandidates: return "no_candidates";
    case ResolutionStatus::AnchorNotFound: return "anchor_not_found";
  }
  return "no_candidates";
}

// One step of a resolution. `items` holds the machine-readable state after
// the step: cells as "row,col", everything else as POI ids.
struct ResolutionStep {
  std::string action;  // region | scope | candidates | anchor | relation | ranked
  std::string description;
  std::vector<std::string> items;
};

struct ResolvedAnswer {
  ResolutionStatus status = ResolutionStatus::NoCandidates;
  std::vector<std::string> matches;
  std::vector<CellRef> cells;
  std::vector<ResolutionStep> explanation;
};

namespace detail {

inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c == '\'') {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  // "what's" -> "what is"
  std::vector<std::string> expanded;
  for (auto& t : out) {
    if (t.size() > 2 && t.ends_with("'s") && (t == "what's" || t == "where's" || t == "which's")) {
      expanded.push_back(t.substr(0, t.size() - 2));
      expanded.push_back("is");
    } else {
      expanded.push_back(std::move(t));
    }
  }
  return expanded;
}

struct RelationPattern {
  std::vector<std::string_view> words;
  Relation relation;
};

inline const std::vector<RelationPattern>& relation_patterns() {
  static const std::vector<RelationPattern> patterns = {
      {{"to", "the", "left", "of"}, Relation::LeftOf},
      {{"on", "the", "left", "of"}, Relation::LeftOf},
      {{"left", "of"}, Relation::LeftOf},
      {{"to", "the", "right", "of"}, Relation::RightOf},
      {{"on", "the", "right", "of"}, Relation::RightOf},
      {{"right", "of"}, Relation::RightOf},
      {{"on", "top", "of"}, Relation::Above},
      {{"above"}, Relation::Above},
      {{"below"}, Relation::Below},
      {{"beneath"}, Relation::Below},
      {{"underneath"}, Relation::Below},
      {{"under"}, Relation::Below},
      {{"next", "to"}, Relation::NextTo},
      {{"adjacent", "to"}, Relation::NextTo},
      {{"beside"}, Relation::NextTo},
      {{"close", "to"}, Relation::Near},
      {{"near", "to"}, Relation::Near},
      {{"nearby"}, Relation::Near},
      {{"near"}, Relation::Near},
  };
  return patterns;
}

inline bool matches_at(const std::vector<std::string>& tokens, std::size_t pos, const std::vector<std::string_view>& words) {
  if (pos + words.size() > tokens.size()) return false;
  for (std::size_t i = 0; i < words.size(); ++i)
    if (tokens[pos + i] != words[i]) return false;
  return true;
}

inline const std::set<std::string>& filler_words() {
  static const std::set<std::string> words = {"what", "is",   "the",   "a",     "an",   "name", "of",   "which",
                                              "where", "show", "me",   "find",  "tell", "about", "identify",
                                              "called", "that", "this", "there", "it",   "can",  "you",  "please",
                                              "one",  "thing", "place", "who",   "are",  "was"};
  return words;
}

// 0 = top, 1 = center, 2 = bottom for vertical words; same for left/center/right.
inline std::optional<int> vertical_word(const std::string& w) {
  if (w == "top" || w == "upper") return 0;
  if (w == "middle" || w == "center" || w == "centre" || w == "central") return 1;
  if (w == "bottom" || w == "lower") return 2;
  return std::nullopt;
}

inline std::optional<int> horizontal_word(const std::string& w) {
  if (w == "left") return 0;
  if (w == "right") return 2;
  return std::nullopt;
}

inline Region region_from(std::optional<int> v, std::optional<int> h) {
  static constexpr Region table[3][3] = {{Region::TopLeft, Region::Top, Region::TopRight},
                                         {Region::Left, Region::Center, Region::Right},
                                         {Region::BottomLeft, Region::Bottom, Region::BottomRight}};
  return table[v.value_or(1)][h.value_or(1)];
}

}  // namespace detail

// Slot grammar: [WH-preamble] CATEGORY (REGION-phrase | RELATION-phrase ANCHOR).
// A region phrase may also trail the anchor ("... next to the park in the top
// right"); the category phrase is the right-most lexicon match in its slot.
inline DeicticIntent parse_query(std::string_view text, const CategoryLexicon& lexicon) {
  const auto tokens = detail::tokenize(text);
  if (tokens.empty()) fail(ErrorCode::UnparsableQuery, "empty query");

  std::vector<bool> used(tokens.size(), false);
  std::optional<Relation> relation;
  std::size_t rel_begin = tokens.size(), rel_end = tokens.size();
  for (std::size_t i = 1; i < tokens.size() && !relation; ++i) {
    for (const auto& pat : detail::relation_patterns()) {
      if (detail::matches_at(tokens, i, pat.words)) {
        relation = pat.relation;
        rel_begin = i;
        rel_end = i + pat.words.size();
        break;
      }
    }
  }
  for (std::size_t i = rel_begin; i < rel_end; ++i) used[i] = true;

  std::optional<Region> region;
  std::size_t reg_begin = tokens.size();
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    if (used[i]) continue;
    if (!detail::vertical_word(tokens[i]) && !detail::horizontal_word(tokens[i])) continue;
    std::optional<int> v, h;
    std::size_t j = i;
    for (; j < tokens.size() && !used[j]; ++j) {
      if (auto vw = detail::vertical_word(tokens[j]); vw && !v) v = vw;
      else if (auto hw = detail::horizontal_word(tokens[j]); hw && !h) h = hw;
      else if (tokens[j] == "hand" && h) continue;
      else break;
    }
    region = detail::region_from(v, h);
    reg_begin = i;
    // swallow the preposition and article introducing the region
    while (reg_begin > 0 && !used[reg_begin - 1] &&
           (tokens[reg_begin - 1] == "the" || tokens[reg_begin - 1] == "at" || tokens[reg_begin - 1] == "in" ||
            tokens[reg_begin - 1] == "on" || tokens[reg_begin - 1] == "to")) {
      --reg_begin;
    }
    break;
  }

  if (!relation && !region) fail(ErrorCode::UnparsableQuery, "no region or relation phrase in query");

  const std::size_t slot_end = std::min(rel_begin, reg_begin);
  std::optional<std::string> category;
  std::size_t best_end = 0, best_len = 0;
  for (std::size_t i = 0; i < slot_end; ++i) {
    std::string joined;
    for (std::size_t j = i; j < slot_end; ++j) {
      if (j > i) joined += ' ';
      joined += tokens[j];
      auto canon = lexicon.canonical(joined);
      if (!canon) continue;
      const std::size_t end = j + 1, len = j + 1 - i;
      if (end > best_end || (end == best_end && len > best_len)) {
        best_end = end;
        best_len = len;
        category = canon;
      }
    }
  }
  if (!category) {
    bool has_content = false;
    for (std::size_t i = 0; i < slot_end; ++i) has_content |= detail::filler_words().count(tokens[i]) == 0;
    if (!has_content) fail(ErrorCode::UnparsableQuery, "query has no category slot");
    fail(ErrorCode::UnknownCategory, "category in query is not in the lexicon");
  }

  DeicticIntent intent;
  intent.category = *category;
  intent.region = region;
  intent.relation = relation;
  intent.raw = std::string(text);
  if (relation) {
    std::size_t a = rel_end;
    std::size_t b = reg_begin > rel_end ? reg_begin : tokens.size();
    while (a < b && (tokens[a] == "the" || tokens[a] == "a" || tokens[a] == "an")) ++a;
    // trailing "on the map" / "in this view" style qualifiers
    auto trailing = [&](std::initializer_list<std::string_view> tail) {
      if (b - a < tail.size()) return false;
      std::size_t k = b - tail.size();
      for (auto w : tail)
        if (tokens[k++] != w) return false;
      b -= tail.size();
      return true;
    };
    while (trailing({"on", "the", "map"}) || trailing({"in", "the", "map"}) || trailing({"on", "this", "map"}) ||
           trailing({"of", "the", "map"}) || trailing({"in", "view"}) || trailing({"here"})) {
    }
    std::string anchor;
    for (std::size_t i = a; i < b; ++i) {
      if (!anchor.empty()) anchor += ' ';
      anchor += tokens[i];
    }
    if (anchor.empty()) fail(ErrorCode::UnparsableQuery, "relation phrase without an anchor");
    intent.anchor = anchor;
  }
  return intent;
}

namespace detail {

struct InViewPoi {
  const Poi* poi;
  ScreenPoint screen;
  CellRef cell;
};

inline std::string cell_item(CellRef c) { return std::to_string(c.row) + "," + std::to_string(c.col); }

inline double screen_distance(ScreenPoint a, ScreenPoint b) { return std::hypot(a.x - b.x, a.y - b.y); }

inline void order_by_distance(std::vector<InViewPoi>& v, ScreenPoint ref) {
  std::sort(v.begin(), v.end(), [&](const InViewPoi& a, const InViewPoi& b) {
    const double da = screen_distance(a.screen, ref), db = screen_distance(b.screen, ref);
    if (da != db) return da < db;
    return a.poi->id < b.poi->id;
  });
}

inline std::vector<std::string> ids_of(const std::vector<InViewPoi>& v) {
  std::vector<std::string> out;
  for (const auto& p : v) out.push_back(p.poi->id);
  return out;
}

}  // namespace detail

inline bool relation_holds(Relation rel, ScreenPoint candidate, ScreenPoint anchor, double cell_diagonal_px) {
  switch (rel) {
    case Relation::Below: return candidate.y > anchor.y;
    case Relation::Above: return candidate.y < anchor.y;
    case Relation::LeftOf: return candidate.x < anchor.x;
    case Relation::RightOf: return candidate.x > anchor.x;
    case Relation::NextTo:
    case Relation::Near: return detail::screen_distance(candidate, anchor) <= 1.5 * cell_diagonal_px;
  }
  return false;
}

// Screen-space resolution of an intent against the current grid. Both
// NoCandidates and AnchorNotFound come back as statuses so the explanation
// survives for the caller.
inline ResolvedAnswer resolve_intent(const DeicticIntent& intent, const TileGrid& grid,
                                     const std::vector<CellAssignment>& assignments, const PoiIndex& index) {
  ResolvedAnswer ans;
  std::vector<detail::InViewPoi> in_view;
  for (const auto& a : assignments) {
    for (const auto& id : a.entities) {
      const Poi* p = index.find(id);
      if (!p) continue;
      in_view.push_back({p, grid.to_screen(p->location), a.cell});
    }
  }

  std::set<CellRef> scope_cells;
  ScreenPoint focus{grid.viewport().width_px / 2.0, grid.viewport().height_px / 2.0};
  if (intent.region) {
    ans.cells = resolve_region(*intent.region, grid.rows(), grid.cols());
    scope_cells.insert(ans.cells.begin(), ans.cells.end());
    const auto& first = grid.cell(ans.cells.front()).px_bbox;
    const auto& last = grid.cell(ans.cells.back()).px_bbox;
    focus = ScreenPoint{(first.left + last.right) / 2.0, (first.top + last.bottom) / 2.0};
    ResolutionStep step{"region", "region '" + std::string(to_string(*intent.region)) + "' covers cells", {}};
    for (auto c : ans.cells) step.items.push_back(detail::cell_item(c));
    ans.explanation.push_back(std::move(step));
  }

  auto in_scope = [&](const detail::InViewPoi& p) { return scope_cells.empty() || scope_cells.count(p.cell) > 0; };

  if (!intent.relation) {
    std::vector<detail::InViewPoi> cands;
    for (const auto& p : in_view)
      if (in_scope(p) && p.poi->category == intent.category) cands.push_back(p);
    detail::order_by_distance(cands, focus);
    ans.explanation.push_back({"candidates",
                               "'" + intent.category + "' entities in region, nearest to region center first",
                               detail::ids_of(cands)});
    ans.matches = detail::ids_of(cands);
    ans.status = ans.matches.empty() ? ResolutionStatus::NoCandidates : ResolutionStatus::Matched;
    return ans;
  }

  // Anchor: by exact name first, then by category, nearest to the view center.
  const ScreenPoint view_center{grid.viewport().width_px / 2.0, grid.viewport().height_px / 2.0};
  const auto anchor_text = normalize_phrase(*intent.anchor);
  std::vector<detail::InViewPoi> anchors;
  for (const auto& p : in_view)
    if (normalize_phrase(p.poi->name) == anchor_text) anchors.push_back(p);
  std::string how = "by name";
  if (anchors.empty()) {
    if (auto cat = index.lexicon().canonical(anchor_text)) {
      for (const auto& p : in_view)
        if (p.poi->category == *cat) anchors.push_back(p);
      how = "by category '" + *cat + "'";
    }
  }
  if (anchors.empty()) {
    ans.explanation.push_back({"anchor", "no in-view entity matches anchor '" + *intent.anchor + "'", {}});
    ans.status = ResolutionStatus::AnchorNotFound;
    return ans;
  }
  detail::order_by_distance(anchors, view_center);
  const auto anchor = anchors.front();
  ans.explanation.push_back({"anchor", "anchor '" + *intent.anchor + "' located " + how + ": " + anchor.poi->name,
                             {anchor.poi->id}});

  std::vector<detail::InViewPoi> cands;
  for (const auto& p : in_view)
    if (in_scope(p) && p.poi->category == intent.category && p.poi->id != anchor.poi->id) cands.push_back(p);
  detail::order_by_distance(cands, anchor.screen);
  ans.explanation.push_back({"candidates", "'" + intent.category + "' entities in view", detail::ids_of(cands)});

  std::vector<detail::InViewPoi> kept;
  const double diag = grid.cell_diagonal_px();
  for (const auto& p : cands)
    if (relation_holds(*intent.relation, p.screen, anchor.screen, diag)) kept.push_back(p);
  ans.explanation.push_back({"relation",
                             "kept candidates " + std::string(to_string(*intent.relation)) + " the anchor, nearest first",
                             detail::ids_of(kept)});
  ans.matches = detail::ids_of(kept);
  for (const auto& p : kept) ans.cells.push_back(p.cell);
  std::sort(ans.cells.begin(), ans.cells.end());
  ans.cells.erase(std::unique(ans.cells.begin(), ans.cells.end()), ans.cells.end());
  ans.status = ans.matches.empty() ? ResolutionStatus::NoCandidates : ResolutionStatus::Matched;
  return ans;
}

}  // namespace geoground
