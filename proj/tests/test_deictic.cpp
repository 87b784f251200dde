#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "geoground/deictic.hpp"

using namespace geoground;

namespace {

const CategoryLexicon& lex() {
  static const auto l = CategoryLexicon::with_defaults();
  return l;
}

ErrorCode parse_error(std::string_view q) {
  try {
    parse_query(q, lex());
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "parsed: " << q;
  return ErrorCode::InvalidArgument;
}

const Viewport kLakeView{GeoPoint::make(47.625, -122.15), 15, 768, 768};

PoiIndex fixture_index() {
  std::ifstream in(GEOGROUND_DATA_DIR "/bellevue.geojson");
  PoiIndex index;
  index.ingest_geojson(in);
  return index;
}

// Places POIs at screen offsets from the top-left of `v`.
Poi at_screen(const Viewport& v, std::string id, std::string name, std::string cat, double x, double y) {
  const auto c = project_mercator(v.center, v.zoom);
  return Poi{std::move(id), std::move(name), std::move(cat),
             unproject_mercator({c.x - v.width_px / 2.0 + x, c.y - v.height_px / 2.0 + y, v.zoom})};
}

ResolvedAnswer resolve(std::string_view q, const PoiIndex& index, const Viewport& v, int rows = 3, int cols = 3) {
  const auto g = viewport_to_grid(v, rows, cols);
  return resolve_intent(parse_query(q, index.lexicon()), g, assign_from_index(g, index), index);
}

// Re-derives matches from the explanation alone.
std::vector<std::string> replay(const ResolvedAnswer& a, const DeicticIntent& intent, const TileGrid& g, const PoiIndex& index) {
  auto step = [&](const std::string& action) -> const ResolutionStep* {
    for (const auto& s : a.explanation)
      if (s.action == action) return &s;
    return nullptr;
  };
  const auto* cands = step("candidates");
  if (!cands) return {};
  if (!intent.relation) return cands->items;
  const auto* anchor = step("anchor");
  const auto anchor_px = g.to_screen(index.find(anchor->items.at(0))->location);
  std::vector<std::string> out;
  for (const auto& id : cands->items)
    if (relation_holds(*intent.relation, g.to_screen(index.find(id)->location), anchor_px, g.cell_diagonal_px())) out.push_back(id);
  return out;
}

}  // namespace

TEST(Parse, Examples) {
  const auto a = parse_query("What is the lake at the top right part of the map", lex());
  EXPECT_EQ(a.category, "lake");
  EXPECT_EQ(a.region, Region::TopRight);
  EXPECT_FALSE(a.relation);

  const auto b = parse_query("What is the coffee shop below the cinema?", lex());
  EXPECT_EQ(b.category, "cafe");
  EXPECT_EQ(b.relation, Relation::Below);
  EXPECT_EQ(b.anchor, "cinema");
  EXPECT_FALSE(b.region);
  EXPECT_EQ(b.raw, "What is the coffee shop below the cinema?");

  EXPECT_EQ(parse_error("hello"), ErrorCode::UnparsableQuery);
  EXPECT_EQ(parse_error(""), ErrorCode::UnparsableQuery);
  EXPECT_EQ(parse_error("What is at the top left?"), ErrorCode::UnparsableQuery);
  EXPECT_EQ(parse_error("What is the spaceship at the top left?"), ErrorCode::UnknownCategory);
}

TEST(Parse, GrammarVariants) {
  struct Case {
    const char* q;
    std::string cat;
    std::optional<Region> region;
    std::optional<Relation> rel;
    std::optional<std::string> anchor;
  };
  const Case cases[] = {
      {"what's the park in the bottom left?", "park", Region::BottomLeft, {}, {}},
      {"Which pond is at the top?", "lake", Region::Top, {}, {}},
      {"the museum in the center of the map", "museum", Region::Center, {}, {}},
      {"What is the lake at the top left part of the map", "lake", Region::TopLeft, {}, {}},
      {"What is the cafe to the left of Crossroads Cinema?", "cafe", {}, Relation::LeftOf, "crossroads cinema"},
      {"What is the bank right of the hotel", "bank", {}, Relation::RightOf, "hotel"},
      {"What is the bar above the bakery", "bar", {}, Relation::Above, "bakery"},
      {"What is the park next to the lake on the map?", "park", {}, Relation::NextTo, "lake"},
      {"what is the gym near Abi's Park", "gym", {}, Relation::Near, "abi's park"},
      {"What is the name of the building next to the park in the top right", "building", Region::TopRight, Relation::NextTo, "park"},
      {"WHAT IS THE BOBA TEA SHOP ON THE RIGHT", "boba tea", Region::Right, {}, {}},
  };
  for (const auto& c : cases) {
    const auto i = parse_query(c.q, lex());
    EXPECT_EQ(i.category, c.cat) << c.q;
    EXPECT_EQ(i.region, c.region) << c.q;
    EXPECT_EQ(i.relation, c.rel) << c.q;
    EXPECT_EQ(i.anchor, c.anchor) << c.q;
    if (i.relation) {
      EXPECT_TRUE(i.anchor.has_value());
    }
    EXPECT_TRUE(i.region || i.relation);
  }
}

TEST(Parse, TemplateSweepIsDeterministic) {
  const char* regions[] = {"top left", "top", "top right", "left", "center", "right", "bottom left", "bottom", "bottom right"};
  const char* rels[] = {"to the left of", "to the right of", "above", "below", "next to", "near"};
  for (const auto& cat : lex().categories()) {
    for (int r = 0; r < 9; ++r) {
      const auto q = "What is the " + cat + " at the " + regions[r] + " part of the map?";
      const auto i = parse_query(q, lex());
      ASSERT_EQ(i.category, cat) << q;
      ASSERT_EQ(i.region, kAllRegions[r]) << q;
      ASSERT_EQ(i, parse_query(q, lex()));
    }
    for (int k = 0; k < 6; ++k) {
      const auto q = "What is the " + cat + " " + rels[k] + " Harbor Grill?";
      const auto i = parse_query(q, lex());
      ASSERT_EQ(i.category, cat) << q;
      ASSERT_EQ(i.relation, kAllRelations[k]) << q;
      ASSERT_EQ(i.anchor, "harbor grill") << q;
    }
  }
}

TEST(Resolve, LakeInTopRight) {
  const auto index = fixture_index();
  const auto a = resolve("What is the lake at the top right part of the map?", index, kLakeView);
  EXPECT_EQ(a.status, ResolutionStatus::Matched);
  EXPECT_EQ(a.matches, std::vector<std::string>{"bonnet-lake"});
  EXPECT_EQ(a.cells, (std::vector<CellRef>{{0, 2}}));
  ASSERT_FALSE(a.explanation.empty());
  EXPECT_EQ(a.explanation[0].items, std::vector<std::string>{"0,2"});
}

TEST(Resolve, NoLakeInRegion) {
  const auto index = fixture_index();
  const auto a = resolve("What is the lake at the bottom left part of the map?", index, kLakeView);
  EXPECT_EQ(a.status, ResolutionStatus::NoCandidates);
  EXPECT_TRUE(a.matches.empty());
  ASSERT_EQ(a.explanation.size(), 2u);
  EXPECT_EQ(a.explanation[0].items, std::vector<std::string>{"2,0"});
  EXPECT_TRUE(a.explanation[1].items.empty());
}

TEST(Resolve, BelowTheCinema) {
  const auto index = fixture_index();
  const auto a = resolve("What is the coffee shop below the cinema?", index, kLakeView);
  EXPECT_EQ(a.matches, std::vector<std::string>{"south-bean"});
  const auto b = resolve("What is the coffee shop above the cinema?", index, kLakeView);
  EXPECT_EQ(b.matches, std::vector<std::string>{"north-bean"});
  const auto c = resolve("What is the cafe below Crossroads Cinema", index, kLakeView);
  EXPECT_EQ(c.matches, std::vector<std::string>{"south-bean"});
}

TEST(Resolve, TwoPoiPredicate) {
  PoiIndex index;
  const Viewport v{GeoPoint::make(40.0, -74.0), 16, 600, 600};
  index.insert({at_screen(v, "cin", "Rex", "cinema", 300, 300), at_screen(v, "low", "Low Cafe", "cafe", 310, 420)});
  EXPECT_EQ(resolve("What is the cafe below the cinema", index, v).matches, std::vector<std::string>{"low"});
  PoiIndex flipped;
  flipped.insert({at_screen(v, "cin", "Rex", "cinema", 300, 300), at_screen(v, "high", "High Cafe", "cafe", 310, 180)});
  const auto a = resolve("What is the cafe below the cinema", flipped, v);
  EXPECT_TRUE(a.matches.empty());
  EXPECT_EQ(a.status, ResolutionStatus::NoCandidates);
}

TEST(Resolve, NearUsesOneAndAHalfCellDiagonals) {
  const Viewport v{GeoPoint::make(40.0, -74.0), 16, 600, 600};
  const double diag = std::hypot(200.0, 200.0);
  PoiIndex index;
  index.insert({at_screen(v, "a", "Anchor Park", "park", 100, 100), at_screen(v, "in", "In", "gym", 100 + diag * 1.4, 100),
                at_screen(v, "out", "Out", "gym", 100, 100 + diag * 1.6)});
  EXPECT_EQ(resolve("What is the gym near Anchor Park", index, v).matches, std::vector<std::string>{"in"});
  EXPECT_EQ(resolve("What is the gym next to the park", index, v).matches, std::vector<std::string>{"in"});
}

TEST(Resolve, AnchorNotFound) {
  const auto index = fixture_index();
  const auto a = resolve("What is the cafe below the stadium", index, kLakeView);
  EXPECT_EQ(a.status, ResolutionStatus::AnchorNotFound);
  EXPECT_TRUE(a.matches.empty());
  EXPECT_FALSE(a.explanation.empty());
}

TEST(Resolve, TranslationInvarianceAndReplay) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> px(0.0, 640.0);
  const char* cats[] = {"cafe", "park", "lake", "cinema"};
  const char* queries[] = {"What is the cafe at the top left?", "What is the park on the right?", "What is the lake below the cinema?",
                           "What is the cafe near the park?", "What is the park left of the lake", "What is the lake in the center"};
  int matched = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const Viewport a{GeoPoint::make(47.6, -122.3), 16, 640, 640};
    const Viewport b{GeoPoint::make(-20.0 + trial, 30.0 + trial), 16, 640, 640};
    std::vector<Poi> pa, pb;
    for (int i = 0; i < 12; ++i) {
      const double x = px(rng), y = px(rng);
      const std::string cat = cats[rng() % 4], id = "p" + std::to_string(i);
      pa.push_back(at_screen(a, id, "Spot " + id, cat, x, y));
      pb.push_back(at_screen(b, id, "Spot " + id, cat, x, y));
    }
    PoiIndex ia, ib;
    ia.insert(pa);
    ib.insert(pb);
    const auto ga = viewport_to_grid(a, 3, 3);
    for (const char* q : queries) {
      const auto ra = resolve(q, ia, a), rb = resolve(q, ib, b);
      ASSERT_EQ(ra.matches.empty() ? "" : ra.matches[0], rb.matches.empty() ? "" : rb.matches[0]) << q;
      ASSERT_EQ(ra.status, rb.status);
      if (!ra.matches.empty()) {
        ++matched;
        ASSERT_FALSE(ra.explanation.empty());
      }
      ASSERT_EQ(replay(ra, parse_query(q, lex()), ga, ia), ra.matches) << q;
    }
  }
  EXPECT_GT(matched, 100);
}
