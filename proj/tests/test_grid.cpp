#include <map>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "geoground/grid.hpp"

using namespace geoground;

namespace {

Viewport bellevue_view(int w = 768, int h = 768) { return Viewport{GeoPoint::make(47.625, -122.15), 15, w, h}; }

std::set<CellRef> as_set(const std::vector<CellRef>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST(Grid, SingleCellCoversViewport) {
  const auto v = bellevue_view(800, 600);
  const auto g = viewport_to_grid(v, 1, 1);
  ASSERT_EQ(g.cells().size(), 1u);
  EXPECT_EQ(g.cells()[0].px_bbox, (PixelRect{0, 0, 800, 600}));
  const auto nw = g.from_screen({0, 0}), se = g.from_screen({800, 600});
  EXPECT_EQ(g.cells()[0].geo_bbox, (BoundingBox{se.lat, nw.lon, nw.lat, se.lon}));
  EXPECT_EQ(g.extent(), g.cells()[0].geo_bbox);
}

TEST(Grid, CenterCellIsCenteredOnSquareViewport) {
  const auto v = bellevue_view();
  const auto g = viewport_to_grid(v, 3, 3);
  const auto c = g.cell_geo_center({1, 1});
  EXPECT_NEAR(c.lat, v.center.lat, 1e-9);
  EXPECT_NEAR(c.lon, v.center.lon, 1e-9);
}

TEST(Grid, PixelWidthsPartitionTheViewport) {
  for (int w : {768, 770, 771, 1001}) {
    const auto g = viewport_to_grid(bellevue_view(w, 641), 4, 4);
    int sum = 0, lo = w, hi = 0;
    for (int c = 0; c < 4; ++c) {
      const int cw = g.cell(0, c).px_bbox.width();
      sum += cw;
      lo = std::min(lo, cw);
      hi = std::max(hi, cw);
    }
    EXPECT_EQ(sum, w);
    EXPECT_LE(hi - lo, 1);
  }
}

TEST(Grid, CellsTileTheExtentWithoutGaps) {
  const auto g = viewport_to_grid(bellevue_view(900, 500), 5, 7);
  ASSERT_EQ(g.cells().size(), 35u);
  for (int r = 0; r < 5; ++r) {
    for (int c = 0; c < 7; ++c) {
      const auto& cell = g.cell(r, c);
      EXPECT_EQ(cell.row, r);
      EXPECT_EQ(cell.col, c);
      if (c + 1 < 7) {
        EXPECT_EQ(cell.geo_bbox.east, g.cell(r, c + 1).geo_bbox.west);
        EXPECT_EQ(cell.px_bbox.right, g.cell(r, c + 1).px_bbox.left);
      }
      if (r + 1 < 5) {
        EXPECT_EQ(cell.geo_bbox.south, g.cell(r + 1, c).geo_bbox.north);
      }
    }
  }
  // (0,0) is the north-west cell
  EXPECT_GT(g.cell(0, 0).geo_bbox.north, g.cell(4, 0).geo_bbox.north);
  EXPECT_LT(g.cell(0, 0).geo_bbox.west, g.cell(0, 6).geo_bbox.west);
}

TEST(Grid, OutOfProjectionViewports) {
  for (const auto& v : {Viewport{GeoPoint::make(85.04, 0), 2, 768, 768}, Viewport{GeoPoint::make(88, 0), 10, 10, 10},
                        Viewport{GeoPoint::make(0, 0), 23, 10, 10}, Viewport{GeoPoint::make(0, 0), 0, 512, 512}}) {
    try {
      viewport_to_grid(v, 3, 3);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::ViewportOutOfProjection);
    }
  }
  EXPECT_THROW(viewport_to_grid(bellevue_view(), 0, 3), Error);
}

TEST(Grid, AssignExamples) {
  const auto v = bellevue_view();
  const auto g = viewport_to_grid(v, 3, 3);
  std::vector<Poi> pois{{"center", "C", "park", v.center}, {"far", "F", "park", GeoPoint::make(48.5, -121.0)}};
  const auto a = assign_entities(g, pois);
  ASSERT_EQ(a.size(), 9u);
  EXPECT_EQ(a[4].cell, (CellRef{1, 1}));
  EXPECT_EQ(a[4].entities, std::vector<std::string>{"center"});
  std::size_t total = 0;
  for (const auto& c : a) total += c.entities.size();
  EXPECT_EQ(total, 1u);
}

TEST(Grid, EdgePointsGoToTheSmallerCell) {
  // at zoom 1 a 256 px view centred on (0,0) has its interior grid corner
  // exactly on (0,0)
  const auto g = viewport_to_grid(Viewport{{0, 0}, 1, 256, 256}, 2, 2);
  const auto a = assign_entities(g, std::vector<Poi>{{"corner", "K", "park", {0, 0}}, {"edge", "E", "park", {0, 30}}});
  EXPECT_EQ(a[0].entities, std::vector<std::string>{"corner"});
  EXPECT_EQ(a[1].entities, std::vector<std::string>{"edge"});
  EXPECT_EQ(g.cell_at({128, 128}), (CellRef{0, 0}));
  EXPECT_EQ(g.cell_at({128, 129}), (CellRef{1, 0}));
}

TEST(Grid, PartitionAndPixelConsistency) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> lat(47.60, 47.65), lon(-122.19, -122.11);
  for (int trial = 0; trial < 30; ++trial) {
    const int rows = 1 + static_cast<int>(rng() % 6), cols = 1 + static_cast<int>(rng() % 6);
    const auto g = viewport_to_grid(bellevue_view(500 + static_cast<int>(rng() % 500), 400 + static_cast<int>(rng() % 400)), rows, cols);
    std::vector<Poi> pois;
    for (int i = 0; i < 200; ++i) pois.push_back({"p" + std::to_string(i), "P", "park", GeoPoint::make(lat(rng), lon(rng))});
    const auto a = assign_entities(g, pois);
    std::map<std::string, CellRef> where;
    for (const auto& c : a)
      for (const auto& id : c.entities) ASSERT_TRUE(where.emplace(id, c.cell).second) << id << " assigned twice";
    for (const auto& p : pois) {
      const auto s = g.to_screen(p.location);
      const auto px = project_mercator(p.location, g.viewport().zoom);
      ASSERT_EQ(s.x, px.x - g.origin().x);
      const auto expected = g.cell_at(s);
      if (!expected) {
        ASSERT_EQ(where.count(p.id), 0u);
        continue;
      }
      ASSERT_EQ(where.at(p.id), *expected);
      const auto& r = g.cell(*expected).px_bbox;
      ASSERT_TRUE(s.x >= r.left && s.x <= r.right && s.y >= r.top && s.y <= r.bottom);
    }
  }
}

TEST(Grid, AssignFromIndexMatchesDirectAssignment) {
  PoiIndex index;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> lat(47.58, 47.67), lon(-122.25, -122.05);
  std::vector<Poi> pois;
  for (int i = 0; i < 300; ++i) pois.push_back({"p" + std::to_string(i), "P", "park", GeoPoint::make(lat(rng), lon(rng))});
  index.insert(pois);
  const auto g = viewport_to_grid(bellevue_view(), 3, 3);
  const auto a = assign_from_index(g, index);
  const auto b = assign_entities(g, pois);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].entities, b[i].entities);
}

TEST(Region, Examples) {
  const auto g3 = viewport_to_grid(bellevue_view(), 3, 3);
  EXPECT_EQ(resolve_region("top right", g3), (std::vector<CellRef>{{0, 2}}));
  EXPECT_EQ(resolve_region("center", g3), (std::vector<CellRef>{{1, 1}}));
  const auto g4 = viewport_to_grid(bellevue_view(), 4, 4);
  EXPECT_EQ(resolve_region("top", g4), (std::vector<CellRef>{{0, 0}, {0, 1}, {0, 2}, {0, 3}}));
  try {
    resolve_region("upper middle-ish", g3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownRegion);
  }
}

TEST(Region, MiddleBandAbsorbsRemainder) {
  EXPECT_EQ(as_set(resolve_region(Region::Center, 5, 4)), (std::set<CellRef>{{1, 1}, {1, 2}, {2, 1}, {2, 2}, {3, 1}, {3, 2}}));
  EXPECT_EQ(resolve_region(Region::BottomRight, 5, 4), (std::vector<CellRef>{{4, 3}}));
  EXPECT_EQ(resolve_region(Region::Left, 4, 7).size(), 8u);
}

TEST(Region, ValidNonEmptyAndTranslationInvariant) {
  for (int rows = 1; rows <= 8; ++rows) {
    for (int cols = 1; cols <= 8; ++cols) {
      const auto a = viewport_to_grid(bellevue_view(), rows, cols);
      const auto b = viewport_to_grid(Viewport{GeoPoint::make(-33.86, 151.2), 12, 768, 768}, rows, cols);
      for (Region r : kAllRegions) {
        const auto cells = resolve_region(to_string(r), a);
        ASSERT_FALSE(cells.empty());
        for (const auto& c : cells) ASSERT_TRUE(c.row >= 0 && c.row < rows && c.col >= 0 && c.col < cols);
        ASSERT_EQ(cells, resolve_region(to_string(r), b));
      }
    }
  }
}

TEST(Region, TokenSpellings) {
  const auto g = viewport_to_grid(bellevue_view(), 3, 3);
  for (const char* t : {"top-right", "Top Right", "top_right", "upper right"}) {
    if (!parse_region(t)) continue;  // spelling variants beyond the nine tokens are the parser's job
    EXPECT_EQ(resolve_region(t, g), (std::vector<CellRef>{{0, 2}})) << t;
  }
  EXPECT_TRUE(parse_region("top-right").has_value());
}
