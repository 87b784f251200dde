#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "geoground/error.hpp"
#include "geoground/geo_index.hpp"
#include "geoground/geo_math.hpp"
#include "geoground/lexicon.hpp"

namespace geoground {

struct Viewport {
  GeoPoint center;
  int zoom = 15;
  int width_px = 768;
  int height_px = 768;

  friend bool operator==(const Viewport&, const Viewport&) = default;
};

// Screen-space position relative to the viewport's top-left corner.
struct ScreenPoint {
  double x = 0.0;
  double y = 0.0;
};

struct PixelRect {
  int left = 0;
  int top = 0;
  int right = 0;   // exclusive edge in pixel units
  int bottom = 0;

  int width() const { return right - left; }
  int height() const { return bottom - top; }
  friend bool operator==(const PixelRect&, const PixelRect&) = default;
};

struct CellRef {
  int row = 0;
  int col = 0;

  friend auto operator<=>(const CellRef&, const CellRef&) = default;
};

struct GridCell {
  int row = 0;
  int col = 0;
  BoundingBox geo_bbox;
  PixelRect px_bbox;
};

struct CellAssignment {
  CellRef cell;
  std::vector<std::string> entities;  // POI ids, ascending
};

enum class Region { TopLeft, Top, TopRight, Left, Center, Right, BottomLeft, Bottom, BottomRight };

inline constexpr std::string_view to_string(Region r) {
  switch (r) {
    case Region::TopLeft: return "top-left";
    case Region::Top: return "top";
    case Region::TopRight: return "top-right";
    case Region::Left: return "left";
    case Region::Center: return "center";
    case Region::Right: return "right";
    case Region::BottomLeft: return "bottom-left";
    case Region::Bottom: return "bottom";
    case Region::BottomRight: return "bottom-right";
  }
  return "center";
}

inline constexpr Region kAllRegions[] = {Region::TopLeft, Region::Top,        Region::TopRight,
                                         Region::Left,    Region::Center,     Region::Right,
                                         Region::BottomLeft, Region::Bottom,  Region::BottomRight};

// Accepts the nine lexicon tokens with '-' or ' ' separators.
inline std::optional<Region> parse_region(std::string_view token) {
  const auto t = normalize_phrase(token);
  for (Region r : kAllRegions) {
    if (normalize_phrase(to_string(r)) == t) return r;
  }
  return std::nullopt;
}

// The map view cut into rows x cols cells. Cell (0, 0) is the north-west
// corner; px_bbox values are screen pixels relative to the viewport.
class TileGrid {
 public:
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  const Viewport& viewport() const { return viewport_; }
  const std::vector<GridCell>& cells() const { return cells_; }
  const GridCell& cell(int row, int col) const { return cells_.at(static_cast<std::size_t>(row * cols_ + col)); }
  const GridCell& cell(CellRef ref) const { return cell(ref.row, ref.col); }

  // World pixel of the viewport's top-left corner.
  PixelCoord origin() const { return origin_; }

  BoundingBox extent() const {
    return BoundingBox{cells_.back().geo_bbox.south, cells_.front().geo_bbox.west, cells_.front().geo_bbox.north,
                       cells_.back().geo_bbox.east};
  }

  ScreenPoint to_screen(const GeoPoint& p) const {
    const auto px = project_mercator(p, viewport_.zoom);
    return ScreenPoint{px.x - origin_.x, px.y - origin_.y};
  }

  GeoPoint from_screen(ScreenPoint s) const {
    return unproject_mercator(PixelCoord{origin_.x + s.x, origin_.y + s.y, viewport_.zoom});
  }

  bool in_view(ScreenPoint s) const {
    return s.x >= 0.0 && s.x <= viewport_.width_px && s.y >= 0.0 && s.y <= viewport_.height_px;
  }

  // Cell holding a screen point; points on a shared edge go to the cell with
  // the smaller (row, col).
  std::optional<CellRef> cell_at(ScreenPoint s) const {
    if (!in_view(s)) return std::nullopt;
    int col = 0;
    while (col < cols_ - 1 && s.x > col_edges_[static_cast<std::size_t>(col + 1)]) ++col;
    int row = 0;
    while (row < rows_ - 1 && s.y > row_edges_[static_cast<std::size_t>(row + 1)]) ++row;
    return CellRef{row, col};
  }

  ScreenPoint cell_center(CellRef ref) const {
    const auto& r = cell(ref).px_bbox;
    return ScreenPoint{(r.left + r.right) / 2.0, (r.top + r.bottom) / 2.0};
  }

  GeoPoint cell_geo_center(CellRef ref) const { return from_screen(cell_center(ref)); }

  double cell_diagonal_px() const {
    const double w = static_cast<double>(viewport_.width_px) / cols_;
    const double h = static_cast<double>(viewport_.height_px) / rows_;
    return std::hypot(w, h);
  }

 private:
  friend TileGrid viewport_to_grid(const Viewport& v, int rows, int cols);

  Viewport viewport_;
  PixelCoord origin_;
  int rows_ = 1;
  int cols_ = 1;
  std::vector<int> col_edges_;
  std::vector<int> row_edges_;
  std::vector<GridCell> cells_;
};

namespace detail {

// Boundary i of an n-way split of `length` pixels, rounded half up. Widths
// differ by at most one pixel and sum to `length`.
inline int split_edge(int length, int i, int n) {
  return static_cast<int>((2LL * i * length + n) / (2LL * n));
}

}  // namespace detail

// Request-size guards; a screenshot grid never needs more.
inline constexpr int kMaxViewportPx = 16384;
inline constexpr int kMaxGridCells = 4096;

inline TileGrid viewport_to_grid(const Viewport& v, int rows, int cols) {
  if (rows < 1 || cols < 1) fail(ErrorCode::InvalidArgument, "grid needs at least one row and column");
  if (v.width_px <= 0 || v.height_px <= 0) fail(ErrorCode::InvalidArgument, "viewport dimensions must be positive");
  if (v.width_px > kMaxViewportPx || v.height_px > kMaxViewportPx)
    fail(ErrorCode::InvalidArgument, "viewport is larger than " + std::to_string(kMaxViewportPx) + " px");
  if (static_cast<long long>(rows) * cols > kMaxGridCells || rows > v.height_px || cols > v.width_px)
    fail(ErrorCode::InvalidArgument, "grid has more cells than allowed or than the viewport has pixels");
  if (v.zoom < 0 || v.zoom > kMaxZoom) fail(ErrorCode::ViewportOutOfProjection, "viewport zoom out of range");
  if (std::abs(v.center.lat) > kMercatorLatLimit)
    fail(ErrorCode::ViewportOutOfProjection, "viewport center outside Web-Mercator latitude range");
  const auto center = project_mercator(v.center, v.zoom);
  const double world = world_size_px(v.zoom);
  const PixelCoord origin{center.x - v.width_px / 2.0, center.y - v.height_px / 2.0, v.zoom};
  if (origin.x < 0.0 || origin.y < 0.0 || origin.x + v.width_px > world || origin.y + v.height_px > world)
    fail(ErrorCode::ViewportOutOfProjection, "viewport extends beyond the projected world");

  TileGrid g;
  g.viewport_ = v;
  g.origin_ = origin;
  g.rows_ = rows;
  g.cols_ = cols;
  for (int c = 0; c <= cols; ++c) g.col_edges_.push_back(detail::split_edge(v.width_px, c, cols));
  for (int r = 0; r <= rows; ++r) g.row_edges_.push_back(detail::split_edge(v.height_px, r, rows));
  g.cells_.reserve(static_cast<std::size_t>(rows * cols));
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      GridCell cell;
      cell.row = r;
      cell.col = c;
      cell.px_bbox = PixelRect{g.col_edges_[static_cast<std::size_t>(c)], g.row_edges_[static_cast<std::size_t>(r)],
                               g.col_edges_[static_cast<std::size_t>(c + 1)],
                               g.row_edges_[static_cast<std::size_t>(r + 1)]};
      const auto nw = g.from_screen(ScreenPoint{static_cast<double>(cell.px_bbox.left), static_cast<double>(cell.px_bbox.top)});
      const auto se = g.from_screen(ScreenPoint{static_cast<double>(cell.px_bbox.right), static_cast<double>(cell.px_bbox.bottom)});
      // east edge at exactly +180 folds to -180; keep it on the east side
      const double east = se.lon < nw.lon ? se.lon + 360.0 : se.lon;
      cell.geo_bbox = BoundingBox{se.lat, nw.lon, nw.lat, east};
      g.cells_.push_back(cell);
    }
  }
  return g;
}

// Places every in-view POI into exactly one cell. Assignment happens in
// screen space so it agrees with each POI's projected pixel.
inline std::vector<CellAssignment> assign_entities(const TileGrid& grid, const std::vector<const Poi*>& pois) {
  std::vector<CellAssignment> out(static_cast<std::size_t>(grid.rows() * grid.cols()));
  for (int r = 0; r < grid.rows(); ++r)
    for (int c = 0; c < grid.cols(); ++c) out[static_cast<std::size_t>(r * grid.cols() + c)].cell = CellRef{r, c};
  for (const Poi* p : pois) {
    if (std::abs(p->location.lat) > kMercatorLatLimit) continue;
    const auto cell = grid.cell_at(grid.to_screen(p->location));
    if (!cell) continue;
    out[static_cast<std::size_t>(cell->row * grid.cols() + cell->col)].entities.push_back(p->id);
  }
  for (auto& a : out) std::sort(a.entities.begin(), a.entities.end());
  return out;
}

inline std::vector<CellAssignment> assign_entities(const TileGrid& grid, const std::vector<Poi>& pois) {
  std::vector<const Poi*> ptrs;
  ptrs.reserve(pois.size());
  for (const auto& p : pois) ptrs.push_back(&p);
  return assign_entities(grid, ptrs);
}

// Candidate POIs for a grid: index hits in the grid's extent.
inline std::vector<CellAssignment> assign_from_index(const TileGrid& grid, const PoiIndex& index) {
  return assign_entities(grid, index.query_bbox(grid.extent()));
}

namespace detail {

// Split n rows (or cols) into [first, middle, last] bands. The middle band
// absorbs the remainder; grids thinner than three fall back to the first
// and last line for the outer bands and everything for the middle.
inline std::pair<int, int> band(int n, int which) {
  if (n < 3) {
    if (which == 0) return {0, 1};
    if (which == 2) return {n - 1, n};
    return {0, n};
  }
  const int third = n / 3;
  if (which == 0) return {0, third};
  if (which == 2) return {n - third, n};
  return {third, n - third};
}

}  // namespace detail

inline std::vector<CellRef> resolve_region(Region region, int rows, int cols) {
  int vband = 1, hband = 1;  // 0 = top/left, 1 = middle/whole, 2 = bottom/right
  bool whole_rows = false, whole_cols = false;
  switch (region) {
    case Region::TopLeft: vband = 0; hband = 0; break;
    case Region::Top: vband = 0; whole_cols = true; break;
    case Region::TopRight: vband = 0; hband = 2; break;
    case Region::Left: hband = 0; whole_rows = true; break;
    case Region::Center: break;
    case Region::Right: hband = 2; whole_rows = true; break;
    case Region::BottomLeft: vband = 2; hband = 0; break;
    case Region::Bottom: vband = 2; whole_cols = true; break;
    case Region::BottomRight: vband = 2; hband = 2; break;
  }
  const auto [r0, r1] = whole_rows ? std::pair{0, rows} : detail::band(rows, vband);
  const auto [c0, c1] = whole_cols ? std::pair{0, cols} : detail::band(cols, hband);
  std::vector<CellRef> out;
  for (int r = r0; r < r1; ++r)
    for (int c = c0; c < c1; ++c) out.push_back(CellRef{r, c});
  return out;
}

inline std::vector<CellRef> resolve_region(std::string_view token, const TileGrid& grid) {
  const auto region = parse_region(token);
  if (!region) fail(ErrorCode::UnknownRegion, "unknown region '" + std::string(token) + "'");
  return resolve_region(*region, grid.rows(), grid.cols());
}

}  // namespace geoground
