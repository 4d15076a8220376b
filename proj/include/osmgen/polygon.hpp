/* Copyright 2026 The osmgen Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "osmgen/error.hpp"
#include "osmgen/raster.hpp"

namespace osmgen {

struct BoundingBox {
  int min_row = 0;
  int min_col = 0;
  int max_row = -1;
  int max_col = -1;

  bool overlaps(const BoundingBox& o) const {
    return min_row <= o.max_row && o.min_row <= max_row && min_col <= o.max_col &&
           o.min_col <= max_col;
  }
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

/// A connected pixel region. Pixels are stored as sorted linear indices
/// (row * tile_width + col).
struct FeaturePolygon {
  int id = 0;
  std::string class_name;
  int tile_width = 0;
  int tile_height = 0;
  std::vector<std::uint32_t> pixels;
  BoundingBox bbox;

  std::size_t area_px() const { return pixels.size(); }
  int row_of(std::uint32_t p) const { return static_cast<int>(p / tile_width); }
  int col_of(std::uint32_t p) const { return static_cast<int>(p % tile_width); }
};

/// Builds a polygon from arbitrary (row, col) pixels; sorts and recomputes
/// the bounding box. Connectivity is not checked.
inline FeaturePolygon make_polygon(int id, std::string class_name, int tile_width, int tile_height,
                                   const std::vector<std::pair<int, int>>& cells) {
  FeaturePolygon p;
  p.id = id;
  p.class_name = std::move(class_name);
  p.tile_width = tile_width;
  p.tile_height = tile_height;
  p.bbox = {tile_height, tile_width, -1, -1};
  for (auto [r, c] : cells) {
    if (r < 0 || c < 0 || r >= tile_height || c >= tile_width) {
      throw Error(ErrorCode::kOutOfBounds, "polygon pixel outside tile");
    }
    p.pixels.push_back(static_cast<std::uint32_t>(r) * tile_width + c);
    p.bbox.min_row = std::min(p.bbox.min_row, r);
    p.bbox.min_col = std::min(p.bbox.min_col, c);
    p.bbox.max_row = std::max(p.bbox.max_row, r);
    p.bbox.max_col = std::max(p.bbox.max_col, c);
  }
  std::sort(p.pixels.begin(), p.pixels.end());
  p.pixels.erase(std::unique(p.pixels.begin(), p.pixels.end()), p.pixels.end());
  return p;
}

enum class Connectivity { kFour = 4, kEight = 8 };

struct PolygonizeOptions {
  Connectivity connectivity = Connectivity::kEight;
  std::size_t min_area_px = 4;
};

/// Connected components of the mask's 1-pixels with area >= min_area_px,
/// ordered by (bbox.min_row, bbox.min_col) and numbered from 0 in that order.
inline std::vector<FeaturePolygon> polygonize(const FeatureMask& mask,
                                              const PolygonizeOptions& opts = {}) {
  const int w = mask.width();
  const int h = mask.height();
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(w) * h, 0);
  std::vector<FeaturePolygon> out;
  std::vector<std::uint32_t> stack;

  static constexpr int kDr[8] = {-1, 1, 0, 0, -1, -1, 1, 1};
  static constexpr int kDc[8] = {0, 0, -1, 1, -1, 1, -1, 1};
  const int n_neighbors = opts.connectivity == Connectivity::kFour ? 4 : 8;

  for (std::uint32_t start = 0; start < seen.size(); ++start) {
    if (seen[start] || !mask.get_index(start)) continue;
    FeaturePolygon poly;
    poly.class_name = mask.class_name();
    poly.tile_width = w;
    poly.tile_height = h;
    poly.bbox = {h, w, -1, -1};
    seen[start] = 1;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::uint32_t p = stack.back();
      stack.pop_back();
      poly.pixels.push_back(p);
      const int r = static_cast<int>(p / w), c = static_cast<int>(p % w);
      poly.bbox.min_row = std::min(poly.bbox.min_row, r);
      poly.bbox.min_col = std::min(poly.bbox.min_col, c);
      poly.bbox.max_row = std::max(poly.bbox.max_row, r);
      poly.bbox.max_col = std::max(poly.bbox.max_col, c);
      for (int k = 0; k < n_neighbors; ++k) {
        const int nr = r + kDr[k], nc = c + kDc[k];
        if (nr < 0 || nc < 0 || nr >= h || nc >= w) continue;
        const std::uint32_t q = static_cast<std::uint32_t>(nr) * w + nc;
        if (!seen[q] && mask.get_index(q)) {
          seen[q] = 1;
          stack.push_back(q);
        }
      }
    }
    if (poly.pixels.size() < opts.min_area_px) continue;
    std::sort(poly.pixels.begin(), poly.pixels.end());
    out.push_back(std::move(poly));
  }
  // Components are discovered in order of their first pixel; re-sort by bbox
  // corner, falling back to the first pixel for equal corners.
  std::stable_sort(out.begin(), out.end(), [](const FeaturePolygon& a, const FeaturePolygon& b) {
    return std::tie(a.bbox.min_row, a.bbox.min_col, a.pixels.front()) <
           std::tie(b.bbox.min_row, b.bbox.min_col, b.pixels.front());
  });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].id = static_cast<int>(i);
  return out;
}

inline std::size_t intersection_size(const FeaturePolygon& a, const FeaturePolygon& b) {
  if (!a.bbox.overlaps(b.bbox)) return 0;
  std::size_t n = 0;
  auto i = a.pixels.begin(), j = b.pixels.begin();
  while (i != a.pixels.end() && j != b.pixels.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++n;
      ++i;
      ++j;
    }
  }
  return n;
}

/// Intersection over union of the two pixel sets. Two empty sets give 0.
inline double iou(const FeaturePolygon& a, const FeaturePolygon& b) {
  if (a.tile_width != b.tile_width || a.tile_height != b.tile_height) {
    throw Error(ErrorCode::kShapeMismatch, "IoU of polygons from different tile sizes");
  }
  const std::size_t inter = intersection_size(a, b);
  const std::size_t uni = a.pixels.size() + b.pixels.size() - inter;
  if (uni == 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

// ---------------------------------------------------------------------------
// Outline tracing for export

namespace detail {

using Vertex = std::pair<int, int>;  // (x, y) pixel-corner coordinates

// Boundary edges run with the region on their visual left (x right, y down).
// At pinch vertices (two diagonally touching pixels) the tracer crosses over
// to the diagonal pixel so that each 8-connected component yields one outer
// ring.
inline std::vector<std::vector<Vertex>> trace_rings(const FeaturePolygon& poly) {
  const int w = poly.tile_width;
  auto filled = [&](int x, int y) {
    if (x < 0 || y < 0 || x >= poly.tile_width || y >= poly.tile_height) return false;
    return std::binary_search(poly.pixels.begin(), poly.pixels.end(),
                              static_cast<std::uint32_t>(y) * w + x);
  };
  // Outgoing edges keyed by start vertex; each value is an end vertex.
  std::multimap<Vertex, Vertex> edges;
  for (auto p : poly.pixels) {
    const int x = static_cast<int>(p % w), y = static_cast<int>(p / w);
    if (!filled(x, y - 1)) edges.emplace(Vertex{x + 1, y}, Vertex{x, y});
    if (!filled(x, y + 1)) edges.emplace(Vertex{x, y + 1}, Vertex{x + 1, y + 1});
    if (!filled(x - 1, y)) edges.emplace(Vertex{x, y}, Vertex{x, y + 1});
    if (!filled(x + 1, y)) edges.emplace(Vertex{x + 1, y + 1}, Vertex{x + 1, y});
  }
  std::vector<std::vector<Vertex>> rings;
  while (!edges.empty()) {
    auto it = edges.begin();
    const Vertex origin = it->first;
    Vertex prev = it->first, cur = it->second;
    edges.erase(it);
    std::vector<Vertex> ring{origin};
    while (cur != origin) {
      ring.push_back(cur);
      auto [lo, hi] = edges.equal_range(cur);
      if (lo == hi) break;
      auto pick = lo;
      if (std::next(lo) != hi) {
        // Pinch vertex: cross to the diagonal pixel.
        const int dx = cur.first - prev.first, dy = cur.second - prev.second;
        for (auto e = lo; e != hi; ++e) {
          const int ex = e->second.first - cur.first, ey = e->second.second - cur.second;
          if (dx * ey - dy * ex > 0) {
            pick = e;
            break;
          }
        }
      }
      prev = cur;
      cur = pick->second;
      edges.erase(pick);
    }
    // Drop collinear vertices.
    std::vector<Vertex> simple;
    const std::size_t n = ring.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vertex& a = ring[(i + n - 1) % n];
      const Vertex& b = ring[i];
      const Vertex& c = ring[(i + 1) % n];
      const long cross = static_cast<long>(b.first - a.first) * (c.second - b.second) -
                         static_cast<long>(b.second - a.second) * (c.first - b.first);
      if (cross != 0) simple.push_back(b);
    }
    rings.push_back(std::move(simple));
  }
  return rings;
}

inline long twice_signed_area(const std::vector<Vertex>& ring) {
  long s = 0;
  for (std::size_t i = 0; i < ring.size(); ++i) {
    const auto& a = ring[i];
    const auto& b = ring[(i + 1) % ring.size()];
    s += static_cast<long>(a.first) * b.second - static_cast<long>(b.first) * a.second;
  }
  return s;
}

}  // namespace detail

/// Outer boundary of the polygon in pixel-corner coordinates, closed (first
/// vertex repeated). Holes are not represented.
inline std::vector<std::pair<int, int>> polygon_outline(const FeaturePolygon& poly) {
  auto rings = detail::trace_rings(poly);
  std::vector<detail::Vertex> best;
  long best_area = 0;
  for (auto& r : rings) {
    const long a = std::labs(detail::twice_signed_area(r));
    if (a > best_area) {
      best_area = a;
      best = std::move(r);
    }
  }
  if (!best.empty()) best.push_back(best.front());
  return best;
}

/// GeoJSON FeatureCollection in pixel space (x = column, y = row); each
/// feature carries class, id, area, bbox and the tile quadkey.
inline nlohmann::json polygons_to_geojson(const std::vector<FeaturePolygon>& polys,
                                          const QuadKey& tile_key = {}) {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& p : polys) {
    nlohmann::json ring = nlohmann::json::array();
    for (auto [x, y] : polygon_outline(p)) ring.push_back({x, y});
    features.push_back({
        {"type", "Feature"},
        {"geometry", {{"type", "Polygon"}, {"coordinates", nlohmann::json::array({ring})}}},
        {"properties",
         {{"id", p.id},
          {"class", p.class_name},
          {"area_px", p.area_px()},
          {"bbox", {p.bbox.min_row, p.bbox.min_col, p.bbox.max_row, p.bbox.max_col}},
          {"quadkey", quadkey_to_string(tile_key)}}},
    });
  }
  return {{"type", "FeatureCollection"},
          {"properties", {{"coordinate_space", "pixel"}, {"quadkey", quadkey_to_string(tile_key)}}},
          {"features", features}};
}

}  // namespace osmgen
