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

// Synthetic paired corpora: an aerial-like image tile, the rasterized map
// tile with OSM-style incompleteness (label dropout, positional jitter) and
// the full truth bookkeeping.

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "osmgen/error.hpp"
#include "osmgen/io.hpp"
#include "osmgen/polygon.hpp"
#include "osmgen/raster.hpp"
#include "osmgen/util.hpp"

namespace osmgen {

enum class FootprintShape { kRect, kPolyline };

struct FeatureSpec {
  std::string class_name;
  FootprintShape shape = FootprintShape::kRect;
  // kRect: top-left corner and size in pixels.
  int row = 0;
  int col = 0;
  int rows = 0;
  int cols = 0;
  // kPolyline: vertices as (row, col) in pixel-corner coordinates, stroked
  // with the given width; a pixel belongs if its centre is within width/2.
  std::vector<std::pair<double, double>> points;
  double width = 1.0;
  int z_order = 0;
  bool omit = false;  // always left out of the map, regardless of dropout

  static FeatureSpec rect(std::string cls, int row, int col, int rows, int cols, int z) {
    FeatureSpec f;
    f.class_name = std::move(cls);
    f.row = row;
    f.col = col;
    f.rows = rows;
    f.cols = cols;
    f.z_order = z;
    return f;
  }
  static FeatureSpec polyline(std::string cls, std::vector<std::pair<double, double>> pts,
                              double width, int z) {
    FeatureSpec f;
    f.class_name = std::move(cls);
    f.shape = FootprintShape::kPolyline;
    f.points = std::move(pts);
    f.width = width;
    f.z_order = z;
    return f;
  }
};

struct SceneSpec {
  std::uint64_t seed = 0;
  int width = kDefaultTileSize;
  int height = kDefaultTileSize;
  std::vector<FeatureSpec> features;
  double label_dropout = 0.0;  // probability a feature is missing from the map
  int jitter = 0;              // max label offset in pixels, per axis
  std::vector<std::string> dropout_classes{"house"};
  QuadKey key;
  double ground_resolution = 1.0;

  void validate() const {
    if (width <= 0 || height <= 0) throw Error(ErrorCode::kInvalidArgument, "scene size must be positive");
    if (!(label_dropout >= 0.0 && label_dropout <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "label dropout must lie in [0, 1]");
    }
    if (jitter < 0) throw Error(ErrorCode::kInvalidArgument, "jitter must be >= 0");
    for (const auto& f : features) {
      if (f.shape == FootprintShape::kRect) {
        if (f.rows <= 0 || f.cols <= 0 || f.row < 0 || f.col < 0 || f.row + f.rows > height ||
            f.col + f.cols > width) {
          throw Error(ErrorCode::kOutOfBounds, "rectangle footprint of '" + f.class_name + "' leaves the tile");
        }
      } else {
        if (f.points.size() < 2 || !(f.width > 0.0)) {
          throw Error(ErrorCode::kInvalidArgument, "polyline needs >= 2 points and positive width");
        }
        for (auto [r, c] : f.points) {
          if (r < 0 || c < 0 || r > height || c > width) {
            throw Error(ErrorCode::kOutOfBounds, "polyline vertex of '" + f.class_name + "' leaves the tile");
          }
        }
      }
    }
  }
};

/// Pixels covered by a feature shifted by (dr, dc), clipped to the tile.
inline std::vector<std::pair<int, int>> footprint_cells(const FeatureSpec& f, int width, int height,
                                                        int dr = 0, int dc = 0) {
  std::vector<std::pair<int, int>> cells;
  auto push = [&](int r, int c) {
    r += dr;
    c += dc;
    if (r >= 0 && c >= 0 && r < height && c < width) cells.emplace_back(r, c);
  };
  if (f.shape == FootprintShape::kRect) {
    for (int r = f.row; r < f.row + f.rows; ++r)
      for (int c = f.col; c < f.col + f.cols; ++c) push(r, c);
    return cells;
  }
  const double half = f.width / 2.0;
  double rmin = f.points[0].first, rmax = rmin, cmin = f.points[0].second, cmax = cmin;
  for (auto [r, c] : f.points) {
    rmin = std::min(rmin, r);
    rmax = std::max(rmax, r);
    cmin = std::min(cmin, c);
    cmax = std::max(cmax, c);
  }
  const int r0 = std::max(0, static_cast<int>(std::floor(rmin - half)));
  const int r1 = std::min(height - 1, static_cast<int>(std::ceil(rmax + half)));
  const int c0 = std::max(0, static_cast<int>(std::floor(cmin - half)));
  const int c1 = std::min(width - 1, static_cast<int>(std::ceil(cmax + half)));
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      const double pr = r + 0.5, pc = c + 0.5;
      bool inside = false;
      for (std::size_t s = 0; s + 1 < f.points.size() && !inside; ++s) {
        const auto [ar, ac] = f.points[s];
        const auto [br, bc] = f.points[s + 1];
        const double vr = br - ar, vc = bc - ac;
        const double len2 = vr * vr + vc * vc;
        double t = len2 > 0 ? ((pr - ar) * vr + (pc - ac) * vc) / len2 : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        const double qr = ar + t * vr - pr, qc = ac + t * vc - pc;
        inside = qr * qr + qc * qc <= half * half;
      }
      if (inside) push(r, c);
    }
  }
  return cells;
}

struct TruthFeature {
  std::size_t index = 0;
  std::string class_name;
  int z_order = 0;
  bool dropped = false;
  int jitter_rows = 0;
  int jitter_cols = 0;
  FeaturePolygon footprint;  // unjittered own pixels, before compositing
};

struct RenderedPair {
  RasterTile image;
  RasterTile map;        // labels as mapped: dropout and jitter applied
  RasterTile truth_map;  // every feature at its true position
  std::vector<TruthFeature> truth;
};

namespace detail {

inline ColorRGB image_shade(const std::string& cls) {
  static const std::map<std::string, ColorRGB> kShades = {
      {"house", {156, 92, 78}},
      {"road", {128, 126, 122}},
      {"main_road", {146, 142, 132}},
      {"highway", {104, 104, 110}},
  };
  const auto it = kShades.find(cls);
  return it == kShades.end() ? ColorRGB{120, 120, 120} : it->second;
}

inline std::uint8_t noisy(std::uint8_t base, int amplitude, Rng& rng) {
  const int v = static_cast<int>(base) +
                static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(2 * amplitude + 1))) - amplitude;
  return static_cast<std::uint8_t>(std::clamp(v, 0, 255));
}

}  // namespace detail

/// Rasterizes the scene. Overlaps resolve to the feature with the highest
/// z-order (later features win ties). Per feature, one dropout draw and,
/// when jitter > 0, two offset draws are taken from the seeded stream in
/// feature order.
inline RenderedPair render_pair(const SceneSpec& spec, const Palette& palette) {
  spec.validate();
  Rng label_rng(derive_seed(spec.seed, 1));
  Rng texture_rng(derive_seed(spec.seed, 2));

  RenderedPair out;
  out.truth.reserve(spec.features.size());
  for (std::size_t i = 0; i < spec.features.size(); ++i) {
    const FeatureSpec& f = spec.features[i];
    TruthFeature t;
    t.index = i;
    t.class_name = f.class_name;
    t.z_order = f.z_order;
    const bool may_drop = std::find(spec.dropout_classes.begin(), spec.dropout_classes.end(),
                                    f.class_name) != spec.dropout_classes.end();
    const bool drawn_drop = uniform_unit(label_rng) < spec.label_dropout;
    t.dropped = f.omit || (may_drop && drawn_drop);
    if (spec.jitter > 0) {
      const auto span = static_cast<std::uint64_t>(2 * spec.jitter + 1);
      t.jitter_rows = static_cast<int>(uniform_index(label_rng, span)) - spec.jitter;
      t.jitter_cols = static_cast<int>(uniform_index(label_rng, span)) - spec.jitter;
    }
    t.footprint = make_polygon(static_cast<int>(i), f.class_name, spec.width, spec.height,
                               footprint_cells(f, spec.width, spec.height));
    out.truth.push_back(std::move(t));
  }

  std::vector<std::size_t> order(spec.features.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return spec.features[a].z_order < spec.features[b].z_order;
  });

  out.map = RasterTile::filled(spec.width, spec.height, palette.background, spec.key, spec.ground_resolution);
  out.truth_map = out.map;
  for (std::size_t i : order) {
    const FeatureSpec& f = spec.features[i];
    const TruthFeature& t = out.truth[i];
    const ColorRGB color = palette.at(f.class_name).colors.front();
    for (auto [r, c] : footprint_cells(f, spec.width, spec.height)) out.truth_map.set_rgb(r, c, color);
    if (t.dropped) continue;
    for (auto [r, c] : footprint_cells(f, spec.width, spec.height, t.jitter_rows, t.jitter_cols)) {
      out.map.set_rgb(r, c, color);
    }
  }

  // Image: noisy ground plus shaded features, composited like the truth map.
  out.image = RasterTile(spec.width, spec.height, 3, spec.key, spec.ground_resolution);
  for (int r = 0; r < spec.height; ++r)
    for (int c = 0; c < spec.width; ++c) {
      out.image.set_rgb(r, c, {detail::noisy(98, 18, texture_rng), detail::noisy(112, 18, texture_rng),
                               detail::noisy(74, 14, texture_rng)});
    }
  for (std::size_t i : order) {
    const FeatureSpec& f = spec.features[i];
    const ColorRGB shade = detail::image_shade(f.class_name);
    for (auto [r, c] : footprint_cells(f, spec.width, spec.height)) {
      out.image.set_rgb(r, c, {detail::noisy(shade.r, 8, texture_rng), detail::noisy(shade.g, 8, texture_rng),
                               detail::noisy(shade.b, 8, texture_rng)});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scene layouts and corpora

/// Random street-grid scenes. The tile is divided into square cells; some
/// cell rows carry roads, some cell columns highways (crossing over roads),
/// and houses sit inside the remaining cells with a margin so that no two
/// houses touch.
struct SceneDistribution {
  std::uint64_t seed = 0;
  int tile_size = kDefaultTileSize;
  int cell_px = 16;
  int house_margin_px = 3;
  int houses_min = 40;
  int houses_max = 120;
  int house_min_px = 4;
  int house_max_px = 10;
  int roads = 2;
  int highways = 1;
  double road_width = 4.0;
  double highway_width = 6.0;
  double label_dropout = 0.0;
  int jitter = 0;
  double ground_resolution = 1.0;
  int key_level = 18;
  /// When set, the corpus holds round(target_density * area) houses in
  /// total, spread as evenly as possible over the tiles.
  std::optional<double> target_density;

  int cells_per_side() const { return tile_size / cell_px; }
  int house_capacity() const {
    return std::max(0, cells_per_side() - roads) * std::max(0, cells_per_side() - highways);
  }
  void validate() const {
    if (tile_size <= 0 || cell_px <= 0 || cell_px > tile_size) {
      throw Error(ErrorCode::kInvalidArgument, "bad tile or cell size");
    }
    if (house_min_px < 1 || house_max_px < house_min_px ||
        house_max_px > cell_px - 2 * house_margin_px) {
      throw Error(ErrorCode::kInvalidArgument, "house size range does not fit the cell");
    }
    if (houses_min < 0 || houses_max < houses_min) throw Error(ErrorCode::kInvalidArgument, "bad house count range");
    if (roads < 0 || highways < 0 || roads > cells_per_side() || highways > cells_per_side()) {
      throw Error(ErrorCode::kInvalidArgument, "bad road or highway count");
    }
    if (!target_density && houses_max > house_capacity()) {
      throw Error(ErrorCode::kInvalidArgument, "houses_max exceeds the tile capacity of " +
                                                   std::to_string(house_capacity()) + " houses");
    }
    if (target_density && !(*target_density >= 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "target density must be >= 0");
    }
    if (!(label_dropout >= 0.0 && label_dropout <= 1.0) || jitter < 0 || !(ground_resolution > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "bad dropout, jitter or ground resolution");
    }
  }
};

/// Quadkey used for tile i of a corpus.
inline QuadKey corpus_tile_key(int level, std::size_t i) {
  const std::uint64_t base = level > 0 ? (std::uint64_t{1} << (level - 1)) : 0;
  return quadkey_from_tile(base + i, base, level);
}

/// Scene for tile `index`; `houses` overrides the drawn house count.
inline SceneSpec random_scene(const SceneDistribution& dist, std::size_t index,
                              std::optional<int> houses = std::nullopt) {
  dist.validate();
  SceneSpec s;
  s.seed = derive_seed(dist.seed, index + 1);
  s.width = s.height = dist.tile_size;
  s.label_dropout = dist.label_dropout;
  s.jitter = dist.jitter;
  s.ground_resolution = dist.ground_resolution;
  s.key = corpus_tile_key(dist.key_level, index);

  Rng rng(derive_seed(s.seed, 10));
  const int n = dist.cells_per_side();
  auto pick_distinct = [&](int count) {
    std::vector<int> all(n);
    std::iota(all.begin(), all.end(), 0);
    for (int i = n - 1; i > 0; --i) std::swap(all[i], all[uniform_index(rng, static_cast<std::uint64_t>(i + 1))]);
    all.resize(count);
    std::sort(all.begin(), all.end());
    return all;
  };
  const std::vector<int> road_rows = pick_distinct(dist.roads);
  const std::vector<int> highway_cols = pick_distinct(dist.highways);
  const double extent = static_cast<double>(dist.tile_size);
  for (int r : road_rows) {
    const double y = r * dist.cell_px + dist.cell_px / 2.0;
    s.features.push_back(FeatureSpec::polyline("road", {{y, 0.0}, {y, extent}}, dist.road_width, 1));
  }
  for (int c : highway_cols) {
    const double x = c * dist.cell_px + dist.cell_px / 2.0;
    s.features.push_back(FeatureSpec::polyline("highway", {{0.0, x}, {extent, x}}, dist.highway_width, 2));
  }

  std::vector<std::pair<int, int>> free_cells;
  for (int r = 0; r < n; ++r) {
    if (std::binary_search(road_rows.begin(), road_rows.end(), r)) continue;
    for (int c = 0; c < n; ++c) {
      if (std::binary_search(highway_cols.begin(), highway_cols.end(), c)) continue;
      free_cells.emplace_back(r, c);
    }
  }
  const int count = houses.value_or(
      dist.houses_min + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(dist.houses_max - dist.houses_min + 1))));
  if (count > static_cast<int>(free_cells.size())) {
    throw Error(ErrorCode::kInvalidArgument, "tile cannot hold " + std::to_string(count) + " houses (capacity " +
                                                 std::to_string(free_cells.size()) + ")");
  }
  for (std::size_t i = free_cells.size() - 1; i > 0; --i) {
    std::swap(free_cells[i], free_cells[uniform_index(rng, i + 1)]);
  }
  free_cells.resize(static_cast<std::size_t>(count));
  std::sort(free_cells.begin(), free_cells.end());
  const auto size_span = static_cast<std::uint64_t>(dist.house_max_px - dist.house_min_px + 1);
  for (auto [cr, cc] : free_cells) {
    const int h = dist.house_min_px + static_cast<int>(uniform_index(rng, size_span));
    const int w = dist.house_min_px + static_cast<int>(uniform_index(rng, size_span));
    const int slack_r = dist.cell_px - 2 * dist.house_margin_px - h;
    const int slack_c = dist.cell_px - 2 * dist.house_margin_px - w;
    const int r0 = cr * dist.cell_px + dist.house_margin_px +
                   static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(slack_r + 1)));
    const int c0 = cc * dist.cell_px + dist.house_margin_px +
                   static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(slack_c + 1)));
    s.features.push_back(FeatureSpec::rect("house", r0, c0, h, w, 3));
  }
  return s;
}

/// Per-tile house counts for a corpus of n tiles.
inline std::vector<std::optional<int>> planned_house_counts(const SceneDistribution& dist, std::size_t n) {
  std::vector<std::optional<int>> out(n);
  if (!dist.target_density) return out;
  const double tile_km2 = std::pow(dist.tile_size * dist.ground_resolution, 2) / 1e6;
  const auto total = static_cast<long long>(std::llround(*dist.target_density * tile_km2 * static_cast<double>(n)));
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = static_cast<int>(total / static_cast<long long>(n) +
                              (static_cast<long long>(i) < total % static_cast<long long>(n) ? 1 : 0));
  }
  return out;
}

inline nlohmann::json truth_to_json(const SceneSpec& spec, const std::vector<TruthFeature>& truth) {
  using nlohmann::json;
  json features = json::array();
  for (const auto& t : truth) {
    const FeatureSpec& f = spec.features[t.index];
    json fj = {{"index", t.index},
               {"class", t.class_name},
               {"z_order", t.z_order},
               {"dropped", t.dropped},
               {"jitter", {t.jitter_rows, t.jitter_cols}},
               {"area_px", t.footprint.area_px()}};
    if (f.shape == FootprintShape::kRect) {
      fj["shape"] = "rect";
      fj["rect"] = {f.row, f.col, f.rows, f.cols};
    } else {
      fj["shape"] = "polyline";
      json pts = json::array();
      for (auto [r, c] : f.points) pts.push_back({r, c});
      fj["points"] = pts;
      fj["width"] = f.width;
    }
    features.push_back(std::move(fj));
  }
  return features;
}

struct CorpusSummary {
  std::vector<std::string> keys;
  std::size_t houses_planted = 0;
  std::size_t houses_labeled = 0;
  double area_km2 = 0.0;
};

/// Writes <out>/images, <out>/maps and <out>/truth (PNG + sidecar per tile),
/// <out>/truth.json (every feature with its dropped flag) and
/// <out>/corpus.json.
inline CorpusSummary make_corpus(std::size_t n_tiles, const SceneDistribution& dist, const Palette& palette,
                                 const fs::path& out_dir, unsigned threads = 1) {
  if (n_tiles == 0) throw Error(ErrorCode::kInvalidArgument, "corpus needs at least one tile");
  dist.validate();
  const auto counts = planned_house_counts(dist, n_tiles);
  fs::create_directories(out_dir);

  struct TileResult {
    std::string key;
    nlohmann::json truth;
    std::size_t planted = 0;
    std::size_t labeled = 0;
  };
  auto results = parallel_map(n_tiles, threads, [&](std::size_t i) {
    const SceneSpec spec = random_scene(dist, i, counts[i]);
    const RenderedPair pair = render_pair(spec, palette);
    const std::string key = quadkey_to_string(spec.key);
    write_tile(out_dir / "images", key, pair.image);
    write_tile(out_dir / "maps", key, pair.map);
    write_tile(out_dir / "truth", key, pair.truth_map);
    TileResult r{key, {{"tile", key}, {"seed", spec.seed}, {"features", truth_to_json(spec, pair.truth)}}, 0, 0};
    for (const auto& t : pair.truth) {
      if (t.class_name != "house") continue;
      ++r.planted;
      if (!t.dropped) ++r.labeled;
    }
    return r;
  });

  CorpusSummary summary;
  nlohmann::json tiles = nlohmann::json::array();
  for (auto& r : results) {
    summary.keys.push_back(r.key);
    summary.houses_planted += r.planted;
    summary.houses_labeled += r.labeled;
    tiles.push_back(std::move(r.truth));
  }
  summary.area_km2 =
      static_cast<double>(n_tiles) * std::pow(dist.tile_size * dist.ground_resolution, 2) / 1e6;
  write_json_file(out_dir / "truth.json",
                  {{"schema_version", 1}, {"seed", dist.seed}, {"tile_size", dist.tile_size}, {"tiles", tiles}});
  write_json_file(out_dir / "corpus.json",
                  {{"schema_version", 1},
                   {"split", "unspecified"},
                   {"tiles", n_tiles},
                   {"ground_resolution_m", dist.ground_resolution},
                   {"houses_planted", summary.houses_planted},
                   {"houses_labeled", summary.houses_labeled},
                   {"area_km2", summary.area_km2}});
  return summary;
}

}  // namespace osmgen
