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

// Incremental label augmentation (merge generated false positives back into
// the labels) and house density / completeness bookkeeping.

#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "osmgen/error.hpp"
#include "osmgen/io.hpp"
#include "osmgen/metrics.hpp"
#include "osmgen/polygon.hpp"
#include "osmgen/raster.hpp"
#include "osmgen/util.hpp"

namespace osmgen {

/// Las Vegas house density (houses/km²), the completeness reference.
inline constexpr double kDefaultReferenceDensity = 3283.0;

struct DensityReport {
  std::string city;
  std::string class_name = "house";
  std::size_t tile_count = 0;
  std::size_t house_count = 0;
  double area_km2 = 0.0;
  double density_per_km2 = 0.0;
  double reference_density = kDefaultReferenceDensity;
  double completeness_pct = 0.0;
};

inline double completeness_pct(double density, double reference_density) {
  if (!(reference_density > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "reference density must be positive");
  }
  return density / reference_density * 100.0;
}

struct DensityOptions {
  std::string city;
  std::string class_name = "house";
  double reference_density = kDefaultReferenceDensity;
  PolygonizeOptions polygonize;
  unsigned threads = 1;
};

/// Builds a report from a raw count; area in km².
inline DensityReport density_from_counts(std::size_t houses, double area_km2, std::size_t tiles,
                                         const DensityOptions& opts = {}) {
  if (!(area_km2 > 0.0)) throw Error(ErrorCode::kInvalidArgument, "area must be positive");
  DensityReport r;
  r.city = opts.city;
  r.class_name = opts.class_name;
  r.tile_count = tiles;
  r.house_count = houses;
  r.area_km2 = area_km2;
  r.density_per_km2 = static_cast<double>(houses) / area_km2;
  r.reference_density = opts.reference_density;
  r.completeness_pct = completeness_pct(r.density_per_km2, opts.reference_density);
  return r;
}

inline double tile_area_km2(const RasterTile& t, double ground_resolution) {
  return (ground_resolution * t.width()) * (ground_resolution * t.height()) / 1e6;
}

/// Counts house polygons over the corpus and divides by its ground area.
inline DensityReport house_density(const std::vector<RasterTile>& maps, const Palette& palette,
                                   double ground_resolution, const DensityOptions& opts = {}) {
  if (!(ground_resolution > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "ground resolution must be positive");
  }
  if (maps.empty()) throw Error(ErrorCode::kEmptyInput, "density of an empty corpus");
  const FeatureClassConfig& cls = palette.at(opts.class_name);
  const auto counts = parallel_map(maps.size(), opts.threads, [&](std::size_t i) {
    return polygonize(extract_mask(maps[i], cls), opts.polygonize).size();
  });
  std::size_t houses = 0;
  double area = 0.0;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    houses += counts[i];
    area += tile_area_km2(maps[i], ground_resolution);
  }
  return density_from_counts(houses, area, maps.size(), opts);
}

inline DensityReport house_density(const std::vector<KeyedTile>& maps, const Palette& palette,
                                   double ground_resolution, const DensityOptions& opts = {}) {
  std::vector<RasterTile> tiles;
  tiles.reserve(maps.size());
  for (const auto& t : maps) tiles.push_back(t.tile);
  return house_density(tiles, palette, ground_resolution, opts);
}

inline nlohmann::json density_to_json(const DensityReport& r) {
  return {{"city", r.city},
          {"class", r.class_name},
          {"tile_count", r.tile_count},
          {"house_count", r.house_count},
          {"area_km2", r.area_km2},
          {"density_per_km2", r.density_per_km2},
          {"reference_density", r.reference_density},
          {"completeness_pct", r.completeness_pct}};
}

// ---------------------------------------------------------------------------
// Label augmentation

struct AugmentOptions {
  std::vector<std::string> classes{"house"};  // roads only when asked for
  double iou_threshold = kDefaultIouThreshold;
  PolygonizeOptions polygonize;
};

struct AugmentedTile {
  RasterTile tile;
  std::size_t merged_features = 0;
  std::size_t changed_pixels = 0;
};

/// Burns every false-positive polygon of the generated map into the
/// original map in the class's first (canonical) color. Pixels that already
/// carry the class in the original (TP and FN regions) are never rewritten.
inline AugmentedTile augment_labels_detailed(const RasterTile& original, const RasterTile& generated,
                                             const Palette& palette, const AugmentOptions& opts = {}) {
  if (!original.same_shape(generated)) {
    throw Error(ErrorCode::kShapeMismatch, "original and generated maps differ in shape");
  }
  AugmentedTile out{original, 0, 0};
  for (const auto& name : opts.classes) {
    const FeatureClassConfig& cls = palette.at(name);
    const ColorRGB canonical = cls.colors.front();
    const FeatureMask orig_mask = extract_mask(original, cls);
    const auto gt = polygonize(orig_mask, opts.polygonize);
    const auto det = polygonize(extract_mask(generated, cls), opts.polygonize);
    for (const auto& rec : match_tile(gt, det, opts.iou_threshold)) {
      if (rec.kind != MatchKind::kFalsePositive) continue;
      ++out.merged_features;
      for (auto p : det[static_cast<std::size_t>(*rec.det_id)].pixels) {
        if (orig_mask.get_index(p)) continue;
        const int r = static_cast<int>(p / original.width());
        const int c = static_cast<int>(p % original.width());
        if (!(out.tile.rgb(r, c) == canonical)) {
          out.tile.set_rgb(r, c, canonical);
          ++out.changed_pixels;
        }
      }
    }
  }
  return out;
}

inline RasterTile augment_labels(const RasterTile& original, const RasterTile& generated,
                                 const Palette& palette, double iou_threshold = kDefaultIouThreshold) {
  AugmentOptions opts;
  opts.iou_threshold = iou_threshold;
  return augment_labels_detailed(original, generated, palette, opts).tile;
}

enum class SplitRole { kUnspecified, kTrain, kTest };

inline const char* to_string(SplitRole s) {
  switch (s) {
    case SplitRole::kUnspecified: return "unspecified";
    case SplitRole::kTrain: return "train";
    case SplitRole::kTest: return "test";
  }
  return "unspecified";
}

inline SplitRole split_role_from_string(const std::string& s) {
  if (s == "train") return SplitRole::kTrain;
  if (s == "test") return SplitRole::kTest;
  if (s == "unspecified" || s.empty()) return SplitRole::kUnspecified;
  throw Error(ErrorCode::kParse, "unknown split role '" + s + "'");
}

struct CorpusAugmentOptions {
  AugmentOptions augment;
  SplitRole split = SplitRole::kUnspecified;
  double ground_resolution = 1.0;
  DensityOptions density;
  unsigned threads = 1;
};

struct AugmentCorpusResult {
  std::vector<KeyedTile> augmented;
  DensityReport before;
  DensityReport after;
  std::size_t merged_features = 0;
  std::vector<std::string> unpaired_train;      // kept unchanged
  std::vector<std::string> unpaired_generated;  // ignored
};

/// Applies augment_labels to every (train, generated) pair. Corpora flagged
/// as the test split are refused.
inline AugmentCorpusResult augment_corpus(const std::vector<KeyedTile>& train,
                                          const std::vector<KeyedTile>& generated,
                                          const Palette& palette,
                                          const CorpusAugmentOptions& opts = {}) {
  if (opts.split == SplitRole::kTest) {
    throw Error(ErrorCode::kTestSplitGuard, "refusing to augment a corpus flagged as test split");
  }
  if (train.empty()) throw Error(ErrorCode::kEmptyInput, "empty training corpus");
  std::vector<std::string> train_keys, gen_keys;
  for (const auto& t : train) train_keys.push_back(t.key);
  for (const auto& t : generated) gen_keys.push_back(t.key);
  const KeyPairing pairing = pair_keys(train_keys, gen_keys);

  auto results = parallel_map(train.size(), opts.threads, [&](std::size_t i) {
    const auto it = std::find_if(generated.begin(), generated.end(),
                                 [&](const KeyedTile& g) { return g.key == train[i].key; });
    if (it == generated.end()) return AugmentedTile{train[i].tile, 0, 0};
    return augment_labels_detailed(train[i].tile, it->tile, palette, opts.augment);
  });

  AugmentCorpusResult out;
  for (std::size_t i = 0; i < train.size(); ++i) {
    out.merged_features += results[i].merged_features;
    out.augmented.push_back({train[i].key, std::move(results[i].tile)});
  }
  DensityOptions dopts = opts.density;
  dopts.threads = opts.threads;
  out.before = house_density(train, palette, opts.ground_resolution, dopts);
  out.after = house_density(out.augmented, palette, opts.ground_resolution, dopts);
  out.unpaired_train = pairing.only_left;
  out.unpaired_generated = pairing.only_right;
  return out;
}

}  // namespace osmgen
