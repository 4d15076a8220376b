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

// Feature-level evaluation: greedy one-to-one IoU matching per tile,
// TP/FP/FN accounting and precision/recall/F1 over a corpus.

#pragma once

#include <algorithm>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "osmgen/error.hpp"
#include "osmgen/io.hpp"
#include "osmgen/polygon.hpp"
#include "osmgen/raster.hpp"
#include "osmgen/util.hpp"

namespace osmgen {

inline constexpr double kDefaultIouThreshold = 0.3;

enum class MatchKind { kTruePositive, kFalsePositive, kFalseNegative };

inline const char* to_string(MatchKind k) {
  switch (k) {
    case MatchKind::kTruePositive: return "TP";
    case MatchKind::kFalsePositive: return "FP";
    case MatchKind::kFalseNegative: return "FN";
  }
  return "?";
}

/// For FP/FN records `iou` is the best IoU the polygon reached against any
/// polygon of the other side (below the threshold, or lost to a better pair).
struct MatchRecord {
  std::optional<int> gt_id;
  std::optional<int> det_id;
  double iou = 0.0;
  MatchKind kind = MatchKind::kFalseNegative;
  std::string tile;
};

struct MatchCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  MatchCounts& operator+=(const MatchCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const MatchCounts&, const MatchCounts&) = default;
};

/// Precision/recall/F1; std::nullopt marks an undefined ratio (zero
/// denominator), which is never reported as 0.
struct Scores {
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
};

inline std::optional<double> f1_score(std::optional<double> p, std::optional<double> r) {
  if (!p || !r || *p + *r <= 0.0) return std::nullopt;
  return 2.0 * *p * *r / (*p + *r);
}

inline Scores score(const MatchCounts& c) {
  Scores s;
  if (c.tp + c.fp > 0) s.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  if (c.tp + c.fn > 0) s.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  s.f1 = f1_score(s.precision, s.recall);
  return s;
}

inline MatchCounts count_records(const std::vector<MatchRecord>& records) {
  MatchCounts c;
  for (const auto& r : records) {
    switch (r.kind) {
      case MatchKind::kTruePositive: ++c.tp; break;
      case MatchKind::kFalsePositive: ++c.fp; break;
      case MatchKind::kFalseNegative: ++c.fn; break;
    }
  }
  return c;
}

/// Greedy one-to-one matching: candidate pairs with IoU >= threshold are
/// taken in descending IoU order (ties by gt id, then det id). Every input
/// polygon ends up in exactly one record.
inline std::vector<MatchRecord> match_tile(const std::vector<FeaturePolygon>& gt,
                                           const std::vector<FeaturePolygon>& det,
                                           double threshold, const std::string& tile = {}) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "IoU threshold must lie in (0, 1]");
  }
  struct Candidate {
    double iou;
    std::size_t gi;
    std::size_t di;
  };
  std::vector<Candidate> candidates;
  std::vector<double> best_gt(gt.size(), 0.0), best_det(det.size(), 0.0);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    for (std::size_t j = 0; j < det.size(); ++j) {
      if (!gt[i].bbox.overlaps(det[j].bbox)) continue;
      const double v = iou(gt[i], det[j]);
      best_gt[i] = std::max(best_gt[i], v);
      best_det[j] = std::max(best_det[j], v);
      if (v >= threshold) candidates.push_back({v, i, j});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [&](const Candidate& a, const Candidate& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    return std::tie(gt[a.gi].id, det[a.di].id) < std::tie(gt[b.gi].id, det[b.di].id);
  });

  std::vector<char> gt_used(gt.size(), 0), det_used(det.size(), 0);
  std::vector<MatchRecord> out;
  for (const auto& c : candidates) {
    if (gt_used[c.gi] || det_used[c.di]) continue;
    gt_used[c.gi] = det_used[c.di] = 1;
    out.push_back({gt[c.gi].id, det[c.di].id, c.iou, MatchKind::kTruePositive, tile});
  }
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!gt_used[i]) out.push_back({gt[i].id, std::nullopt, best_gt[i], MatchKind::kFalseNegative, tile});
  }
  for (std::size_t j = 0; j < det.size(); ++j) {
    if (!det_used[j]) out.push_back({std::nullopt, det[j].id, best_det[j], MatchKind::kFalsePositive, tile});
  }
  return out;
}

struct TileMatches {
  std::string key;
  std::vector<MatchRecord> records;
};

struct TileCounts {
  std::string key;
  MatchCounts counts;
};

struct PairError {
  std::string key;
  std::string code;
  std::string message;
};

struct MatchReport {
  std::string class_name;
  double iou_threshold = kDefaultIouThreshold;
  MatchCounts totals;
  Scores scores;
  std::vector<TileCounts> per_tile;
  std::vector<MatchRecord> records;
  std::vector<PairError> errors;
  std::vector<std::string> missing_detection;    // gt tiles without a generated map
  std::vector<std::string> missing_ground_truth;  // generated tiles without gt

  bool complete() const {
    return errors.empty() && missing_detection.empty() && missing_ground_truth.empty();
  }
};

/// Sums per-tile counts into corpus totals and derives the scores.
inline MatchReport aggregate(const std::vector<TileMatches>& tiles, std::string class_name = {},
                             double threshold = kDefaultIouThreshold) {
  MatchReport rep;
  rep.class_name = std::move(class_name);
  rep.iou_threshold = threshold;
  for (const auto& t : tiles) {
    const MatchCounts c = count_records(t.records);
    rep.per_tile.push_back({t.key, c});
    rep.totals += c;
    rep.records.insert(rep.records.end(), t.records.begin(), t.records.end());
  }
  rep.scores = score(rep.totals);
  return rep;
}

struct EvalOptions {
  std::string class_name = "house";
  double iou_threshold = kDefaultIouThreshold;
  PolygonizeOptions polygonize;
  unsigned threads = 1;
};

/// Matches the polygons of one class between a ground-truth and a
/// generated map tile.
inline std::vector<MatchRecord> evaluate_pair(const RasterTile& gt, const RasterTile& det,
                                              const FeatureClassConfig& cls,
                                              const EvalOptions& opts, const std::string& key = {}) {
  if (gt.width() != det.width() || gt.height() != det.height()) {
    throw Error(ErrorCode::kShapeMismatch,
                "tile " + key + ": ground truth is " + std::to_string(gt.width()) + "x" +
                    std::to_string(gt.height()) + ", generated is " + std::to_string(det.width()) +
                    "x" + std::to_string(det.height()));
  }
  const auto gt_polys = polygonize(extract_mask(gt, cls), opts.polygonize);
  const auto det_polys = polygonize(extract_mask(det, cls), opts.polygonize);
  return match_tile(gt_polys, det_polys, opts.iou_threshold, key);
}

/// extract_mask -> polygonize -> match_tile -> aggregate over every key
/// pair. Unpaired keys and per-pair failures are listed in the report; the
/// remaining pairs are still evaluated.
inline MatchReport evaluate_corpus(const std::vector<KeyedTile>& gt, const std::vector<KeyedTile>& det,
                                   const Palette& palette, const EvalOptions& opts = {}) {
  const FeatureClassConfig& cls = palette.at(opts.class_name);
  std::vector<std::string> gt_keys, det_keys;
  for (const auto& t : gt) gt_keys.push_back(t.key);
  for (const auto& t : det) det_keys.push_back(t.key);
  const KeyPairing pairing = pair_keys(gt_keys, det_keys);

  auto find = [](const std::vector<KeyedTile>& v, const std::string& k) -> const RasterTile& {
    return std::find_if(v.begin(), v.end(), [&](const KeyedTile& t) { return t.key == k; })->tile;
  };

  struct PairResult {
    std::optional<TileMatches> matches;
    std::optional<PairError> error;
  };
  auto results = parallel_map(pairing.paired.size(), opts.threads, [&](std::size_t i) {
    const std::string& key = pairing.paired[i];
    PairResult r;
    try {
      r.matches = TileMatches{key, evaluate_pair(find(gt, key), find(det, key), cls, opts, key)};
    } catch (const Error& e) {
      r.error = PairError{key, std::string(to_string(e.code())), e.what()};
    }
    return r;
  });

  std::vector<TileMatches> tiles;
  std::vector<PairError> errors;
  for (auto& r : results) {
    if (r.matches) tiles.push_back(std::move(*r.matches));
    if (r.error) errors.push_back(std::move(*r.error));
  }
  MatchReport rep = aggregate(tiles, opts.class_name, opts.iou_threshold);
  rep.errors = std::move(errors);
  rep.missing_detection = pairing.only_left;
  rep.missing_ground_truth = pairing.only_right;
  return rep;
}

// ---------------------------------------------------------------------------
// Report serialization

inline constexpr int kReportSchemaVersion = 1;

inline nlohmann::json optional_to_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline nlohmann::json report_to_json(const MatchReport& rep) {
  using nlohmann::json;
  json per_tile = json::array();
  for (const auto& t : rep.per_tile) {
    per_tile.push_back({{"tile", t.key}, {"tp", t.counts.tp}, {"fp", t.counts.fp}, {"fn", t.counts.fn}});
  }
  json records = json::array();
  for (const auto& r : rep.records) {
    records.push_back({{"tile", r.tile},
                       {"gt_id", r.gt_id ? json(*r.gt_id) : json(nullptr)},
                       {"det_id", r.det_id ? json(*r.det_id) : json(nullptr)},
                       {"iou", r.iou},
                       {"kind", to_string(r.kind)}});
  }
  json errors = json::array();
  for (const auto& e : rep.errors) {
    errors.push_back({{"tile", e.key}, {"code", e.code}, {"message", e.message}});
  }
  return {{"schema_version", kReportSchemaVersion},
          {"class", rep.class_name},
          {"iou_threshold", rep.iou_threshold},
          {"tp", rep.totals.tp},
          {"fp", rep.totals.fp},
          {"fn", rep.totals.fn},
          {"precision", optional_to_json(rep.scores.precision)},
          {"recall", optional_to_json(rep.scores.recall)},
          {"f1", optional_to_json(rep.scores.f1)},
          {"undefined",
           {{"precision", !rep.scores.precision}, {"recall", !rep.scores.recall}, {"f1", !rep.scores.f1}}},
          {"per_tile", per_tile},
          {"records", records},
          {"errors", errors},
          {"missing_detection", rep.missing_detection},
          {"missing_ground_truth", rep.missing_ground_truth}};
}

inline std::string format_score(const std::optional<double>& v) {
  if (!v) return "undefined";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", *v);
  return buf;
}

inline constexpr const char* kReportCsvHeader = "city,class,TP,FP,FN,precision,recall,f1";

inline std::string report_csv_row(const std::string& city, const MatchReport& rep) {
  std::ostringstream os;
  os << city << ',' << rep.class_name << ',' << rep.totals.tp << ',' << rep.totals.fp << ','
     << rep.totals.fn << ',' << format_score(rep.scores.precision) << ','
     << format_score(rep.scores.recall) << ',' << format_score(rep.scores.f1);
  return os.str();
}

}  // namespace osmgen
