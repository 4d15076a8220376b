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

// Raster tiles, color math, feature masks, entropy filtering, quadtree keys
// and dataset splitting.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "osmgen/error.hpp"
#include "osmgen/util.hpp"

namespace osmgen {

struct ColorRGB {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const ColorRGB&, const ColorRGB&) = default;
};

/// CIE L*a*b* under the D65 reference white.
struct ColorLab {
  double l = 0.0;
  double a = 0.0;
  double b = 0.0;

  friend bool operator==(const ColorLab&, const ColorLab&) = default;
};

namespace detail {

inline double srgb_to_linear(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

inline const std::array<double, 256>& linear_lut() {
  static const std::array<double, 256> lut = [] {
    std::array<double, 256> t{};
    for (int i = 0; i < 256; ++i) t[i] = srgb_to_linear(i / 255.0);
    return t;
  }();
  return lut;
}

inline double lab_f(double t) {
  constexpr double kDelta = 6.0 / 29.0;
  return t > kDelta * kDelta * kDelta ? std::cbrt(t)
                                      : t / (3.0 * kDelta * kDelta) + 4.0 / 29.0;
}

}  // namespace detail

// sRGB (IEC 61966-2-1 transfer curve) -> XYZ -> Lab, D65 white.
inline ColorLab srgb_to_lab(ColorRGB c) {
  const auto& lut = detail::linear_lut();
  const double r = lut[c.r], g = lut[c.g], b = lut[c.b];
  const double x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
  const double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
  const double z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
  const double fx = detail::lab_f(x / 0.95047);
  const double fy = detail::lab_f(y / 1.00000);
  const double fz = detail::lab_f(z / 1.08883);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

/// CIE76 color difference: Euclidean distance in Lab space.
inline double cie76_distance(const ColorLab& p, const ColorLab& q) {
  const double dl = p.l - q.l, da = p.a - q.a, db = p.b - q.b;
  return std::sqrt(dl * dl + da * da + db * db);
}

// ---------------------------------------------------------------------------
// Quadtree keys

/// Hierarchical tile address. Digits follow the usual quadkey convention
/// (0 = NW, 1 = NE, 2 = SW, 3 = SE). timestamp == 0 means untimed.
struct QuadKey {
  int level = 0;
  std::vector<std::uint8_t> path;
  std::int64_t timestamp = 0;

  friend bool operator==(const QuadKey&, const QuadKey&) = default;
};

using QuadKeyBytes = std::array<std::uint8_t, 16>;

inline constexpr int kMaxQuadKeyLevel = 56;
inline constexpr int kMaxTimedQuadKeyLevel = 32;
inline constexpr std::int64_t kMaxQuadKeyTimestamp = (std::int64_t{1} << 48) - 1;
inline constexpr std::uint8_t kQuadKeyTimedFlag = 0x01;

// Key layout (16 bytes, big-endian digit packing so byte order is quadtree
// order within a level):
//   untimed: [level][14 bytes: up to 56 two-bit digits][flags = 0]
//   timed:   [level][8 bytes: up to 32 digits][6 bytes: seconds][flags = 1]
inline QuadKeyBytes quadkey_encode(int level, const std::vector<std::uint8_t>& path,
                                   std::int64_t timestamp = 0) {
  const bool timed = timestamp != 0;
  const int max_level = timed ? kMaxTimedQuadKeyLevel : kMaxQuadKeyLevel;
  if (level < 0 || level > max_level) {
    throw Error(ErrorCode::kLevelOverflow,
                "quadkey level " + std::to_string(level) + " outside [0, " +
                    std::to_string(max_level) + "]");
  }
  if (static_cast<int>(path.size()) != level) {
    throw Error(ErrorCode::kInvalidArgument, "quadkey path length differs from level");
  }
  if (timestamp < 0 || timestamp > kMaxQuadKeyTimestamp) {
    throw Error(ErrorCode::kInvalidArgument, "quadkey timestamp outside 48-bit range");
  }
  QuadKeyBytes key{};
  key[0] = static_cast<std::uint8_t>(level);
  for (int k = 0; k < level; ++k) {
    const std::uint8_t d = path[k];
    if (d > 3) {
      throw Error(ErrorCode::kInvalidDigit,
                  "quadkey digit " + std::to_string(d) + " at position " + std::to_string(k));
    }
    key[1 + k / 4] |= static_cast<std::uint8_t>(d << (6 - 2 * (k % 4)));
  }
  if (timed) {
    for (int i = 0; i < 6; ++i) {
      key[9 + i] = static_cast<std::uint8_t>((timestamp >> (8 * (5 - i))) & 0xFF);
    }
    key[15] = kQuadKeyTimedFlag;
  }
  return key;
}

inline QuadKeyBytes quadkey_encode(const QuadKey& k) {
  return quadkey_encode(k.level, k.path, k.timestamp);
}

inline QuadKey quadkey_decode(const QuadKeyBytes& key) {
  if ((key[15] & ~kQuadKeyTimedFlag) != 0) {
    throw Error(ErrorCode::kParse, "quadkey has unknown flag bits");
  }
  const bool timed = key[15] & kQuadKeyTimedFlag;
  const int max_level = timed ? kMaxTimedQuadKeyLevel : kMaxQuadKeyLevel;
  QuadKey out;
  out.level = key[0];
  if (out.level > max_level) {
    throw Error(ErrorCode::kLevelOverflow, "decoded quadkey level exceeds layout");
  }
  const int digit_bytes = timed ? 8 : 14;
  out.path.resize(out.level);
  for (int k = 0; k < out.level; ++k) {
    out.path[k] = (key[1 + k / 4] >> (6 - 2 * (k % 4))) & 0x3;
  }
  // Canonical form: padding bits after the last digit must be zero.
  for (int k = out.level; k < digit_bytes * 4; ++k) {
    if ((key[1 + k / 4] >> (6 - 2 * (k % 4))) & 0x3) {
      throw Error(ErrorCode::kParse, "quadkey has non-zero padding digits");
    }
  }
  if (timed) {
    std::int64_t t = 0;
    for (int i = 0; i < 6; ++i) t = (t << 8) | key[9 + i];
    if (t == 0) throw Error(ErrorCode::kParse, "timed quadkey with zero timestamp");
    out.timestamp = t;
  }
  return out;
}

/// Digit string form ("0231"); used as the corpus filename stem.
inline std::string quadkey_to_string(const QuadKey& k) {
  std::string s;
  s.reserve(k.path.size());
  for (auto d : k.path) s.push_back(static_cast<char>('0' + d));
  return s;
}

inline QuadKey quadkey_from_string(const std::string& digits, std::int64_t timestamp = 0) {
  QuadKey k;
  k.level = static_cast<int>(digits.size());
  k.timestamp = timestamp;
  for (char c : digits) {
    if (c < '0' || c > '3') {
      throw Error(ErrorCode::kInvalidDigit, std::string("invalid quadkey character '") + c + "'");
    }
    k.path.push_back(static_cast<std::uint8_t>(c - '0'));
  }
  if (k.level > kMaxQuadKeyLevel) throw Error(ErrorCode::kLevelOverflow, "quadkey string too long");
  return k;
}

/// Quadkey of tile (x, y) at the given zoom level.
inline QuadKey quadkey_from_tile(std::uint64_t x, std::uint64_t y, int level) {
  if (level < 0 || level > kMaxQuadKeyLevel) {
    throw Error(ErrorCode::kLevelOverflow, "tile level out of range");
  }
  QuadKey k;
  k.level = level;
  for (int i = level; i > 0; --i) {
    const std::uint64_t mask = std::uint64_t{1} << (i - 1);
    std::uint8_t d = 0;
    if (x & mask) d += 1;
    if (y & mask) d += 2;
    k.path.push_back(d);
  }
  return k;
}

// ---------------------------------------------------------------------------
// Tiles

class RasterTile {
 public:
  RasterTile() = default;

  RasterTile(int width, int height, int channels, QuadKey geo = {},
             double ground_resolution = 1.0)
      : RasterTile(width, height, channels,
                   std::vector<std::uint8_t>(checked_size(width, height, channels), 0),
                   std::move(geo), ground_resolution) {}

  RasterTile(int width, int height, int channels, std::vector<std::uint8_t> pixels,
             QuadKey geo = {}, double ground_resolution = 1.0)
      : width_(width),
        height_(height),
        channels_(channels),
        pixels_(std::move(pixels)),
        geo_(std::move(geo)),
        ground_resolution_(ground_resolution) {
    if (pixels_.size() != checked_size(width, height, channels)) {
      throw Error(ErrorCode::kShapeMismatch, "pixel buffer length != width*height*channels");
    }
    if (!(ground_resolution > 0.0) || !std::isfinite(ground_resolution)) {
      throw Error(ErrorCode::kInvalidArgument, "ground resolution must be positive");
    }
  }

  static RasterTile filled(int width, int height, ColorRGB c, QuadKey geo = {},
                           double ground_resolution = 1.0) {
    RasterTile t(width, height, 3, std::move(geo), ground_resolution);
    for (int r = 0; r < height; ++r)
      for (int col = 0; col < width; ++col) t.set_rgb(r, col, c);
    return t;
  }

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  const QuadKey& geo() const { return geo_; }
  void set_geo(QuadKey k) { geo_ = std::move(k); }
  double ground_resolution() const { return ground_resolution_; }
  const std::vector<std::uint8_t>& pixels() const { return pixels_; }
  std::vector<std::uint8_t>& pixels() { return pixels_; }

  std::uint8_t at(int row, int col, int ch) const {
    return pixels_[index(row, col) + ch];
  }
  std::uint8_t& at(int row, int col, int ch) { return pixels_[index(row, col) + ch]; }

  ColorRGB rgb(int row, int col) const {
    const std::size_t i = index(row, col);
    return {pixels_[i], pixels_[i + 1], pixels_[i + 2]};
  }
  void set_rgb(int row, int col, ColorRGB c) {
    const std::size_t i = index(row, col);
    pixels_[i] = c.r;
    pixels_[i + 1] = c.g;
    pixels_[i + 2] = c.b;
  }

  bool same_shape(const RasterTile& o) const {
    return width_ == o.width_ && height_ == o.height_ && channels_ == o.channels_;
  }

  friend bool operator==(const RasterTile& a, const RasterTile& b) {
    return a.same_shape(b) && a.pixels_ == b.pixels_;
  }

 private:
  static std::size_t checked_size(int width, int height, int channels) {
    if (width <= 0 || height <= 0 || channels <= 0) {
      throw Error(ErrorCode::kInvalidArgument, "tile dimensions must be positive");
    }
    return static_cast<std::size_t>(width) * height * channels;
  }
  std::size_t index(int row, int col) const {
    return (static_cast<std::size_t>(row) * width_ + col) * channels_;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<std::uint8_t> pixels_;
  QuadKey geo_;
  double ground_resolution_ = 1.0;
};

inline constexpr int kDefaultTileSize = 512;

// ---------------------------------------------------------------------------
// Feature palette and masks

struct FeatureClassConfig {
  std::string class_name;
  std::vector<ColorRGB> colors;
  double delta_threshold = 10.0;

  void validate() const {
    if (colors.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "feature class '" + class_name + "' has no colors");
    }
    if (!(delta_threshold >= 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "feature class '" + class_name + "' has negative delta");
    }
  }
};

inline constexpr double kDefaultDeltaE = 10.0;

/// The set of feature classes plus the map background color used when
/// rasterizing synthetic maps.
struct Palette {
  std::vector<FeatureClassConfig> classes;
  ColorRGB background{242, 239, 233};

  const FeatureClassConfig& at(const std::string& name) const {
    for (const auto& c : classes)
      if (c.class_name == name) return c;
    throw Error(ErrorCode::kInvalidArgument, "palette has no class '" + name + "'");
  }
  bool contains(const std::string& name) const {
    return std::any_of(classes.begin(), classes.end(),
                       [&](const auto& c) { return c.class_name == name; });
  }
};

// Colors picked from the standard OSM rendering; overridable via palette JSON.
inline Palette default_palette() {
  Palette p;
  p.classes = {
      {"house", {{188, 169, 169}}, kDefaultDeltaE},
      {"road", {{255, 255, 255}}, 3.0},
      {"main_road", {{247, 250, 191}}, kDefaultDeltaE},
      {"highway", {{137, 164, 203}}, kDefaultDeltaE},
  };
  return p;
}

class FeatureMask {
 public:
  FeatureMask() = default;
  FeatureMask(int width, int height, std::string class_name = {})
      : width_(width), height_(height), class_name_(std::move(class_name)) {
    if (width <= 0 || height <= 0) {
      throw Error(ErrorCode::kInvalidArgument, "mask dimensions must be positive");
    }
    bits_.assign(static_cast<std::size_t>(width) * height, 0);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  const std::string& class_name() const { return class_name_; }
  void set_class_name(std::string n) { class_name_ = std::move(n); }
  const std::vector<std::uint8_t>& bits() const { return bits_; }

  bool get(int row, int col) const { return bits_[static_cast<std::size_t>(row) * width_ + col]; }
  void set(int row, int col, bool v) {
    bits_[static_cast<std::size_t>(row) * width_ + col] = v ? 1 : 0;
  }
  bool get_index(std::size_t i) const { return bits_[i]; }
  void set_index(std::size_t i, bool v) { bits_[i] = v ? 1 : 0; }

  std::size_t count() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
  }
  bool same_shape(const FeatureMask& o) const {
    return width_ == o.width_ && height_ == o.height_;
  }

  friend bool operator==(const FeatureMask& a, const FeatureMask& b) {
    return a.same_shape(b) && a.bits_ == b.bits_;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::string class_name_;
  std::vector<std::uint8_t> bits_;
};

/// Pixel (i, j) is a feature pixel iff its minimum CIE76 distance to any
/// color of the class is at most the class threshold.
inline FeatureMask extract_mask(const RasterTile& tile, const FeatureClassConfig& cfg) {
  if (tile.channels() != 3) {
    throw Error(ErrorCode::kChannelCount,
                "extract_mask needs 3 channels, tile has " + std::to_string(tile.channels()));
  }
  cfg.validate();
  std::vector<ColorLab> refs;
  refs.reserve(cfg.colors.size());
  for (const auto& c : cfg.colors) refs.push_back(srgb_to_lab(c));

  FeatureMask mask(tile.width(), tile.height(), cfg.class_name);
  // Maps render few distinct colors; memoize the last lookup.
  std::optional<ColorRGB> last;
  bool last_hit = false;
  for (int r = 0; r < tile.height(); ++r) {
    for (int c = 0; c < tile.width(); ++c) {
      const ColorRGB px = tile.rgb(r, c);
      if (!last || !(*last == px)) {
        const ColorLab lab = srgb_to_lab(px);
        double best = std::numeric_limits<double>::infinity();
        for (const auto& ref : refs) best = std::min(best, cie76_distance(lab, ref));
        last = px;
        last_hit = best <= cfg.delta_threshold;
      }
      mask.set(r, c, last_hit);
    }
  }
  return mask;
}

// ---------------------------------------------------------------------------
// Entropy filtering

/// Shannon entropy (bits) of the pooled 256-bin histogram of all samples.
inline double tile_entropy(const RasterTile& tile) {
  const auto& px = tile.pixels();
  if (px.empty()) throw Error(ErrorCode::kEmptyInput, "entropy of empty tile");
  std::array<std::size_t, 256> hist{};
  for (auto v : px) ++hist[v];
  const double n = static_cast<double>(px.size());
  double h = 0.0;
  for (auto count : hist) {
    if (count == 0) continue;
    const double p = static_cast<double>(count) / n;
    h -= p * std::log2(p);
  }
  return std::max(0.0, h);
}

struct FilterResult {
  std::vector<RasterTile> kept;
  std::vector<RasterTile> dropped;
};

/// Keeps tiles whose entropy is at least `threshold`; order preserved.
inline FilterResult filter_tiles(std::vector<RasterTile> tiles, double threshold) {
  if (!(threshold >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "entropy threshold must be >= 0");
  FilterResult out;
  for (auto& t : tiles) {
    if (tile_entropy(t) >= threshold) {
      out.kept.push_back(std::move(t));
    } else {
      out.dropped.push_back(std::move(t));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Train/test split

template <typename T>
struct Split {
  std::vector<T> train;
  std::vector<T> test;
};

/// Number of training items for n items at ratio train:test (rounded to
/// nearest, ties toward train).
inline std::size_t split_train_count(std::size_t n, int ratio_train, int ratio_test) {
  const std::size_t total = static_cast<std::size_t>(ratio_train + ratio_test);
  return (n * static_cast<std::size_t>(ratio_train) * 2 + total) / (2 * total);
}

/// Seeded random partition into train/test at ratio_train:ratio_test.
template <typename T>
Split<T> split_dataset(std::vector<T> items, int ratio_train, int ratio_test, std::uint64_t seed) {
  if (ratio_train <= 0 || ratio_test <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "split ratios must be positive");
  }
  if (items.empty()) throw Error(ErrorCode::kEmptyInput, "cannot split an empty dataset");
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, 0x5917ull));
  for (std::size_t i = order.size() - 1; i > 0; --i) {
    std::swap(order[i], order[uniform_index(rng, i + 1)]);
  }
  const std::size_t n_train = split_train_count(items.size(), ratio_train, ratio_test);
  Split<T> out;
  out.train.reserve(n_train);
  out.test.reserve(items.size() - n_train);
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_train ? out.train : out.test).push_back(std::move(items[order[i]]));
  }
  return out;
}

}  // namespace osmgen
