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

#include "osmgen/raster.hpp"

#include <gtest/gtest.h>

#include <set>

namespace osmgen {
namespace {

// Reference Lab values from scikit-image rgb2lab (D65, 2 degree observer).
struct LabReference {
  ColorRGB rgb;
  ColorLab lab;
};
const LabReference kLabReferences[] = {
    {{0, 0, 0}, {0.0, 0.0, 0.0}},
    {{255, 255, 255}, {100.0, -0.0024549, 0.0046534}},
    {{188, 169, 169}, {70.824444, 6.858268, 2.506694}},
    {{255, 0, 0}, {53.240588, 80.092308, 67.202751}},
    {{0, 0, 255}, {32.295673, 79.185591, -107.857300}},
    {{128, 128, 128}, {53.585013, -0.0014726, 0.0027915}},
    {{137, 164, 203}, {66.656864, -0.069378, -22.951738}},
};

TEST(ColorTest, SrgbToLabMatchesReference) {
  for (const auto& ref : kLabReferences) {
    const ColorLab lab = srgb_to_lab(ref.rgb);
    EXPECT_NEAR(lab.l, ref.lab.l, 0.01);
    EXPECT_NEAR(lab.a, ref.lab.a, 0.01);
    EXPECT_NEAR(lab.b, ref.lab.b, 0.01);
  }
}

TEST(ColorTest, Cie76BlackWhiteIsHundred) {
  EXPECT_NEAR(cie76_distance(srgb_to_lab({0, 0, 0}), srgb_to_lab({255, 255, 255})), 100.0, 0.5);
}

TEST(ColorTest, Cie76IdentityAndSymmetry) {
  Rng rng(7);
  for (int i = 0; i < 100; ++i) {
    const ColorRGB p{static_cast<std::uint8_t>(rng()), static_cast<std::uint8_t>(rng()),
                     static_cast<std::uint8_t>(rng())};
    const ColorRGB q{static_cast<std::uint8_t>(rng()), static_cast<std::uint8_t>(rng()),
                     static_cast<std::uint8_t>(rng())};
    const ColorLab a = srgb_to_lab(p), b = srgb_to_lab(q);
    EXPECT_EQ(cie76_distance(a, a), 0.0);
    EXPECT_EQ(cie76_distance(a, b), cie76_distance(b, a));
    EXPECT_EQ(srgb_to_lab(p), a);  // deterministic
    if (!(p == q)) { EXPECT_GT(cie76_distance(a, b), 0.0); }
  }
}

TEST(ColorTest, DefaultPaletteClassesAreSeparated) {
  // No class color may fall inside another class's threshold or match the
  // background.
  const Palette p = default_palette();
  const ColorLab bg = srgb_to_lab(p.background);
  for (const auto& a : p.classes) {
    const ColorLab la = srgb_to_lab(a.colors.front());
    EXPECT_GT(cie76_distance(la, bg), a.delta_threshold) << a.class_name;
    for (const auto& b : p.classes) {
      if (a.class_name == b.class_name) continue;
      EXPECT_GT(cie76_distance(la, srgb_to_lab(b.colors.front())), a.delta_threshold + b.delta_threshold)
          << a.class_name << " vs " << b.class_name;
    }
  }
}

FeatureClassConfig house_class(double delta = 10.0) { return {"house", {{188, 169, 169}}, delta}; }

TEST(MaskTest, TileOfFeatureColorIsAllOnes) {
  for (double delta : {0.0, 1.0, 10.0}) {
    const auto tile = RasterTile::filled(5, 3, {188, 169, 169});
    EXPECT_EQ(extract_mask(tile, house_class(delta)).count(), 15u);
  }
}

TEST(MaskTest, ZeroDeltaWithoutExactColorIsEmpty) {
  const auto tile = RasterTile::filled(4, 4, {189, 169, 169});
  EXPECT_EQ(extract_mask(tile, house_class(0.0)).count(), 0u);
}

TEST(MaskTest, BlockOnDistantBackgroundMatchesBruteForce) {
  auto tile = RasterTile::filled(4, 4, {30, 120, 40});
  for (int r = 1; r < 3; ++r)
    for (int c = 2; c < 4; ++c) tile.set_rgb(r, c, {188, 169, 169});
  const auto cfg = house_class(10.0);
  const FeatureMask m = extract_mask(tile, cfg);
  EXPECT_EQ(m.count(), 4u);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) {
      double best = 1e300;
      for (auto col : cfg.colors) best = std::min(best, cie76_distance(srgb_to_lab(tile.rgb(r, c)), srgb_to_lab(col)));
      EXPECT_EQ(m.get(r, c), best <= 10.0);
      EXPECT_EQ(m.get(r, c), r >= 1 && r < 3 && c >= 2);
    }
}

TEST(MaskTest, MinimumOverClassColors) {
  FeatureClassConfig roads{"road", {{255, 255, 255}, {247, 250, 191}}, 2.0};
  auto tile = RasterTile::filled(2, 1, {255, 255, 255});
  tile.set_rgb(0, 1, {247, 250, 191});
  EXPECT_EQ(extract_mask(tile, roads).count(), 2u);
}

TEST(MaskTest, WrongChannelCountIsRejected) {
  const RasterTile gray(4, 4, 1);
  try {
    extract_mask(gray, house_class());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kChannelCount);
  }
}

TEST(MaskTest, MonotoneInDelta) {
  Rng rng(3);
  RasterTile tile(16, 16, 3);
  for (auto& v : tile.pixels()) v = static_cast<std::uint8_t>(150 + uniform_index(rng, 60));
  const FeatureMask small = extract_mask(tile, house_class(5.0));
  const FeatureMask large = extract_mask(tile, house_class(20.0));
  for (std::size_t i = 0; i < small.bits().size(); ++i) {
    if (small.get_index(i)) { EXPECT_TRUE(large.get_index(i)); }
  }
  EXPECT_LE(small.count(), large.count());
}

TEST(MaskTest, SynthesisStencilIsRecovered) {
  const Palette p = default_palette();
  Rng rng(11);
  auto tile = RasterTile::filled(32, 32, p.background);
  FeatureMask stencil(32, 32);
  for (int i = 0; i < 200; ++i) {
    const int r = static_cast<int>(uniform_index(rng, 32)), c = static_cast<int>(uniform_index(rng, 32));
    tile.set_rgb(r, c, p.at("house").colors.front());
    stencil.set(r, c, true);
  }
  EXPECT_EQ(extract_mask(tile, p.at("house")).bits(), stencil.bits());
}

TEST(RasterTileTest, InvariantsAreEnforced) {
  EXPECT_THROW(RasterTile(0, 4, 3), Error);
  EXPECT_THROW(RasterTile(4, 4, 3, std::vector<std::uint8_t>(10)), Error);
  EXPECT_THROW(RasterTile(4, 4, 3, QuadKey{}, 0.0), Error);
  const RasterTile t(512, 512, 3);
  EXPECT_EQ(t.pixels().size(), 512u * 512u * 3u);
  EXPECT_EQ(t.ground_resolution(), 1.0);
}

TEST(EntropyTest, ConstantTileIsZero) {
  EXPECT_EQ(tile_entropy(RasterTile::filled(8, 8, {7, 7, 7})), 0.0);
}

TEST(EntropyTest, TwoEquiprobableValuesIsOneBit) {
  RasterTile t(4, 4, 1);
  for (std::size_t i = 0; i < t.pixels().size(); ++i) t.pixels()[i] = i % 2 ? 200 : 3;
  EXPECT_DOUBLE_EQ(tile_entropy(t), 1.0);
}

TEST(EntropyTest, RampOfSixtyFourValuesIsSixBits) {
  RasterTile t(8, 8, 1);
  for (std::size_t i = 0; i < 64; ++i) t.pixels()[i] = static_cast<std::uint8_t>(i * 4);
  EXPECT_NEAR(tile_entropy(t), 6.0, 1e-12);
}

TEST(EntropyTest, BoundedAndPermutationInvariant) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    RasterTile t(16, 16, 3);
    for (auto& v : t.pixels()) v = static_cast<std::uint8_t>(rng());
    const double h = tile_entropy(t);
    EXPECT_GE(h, 0.0);
    EXPECT_LE(h, 8.0);
    auto& px = t.pixels();
    for (std::size_t i = px.size() - 1; i > 0; --i) std::swap(px[i], px[uniform_index(rng, i + 1)]);
    EXPECT_NEAR(tile_entropy(t), h, 1e-12);
  }
}

std::vector<RasterTile> mixed_corpus() {
  std::vector<RasterTile> tiles;
  Rng rng(9);
  for (int i = 0; i < 6; ++i) {
    if (i % 2 == 0) {
      const auto v = static_cast<std::uint8_t>(i * 10);
      tiles.push_back(RasterTile::filled(8, 8, {v, v, v}));
    } else {
      RasterTile t(8, 8, 3);
      for (auto& v : t.pixels()) v = static_cast<std::uint8_t>(rng());
      tiles.push_back(std::move(t));
    }
  }
  return tiles;
}

TEST(FilterTest, ThresholdsAtExtremes) {
  auto tiles = mixed_corpus();
  EXPECT_EQ(filter_tiles(tiles, 0.0).kept.size(), tiles.size());
  auto all_dropped = filter_tiles(tiles, 8.0 + 1e-9);
  EXPECT_TRUE(all_dropped.kept.empty());
  EXPECT_EQ(all_dropped.dropped.size(), tiles.size());
  EXPECT_THROW(filter_tiles(tiles, -1.0), Error);
}

TEST(FilterTest, KeepsNoisyTilesInOrder) {
  auto tiles = mixed_corpus();
  std::vector<double> entropies;
  for (const auto& t : tiles) entropies.push_back(tile_entropy(t));
  for (std::size_t i = 0; i < tiles.size(); ++i) {
    if (i % 2 == 0) {
      EXPECT_EQ(entropies[i], 0.0);
    } else {
      EXPECT_GT(entropies[i], 0.5);
    }
  }
  const auto res = filter_tiles(tiles, 0.5);
  ASSERT_EQ(res.kept.size(), 3u);
  ASSERT_EQ(res.dropped.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(res.kept[k], tiles[2 * k + 1]);
    EXPECT_EQ(res.dropped[k], tiles[2 * k]);
  }
}

TEST(QuadKeyTest, EmptyKeyRoundTrips) {
  const QuadKey k{0, {}, 0};
  const auto bytes = quadkey_encode(k);
  EXPECT_EQ(bytes.size(), 16u);
  EXPECT_EQ(quadkey_decode(bytes), k);
}

TEST(QuadKeyTest, RandomKeysRoundTrip) {
  Rng rng(1234);
  for (int i = 0; i < 1000; ++i) {
    QuadKey k;
    const bool timed = i % 3 == 0;
    k.level = static_cast<int>(uniform_index(rng, timed ? 33 : 57));
    for (int d = 0; d < k.level; ++d) k.path.push_back(static_cast<std::uint8_t>(uniform_index(rng, 4)));
    if (timed) k.timestamp = 1 + static_cast<std::int64_t>(uniform_index(rng, kMaxQuadKeyTimestamp));
    EXPECT_EQ(quadkey_decode(quadkey_encode(k)), k);
  }
}

std::size_t common_prefix_bits(const QuadKeyBytes& a, const QuadKeyBytes& b) {
  std::size_t bits = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::uint8_t x = a[i] ^ b[i];
    if (x == 0) {
      bits += 8;
      continue;
    }
    for (int s = 7; s >= 0 && !((x >> s) & 1); --s) ++bits;
    break;
  }
  return bits;
}

TEST(QuadKeyTest, PrefixSharingKeysAreCloserInByteOrder) {
  // All level-4 keys: keys sharing the first three digits always share a
  // longer bit prefix than keys that differ at the first digit, and the
  // sorted byte order keeps every 3-digit prefix group contiguous.
  std::vector<std::pair<QuadKeyBytes, std::vector<std::uint8_t>>> keys;
  for (int n = 0; n < 256; ++n) {
    std::vector<std::uint8_t> path{static_cast<std::uint8_t>(n >> 6 & 3), static_cast<std::uint8_t>(n >> 4 & 3),
                                   static_cast<std::uint8_t>(n >> 2 & 3), static_cast<std::uint8_t>(n & 3)};
    keys.emplace_back(quadkey_encode(4, path), path);
  }
  for (const auto& [ka, pa] : keys) {
    for (const auto& [kb, pb] : keys) {
      if (pa == pb) continue;
      const bool share3 = std::equal(pa.begin(), pa.begin() + 3, pb.begin());
      if (!share3) continue;
      for (const auto& [kc, pc] : keys) {
        if (pc[0] == pa[0]) continue;
        EXPECT_GT(common_prefix_bits(ka, kb), common_prefix_bits(ka, kc));
      }
    }
  }
  auto sorted = keys;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    // Byte order equals lexicographic digit order.
    EXPECT_EQ(sorted[i].second, keys[i].second);
  }
}

TEST(QuadKeyTest, DistinctInputsGiveDistinctKeys) {
  std::set<QuadKeyBytes> seen;
  for (int level = 0; level <= 3; ++level) {
    const int combos = 1 << (2 * level);
    for (int n = 0; n < combos; ++n) {
      std::vector<std::uint8_t> path;
      for (int d = level - 1; d >= 0; --d) path.push_back(static_cast<std::uint8_t>(n >> (2 * d) & 3));
      for (std::int64_t t : {0, 1, 1700000000}) { EXPECT_TRUE(seen.insert(quadkey_encode(level, path, t)).second); }
    }
  }
}

TEST(QuadKeyTest, ErrorsAreStructured) {
  try {
    quadkey_encode(57, std::vector<std::uint8_t>(57, 0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kLevelOverflow);
  }
  try {
    quadkey_encode(2, {0, 4});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidDigit);
  }
  EXPECT_THROW(quadkey_encode(33, std::vector<std::uint8_t>(33, 1), 5), Error);
  auto key = quadkey_encode(1, {2});
  key[1] |= 0x01;  // padding digit
  EXPECT_THROW(quadkey_decode(key), Error);
}

TEST(QuadKeyTest, TileCoordinates) {
  EXPECT_EQ(quadkey_to_string(quadkey_from_tile(3, 5, 3)), "213");
  EXPECT_EQ(quadkey_from_string("213"), quadkey_from_tile(3, 5, 3));
  EXPECT_THROW(quadkey_from_string("12a"), Error);
}

TEST(SplitTest, FourToOne) {
  std::vector<int> items(100);
  std::iota(items.begin(), items.end(), 0);
  const auto s = split_dataset(items, 4, 1, 42);
  EXPECT_EQ(s.train.size(), 80u);
  EXPECT_EQ(s.test.size(), 20u);
  std::vector<int> all = s.train;
  all.insert(all.end(), s.test.begin(), s.test.end());
  std::sort(all.begin(), all.end());
  EXPECT_EQ(all, items);

  const auto small = split_dataset(std::vector<int>{1, 2, 3, 4, 5}, 4, 1, 0);
  EXPECT_EQ(small.train.size(), 4u);
  EXPECT_EQ(small.test.size(), 1u);
}

TEST(SplitTest, DeterministicPerSeed) {
  std::vector<int> items(50);
  std::iota(items.begin(), items.end(), 0);
  const auto a = split_dataset(items, 4, 1, 7);
  const auto b = split_dataset(items, 4, 1, 7);
  const auto c = split_dataset(items, 4, 1, 8);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
  EXPECT_NE(a.train, c.train);
}

TEST(SplitTest, RatioWithinOneTile) {
  for (std::size_t n = 1; n < 60; ++n) {
    std::vector<std::size_t> items(n);
    const auto s = split_dataset(items, 4, 1, n);
    const double exact = static_cast<double>(n) * 4.0 / 5.0;
    EXPECT_LE(std::abs(static_cast<double>(s.train.size()) - exact), 1.0);
  }
}

TEST(SplitTest, RejectsBadInput) {
  EXPECT_THROW(split_dataset(std::vector<int>{}, 4, 1, 0), Error);
  EXPECT_THROW(split_dataset(std::vector<int>{1}, 0, 1, 0), Error);
}

}  // namespace
}  // namespace osmgen
