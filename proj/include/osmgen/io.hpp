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

// On-disk formats: PNG tiles with JSON sidecars, the paired corpus layout
// and feature palette files.

#pragma once

#include <png.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "osmgen/error.hpp"
#include "osmgen/raster.hpp"

namespace osmgen {

namespace fs = std::filesystem;
using Json = nlohmann::json;

inline std::string to_hex(const QuadKeyBytes& key) {
  static const char* kDigits = "0123456789abcdef";
  std::string s;
  for (auto b : key) {
    s.push_back(kDigits[b >> 4]);
    s.push_back(kDigits[b & 0xF]);
  }
  return s;
}

inline QuadKeyBytes quadkey_bytes_from_hex(const std::string& hex) {
  if (hex.size() != 32) throw Error(ErrorCode::kParse, "quadkey hex must be 32 characters");
  QuadKeyBytes key{};
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw Error(ErrorCode::kParse, std::string("bad hex character '") + c + "'");
  };
  for (int i = 0; i < 16; ++i) {
    key[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
  }
  return key;
}

// ---------------------------------------------------------------------------
// PNG

inline void write_png(const fs::path& path, const RasterTile& tile) {
  if (tile.channels() != 1 && tile.channels() != 3) {
    throw Error(ErrorCode::kChannelCount, "PNG export supports 1 or 3 channels");
  }
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(tile.width());
  image.height = static_cast<png_uint_32>(tile.height());
  image.format = tile.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, tile.pixels().data(), 0,
                               nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw Error(ErrorCode::kIo, "cannot write " + path.string() + ": " + msg);
  }
}

/// Reads an 8-bit PNG converted to `channels` (1 = gray, 3 = RGB).
inline RasterTile read_png(const fs::path& path, int channels = 3) {
  if (channels != 1 && channels != 3) {
    throw Error(ErrorCode::kChannelCount, "PNG import supports 1 or 3 channels");
  }
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
    throw Error(ErrorCode::kIo, "cannot read " + path.string() + ": " + image.message);
  }
  image.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw Error(ErrorCode::kIo, "cannot decode " + path.string() + ": " + msg);
  }
  return RasterTile(static_cast<int>(image.width), static_cast<int>(image.height), channels,
                    std::move(buf));
}

// ---------------------------------------------------------------------------
// Sidecar metadata: {quadkey, level, ground_resolution_m, timestamp, key_hex}

inline Json tile_meta_to_json(const RasterTile& tile) {
  const QuadKey& k = tile.geo();
  return Json{{"quadkey", quadkey_to_string(k)},
              {"level", k.level},
              {"ground_resolution_m", tile.ground_resolution()},
              {"timestamp", k.timestamp},
              {"key_hex", to_hex(quadkey_encode(k))}};
}

inline void apply_tile_meta(const Json& j, RasterTile& tile) {
  try {
    QuadKey k = quadkey_from_string(j.at("quadkey").get<std::string>(),
                                    j.value("timestamp", std::int64_t{0}));
    if (j.contains("level") && j.at("level").get<int>() != k.level) {
      throw Error(ErrorCode::kParse, "sidecar level disagrees with quadkey");
    }
    const double res = j.value("ground_resolution_m", 1.0);
    tile = RasterTile(tile.width(), tile.height(), tile.channels(), std::move(tile.pixels()),
                      std::move(k), res);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("bad tile sidecar: ") + e.what());
  }
}

inline Json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
}

inline void write_json_file(const fs::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

inline void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
}

/// Writes <dir>/<stem>.png and <dir>/<stem>.json.
inline void write_tile(const fs::path& dir, const std::string& stem, const RasterTile& tile) {
  fs::create_directories(dir);
  write_png(dir / (stem + ".png"), tile);
  write_json_file(dir / (stem + ".json"), tile_meta_to_json(tile));
}

/// Reads <dir>/<stem>.png; applies the sidecar when present, otherwise the
/// stem is taken as the quadkey when it parses as one.
inline RasterTile read_tile(const fs::path& dir, const std::string& stem) {
  RasterTile tile = read_png(dir / (stem + ".png"));
  const fs::path sidecar = dir / (stem + ".json");
  if (fs::exists(sidecar)) {
    apply_tile_meta(read_json_file(sidecar), tile);
  } else {
    try {
      tile.set_geo(quadkey_from_string(stem));
    } catch (const Error&) {
    }
  }
  return tile;
}

/// Sorted stems of all *.png files in dir.
inline std::vector<std::string> list_tile_stems(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::kIo, "not a directory: " + dir.string());
  std::vector<std::string> stems;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".png") {
      stems.push_back(e.path().stem().string());
    }
  }
  std::sort(stems.begin(), stems.end());
  return stems;
}

struct KeyedTile {
  std::string key;
  RasterTile tile;
};

inline std::vector<KeyedTile> read_tile_dir(const fs::path& dir) {
  std::vector<KeyedTile> out;
  for (const auto& stem : list_tile_stems(dir)) out.push_back({stem, read_tile(dir, stem)});
  return out;
}

struct KeyPairing {
  std::vector<std::string> paired;
  std::vector<std::string> only_left;
  std::vector<std::string> only_right;
};

inline KeyPairing pair_keys(std::vector<std::string> left, std::vector<std::string> right) {
  std::sort(left.begin(), left.end());
  std::sort(right.begin(), right.end());
  KeyPairing p;
  std::set_intersection(left.begin(), left.end(), right.begin(), right.end(),
                        std::back_inserter(p.paired));
  std::set_difference(left.begin(), left.end(), right.begin(), right.end(),
                      std::back_inserter(p.only_left));
  std::set_difference(right.begin(), right.end(), left.begin(), left.end(),
                      std::back_inserter(p.only_right));
  return p;
}

// ---------------------------------------------------------------------------
// Palette JSON
//
// {"background": [r,g,b],
//  "classes": [{"name": "house", "colors": [[r,g,b], ...], "delta": 10.0}, ...]}

inline Json color_to_json(ColorRGB c) { return Json::array({c.r, c.g, c.b}); }

inline ColorRGB color_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::kParse, "color must be [r,g,b]");
  ColorRGB c;
  std::uint8_t* ch[3] = {&c.r, &c.g, &c.b};
  for (int i = 0; i < 3; ++i) {
    if (!j[i].is_number_integer()) throw Error(ErrorCode::kParse, "color component not an integer");
    const int v = j[i].get<int>();
    if (v < 0 || v > 255) throw Error(ErrorCode::kParse, "color component outside [0,255]");
    *ch[i] = static_cast<std::uint8_t>(v);
  }
  return c;
}

inline Json palette_to_json(const Palette& p) {
  Json classes = Json::array();
  for (const auto& c : p.classes) {
    Json colors = Json::array();
    for (auto col : c.colors) colors.push_back(color_to_json(col));
    classes.push_back({{"name", c.class_name}, {"colors", colors}, {"delta", c.delta_threshold}});
  }
  return {{"background", color_to_json(p.background)}, {"classes", classes}};
}

inline Palette palette_from_json(const Json& j) {
  Palette p;
  try {
    if (j.contains("background")) p.background = color_from_json(j.at("background"));
    for (const auto& cj : j.at("classes")) {
      FeatureClassConfig c;
      c.class_name = cj.at("name").get<std::string>();
      for (const auto& col : cj.at("colors")) c.colors.push_back(color_from_json(col));
      c.delta_threshold = cj.value("delta", kDefaultDeltaE);
      c.validate();
      if (p.contains(c.class_name)) {
        throw Error(ErrorCode::kParse, "duplicate palette class '" + c.class_name + "'");
      }
      p.classes.push_back(std::move(c));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("bad palette: ") + e.what());
  }
  if (p.classes.empty()) throw Error(ErrorCode::kParse, "palette defines no classes");
  return p;
}

inline Palette load_palette(const fs::path& path) { return palette_from_json(read_json_file(path)); }

}  // namespace osmgen
