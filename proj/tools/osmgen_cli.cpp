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

// osmgen command-line tool. Options resolve as flag > --config file >
// built-in default.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "osmgen/osmgen.hpp"

namespace {

using osmgen::Error;
using osmgen::ErrorCode;
using osmgen::Json;
namespace fs = std::filesystem;

constexpr int kExitError = 1;
constexpr int kExitUsage = 2;

const char* kErrorFooter =
    "Errors are printed to stderr as {\"error\": {\"code\", \"message\"}} with a nonzero exit.\n"
    "Codes: usage (unknown flag, bad value), parse (malformed config or JSON),\n"
    "io (missing or unreadable file), invalid_argument, shape_mismatch, channel_count,\n"
    "empty_input, non_finite, divergence, unpaired (missing tile pairs),\n"
    "test_split_guard, out_of_bounds, level_overflow, invalid_digit.\n"
    "Exit codes: 0 success, 1 runtime error, 2 usage error.";

void print_error(const std::string& code, const std::string& message, Json extra = Json::object()) {
  Json err = {{"code", code}, {"message", message}};
  for (auto& [k, v] : extra.items()) err[k] = v;
  std::cerr << Json{{"error", err}}.dump() << std::endl;
}

// Settings shared by subcommands. Unset flags fall back to the config file,
// then to these defaults.
struct ToolConfig {
  std::string palette;  // empty: built-in palette
  double iou_threshold = osmgen::kDefaultIouThreshold;
  double entropy_threshold = 3.0;
  double ground_resolution_m = 1.0;
  double reference_density = osmgen::kDefaultReferenceDensity;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string class_name = "house";
  std::string city;
};

struct Flags {
  std::string config;
  std::optional<std::string> palette;
  std::optional<double> iou_threshold;
  std::optional<double> entropy_threshold;
  std::optional<double> ground_resolution_m;
  std::optional<double> reference_density;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> class_name;
  std::optional<std::string> city;
};

template <typename T>
void resolve(T& out, const std::optional<T>& flag, const Json& cfg, const char* key) {
  if (flag) {
    out = *flag;
  } else if (cfg.contains(key)) {
    try {
      out = cfg.at(key).get<T>();
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::kParse, std::string("config key '") + key + "': " + e.what());
    }
  }
}

ToolConfig resolve_config(const Flags& f) {
  Json cfg = Json::object();
  if (!f.config.empty()) {
    cfg = osmgen::read_json_file(f.config);
    if (!cfg.is_object()) throw Error(ErrorCode::kParse, "config must be a JSON object");
    static const std::vector<std::string> kKnown = {"palette", "iou_threshold", "entropy_threshold",
                                                    "ground_resolution_m", "reference_density", "seed",
                                                    "threads", "class", "city"};
    for (const auto& [k, v] : cfg.items()) {
      if (std::find(kKnown.begin(), kKnown.end(), k) == kKnown.end()) {
        throw Error(ErrorCode::kParse, "unknown config key '" + k + "'");
      }
    }
  }
  ToolConfig c;
  resolve(c.palette, f.palette, cfg, "palette");
  resolve(c.iou_threshold, f.iou_threshold, cfg, "iou_threshold");
  resolve(c.entropy_threshold, f.entropy_threshold, cfg, "entropy_threshold");
  resolve(c.ground_resolution_m, f.ground_resolution_m, cfg, "ground_resolution_m");
  resolve(c.reference_density, f.reference_density, cfg, "reference_density");
  resolve(c.seed, f.seed, cfg, "seed");
  resolve(c.threads, f.threads, cfg, "threads");
  resolve(c.class_name, f.class_name, cfg, "class");
  resolve(c.city, f.city, cfg, "city");
  // A relative palette path in a config file is taken relative to that file.
  if (!f.palette && cfg.contains("palette") && fs::path(c.palette).is_relative()) {
    c.palette = (fs::path(f.config).parent_path() / c.palette).string();
  }
  if (!(c.iou_threshold > 0.0 && c.iou_threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "iou_threshold must lie in (0, 1]");
  }
  if (!(c.entropy_threshold >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "entropy_threshold must be >= 0");
  if (!(c.ground_resolution_m > 0.0)) throw Error(ErrorCode::kInvalidArgument, "ground_resolution_m must be > 0");
  if (!(c.reference_density > 0.0)) throw Error(ErrorCode::kInvalidArgument, "reference_density must be > 0");
  if (c.threads == 0) throw Error(ErrorCode::kInvalidArgument, "threads must be >= 1");
  return c;
}

osmgen::Palette palette_of(const ToolConfig& c) {
  return c.palette.empty() ? osmgen::default_palette() : osmgen::load_palette(c.palette);
}

void print_json(const Json& j) { std::cout << j.dump(2) << std::endl; }

osmgen::RasterTile read_tile_file(const fs::path& png) {
  return osmgen::read_tile(png.parent_path().empty() ? fs::path(".") : png.parent_path(), png.stem().string());
}

void require_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::kIo, "not a directory: " + dir.string());
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
  std::string out;
  std::size_t tiles = 4;
  osmgen::SceneDistribution dist;
  std::optional<double> target_density;
  std::string split = "unspecified";
};

int run_synth(const ToolConfig& c, SynthArgs a) {
  const auto role = osmgen::split_role_from_string(a.split);
  a.dist.seed = c.seed;
  a.dist.ground_resolution = c.ground_resolution_m;
  a.dist.target_density = a.target_density;
  const auto summary = osmgen::make_corpus(a.tiles, a.dist, palette_of(c), a.out, c.threads);
  if (role != osmgen::SplitRole::kUnspecified) {
    Json corpus = osmgen::read_json_file(fs::path(a.out) / "corpus.json");
    corpus["split"] = osmgen::to_string(role);
    osmgen::write_json_file(fs::path(a.out) / "corpus.json", corpus);
  }
  print_json({{"out", a.out},
              {"tiles", summary.keys.size()},
              {"houses_planted", summary.houses_planted},
              {"houses_labeled", summary.houses_labeled},
              {"area_km2", summary.area_km2}});
  return 0;
}

// ---------------------------------------------------------------------------
// mask

struct MaskArgs {
  std::string map;
  std::string out;
  std::string geojson;
  int connectivity = 8;
  std::size_t min_area = 4;
};

int run_mask(const ToolConfig& c, const MaskArgs& a) {
  const auto tile = read_tile_file(a.map);
  const auto palette = palette_of(c);
  const auto mask = osmgen::extract_mask(tile, palette.at(c.class_name));
  osmgen::RasterTile img(mask.width(), mask.height(), 1, tile.geo(), tile.ground_resolution());
  for (std::size_t i = 0; i < mask.bits().size(); ++i) img.pixels()[i] = mask.get_index(i) ? 255 : 0;
  osmgen::write_png(a.out, img);
  osmgen::PolygonizeOptions po;
  po.connectivity = a.connectivity == 4 ? osmgen::Connectivity::kFour : osmgen::Connectivity::kEight;
  po.min_area_px = a.min_area;
  const auto polys = osmgen::polygonize(mask, po);
  if (!a.geojson.empty()) {
    osmgen::write_json_file(a.geojson, osmgen::polygons_to_geojson(polys, tile.geo()));
  }
  print_json({{"class", c.class_name}, {"mask_pixels", mask.count()}, {"polygons", polys.size()}, {"out", a.out}});
  return 0;
}

// ---------------------------------------------------------------------------
// filter

struct FilterArgs {
  std::string images;
  std::string out;
};

int run_filter(const ToolConfig& c, const FilterArgs& a) {
  require_dir(a.images);
  const auto tiles = osmgen::read_tile_dir(a.images);
  std::vector<osmgen::RasterTile> plain;
  for (const auto& t : tiles) plain.push_back(t.tile);
  const auto res = osmgen::filter_tiles(plain, c.entropy_threshold);
  Json kept = Json::array(), dropped = Json::array();
  for (const auto& t : tiles) {
    const double h = osmgen::tile_entropy(t.tile);
    (h >= c.entropy_threshold ? kept : dropped).push_back({{"tile", t.key}, {"entropy", h}});
  }
  if (kept.size() != res.kept.size()) throw Error(ErrorCode::kInvalidArgument, "inconsistent filter result");
  const Json report = {{"schema_version", 1}, {"entropy_threshold", c.entropy_threshold},
                       {"kept", kept}, {"dropped", dropped}};
  if (!a.out.empty()) osmgen::write_json_file(a.out, report);
  print_json({{"kept", kept.size()}, {"dropped", dropped.size()}});
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string gt;
  std::string det;
  std::string out;
  std::string csv;
};

int run_eval(const ToolConfig& c, const EvalArgs& a) {
  require_dir(a.gt);
  require_dir(a.det);
  osmgen::EvalOptions opts;
  opts.class_name = c.class_name;
  opts.iou_threshold = c.iou_threshold;
  opts.threads = c.threads;
  const auto rep = osmgen::evaluate_corpus(osmgen::read_tile_dir(a.gt), osmgen::read_tile_dir(a.det),
                                           palette_of(c), opts);
  const Json j = osmgen::report_to_json(rep);
  if (!a.out.empty()) osmgen::write_json_file(a.out, j);
  if (!a.csv.empty()) {
    osmgen::write_text_file(a.csv, std::string(osmgen::kReportCsvHeader) + "\n" +
                                       osmgen::report_csv_row(c.city, rep) + "\n");
  }
  print_json({{"tp", j["tp"]}, {"fp", j["fp"]}, {"fn", j["fn"]},
              {"precision", j["precision"]}, {"recall", j["recall"]}, {"f1", j["f1"]}});
  if (!rep.complete()) {
    const std::string code = rep.errors.empty() ? "unpaired" : rep.errors.front().code;
    print_error(code, "evaluation incomplete: " + std::to_string(rep.errors.size()) + " failed pair(s), " +
                          std::to_string(rep.missing_detection.size() + rep.missing_ground_truth.size()) +
                          " unpaired tile(s)",
                {{"errors", j["errors"]},
                 {"missing_detection", j["missing_detection"]},
                 {"missing_ground_truth", j["missing_ground_truth"]}});
    return kExitError;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// augment

struct AugmentArgs {
  std::string train;
  std::string generated;
  std::string out;
  std::string report;
  std::string split;
  bool include_roads = false;
};

osmgen::SplitRole corpus_split(const fs::path& dir) {
  for (const fs::path& p : {dir / "corpus.json", dir.parent_path() / "corpus.json"}) {
    if (fs::exists(p)) return osmgen::split_role_from_string(osmgen::read_json_file(p).value("split", ""));
  }
  return osmgen::SplitRole::kUnspecified;
}

int run_augment(const ToolConfig& c, const AugmentArgs& a) {
  const fs::path train_dir = fs::absolute(a.train).lexically_normal();
  require_dir(train_dir);
  require_dir(a.generated);
  osmgen::CorpusAugmentOptions opts;
  // A corpus.json flagged test cannot be overridden from the command line.
  opts.split = corpus_split(train_dir);
  if (!a.split.empty() && opts.split != osmgen::SplitRole::kTest) {
    opts.split = osmgen::split_role_from_string(a.split);
  }
  opts.augment.iou_threshold = c.iou_threshold;
  opts.augment.classes = {c.class_name};
  if (a.include_roads) {
    for (const char* r : {"road", "main_road", "highway"}) {
      if (r != c.class_name) opts.augment.classes.emplace_back(r);
    }
  }
  opts.ground_resolution = c.ground_resolution_m;
  opts.density.city = c.city;
  opts.density.class_name = c.class_name;
  opts.density.reference_density = c.reference_density;
  opts.threads = c.threads;
  const auto res = osmgen::augment_corpus(osmgen::read_tile_dir(train_dir), osmgen::read_tile_dir(a.generated),
                                          palette_of(c), opts);
  fs::create_directories(a.out);
  for (const auto& t : res.augmented) osmgen::write_tile(a.out, t.key, t.tile);
  const double increase = res.after.density_per_km2 / res.before.density_per_km2 - 1.0;
  const Json report = {{"schema_version", 1},
                       {"before", osmgen::density_to_json(res.before)},
                       {"after", osmgen::density_to_json(res.after)},
                       {"relative_increase", std::isfinite(increase) ? Json(increase) : Json(nullptr)},
                       {"merged_features", res.merged_features},
                       {"unpaired_train", res.unpaired_train},
                       {"unpaired_generated", res.unpaired_generated}};
  if (!a.report.empty()) osmgen::write_json_file(a.report, report);
  print_json({{"before", res.before.density_per_km2},
              {"after", res.after.density_per_km2},
              {"merged_features", res.merged_features}});
  return 0;
}

// ---------------------------------------------------------------------------
// density

struct DensityArgs {
  std::string maps;
  std::string out;
};

int run_density(const ToolConfig& c, const DensityArgs& a) {
  require_dir(a.maps);
  osmgen::DensityOptions opts;
  opts.city = c.city;
  opts.class_name = c.class_name;
  opts.reference_density = c.reference_density;
  opts.threads = c.threads;
  const auto rep = osmgen::house_density(osmgen::read_tile_dir(a.maps), palette_of(c), c.ground_resolution_m, opts);
  Json j = osmgen::density_to_json(rep);
  j["schema_version"] = 1;
  if (!a.out.empty()) osmgen::write_json_file(a.out, j);
  print_json(j);
  return 0;
}

// ---------------------------------------------------------------------------
// loss-check

struct LossCheckArgs {
  std::string image;
  std::string map;
  std::string generator = "affine";
  double perturb = 0.3;
  double weight = 1.0;
  double step = 1e-6;
  std::string out;
};

std::unique_ptr<osmgen::GeneratorFn> make_generator(const std::string& kind, int channels) {
  if (kind == "affine") return std::make_unique<osmgen::AffineGenerator>(channels);
  if (kind == "conv") return std::make_unique<osmgen::Conv3x3Generator>(channels);
  if (kind == "identity") return std::make_unique<osmgen::IdentityGenerator>();
  throw Error(ErrorCode::kInvalidArgument, "unknown generator '" + kind + "'");
}

int run_loss_check(const ToolConfig& c, const LossCheckArgs& a) {
  const auto image = read_tile_file(a.image);
  const auto map = read_tile_file(a.map);
  const auto x = osmgen::tensor_from_tile(image);
  auto g_y = make_generator(a.generator, x.channels());
  auto g_x = make_generator(a.generator, x.channels());
  osmgen::Rng rng(osmgen::derive_seed(c.seed, 0x10cc));
  for (auto* g : {g_y.get(), g_x.get()}) {
    auto p = g->params();
    for (auto& v : p) v += a.perturb * (osmgen::uniform_unit(rng) - 0.5);
    g->set_params(p);
  }
  osmgen::CycleLossOptions opts;
  opts.weight = a.weight;
  const auto r = osmgen::cycle_fw_loss(x, map, *g_y, *g_x, palette_of(c), opts);

  // Central differences with the mask held fixed.
  auto loss_at = [&]() { return a.weight * osmgen::fw_loss(x, g_x->forward(g_y->forward(x)), r.mask); };
  auto max_error = [&](osmgen::GeneratorFn& g, const std::vector<double>& analytic) {
    double worst = 0.0;
    const auto base = g.params();
    for (std::size_t i = 0; i < base.size(); ++i) {
      auto p = base;
      p[i] = base[i] + a.step;
      g.set_params(p);
      const double up = loss_at();
      p[i] = base[i] - a.step;
      g.set_params(p);
      const double dn = loss_at();
      g.set_params(base);
      const double fd = (up - dn) / (2 * a.step);
      worst = std::max(worst, std::abs(fd - analytic[i]) / std::max(1.0, std::abs(analytic[i])));
    }
    return worst;
  };
  const double err_gx = max_error(*g_x, r.grad_gx);
  const double err_gy = max_error(*g_y, r.grad_gy);
  const Json j = {{"generator", a.generator},
                  {"loss", r.loss},
                  {"mask_pixels", r.mask.count()},
                  {"params_gx", r.grad_gx.size()},
                  {"params_gy", r.grad_gy.size()},
                  {"max_rel_error_gx", err_gx},
                  {"max_rel_error_gy", err_gy},
                  {"max_rel_error", std::max(err_gx, err_gy)}};
  if (!a.out.empty()) osmgen::write_json_file(a.out, j);
  print_json(j);
  return 0;
}

// ---------------------------------------------------------------------------
// dpsgd-sim

struct DpsgdArgs {
  osmgen::TrainConfig train;
  std::optional<double> lr_final;
  std::string objective = "least-squares";
  std::string averaging = "random_partner";
  std::size_t samples = 1024;
  std::size_t dim = 8;
  double noise = 0.1;
  double coupling = 0.5;
  bool threaded = false;
  std::string out;
  std::string summary;
};

std::unique_ptr<osmgen::Objective> make_objective(const DpsgdArgs& a, std::uint64_t seed) {
  if (a.objective == "least-squares") {
    return std::make_unique<osmgen::LeastSquares>(osmgen::LeastSquares::random(a.samples, a.dim, a.noise, seed));
  }
  if (a.objective == "logistic") {
    return std::make_unique<osmgen::LogisticRegression>(osmgen::LogisticRegression::random(a.samples, a.dim, seed));
  }
  if (a.objective == "coupled") {
    return std::make_unique<osmgen::CoupledQuadratic>(
        osmgen::CoupledQuadratic::random(a.samples, a.dim, a.coupling, seed));
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown objective '" + a.objective + "'");
}

int run_dpsgd(const ToolConfig& c, DpsgdArgs a) {
  a.train.seed = c.seed;
  a.train.lr_final = a.lr_final;
  a.train.averaging = osmgen::averaging_from_string(a.averaging);
  const auto obj = make_objective(a, c.seed);
  const auto trace = a.threaded ? osmgen::run_training_threaded(*obj, a.train) : osmgen::run_training(*obj, a.train);
  if (!a.out.empty()) osmgen::write_text_file(a.out, osmgen::trace_to_csv(trace));
  double worst_drift = 0.0;
  for (const auto& ev : trace.averaging) worst_drift = std::max(worst_drift, ev.sum_drift);
  const Json j = {{"objective", a.objective},
                  {"workers", a.train.workers},
                  {"steps", a.train.steps},
                  {"averaging_events", trace.averaging.size()},
                  {"max_sum_drift", worst_drift},
                  {"final_consensus_distance", trace.final_consensus_distance},
                  {"final_global_mean_loss", trace.final_global_mean_loss}};
  if (!a.summary.empty()) osmgen::write_json_file(a.summary, j);
  print_json(j);
  return 0;
}

// ---------------------------------------------------------------------------
// split

struct SplitArgs {
  std::string images;
  int ratio_train = 4;
  int ratio_test = 1;
  std::string out;
};

int run_split(const ToolConfig& c, const SplitArgs& a) {
  require_dir(a.images);
  const auto s = osmgen::split_dataset(osmgen::list_tile_stems(a.images), a.ratio_train, a.ratio_test, c.seed);
  const Json j = {{"schema_version", 1}, {"seed", c.seed}, {"train", s.train}, {"test", s.test}};
  if (!a.out.empty()) osmgen::write_json_file(a.out, j);
  print_json({{"train", s.train.size()}, {"test", s.test.size()}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"osmgen: map-label tooling for aerial image translation"};
  app.require_subcommand(1);
  app.fallthrough();
  app.footer(kErrorFooter);

  Flags f;
  app.add_option("--config", f.config, "JSON config file (keys: palette, iou_threshold, entropy_threshold, "
                                        "ground_resolution_m, reference_density, seed, threads, class, city)")
      ->check(CLI::ExistingFile);
  app.add_option("--palette", f.palette, "palette JSON (default: built-in)");
  app.add_option("--iou-threshold", f.iou_threshold, "IoU match threshold (default 0.3)");
  app.add_option("--entropy-threshold", f.entropy_threshold, "minimum tile entropy in bits (default 3.0)");
  app.add_option("--ground-resolution", f.ground_resolution_m, "metres per pixel (default 1.0)");
  app.add_option("--reference-density", f.reference_density, "completeness reference, houses/km^2 (default 3283)");
  app.add_option("--seed", f.seed, "seed for every random draw (default 0)");
  app.add_option("--threads", f.threads, "worker threads for per-tile work (default 1)");
  app.add_option("--class", f.class_name, "feature class (default house)");
  app.add_option("--city", f.city, "city label for reports");

  SynthArgs synth;
  auto* s_synth = app.add_subcommand("synth", "generate a synthetic (image, map, truth) corpus");
  s_synth->add_option("--out", synth.out, "output directory")->required();
  s_synth->add_option("--tiles", synth.tiles, "number of tiles");
  s_synth->add_option("--tile-size", synth.dist.tile_size, "tile side in pixels");
  s_synth->add_option("--cell", synth.dist.cell_px, "street-grid cell size in pixels");
  s_synth->add_option("--houses-min", synth.dist.houses_min, "minimum houses per tile");
  s_synth->add_option("--houses-max", synth.dist.houses_max, "maximum houses per tile");
  s_synth->add_option("--roads", synth.dist.roads, "roads per tile");
  s_synth->add_option("--highways", synth.dist.highways, "highways per tile");
  s_synth->add_option("--dropout", synth.dist.label_dropout, "probability a house is missing from the map");
  s_synth->add_option("--jitter", synth.dist.jitter, "max label offset in pixels");
  s_synth->add_option("--target-density", synth.target_density, "total planted houses per km^2");
  s_synth->add_option("--key-level", synth.dist.key_level, "quadkey level of the tiles");
  s_synth->add_option("--split", synth.split, "split flag written to corpus.json (unspecified|train|test)");

  MaskArgs mask;
  auto* s_mask = app.add_subcommand("mask", "extract a feature mask and polygons from one map tile");
  s_mask->add_option("--map", mask.map, "map tile PNG")->required()->check(CLI::ExistingFile);
  s_mask->add_option("--out", mask.out, "mask PNG (0/255)")->required();
  s_mask->add_option("--geojson", mask.geojson, "polygon GeoJSON output (pixel space)");
  s_mask->add_option("--connectivity", mask.connectivity, "4 or 8")->check(CLI::IsMember({4, 8}));
  s_mask->add_option("--min-area", mask.min_area, "minimum polygon area in pixels");

  FilterArgs filter;
  auto* s_filter = app.add_subcommand("filter", "drop low-entropy image tiles");
  s_filter->add_option("--images", filter.images, "image tile directory")->required();
  s_filter->add_option("--out", filter.out, "filter report JSON");

  EvalArgs eval;
  auto* s_eval = app.add_subcommand("eval", "score generated maps against ground-truth maps");
  s_eval->add_option("--gt", eval.gt, "ground-truth map directory")->required();
  s_eval->add_option("--det", eval.det, "generated map directory")->required();
  s_eval->add_option("--out", eval.out, "report JSON");
  s_eval->add_option("--csv", eval.csv, "one-row CSV summary");

  AugmentArgs aug;
  auto* s_aug = app.add_subcommand("augment", "add false-positive features of generated maps to training maps");
  s_aug->add_option("--train", aug.train, "training map directory")->required();
  s_aug->add_option("--generated", aug.generated, "generated map directory")->required();
  s_aug->add_option("--out", aug.out, "augmented map directory")->required();
  s_aug->add_option("--report", aug.report, "density report JSON");
  s_aug->add_option("--split", aug.split, "split role of the training corpus (unspecified|train|test)");
  s_aug->add_flag("--include-roads", aug.include_roads, "also augment road classes");

  DensityArgs dens;
  auto* s_dens = app.add_subcommand("density", "house density and completeness of a map corpus");
  s_dens->add_option("--maps", dens.maps, "map directory")->required();
  s_dens->add_option("--out", dens.out, "density JSON");

  LossCheckArgs lc;
  auto* s_lc = app.add_subcommand("loss-check", "feature-weighted cycle loss and gradient check on one tile pair");
  s_lc->add_option("--image", lc.image, "image tile PNG")->required()->check(CLI::ExistingFile);
  s_lc->add_option("--map", lc.map, "map tile PNG")->required()->check(CLI::ExistingFile);
  s_lc->add_option("--generator", lc.generator, "affine | conv | identity");
  s_lc->add_option("--perturb", lc.perturb, "random offset applied to generator parameters");
  s_lc->add_option("--weight", lc.weight, "loss weight");
  s_lc->add_option("--fd-step", lc.step, "finite-difference step");
  s_lc->add_option("--out", lc.out, "result JSON");

  DpsgdArgs dp;
  auto* s_dp = app.add_subcommand("dpsgd-sim", "simulate decentralized parallel SGD on a convex objective");
  s_dp->add_option("--workers", dp.train.workers, "number of workers");
  s_dp->add_option("--steps", dp.train.steps, "steps per worker");
  s_dp->add_option("--lr", dp.train.lr, "learning rate");
  s_dp->add_option("--lr-final", dp.lr_final, "final learning rate of a geometric decay");
  s_dp->add_option("--batch", dp.train.batch, "mini-batch size (0 = full shard)");
  s_dp->add_option("--objective", dp.objective, "least-squares | logistic | coupled");
  s_dp->add_option("--averaging", dp.averaging, "random_partner | ring_neighbor | none");
  s_dp->add_option("--samples", dp.samples, "dataset size");
  s_dp->add_option("--dim", dp.dim, "parameter dimension");
  s_dp->add_option("--noise", dp.noise, "least-squares target noise");
  s_dp->add_option("--coupling", dp.coupling, "coupled-quadratic coupling");
  s_dp->add_option("--trace-every", dp.train.trace_every, "trace row interval");
  s_dp->add_flag("--threaded", dp.threaded, "one thread per worker (same result)");
  s_dp->add_option("--out", dp.out, "trace CSV");
  s_dp->add_option("--summary", dp.summary, "summary JSON");

  SplitArgs sp;
  auto* s_sp = app.add_subcommand("split", "seeded train/test split of tile keys");
  s_sp->add_option("--images", sp.images, "tile directory")->required();
  s_sp->add_option("--train-ratio", sp.ratio_train, "train share");
  s_sp->add_option("--test-ratio", sp.ratio_test, "test share");
  s_sp->add_option("--out", sp.out, "split JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("usage", e.what());
    return kExitUsage;
  }

  try {
    const ToolConfig cfg = resolve_config(f);
    if (s_synth->parsed()) return run_synth(cfg, synth);
    if (s_mask->parsed()) return run_mask(cfg, mask);
    if (s_filter->parsed()) return run_filter(cfg, filter);
    if (s_eval->parsed()) return run_eval(cfg, eval);
    if (s_aug->parsed()) return run_augment(cfg, aug);
    if (s_dens->parsed()) return run_density(cfg, dens);
    if (s_lc->parsed()) return run_loss_check(cfg, lc);
    if (s_dp->parsed()) return run_dpsgd(cfg, dp);
    if (s_sp->parsed()) return run_split(cfg, sp);
  } catch (const Error& e) {
    print_error(std::string(osmgen::to_string(e.code())), e.what());
    return kExitError;
  } catch (const Json::exception& e) {
    print_error("parse", e.what());
    return kExitError;
  } catch (const fs::filesystem_error& e) {
    print_error("io", e.what());
    return kExitError;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return kExitError;
  }
  return kExitUsage;
}
