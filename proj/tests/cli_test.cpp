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

// Runs the osmgen binary end to end and checks outputs against the shipped
// schemas.

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

#include "osmgen/osmgen.hpp"

namespace osmgen {
namespace {

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return q + "'";
}

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fs::temp_directory_path() / ("osmgen_cli_" + std::to_string(::getpid()));
    fs::remove_all(root_);
    fs::create_directories(root_);
    const auto r = run({"synth", "--out", (root_ / "corpus").string(), "--tiles", "2", "--tile-size", "128", "--houses-min", "15", "--houses-max", "30",
                        "--dropout", "0.3", "--seed", "5"});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  static void TearDownTestSuite() { fs::remove_all(root_); }

  static RunResult run(const std::vector<std::string>& args) {
    static int counter = 0;
    const fs::path out = fs::temp_directory_path() / ("osmgen_cli_out_" + std::to_string(::getpid()) + "_" +
                                                       std::to_string(counter));
    const fs::path err = out.string() + ".err";
    ++counter;
    std::string cmd = quote(OSMGEN_CLI_PATH);
    for (const auto& a : args) cmd += " " + quote(a);
    cmd += " >" + quote(out.string()) + " 2>" + quote(err.string());
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    fs::remove(out);
    fs::remove(err);
    return r;
  }

  static bool valid(const fs::path& instance, const std::string& schema) {
    const std::string cmd = quote(OSMGEN_PYTHON) + " " + quote(OSMGEN_VALIDATOR) + " " + quote(OSMGEN_SCHEMA_DIR) +
                            " " + quote(schema) + " " + quote(instance.string());
    return std::system(cmd.c_str()) == 0;
  }

  static Json error_json(const RunResult& r) {
    const Json j = Json::parse(r.err);
    const fs::path tmp = root_ / "last_error.json";
    write_json_file(tmp, j);
    EXPECT_TRUE(valid(tmp, "error.schema.json"));
    return j;
  }

  static fs::path root_;
};

fs::path CliTest::root_;

TEST_F(CliTest, HelpEnumeratesSubcommandsAndErrors) {
  const auto r = run({"--help"});
  EXPECT_EQ(r.code, 0);
  for (const char* s : {"synth", "mask", "filter", "eval", "augment", "density", "loss-check", "dpsgd-sim",
                        "test_split_guard", "unpaired", "parse", "usage"}) {
    EXPECT_NE(r.out.find(s), std::string::npos) << s;
  }
}

TEST_F(CliTest, UnknownFlagIsAUsageError) {
  const auto r = run({"eval", "--bogus"});
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(error_json(r)["error"]["code"], "usage");
  EXPECT_EQ(run({}).code, 2);
}

TEST_F(CliTest, SynthLayoutValidates) {
  const fs::path c = root_ / "corpus";
  EXPECT_TRUE(valid(c / "corpus.json", "corpus.schema.json"));
  EXPECT_TRUE(valid(c / "truth.json", "truth.schema.json"));
  const auto stems = list_tile_stems(c / "maps");
  ASSERT_EQ(stems.size(), 2u);
  EXPECT_EQ(list_tile_stems(c / "images"), stems);
  EXPECT_EQ(list_tile_stems(c / "truth"), stems);
  EXPECT_TRUE(valid(c / "maps" / (stems[0] + ".json"), "tile_meta.schema.json"));
}

TEST_F(CliTest, SynthIsDeterministic) {
  const fs::path a = root_ / "again";
  ASSERT_EQ(run({"synth", "--out", a.string(), "--tiles", "2", "--tile-size", "128", "--houses-min", "15", "--houses-max", "30", "--dropout", "0.3",
                 "--seed", "5", "--threads", "2"}).code, 0);
  for (const auto& e : fs::recursive_directory_iterator(root_ / "corpus")) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), root_ / "corpus");
    EXPECT_EQ(slurp(e.path()), slurp(a / rel)) << rel;
  }
}

TEST_F(CliTest, EvalIdenticalDirsScoresOne) {
  const fs::path c = root_ / "corpus";
  const fs::path report = root_ / "identical.json", csv = root_ / "identical.csv";
  const auto r = run({"eval", "--gt", (c / "truth").string(), "--det", (c / "truth").string(), "--out",
                      report.string(), "--csv", csv.string(), "--city", "Synthetic"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(valid(report, "report.schema.json"));
  const auto j = read_json_file(report);
  EXPECT_EQ(j["f1"], 1.0);
  EXPECT_EQ(j["fp"], 0);
  EXPECT_EQ(j["fn"], 0);
  const std::string text = slurp(csv);
  EXPECT_EQ(text.rfind("city,class,TP,FP,FN,precision,recall,f1\nSynthetic,house,", 0), 0u);
  EXPECT_NE(text.find(",1.000000,1.000000,1.000000\n"), std::string::npos);
}

TEST_F(CliTest, EvalRecoversDroppedLabels) {
  const fs::path c = root_ / "corpus";
  const fs::path report = root_ / "dropout.json";
  ASSERT_EQ(run({"eval", "--gt", (c / "truth").string(), "--det", (c / "maps").string(), "--out",
                 report.string()}).code, 0);
  const auto j = read_json_file(report);
  const auto corpus = read_json_file(c / "corpus.json");
  EXPECT_EQ(j["precision"], 1.0);
  EXPECT_EQ(j["tp"], corpus["houses_labeled"]);
  EXPECT_EQ(j["fn"].get<int>() + j["tp"].get<int>(), corpus["houses_planted"].get<int>());
}

TEST_F(CliTest, EvalThreadsDoNotChangeTheReport) {
  const fs::path c = root_ / "corpus";
  const fs::path a = root_ / "t1.json", b = root_ / "t3.json";
  ASSERT_EQ(run({"eval", "--gt", (c / "truth").string(), "--det", (c / "maps").string(), "--out", a.string(),
                 "--threads", "1"}).code, 0);
  ASSERT_EQ(run({"eval", "--gt", (c / "truth").string(), "--det", (c / "maps").string(), "--out", b.string(),
                 "--threads", "3"}).code, 0);
  EXPECT_EQ(slurp(a), slurp(b));
}

TEST_F(CliTest, EvalMismatchedSizesFailsWithPerPairListing) {
  const fs::path small = root_ / "small";
  ASSERT_EQ(run({"synth", "--out", small.string(), "--tiles", "2", "--tile-size", "64", "--houses-min", "1",
                 "--houses-max", "4", "--seed", "5"}).code, 0);
  const fs::path report = root_ / "mismatch.json";
  const auto r = run({"eval", "--gt", (root_ / "corpus" / "maps").string(), "--det", (small / "maps").string(),
                      "--out", report.string()});
  EXPECT_NE(r.code, 0);
  const auto e = error_json(r);
  EXPECT_EQ(e["error"]["code"], "shape_mismatch");
  EXPECT_EQ(e["error"]["errors"].size(), 2u);
  EXPECT_TRUE(valid(report, "report.schema.json"));
  EXPECT_EQ(read_json_file(report)["errors"].size(), 2u);
}

TEST_F(CliTest, EvalMissingPairsFails) {
  const fs::path partial = root_ / "partial";
  fs::create_directories(partial);
  const auto stems = list_tile_stems(root_ / "corpus" / "maps");
  for (const char* ext : {".png", ".json"}) {
    fs::copy_file(root_ / "corpus" / "maps" / (stems[0] + ext), partial / (stems[0] + ext),
                  fs::copy_options::overwrite_existing);
  }
  const auto r = run({"eval", "--gt", (root_ / "corpus" / "maps").string(), "--det", partial.string()});
  EXPECT_EQ(r.code, 1);
  const auto e = error_json(r);
  EXPECT_EQ(e["error"]["code"], "unpaired");
  EXPECT_EQ(e["error"]["missing_detection"], Json::array({stems[1]}));
}

TEST_F(CliTest, DensityOfTableReplica) {
  const fs::path c = root_ / "austin";
  ASSERT_EQ(run({"synth", "--out", c.string(), "--tiles", "4", "--target-density", "1723", "--seed", "1"}).code, 0);
  const fs::path out = root_ / "austin_density.json";
  const auto r = run({"density", "--maps", (c / "maps").string(), "--city", "Austin", "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(valid(out, "density.schema.json"));
  const auto j = read_json_file(out);
  EXPECT_EQ(j["house_count"], 1807);
  EXPECT_NEAR(j["completeness_pct"].get<double>(), 52.0, 1.0);
}

TEST_F(CliTest, AugmentRaisesDensityAndGuardsTestSplit) {
  const fs::path c = root_ / "corpus";
  const fs::path out = root_ / "augmented", report = root_ / "augment.json";
  const auto r = run({"augment", "--train", (c / "maps").string(), "--generated", (c / "truth").string(), "--out",
                      out.string(), "--report", report.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(valid(report, "augment_report.schema.json"));
  const auto j = read_json_file(report);
  const auto corpus = read_json_file(c / "corpus.json");
  EXPECT_EQ(j["before"]["house_count"], corpus["houses_labeled"]);
  EXPECT_EQ(j["after"]["house_count"], corpus["houses_planted"]);
  EXPECT_EQ(list_tile_stems(out), list_tile_stems(c / "maps"));
  for (const auto& stem : list_tile_stems(out)) {
    EXPECT_EQ(read_tile(out, stem).pixels(), read_tile(c / "truth", stem).pixels());
  }

  const fs::path test_corpus = root_ / "test_corpus";
  ASSERT_EQ(run({"synth", "--out", test_corpus.string(), "--tiles", "1", "--tile-size", "64", "--houses-min", "1",
                 "--houses-max", "3", "--split", "test"}).code, 0);
  EXPECT_TRUE(valid(test_corpus / "corpus.json", "corpus.schema.json"));
  for (const std::vector<std::string>& extra : {std::vector<std::string>{}, std::vector<std::string>{"--split", "train"}}) {
    std::vector<std::string> args{"augment", "--train", (test_corpus / "maps").string(), "--generated",
                                  (test_corpus / "truth").string(), "--out", (root_ / "never").string()};
    args.insert(args.end(), extra.begin(), extra.end());
    const auto g = run(args);
    EXPECT_EQ(g.code, 1);
    EXPECT_EQ(error_json(g)["error"]["code"], "test_split_guard");
  }
  EXPECT_FALSE(fs::exists(root_ / "never"));
}

TEST_F(CliTest, ConfigPrecedence) {
  const fs::path c = root_ / "corpus";
  const fs::path cfg = root_ / "config.json";
  write_json_file(cfg, {{"iou_threshold", 0.5}, {"city", "FromConfig"}});
  EXPECT_TRUE(valid(cfg, "config.schema.json"));
  auto threshold = [&](std::vector<std::string> extra) {
    const fs::path out = root_ / "precedence.json";
    std::vector<std::string> args{"eval", "--gt", (c / "truth").string(), "--det", (c / "truth").string(),
                                  "--out", out.string()};
    args.insert(args.end(), extra.begin(), extra.end());
    const auto r = run(args);
    EXPECT_EQ(r.code, 0) << r.err;
    return read_json_file(out)["iou_threshold"].get<double>();
  };
  EXPECT_EQ(threshold({}), 0.3);
  EXPECT_EQ(threshold({"--config", cfg.string()}), 0.5);
  EXPECT_EQ(threshold({"--config", cfg.string(), "--iou-threshold", "0.7"}), 0.7);

  write_json_file(cfg, {{"iou_threshold", "high"}});
  auto r = run({"density", "--maps", (c / "maps").string(), "--config", cfg.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(error_json(r)["error"]["code"], "parse");
  write_json_file(cfg, {{"iou_treshold", 0.5}});
  r = run({"density", "--maps", (c / "maps").string(), "--config", cfg.string()});
  EXPECT_EQ(error_json(r)["error"]["code"], "parse");
  write_text_file(cfg, "{ not json");
  r = run({"density", "--maps", (c / "maps").string(), "--config", cfg.string()});
  EXPECT_EQ(error_json(r)["error"]["code"], "parse");
  r = run({"eval", "--gt", (c / "truth").string(), "--det", (c / "truth").string(), "--iou-threshold", "0"});
  EXPECT_EQ(error_json(r)["error"]["code"], "invalid_argument");
}

TEST_F(CliTest, PaletteFile) {
  EXPECT_TRUE(valid(OSMGEN_CONFIG_DIR "/default_palette.json", "palette.schema.json"));
  const fs::path out = root_ / "with_palette.json";
  const auto r = run({"density", "--maps", (root_ / "corpus" / "maps").string(), "--palette",
                      OSMGEN_CONFIG_DIR "/default_palette.json", "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto missing = run({"density", "--maps", (root_ / "corpus" / "maps").string(), "--palette",
                            (root_ / "nope.json").string()});
  EXPECT_EQ(error_json(missing)["error"]["code"], "io");
}

TEST_F(CliTest, MaskFilterSplit) {
  const fs::path c = root_ / "corpus";
  const auto stems = list_tile_stems(c / "maps");
  const fs::path png = root_ / "mask.png", geo = root_ / "mask.geojson";
  auto r = run({"mask", "--map", (c / "truth" / (stems[0] + ".png")).string(), "--out", png.string(),
                "--geojson", geo.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto summary = Json::parse(r.out);
  const auto mask = read_png(png, 1);
  std::size_t on = 0;
  for (auto v : mask.pixels()) on += v == 255 ? 1 : 0;
  EXPECT_EQ(on, summary["mask_pixels"].get<std::size_t>());
  const auto g = read_json_file(geo);
  EXPECT_EQ(g["type"], "FeatureCollection");
  EXPECT_EQ(g["features"].size(), summary["polygons"].get<std::size_t>());

  const fs::path filt = root_ / "filter.json";
  r = run({"filter", "--images", (c / "images").string(), "--out", filt.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(valid(filt, "filter.schema.json"));
  EXPECT_EQ(read_json_file(filt)["kept"].size(), 2u);
  r = run({"filter", "--images", (c / "images").string(), "--out", filt.string(), "--entropy-threshold", "8"});
  EXPECT_EQ(read_json_file(filt)["dropped"].size(), 2u);

  const fs::path split = root_ / "split.json";
  r = run({"split", "--images", (c / "images").string(), "--out", split.string(), "--seed", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(valid(split, "split.schema.json"));
  const auto s = read_json_file(split);
  EXPECT_EQ(s["train"].size() + s["test"].size(), 2u);
}

TEST_F(CliTest, LossCheckGradientsAgree) {
  const fs::path c = root_ / "corpus";
  const auto stems = list_tile_stems(c / "maps");
  for (const char* gen : {"affine", "conv"}) {
    const fs::path out = root_ / (std::string("loss_") + gen + ".json");
    const auto r = run({"loss-check", "--image", (c / "images" / (stems[0] + ".png")).string(), "--map",
                        (c / "maps" / (stems[0] + ".png")).string(), "--generator", gen, "--out", out.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(valid(out, "loss_check.schema.json"));
    const auto j = read_json_file(out);
    EXPECT_GT(j["loss"].get<double>(), 0.0);
    EXPECT_GT(j["mask_pixels"].get<int>(), 0);
    EXPECT_LT(j["max_rel_error"].get<double>(), 1e-4);
  }
}

TEST_F(CliTest, DpsgdTraceIsDeterministic) {
  const fs::path a = root_ / "trace_a.csv", b = root_ / "trace_b.csv", sum = root_ / "dpsgd.json";
  const std::vector<std::string> base{"dpsgd-sim", "--workers", "4", "--steps", "50", "--lr", "0.05", "--seed", "7",
                                      "--objective", "least-squares", "--samples", "128"};
  auto args = base;
  args.insert(args.end(), {"--out", a.string(), "--summary", sum.string()});
  ASSERT_EQ(run(args).code, 0);
  args = base;
  args.insert(args.end(), {"--out", b.string(), "--threaded"});
  ASSERT_EQ(run(args).code, 0);
  const std::string text = slurp(a);
  EXPECT_EQ(text, slurp(b));
  EXPECT_EQ(text.rfind("step,worker,loss,consensus_distance\n", 0), 0u);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1 + 50 * 4);
  EXPECT_TRUE(valid(sum, "dpsgd_summary.schema.json"));
  const auto r = run({"dpsgd-sim", "--lr", "1e6", "--steps", "100", "--samples", "32"});
  EXPECT_EQ(error_json(r)["error"]["code"], "divergence");
}

}  // namespace
}  // namespace osmgen
