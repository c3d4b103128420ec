#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <set>
#include <string>

#include "causaug/batch.hpp"
#include "causaug/config.hpp"
#include "causaug/error.hpp"
#include "causaug/npy.hpp"
#include "causaug/parallel.hpp"

using namespace causaug;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("causaug_test_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  const auto bytes = read_file(p);
  return std::string(bytes.begin(), bytes.end());
}

ImageTensor ramp(std::size_t h, std::size_t w, float offset) {
  ImageTensor x(1, h, w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t c = 0; c < w; ++c) x.at(0, y, c) = offset + 0.1f * static_cast<float>(y) - 0.05f * c;
  }
  return x;
}

}  // namespace

TEST_CASE("sha256 known answers") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("canonical json sorts keys and drops whitespace") {
  const json j = json::parse(R"({ "b": 1, "a": [1, 2], "c": {"z": null, "y": true} })");
  CHECK(canonical_json(j) == R"({"a":[1,2],"b":1,"c":{"y":true,"z":null}})");
}

TEST_CASE("empty config gives defaults and round-trips") {
  const PipelineConfig c = parse_config("{}");
  CHECK(c.gin == GinConfig{});
  CHECK(c.map_kind == MapKind::bspline);
  CHECK(c.ipa_enabled);
  CHECK(c.seed == 0);
  CHECK(to_json(config_from_json(to_json(c))) == to_json(c));
  CHECK(config_hash(c) == config_hash(PipelineConfig{}));
}

TEST_CASE("config fields are read") {
  const PipelineConfig c = parse_config(R"({
    "preprocess": {"window": [-275, 125], "clip_top_percent": 0.01, "normalize": false,
                   "target_size": [64, 96], "augment": {"p_affine": 0.0, "noise_sigma": 0.1}},
    "gin": {"n_layers": 2, "hidden_channels": 4, "kernel_size": 5, "leaky_slope": 0.1},
    "map": {"map_kind": "superpixel", "spacing": 12, "felz": {"k": 50, "min_size": 10, "sigma": 0}},
    "ipa_enabled": false, "max_resamples": 3, "seed": 18446744073709551615})");
  REQUIRE(c.preprocess.window.has_value());
  CHECK(c.preprocess.window->first == -275.0);
  CHECK(c.preprocess.window->second == 125.0);
  CHECK(c.preprocess.clip_top_percent == 0.01);
  CHECK_FALSE(c.preprocess.normalize);
  CHECK(c.preprocess.target_h == 64);
  CHECK(c.preprocess.target_w == 96);
  CHECK(c.conventional.p_affine == 0.0);
  CHECK(c.conventional.noise_sigma == 0.1);
  CHECK(c.gin == GinConfig{2, 4, 5, 0.1});
  CHECK(c.map_kind == MapKind::superpixel);
  CHECK(c.bspline.spacing == 12);
  CHECK(c.felz.k == 50.0);
  CHECK(c.felz.min_size == 10);
  CHECK(c.felz.sigma == 0.0);
  CHECK_FALSE(c.ipa_enabled);
  CHECK(c.max_resamples == 3);
  CHECK(c.seed == 18446744073709551615ull);

  const AugmentConfig a = c.augment_config();
  CHECK(a.gin == c.gin);
  CHECK(a.map_kind == MapKind::superpixel);
  CHECK_FALSE(a.ipa_enabled);
  CHECK(a.max_resamples == 3);
}

TEST_CASE("unknown keys are rejected with their path") {
  auto message = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const InvalidArgument& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message(R"({"sed": 1})").find("'sed'") != std::string::npos);
  CHECK(message(R"({"gin": {"n_layer": 2}})").find("'gin.n_layer'") != std::string::npos);
  CHECK(message(R"({"map": {"felz": {"kk": 1}}})").find("'map.felz.kk'") != std::string::npos);
  CHECK(message(R"({"preprocess": {"augment": {"p_afine": 0}}})").find("'preprocess.augment.p_afine'") !=
        std::string::npos);
}

TEST_CASE("wrong types and invalid values are rejected") {
  CHECK_THROWS_AS(parse_config(R"({"gin": {"n_layers": "4"}})"), InvalidArgument);
  CHECK_THROWS_AS(parse_config(R"({"gin": {"n_layers": -1}})"), InvalidArgument);
  CHECK_THROWS_AS(parse_config(R"({"gin": {"kernel_size": 4}})"), InvalidArgument);
  CHECK_THROWS_AS(parse_config(R"({"gin": 3})"), InvalidArgument);
  CHECK_THROWS_AS(parse_config(R"({"ipa_enabled": 1})"), InvalidArgument);
  CHECK_THROWS_AS(parse_config(R"({"seed": -5})"), InvalidArgument);
  CHECK_THROWS_AS(parse_config(R"({"seed": 1.5})"), InvalidArgument);
  CHECK_THROWS_AS(parse_config(R"({"map": {"map_kind": "voronoi"}})"), InvalidArgument);
  CHECK_THROWS_AS(parse_config(R"({"map": {"felz": {"k": 0}}})"), InvalidArgument);
  CHECK_THROWS_AS(parse_config(R"({"preprocess": {"window": [125, -275]}})"), InvalidArgument);
  CHECK_THROWS_AS(parse_config(R"({"preprocess": {"window": [1]}})"), InvalidArgument);
  CHECK_THROWS_AS(parse_config(R"({"preprocess": {"clip_top_percent": 1.0}})"), InvalidArgument);
  CHECK_THROWS_AS(parse_config(R"({"preprocess": {"target_size": [0, 4]}})"), InvalidArgument);
  CHECK_THROWS_AS(parse_config(R"({"preprocess": {"augment": {"p_noise": 2}}})"), InvalidArgument);
  CHECK_THROWS_AS(parse_config("[]"), InvalidArgument);
  CHECK_THROWS_AS(parse_config(R"({"gin": )"), ParseError);
}

TEST_CASE("config hash ignores formatting and key order but not values") {
  const auto a = parse_config(R"({"seed": 7, "gin": {"n_layers": 3, "kernel_size": 1}})");
  const auto b = parse_config("{\"gin\":{\"kernel_size\":1,\n \"n_layers\":3},\"seed\":7}");
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 64);
  auto c = a;
  c.seed = 8;
  CHECK(config_hash(a) != config_hash(c));
  c = a;
  c.felz.sigma = 0.5;
  CHECK(config_hash(a) != config_hash(c));
}

TEST_CASE("load_config reports IO and path errors") {
  TempDir dir("load_config");
  CHECK_THROWS_AS(load_config(dir.path / "missing.json"), IoError);
  const std::string text = R"({"bogus": true})";
  write_file(dir.path / "bad.json", std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  try {
    load_config(dir.path / "bad.json");
    FAIL("expected InvalidArgument");
  } catch (const InvalidArgument& e) {
    CHECK(std::string(e.what()).find("bad.json") != std::string::npos);
  }
}

TEST_CASE("sidecar verification detects tampering") {
  const Augmenter engine(parse_config(R"({"seed": 3})"));
  const AugPair pair = engine.augment_slice(ramp(16, 16, 0.0f), 0, 0, 0);
  json record = provenance_record(engine, pair, "x.npy", 0, 0, {"a", "b"});
  CHECK(verify_sidecar(record));
  CHECK(record["config_hash"] == engine.config_hash());
  CHECK(record["seed_path"] == "3/input:0/slice:0/pair:0");

  json tampered = record;
  tampered["config"]["gin"]["n_layers"] = 5;
  CHECK_FALSE(verify_sidecar(tampered));
  tampered = record;
  tampered["config_hash"] = std::string(64, '0');
  CHECK_FALSE(verify_sidecar(tampered));
  tampered = record;
  tampered.erase("config");
  CHECK_FALSE(verify_sidecar(tampered));
  // Unrelated fields are not covered by the hash.
  tampered = record;
  tampered["input"] = "y.npy";
  CHECK(verify_sidecar(tampered));
}

TEST_CASE("augmenter seed paths") {
  const Augmenter engine(parse_config(R"({"seed": 11})"));
  const ImageTensor x = ramp(24, 20, 1.0f);
  const AugPair a = engine.augment_slice(x, 2, 5, 1);
  const AugPair b = engine.augment_slice(x, 2, 5, 1);
  CHECK(a.t1 == b.t1);
  CHECK(a.t2 == b.t2);
  const AugPair direct =
      augment_sample(x, engine.config().augment_config(), SeedStream(11).child("input", 2).child("slice", 5).child("pair", 1));
  CHECK(a.t1 == direct.t1);
  CHECK(a.t2 == direct.t2);
  CHECK_FALSE(engine.augment_slice(x, 2, 5, 0).t1 == a.t1);

  const std::vector<ImageTensor> batch = {x, ramp(24, 20, -1.0f), ramp(24, 20, 3.0f)};
  const auto serial = engine.augment_batch(batch, 4, 1);
  const auto threaded = engine.augment_batch(batch, 4, 3);
  REQUIRE(serial.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(serial[i].t1 == threaded[i].t1);
    CHECK(serial[i].seed_path == "11/iteration:4/sample:" + std::to_string(i));
  }
  CHECK(engine.augment_batch({}, 0).empty());
}

TEST_CASE("output stems") {
  CHECK(output_stem("case01", 0, 0) == "case01_s0000_p00");
  CHECK(output_stem("v", 123, 7) == "v_s0123_p07");
}

TEST_CASE("collect_inputs") {
  TempDir dir("collect");
  const ImageTensor x = ramp(4, 4, 0.0f);
  save_npy(x, dir.path / "b.npy");
  save_npy(x, dir.path / "a.npy");
  write_file(dir.path / "notes.txt", std::span<const std::uint8_t>());
  const auto files = collect_inputs(dir.path);
  REQUIRE(files.size() == 2);
  CHECK(files[0].filename() == "a.npy");
  CHECK(files[1].filename() == "b.npy");
  CHECK(collect_inputs(dir.path / "a.npy").size() == 1);
  CHECK_THROWS_AS(collect_inputs(dir.path / "nope"), IoError);
}

TEST_CASE("run_augment writes pairs and sidecars deterministically") {
  TempDir dir("run_augment");
  const ImageTensor x = ramp(32, 32, 0.5f);
  save_npy(x, dir.path / "one.npy");
  const Augmenter engine(parse_config(R"({"seed": 5})"));

  AugmentJob job;
  job.inputs = {dir.path / "one.npy"};
  job.out_dir = dir.path / "out1";
  job.pairs = 2;
  const auto summary = run_augment(engine, job);
  CHECK(summary.slices == 1);
  CHECK(summary.pairs_written == 2);
  CHECK(summary.failures.empty());

  std::set<std::string> names;
  for (const auto& e : fs::directory_iterator(job.out_dir)) names.insert(e.path().filename().string());
  CHECK(names == std::set<std::string>{"one_s0000_p00.json", "one_s0000_p00_t1.npy", "one_s0000_p00_t2.npy",
                                       "one_s0000_p01.json", "one_s0000_p01_t1.npy", "one_s0000_p01_t2.npy"});

  const json sidecar = json::parse(slurp(job.out_dir / "one_s0000_p01.json"));
  CHECK(verify_sidecar(sidecar));
  CHECK(sidecar["input"] == "one.npy");
  CHECK(sidecar["pair"] == 1);
  const AugPair expected = engine.augment_slice(x, 0, 0, 1);
  CHECK(to_image(load_npy(job.out_dir / "one_s0000_p01_t2.npy")) == expected.t2);

  AugmentJob again = job;
  again.out_dir = dir.path / "out2";
  again.threads = 4;
  run_augment(engine, again);
  for (const auto& n : names) CHECK(slurp(job.out_dir / n) == slurp(again.out_dir / n));

  AugmentJob maps = job;
  maps.out_dir = dir.path / "out3";
  maps.save_maps = true;
  run_augment(engine, maps);
  CHECK(to_image(load_npy(maps.out_dir / "one_s0000_p00_map.npy")) == engine.augment_slice(x, 0, 0, 0).map.as_tensor());
  CHECK(slurp(job.out_dir / "one_s0000_p00_t1.npy") == slurp(maps.out_dir / "one_s0000_p00_t1.npy"));
}

TEST_CASE("run_augment records bad inputs and continues") {
  TempDir dir("run_augment_bad");
  const std::string junk = "not an npy file";
  write_file(dir.path / "a_bad.npy", std::span(reinterpret_cast<const std::uint8_t*>(junk.data()), junk.size()));
  save_npy(ramp(16, 16, 0.0f), dir.path / "b_good.npy");
  const Augmenter engine(PipelineConfig{});
  AugmentJob job;
  job.inputs = collect_inputs(dir.path);
  job.out_dir = dir.path / "out";
  const auto summary = run_augment(engine, job);
  REQUIRE(summary.failures.size() == 1);
  CHECK(summary.failures[0].find("a_bad.npy") != std::string::npos);
  CHECK(summary.pairs_written == 1);
  CHECK(fs::exists(job.out_dir / "b_good_s0000_p00_t1.npy"));

  job.pairs = 0;
  CHECK_THROWS_AS(run_augment(engine, job), InvalidArgument);
}

TEST_CASE("parallel_for covers every index and rethrows") {
  std::vector<int> hits(100, 0);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) CHECK(h == 1);
  CHECK_THROWS_AS(parallel_for(10, 3,
                               [](std::size_t i) {
                                 if (i == 7) throw InvalidArgument("seven");
                               }),
                  InvalidArgument);
  parallel_for(0, 4, [](std::size_t) { FAIL("no work expected"); });
}

TEST_CASE("thread count from the environment") {
  ::setenv("CAUSAUG_THREADS", "3", 1);
  CHECK(default_thread_count() == 3);
  ::setenv("CAUSAUG_THREADS", "zero", 1);
  CHECK(default_thread_count() >= 1);
  ::setenv("CAUSAUG_THREADS", "-2", 1);
  CHECK(default_thread_count() >= 1);
  ::unsetenv("CAUSAUG_THREADS");
  CHECK(default_thread_count() >= 1);
}
