#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "vip/datasets.hpp"
#include "vip/experiment.hpp"
#include "vip/io.hpp"

using namespace vip;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* tag) {
  fs::path p = fs::temp_directory_path() / (std::string("vip_test_") + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  REQUIRE(is.good());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

Tensor random_tensor(Shape s, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(numel(s));
  for (auto& x : v) x = rng.normal();
  return Tensor(std::move(s), std::move(v));
}

}  // namespace

TEST_CASE("vtn round trip preserves shape and bits") {
  const fs::path dir = temp_dir("vtn");
  for (const Shape& s : {Shape{7}, Shape{3, 5}, Shape{2, 3, 4}}) {
    const Tensor t = random_tensor(s, 5 + s.size());
    save_vtn(dir / "t.vtn", t);
    const Tensor back = load_vtn(dir / "t.vtn");
    CHECK(back.shape == t.shape);
    CHECK(back.data() == t.data());
  }
  CHECK_THROWS(load_vtn(dir / "missing.vtn"));
}

TEST_CASE("pgm round trip within quantization error") {
  const fs::path dir = temp_dir("pgm");
  Rng rng(9);
  std::vector<double> v(6 * 4);
  for (auto& x : v) x = rng.uniform(-0.2, 1.2);  // exercises clamping
  const Tensor img(Shape{6, 4}, v);
  for (int maxval : {255, 65535}) {
    save_pgm(dir / "i.pgm", img, maxval);
    const Tensor back = load_pgm(dir / "i.pgm");
    REQUIRE(back.shape == img.shape);
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double clamped = std::clamp(v[i], 0.0, 1.0);
      CHECK(std::abs(back[i] - clamped) <= 0.5 / maxval + 1e-12);
    }
  }
}

TEST_CASE("json header framing round trips") {
  const fs::path dir = temp_dir("hdr");
  const std::string header = "{\"answer\":42}";
  const Tensor t = random_tensor(Shape{4, 4}, 1);
  {
    std::ofstream os(dir / "c.bin", std::ios::binary);
    write_json_header(os, header);
    write_vtn(os, t);
  }
  std::ifstream is(dir / "c.bin", std::ios::binary);
  CHECK(read_json_header(is) == header);
  CHECK(read_vtn(is).data() == t.data());
}

TEST_CASE("csv formatting is exact and deterministic") {
  CHECK(CsvWriter::format(1.0) == "1");
  CHECK(CsvWriter::format(0.5) == "0.5");
  for (std::uint64_t s = 0; s < 50; ++s) {
    Rng rng(s);
    const double x = rng.normal() * std::pow(10.0, rng.uniform(-8.0, 8.0));
    CHECK(std::strtod(CsvWriter::format(x).c_str(), nullptr) == x);
  }
}

TEST_CASE("synthetic datasets: geometry, range, determinism") {
  for (const char* name : {"moving-disk", "crescent-ring"}) {
    const auto a = synth_dataset(name, 5, 24, 20, 77);
    const auto b = synth_dataset(name, 5, 24, 20, 77);
    const auto c = synth_dataset(name, 5, 24, 20, 78);
    REQUIRE(a.size() == 5);
    CHECK(a[0].shape == Shape{24, 20});
    CHECK(a[3].data() == b[3].data());
    CHECK(a[3].data() != c[3].data());
    for (const auto& frame : a) {
      for (double v : frame.data()) {
        CHECK(v >= 0.05);
        CHECK(v <= 0.95);
      }
    }
  }
  CHECK_THROWS_AS(synth_dataset("nope", 1, 8, 8, 1), ConfigError);
}

TEST_CASE("moving disk evolves gently between frames") {
  const std::size_t h = 32, w = 32;
  const auto frames = synth_moving_disk(20, h, w, 3);
  for (std::size_t t = 0; t + 1 < frames.size(); ++t) {
    std::size_t changed = 0;
    for (std::size_t i = 0; i < h * w; ++i) {
      if (std::abs(frames[t][i] - frames[t + 1][i]) > 0.02) ++changed;
    }
    CHECK(changed > 0);
    CHECK(static_cast<double>(changed) / static_cast<double>(h * w) <= 0.15);
  }
}

TEST_CASE("two-class digits are distinguishable") {
  const auto zeros = synth_two_class_digits(4, 24, 24, 0, 5);
  const auto ones = synth_two_class_digits(4, 24, 24, 1, 5);
  // class 1 splits mass into two lobes: the center row is dimmer
  double c0 = 0.0, c1 = 0.0;
  for (std::size_t q = 0; q < 24; ++q) {
    c0 += zeros[0][11 * 24 + q];
    c1 += ones[0][11 * 24 + q];
  }
  CHECK(c0 > c1);
  CHECK_THROWS_AS(synth_two_class_digits(1, 8, 8, 2, 1), std::invalid_argument);
}

TEST_CASE("ring profile: constants, bounds, angle refinement") {
  const Tensor flat = Tensor::full(Shape{16, 16}, 0.6);
  const auto prof = ring_profile(flat, 7.5, 7.5, 5.0, 32);
  REQUIRE(prof.size() == 32);
  for (double v : prof) CHECK(v == doctest::Approx(0.6).epsilon(1e-12));

  // doubling the angle count keeps the shared sample points identical
  const Tensor img = random_tensor(Shape{16, 16}, 21);
  const auto p1 = ring_profile(img, 7.5, 7.5, 5.0, 16);
  const auto p2 = ring_profile(img, 7.5, 7.5, 5.0, 32);
  for (std::size_t j = 0; j < 16; ++j) CHECK(p1[j] == doctest::Approx(p2[2 * j]).epsilon(1e-12));

  CHECK_THROWS_AS(ring_profile(img, 2.0, 8.0, 5.0, 8), std::invalid_argument);
  CHECK_THROWS_AS(ring_profile(img, 8.0, 8.0, 5.0, 0), std::invalid_argument);
}

namespace {

ExperimentConfig smoke_config(const fs::path& out) {
  ExperimentConfig cfg;
  cfg.experiment = "denoise";
  cfg.dataset.name = "moving-disk";
  cfg.dataset.n = 3;
  cfg.dataset.h = 16;
  cfg.dataset.w = 16;
  cfg.forward.kind = "denoise";
  cfg.forward.target_snr_db = 15.0;
  cfg.decoder.num_layers = 3;
  cfg.decoder.channels = 8;
  cfg.decoder.latent_dim = 4;
  cfg.decoder.seed_h = cfg.decoder.seed_w = 4;
  cfg.decoder.out_h = cfg.decoder.out_w = 16;
  cfg.train.iterations = 2;
  cfg.recon_samples = 4;
  cfg.saved_sample_images = 1;
  cfg.out_dir = out.string();
  cfg.seed = 123;
  cfg.seed_set = true;
  return cfg;
}

}  // namespace

TEST_CASE("experiment config json round trip and validation") {
  const fs::path dir = temp_dir("cfg");
  ExperimentConfig cfg = smoke_config(dir / "o");
  cfg.ring.enabled = true;
  cfg.ring.cx = cfg.ring.cy = 7.5;
  cfg.ring.radius = 4.0;
  const std::string text = cfg.to_json();
  const ExperimentConfig back = ExperimentConfig::from_json(text);
  CHECK(back.to_json() == text);
  CHECK(back.seed == 123);
  CHECK(back.dataset.name == "moving-disk");
  CHECK(back.ring.enabled);

  CHECK_THROWS_AS(ExperimentConfig::from_json("{not json"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json("{}"), ConfigError);
  // a config without a seed is rejected outright
  ExperimentConfig noseed = cfg;
  noseed.seed_set = false;
  CHECK_THROWS_AS(noseed.validate(), ConfigError);
  ExperimentConfig badkind = cfg;
  badkind.experiment = "mystery";
  CHECK_THROWS_AS(badkind.validate(), ConfigError);
}

TEST_CASE("checkpoint and measurement-set containers round trip") {
  const fs::path dir = temp_dir("ckpt");
  DeepDecoderConfig dc;
  dc.num_layers = 2;
  dc.channels = 4;
  dc.latent_dim = 3;
  dc.seed_h = dc.seed_w = 2;
  dc.out_h = dc.out_w = 4;
  Checkpoint ck;
  ck.params = init_generator(dc, 8);
  for (int i = 0; i < 2; ++i) {
    Rng rng(40 + i);
    ck.qs.push_back(GaussianVariational::init(3, rng));
  }
  ck.iteration = 17;
  save_checkpoint(dir / "c.bin", ck);
  const Checkpoint back = load_checkpoint(dir / "c.bin");
  CHECK(back.iteration == 17);
  CHECK(back.params.config.channels == 4);
  CHECK(back.params.input_proj.data() == ck.params.input_proj.data());
  CHECK(back.params.conv_w[1].data() == ck.params.conv_w[1].data());
  CHECK(back.qs.size() == 2);
  CHECK(back.qs[1].l_factor.data() == ck.qs[1].l_factor.data());

  MeasurementSet ms;
  ms.model = ForwardModel::interferometric(4, 4, {{1.0, 0.0}, {0.0, 1.5}}, 0.2);
  ms.observations = {{1, 2, 3, 4}, {5, 6, 7, 8}};
  save_measurement_set(dir / "m.bin", ms);
  const MeasurementSet mback = load_measurement_set(dir / "m.bin");
  CHECK(mback.model.kind == ModelKind::InterferometricCS);
  CHECK(mback.model.sigma == 0.2);
  CHECK(mback.model.uv == ms.model.uv);
  CHECK(mback.observations == ms.observations);
  CHECK(mback.model.op_re.data() == ms.model.op_re.data());
}

TEST_CASE("pipeline smoke run is complete and reproducible") {
  const fs::path d1 = temp_dir("run1"), d2 = temp_dir("run2");
  ExperimentConfig c1 = smoke_config(d1);
  REQUIRE(run_experiment(c1) == 0);
  for (const char* f : {"config.json", "measurements.bin", "checkpoint.bin", "report.csv",
                        "metrics.csv"}) {
    CHECK(fs::exists(d1 / f));
  }
  CHECK(fs::exists(d1 / "images" / "gt_000.pgm"));
  CHECK(fs::exists(d1 / "images" / "gt_002.vtn"));
  CHECK(fs::exists(d1 / "recon" / "mean_001.pgm"));
  CHECK(fs::exists(d1 / "recon" / "sample_000_00.pgm"));

  // the config echo reloads to an equivalent run
  const ExperimentConfig echoed = ExperimentConfig::load(d1 / "config.json");
  CHECK(echoed.seed == c1.seed);

  ExperimentConfig c2 = smoke_config(d2);
  REQUIRE(run_experiment(c2) == 0);
  CHECK(slurp(d1 / "metrics.csv") == slurp(d2 / "metrics.csv"));
  CHECK(slurp(d1 / "measurements.bin") == slurp(d2 / "measurements.bin"));
  CHECK(slurp(d1 / "images" / "gt_001.vtn") == slurp(d2 / "images" / "gt_001.vtn"));
}

TEST_CASE("training resumes from a checkpoint") {
  const fs::path dir = temp_dir("resume");
  ExperimentConfig cfg = smoke_config(dir);
  stage_synth(cfg);
  stage_measure(cfg);
  stage_train(cfg, std::nullopt);
  const Checkpoint first = load_checkpoint(dir / "checkpoint.bin");
  CHECK(first.iteration == 2);
  stage_train(cfg, dir / "checkpoint.bin");
  const Checkpoint second = load_checkpoint(dir / "checkpoint.bin");
  CHECK(second.iteration == 4);
  CHECK(second.params.input_proj.data() != first.params.input_proj.data());
}
