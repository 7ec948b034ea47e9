#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vip/baselines.hpp"
#include "vip/datasets.hpp"
#include "vip/forward_models.hpp"
#include "vip/generator.hpp"
#include "vip/objective.hpp"
#include "vip/variational.hpp"

namespace vip {

struct DatasetSpec {
  std::string name = "crescent-ring";
  std::size_t n = 20;
  std::size_t h = 32;
  std::size_t w = 32;
  int klass = 0;
  std::string input_dir;  // load VTN images instead of synthesizing when set
};

struct ForwardSpec {
  std::string kind = "denoise";
  double target_snr_db = 15.0;
  double sigma = 0.0;  // 0 = calibrate from target_snr_db
  // interferometric coverage
  std::size_t uv_tracks = 24;
  std::size_t uv_points = 40;
  double uv_max_radius_frac = 0.8;  // fraction of the Nyquist radius
  // Gaussian operators
  std::size_t rows = 0;  // 0 = 4*h*w complex rows
};

struct RingSpec {
  bool enabled = false;
  double cx = 0.0, cy = 0.0, radius = 0.0;
  std::size_t n_angles = 64;
};

struct ExperimentConfig {
  // denoise | cs-interferometry | phase-retrieval | model-select | baseline
  std::string experiment = "denoise";
  DatasetSpec dataset;
  ForwardSpec forward;
  DeepDecoderConfig decoder;
  TrainConfig train;
  RingSpec ring;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::size_t recon_samples = 32;
  std::size_t saved_sample_images = 4;
  // baseline settings
  double tv_lambda = 2.0;
  std::size_t tv_iters = 200;
  double tv_step = 1e-2;
  std::size_t dip_iters = 800;
  std::size_t dip_checkpoint_interval = 100;
  // model selection settings
  std::size_t select_fit_iters = 200;
  std::size_t select_cases_per_class = 10;

  std::string to_json() const;
  static ExperimentConfig from_json(const std::string& json);
  static ExperimentConfig load(const std::filesystem::path& path);
  void validate() const;
};

// Checkpoint container: JSON header + VTN1 arrays in declared order.
struct Checkpoint {
  GeneratorParams params;
  std::vector<GaussianVariational> qs;
  std::size_t iteration = 0;
};
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Measurement set container: JSON header + one stacked (N, m) VTN1 array.
void save_measurement_set(const std::filesystem::path& path, const MeasurementSet& ms);
MeasurementSet load_measurement_set(const std::filesystem::path& path);

// Composable pipeline stages; each reads earlier artifacts from the output
// directory and writes its own. run_experiment() chains the right stages for
// the configured experiment kind.
void stage_synth(const ExperimentConfig& cfg);
void stage_measure(const ExperimentConfig& cfg);
void stage_train(const ExperimentConfig& cfg, const std::optional<std::filesystem::path>& resume);
void stage_reconstruct(const ExperimentConfig& cfg);
void stage_baseline(const ExperimentConfig& cfg);
void stage_select(const ExperimentConfig& cfg);
void stage_report(const ExperimentConfig& cfg);

int run_experiment(const ExperimentConfig& cfg);

}  // namespace vip
