#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "vip/common.hpp"
#include "vip/tensor.hpp"

namespace vip {

enum class ModelKind {
  Denoise,
  InterferometricCS,
  GaussianCS,
  FourierPhaseRetrieval,
  GaussianPhaseRetrieval,
};

const char* model_kind_name(ModelKind kind);
ModelKind model_kind_from_name(const std::string& name);

// Measurement operator plus noise level. Complex kinds hold a dense operator
// (real and imaginary parts) of shape (complex_rows, h*w); measurement
// vectors are laid out as [re..., im...] for complex-valued outputs and as
// plain magnitudes for phase retrieval.
struct ForwardModel {
  ModelKind kind = ModelKind::Denoise;
  double sigma = 0.0;
  std::size_t h = 0, w = 0;
  std::vector<std::pair<double, double>> uv;  // InterferometricCS, cycles/FOV
  std::uint64_t matrix_seed = 0;              // Gaussian kinds
  std::size_t rows = 0;                       // complex rows for Gaussian kinds
  Tensor op_re, op_im;                        // dense operator, kinds != Denoise

  static ForwardModel denoise(std::size_t h, std::size_t w, double sigma);
  static ForwardModel interferometric(std::size_t h, std::size_t w,
                                      std::vector<std::pair<double, double>> uv, double sigma);
  static ForwardModel gaussian_cs(std::size_t h, std::size_t w, std::size_t rows,
                                  std::uint64_t seed, double sigma);
  static ForwardModel fourier_pr(std::size_t h, std::size_t w, double sigma);
  static ForwardModel gaussian_pr(std::size_t h, std::size_t w, std::size_t rows,
                                  std::uint64_t seed, double sigma);

  std::size_t complex_rows() const;
  // Number of real measurement components m.
  std::size_t measurement_size() const;
};

// Noiseless measurement of an (h, w) image; differentiable w.r.t. x.
Tensor apply(const ForwardModel& model, const Tensor& x);

std::vector<double> add_noise(const std::vector<double>& clean, double sigma, Rng& rng);
double snr_db(const std::vector<double>& clean, double sigma);
double calibrate_sigma(const std::vector<double>& clean, double target_snr_db);

// real(A^H y) for the interferometric operator, reshaped to (h, w).
Tensor dirty_image(const ForwardModel& model, const std::vector<double>& y);

// Conjugate-symmetric elliptical-arc coverage, Earth-rotation style.
std::vector<std::pair<double, double>> synth_uv_coverage(std::size_t h, std::size_t w,
                                                         std::size_t num_tracks,
                                                         std::size_t points_per_track,
                                                         double max_radius, std::uint64_t seed);
// Fraction of distinct rounded grid cells covered, in [0, 1].
double coverage_fraction(std::size_t h, std::size_t w,
                         const std::vector<std::pair<double, double>>& uv);

// Zeroes DFT coefficients with radius > `radius` (cycles/FOV), returns the
// real part of the inverse transform.
Tensor low_pass_target(const Tensor& x, double radius);

struct MeasurementSet {
  std::vector<std::vector<double>> observations;
  ForwardModel model;
  std::vector<Tensor> ground_truth;  // synthetic evaluation only; may be empty
};

}  // namespace vip
