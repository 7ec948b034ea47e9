#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vip/forward_models.hpp"
#include "vip/generator.hpp"
#include "vip/objective.hpp"

namespace vip {

// Peak signal-to-noise ratio in dB; identical images give +infinity.
double psnr(const Tensor& x_hat, const Tensor& x_ref, double peak = 1.0);

// Isotropic smoothed total variation: sum sqrt(dh^2 + dv^2 + delta^2) with
// forward differences and replicate boundary. Differentiable scalar.
Tensor tv_smooth(const Tensor& x, double delta = 1e-6);

// TV-regularized maximum likelihood by gradient descent with backtracking
// line search; the objective is non-increasing per iteration.
Tensor tv_rml(const ForwardModel& model, const std::vector<double>& y, double lambda,
              std::size_t iters, double step);

struct DipResult {
  std::vector<Tensor> checkpoints;         // eval-mode images
  std::vector<std::size_t> checkpoint_iters;
  GeneratorParams params;
};

// Deep-image-prior style single fit: a fresh decoder with a fixed random
// latent, trained on one measurement by likelihood alone.
DipResult dip_fit(const ForwardModel& model, const std::vector<double>& y,
                  const DeepDecoderConfig& config, std::size_t iters,
                  std::size_t checkpoint_interval, std::uint64_t seed);

struct SelectionCase {
  const ForwardModel* model;
  std::vector<double> y;
};

struct ScoreMatrix {
  std::vector<std::string> row_labels;  // cases
  std::vector<std::string> col_labels;  // candidates
  std::vector<std::vector<double>> scores;  // -ELBOProxy, lower is better

  std::size_t argmin(std::size_t row) const;
  void write_csv(const std::filesystem::path& path) const;
};

// For each (case, candidate): fit only the latent posterior with the
// candidate generator frozen, then record -ELBOProxy.
ScoreMatrix model_selection(const std::vector<GeneratorParams>& candidates,
                            const std::vector<SelectionCase>& cases, std::size_t fit_iters,
                            std::uint64_t seed);
// Score of a single cell with a fixed evaluation seed (deterministic).
double selection_score(const GeneratorParams& candidate, const ForwardModel& model,
                       const std::vector<double>& y, std::size_t fit_iters, std::uint64_t seed);

struct AmbiguityGroup {
  bool shifts = false;
  bool flips = false;
  bool sign = false;
};

// Max PSNR over the finite orbit of x_hat under the ambiguity group.
double registered_psnr(const Tensor& x_hat, const Tensor& x_ref, const AmbiguityGroup& group,
                       double peak = 1.0);

}  // namespace vip
