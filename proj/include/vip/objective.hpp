#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "vip/forward_models.hpp"
#include "vip/generator.hpp"
#include "vip/variational.hpp"

namespace vip {

struct ElboTerms {
  double likelihood = 0.0;
  double prior = 0.0;
  double entropy = 0.0;
  double total() const { return likelihood + prior + entropy; }
};

// Gaussian measurement log-density log N(y; f(x_hat), sigma^2 I).
Tensor log_likelihood(const ForwardModel& model, const std::vector<double>& y,
                      const Tensor& x_hat);

// Generator hook: latent sample -> image, parameterized by the sample index
// so callers can derive per-sample randomness (dropout) deterministically.
using GenFn = std::function<Tensor(const Tensor& z, std::size_t sample_index)>;

// Monte-Carlo estimate of E_q[log p(y|G(z)) + log p(z) - log q(z)] over
// `mc_samples` reparameterized draws. Noise is a pure function of noise_seed.
Tensor elbo_proxy_core(const GenFn& gen, const GaussianVariational& q, const ForwardModel& model,
                       const std::vector<double>& y, std::size_t mc_samples,
                       std::uint64_t noise_seed, ElboTerms* terms = nullptr);

Tensor elbo_proxy(const GeneratorParams& params, const GaussianVariational& q,
                  const ForwardModel& model, const std::vector<double>& y,
                  std::size_t mc_samples, Mode mode, std::uint64_t noise_seed,
                  ElboTerms* terms = nullptr);

// Adaptive-moment gradient ascent over a fixed parameter list.
class Adam {
 public:
  Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void ascend(const std::vector<Tensor*>& params, const std::vector<std::vector<double>>& grads);

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

struct TrainConfig {
  std::size_t mc_samples = 2;
  double lr_theta = 1e-3;
  double lr_phi = 1e-2;
  std::size_t iterations = 0;
  std::size_t batch = 0;  // 0 = all measurement indices each step
  std::uint64_t seed = 0;
  bool dropout = true;
  int threads = 1;
};

struct IterRecord {
  std::size_t iteration;
  double objective;
  double likelihood_term;
  double prior_term;
  double entropy_term;
  double seconds;
};

struct TrainReport {
  std::vector<IterRecord> iterations;
  void write_csv(const std::filesystem::path& path) const;
};

// Joint gradient ascent over generator weights and all per-measurement
// posteriors. Deterministic given cfg.seed regardless of cfg.threads.
TrainReport joint_train(GeneratorParams& params, std::vector<GaussianVariational>& qs,
                        const MeasurementSet& measurements, const TrainConfig& cfg);

struct Reconstruction {
  Tensor mean;
  std::vector<Tensor> samples;
};

Reconstruction reconstruct(const GeneratorParams& params, const GaussianVariational& q,
                           std::size_t n_samples, Rng& rng);

}  // namespace vip
