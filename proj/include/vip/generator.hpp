#pragma once

#include <cstdint>
#include <vector>

#include "vip/common.hpp"
#include "vip/tensor.hpp"

namespace vip {

enum class Mode { train, eval };

// Deep Decoder hyperparameters. The spatial size doubles in the first
// `upsample_count()` layers, going from seed_h x seed_w to out_h x out_w.
struct DeepDecoderConfig {
  std::size_t num_layers = 6;
  std::size_t channels = 150;
  std::size_t latent_dim = 40;
  std::size_t out_h = 32;
  std::size_t out_w = 32;
  std::size_t out_channels = 1;
  double dropout_rate = 1e-4;
  std::size_t seed_h = 4;
  std::size_t seed_w = 4;

  // Number of x2 upsampling layers; throws if out size is not reachable by
  // doubling from the seed size within num_layers, or both axes disagree.
  std::size_t upsample_count() const;
  void validate() const;
};

// All learnable weights of the shared generator.
struct GeneratorParams {
  DeepDecoderConfig config;
  Tensor input_proj;                // (channels*seed_h*seed_w, latent_dim)
  std::vector<Tensor> conv_w;       // num_layers of (channels, channels)
  std::vector<Tensor> norm_scale;   // num_layers of (channels)
  std::vector<Tensor> norm_bias;    // num_layers of (channels)
  Tensor output_w;                  // (out_channels, channels)

  // Stable enumeration order for updates, gradients and checkpoints.
  std::vector<Tensor*> all();
  std::vector<const Tensor*> all() const;

  std::size_t param_count() const;
  GeneratorParams attach(Tape& tape) const;
};

// Closed-form parameter count for a config.
std::size_t expected_param_count(const DeepDecoderConfig& config);

GeneratorParams init_generator(const DeepDecoderConfig& config, std::uint64_t seed);

// Inverted-scaling Bernoulli(1-rate) mask; expectation 1 per entry.
Tensor dropout_mask(const Shape& shape, double rate, Rng& rng);

// Forward pass z -> image in (0,1). Output shape is (out_h, out_w) for one
// output channel, (out_channels, out_h, out_w) otherwise. Train mode applies
// dropout after each channel normalization.
Tensor generate(const GeneratorParams& params, const Tensor& z, Mode mode, Rng& rng);

}  // namespace vip
