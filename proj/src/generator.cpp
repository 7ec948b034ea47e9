#include "vip/generator.hpp"

#include <cmath>
#include <stdexcept>

namespace vip {

namespace {

constexpr double kNormEps = 1e-6;

Tensor he_uniform(Shape shape, std::size_t fan_in, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  std::vector<double> data(numel(shape));
  for (auto& v : data) v = rng.uniform(-bound, bound);
  return Tensor(std::move(shape), std::move(data));
}

// Per-channel zero-mean/unit-variance over spatial dims, then learned affine.
Tensor channel_norm(const Tensor& x, const Tensor& scale, const Tensor& bias) {
  Tensor m = mean(x, {1});
  Tensor centered = sub_colvec(x, m);
  Tensor var = mean(square(centered), {1});
  Tensor stddev = sqrt_op(add(var, kNormEps));
  Tensor normalized = div_colvec(centered, stddev);
  return add_colvec(mul_colvec(normalized, scale), bias);
}

}  // namespace

std::size_t DeepDecoderConfig::upsample_count() const {
  std::size_t u = 0;
  std::size_t h = seed_h, w = seed_w;
  while (h < out_h || w < out_w) {
    h *= 2;
    w *= 2;
    ++u;
    if (u > num_layers) break;
  }
  if (h != out_h || w != out_w || u > num_layers) {
    throw ConfigError("output size not reachable by doubling the seed size within num_layers");
  }
  return u;
}

void DeepDecoderConfig::validate() const {
  if (num_layers == 0 || channels == 0 || latent_dim == 0 || out_channels == 0) {
    throw ConfigError("decoder config: counts must be positive");
  }
  if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
    throw ConfigError("decoder config: dropout rate must be in [0, 1)");
  }
  (void)upsample_count();
}

std::vector<Tensor*> GeneratorParams::all() {
  std::vector<Tensor*> out;
  out.push_back(&input_proj);
  for (auto& t : conv_w) out.push_back(&t);
  for (auto& t : norm_scale) out.push_back(&t);
  for (auto& t : norm_bias) out.push_back(&t);
  out.push_back(&output_w);
  return out;
}

std::vector<const Tensor*> GeneratorParams::all() const {
  std::vector<const Tensor*> out;
  out.push_back(&input_proj);
  for (const auto& t : conv_w) out.push_back(&t);
  for (const auto& t : norm_scale) out.push_back(&t);
  for (const auto& t : norm_bias) out.push_back(&t);
  out.push_back(&output_w);
  return out;
}

std::size_t GeneratorParams::param_count() const {
  std::size_t n = 0;
  for (const Tensor* t : all()) n += t->size();
  return n;
}

GeneratorParams GeneratorParams::attach(Tape& tape) const {
  GeneratorParams out;
  out.config = config;
  out.input_proj = tape.leaf(input_proj);
  out.conv_w.reserve(conv_w.size());
  for (const auto& t : conv_w) out.conv_w.push_back(tape.leaf(t));
  for (const auto& t : norm_scale) out.norm_scale.push_back(tape.leaf(t));
  for (const auto& t : norm_bias) out.norm_bias.push_back(tape.leaf(t));
  out.output_w = tape.leaf(output_w);
  return out;
}

std::size_t expected_param_count(const DeepDecoderConfig& c) {
  const std::size_t seed = c.channels * c.seed_h * c.seed_w;
  return seed * c.latent_dim + c.num_layers * c.channels * c.channels +
         c.num_layers * 2 * c.channels + c.out_channels * c.channels;
}

GeneratorParams init_generator(const DeepDecoderConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  GeneratorParams p;
  p.config = config;
  const std::size_t c = config.channels;
  p.input_proj = he_uniform(Shape{c * config.seed_h * config.seed_w, config.latent_dim},
                            config.latent_dim, rng);
  for (std::size_t l = 0; l < config.num_layers; ++l) {
    p.conv_w.push_back(he_uniform(Shape{c, c}, c, rng));
    p.norm_scale.push_back(Tensor::full(Shape{c}, 1.0));
    p.norm_bias.push_back(Tensor::zeros(Shape{c}));
  }
  p.output_w = he_uniform(Shape{config.out_channels, c}, c, rng);
  return p;
}

Tensor dropout_mask(const Shape& shape, double rate, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout rate must be in [0, 1)");
  std::vector<double> mask(numel(shape), 1.0);
  if (rate > 0.0) {
    const double keep = 1.0 - rate;
    for (auto& v : mask) v = rng.uniform() < keep ? 1.0 / keep : 0.0;
  }
  return Tensor(shape, std::move(mask));
}

Tensor generate(const GeneratorParams& params, const Tensor& z, Mode mode, Rng& rng) {
  const DeepDecoderConfig& cfg = params.config;
  if (z.size() != cfg.latent_dim) throw std::invalid_argument("generate: latent size mismatch");
  const std::size_t u = cfg.upsample_count();
  const std::size_t c = cfg.channels;
  std::size_t h = cfg.seed_h, w = cfg.seed_w;

  Tensor x = matmul(params.input_proj, reshape(z, Shape{cfg.latent_dim, 1}));
  x = reshape(x, Shape{c, h * w});
  for (std::size_t l = 0; l < cfg.num_layers; ++l) {
    x = matmul(params.conv_w[l], x);
    if (l < u) {
      x = upsample2_bilinear(x, h, w);
      h *= 2;
      w *= 2;
    }
    x = relu(x);
    x = channel_norm(x, params.norm_scale[l], params.norm_bias[l]);
    if (mode == Mode::train && cfg.dropout_rate > 0.0) {
      x = mul(x, dropout_mask(x.shape, cfg.dropout_rate, rng));
    }
  }
  Tensor out = sigmoid(matmul(params.output_w, x));
  check_finite(out, "generator output");
  if (cfg.out_channels == 1) return reshape(out, Shape{h, w});
  return reshape(out, Shape{cfg.out_channels, h, w});
}

}  // namespace vip
