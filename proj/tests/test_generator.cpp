#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "vip/generator.hpp"

using namespace vip;

namespace {

DeepDecoderConfig tiny_config() {
  DeepDecoderConfig c;
  c.num_layers = 2;
  c.channels = 4;
  c.latent_dim = 3;
  c.seed_h = 2;
  c.seed_w = 2;
  c.out_h = 4;
  c.out_w = 4;
  c.dropout_rate = 0.0;
  return c;
}

Tensor random_latent(std::size_t k, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> z(k);
  for (auto& v : z) v = rng.normal();
  return Tensor(Shape{k}, std::move(z));
}

}  // namespace

TEST_CASE("upsample count and config validation") {
  DeepDecoderConfig c = tiny_config();
  CHECK(c.upsample_count() == 1);
  c.out_h = c.out_w = 16;
  c.num_layers = 5;
  CHECK(c.upsample_count() == 3);
  c.out_h = 12;  // not a power-of-two multiple of the seed
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.out_h = 16;
  c.num_layers = 2;  // fewer layers than required doublings
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.num_layers = 3;
  c.dropout_rate = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("parameter count matches enumeration and closed form") {
  DeepDecoderConfig c;
  c.num_layers = 3;
  c.channels = 8;
  c.latent_dim = 5;
  c.seed_h = c.seed_w = 4;
  c.out_h = c.out_w = 16;
  GeneratorParams p = init_generator(c, 99);
  // enumerate by hand: projection + per-layer conv/scale/bias + output conv
  std::size_t manual = (8 * 4 * 4) * 5;
  manual += 3 * (8 * 8 + 8 + 8);
  manual += 1 * 8;
  CHECK(p.param_count() == manual);
  CHECK(expected_param_count(c) == manual);
  CHECK(p.all().size() == 1 + 3 * 3 + 1);
}

TEST_CASE("initialization is deterministic per seed") {
  const DeepDecoderConfig c = tiny_config();
  GeneratorParams a = init_generator(c, 5);
  GeneratorParams b = init_generator(c, 5);
  GeneratorParams d = init_generator(c, 6);
  CHECK(a.input_proj.data() == b.input_proj.data());
  CHECK(a.conv_w[1].data() == b.conv_w[1].data());
  CHECK(a.input_proj.data() != d.input_proj.data());
  // norm parameters start at identity affine
  for (double v : a.norm_scale[0].data()) CHECK(v == 1.0);
  for (double v : a.norm_bias[0].data()) CHECK(v == 0.0);
}

TEST_CASE("output shape, range, and eval determinism") {
  const DeepDecoderConfig c = tiny_config();
  GeneratorParams p = init_generator(c, 21);
  const Tensor z = random_latent(c.latent_dim, 3);
  Rng unused(0);
  const Tensor img1 = generate(p, z, Mode::eval, unused);
  const Tensor img2 = generate(p, z, Mode::eval, unused);
  REQUIRE(img1.shape == Shape{4, 4});
  for (std::size_t i = 0; i < img1.size(); ++i) {
    CHECK(img1[i] > 0.0);
    CHECK(img1[i] < 1.0);
  }
  CHECK(img1.data() == img2.data());

  DeepDecoderConfig mc = c;
  mc.out_channels = 2;
  GeneratorParams pm = init_generator(mc, 21);
  CHECK(generate(pm, z, Mode::eval, unused).shape == Shape{2, 4, 4});
}

TEST_CASE("channel permutation equivariance") {
  const DeepDecoderConfig c = tiny_config();
  GeneratorParams p = init_generator(c, 77);
  const Tensor z = random_latent(c.latent_dim, 8);
  Rng unused(0);
  const Tensor base = generate(p, z, Mode::eval, unused);

  const std::size_t ch = c.channels, pix = c.seed_h * c.seed_w;
  const std::vector<std::size_t> perm{2, 0, 3, 1};
  GeneratorParams q = p;
  // permute the projection's channel blocks
  std::vector<double> proj(p.input_proj.size());
  for (std::size_t cc = 0; cc < ch; ++cc) {
    for (std::size_t r = 0; r < pix; ++r) {
      for (std::size_t k = 0; k < c.latent_dim; ++k) {
        proj[(cc * pix + r) * c.latent_dim + k] =
            p.input_proj[(perm[cc] * pix + r) * c.latent_dim + k];
      }
    }
  }
  q.input_proj = Tensor(p.input_proj.shape, std::move(proj));
  // conjugate each mixing matrix: W' = P W P^T
  for (std::size_t l = 0; l < c.num_layers; ++l) {
    std::vector<double> w(ch * ch), sc(ch), bi(ch);
    for (std::size_t i = 0; i < ch; ++i) {
      sc[i] = p.norm_scale[l][perm[i]];
      bi[i] = p.norm_bias[l][perm[i]];
      for (std::size_t j = 0; j < ch; ++j) w[i * ch + j] = p.conv_w[l][perm[i] * ch + perm[j]];
    }
    q.conv_w[l] = Tensor(Shape{ch, ch}, std::move(w));
    q.norm_scale[l] = Tensor(Shape{ch}, std::move(sc));
    q.norm_bias[l] = Tensor(Shape{ch}, std::move(bi));
  }
  std::vector<double> ow(p.output_w.size());
  for (std::size_t o = 0; o < c.out_channels; ++o) {
    for (std::size_t j = 0; j < ch; ++j) ow[o * ch + j] = p.output_w[o * ch + perm[j]];
  }
  q.output_w = Tensor(p.output_w.shape, std::move(ow));

  const Tensor permuted = generate(q, z, Mode::eval, unused);
  for (std::size_t i = 0; i < base.size(); ++i) {
    CHECK(permuted[i] == doctest::Approx(base[i]).epsilon(1e-8));
  }
}

TEST_CASE("dropout mask statistics and determinism") {
  Rng rng(31);
  const double rate = 0.3;
  const Tensor mask = dropout_mask(Shape{20000}, rate, rng);
  double sum = 0.0;
  std::size_t zeros = 0;
  for (double v : mask.data()) {
    CHECK((v == 0.0 || v == doctest::Approx(1.0 / 0.7).epsilon(1e-12)));
    sum += v;
    zeros += v == 0.0;
  }
  CHECK(sum / static_cast<double>(mask.size()) == doctest::Approx(1.0).epsilon(0.02));
  CHECK(static_cast<double>(zeros) / static_cast<double>(mask.size()) ==
        doctest::Approx(rate).epsilon(0.05));

  Rng r1(7), r2(7);
  CHECK(dropout_mask(Shape{64}, rate, r1).data() == dropout_mask(Shape{64}, rate, r2).data());
  CHECK_THROWS_AS(dropout_mask(Shape{4}, 1.0, rng), std::invalid_argument);
}

TEST_CASE("train mode with zero dropout equals eval mode") {
  const DeepDecoderConfig c = tiny_config();
  GeneratorParams p = init_generator(c, 13);
  const Tensor z = random_latent(c.latent_dim, 5);
  Rng r1(1), r2(2);
  CHECK(generate(p, z, Mode::train, r1).data() == generate(p, z, Mode::eval, r2).data());
}

TEST_CASE("fd: gradients through the full decoder") {
  const DeepDecoderConfig c = tiny_config();
  GeneratorParams p = init_generator(c, 55);
  const Tensor z = random_latent(c.latent_dim, 17);
  Rng target_rng(23);
  std::vector<double> target(c.out_h * c.out_w);
  for (auto& v : target) v = target_rng.uniform();

  Tape tape;
  GeneratorParams attached = p.attach(tape);
  Tensor zt = tape.leaf(z);
  Rng unused(0);
  Tensor img = generate(attached, zt, Mode::eval, unused);
  Tensor diff = sub(reshape(img, Shape{target.size()}), Tensor(Shape{target.size()}, target));
  Tensor loss = sum(square(diff));
  tape.backward(loss);

  auto eval_with = [&](const GeneratorParams& pp, const Tensor& zz) {
    Rng u(0);
    Tensor im = generate(pp, zz, Mode::eval, u);
    double acc = 0.0;
    for (std::size_t i = 0; i < im.size(); ++i) {
      const double d = im[i] - target[i];
      acc += d * d;
    }
    return acc;
  };

  // every parameter tensor plus the latent input
  std::vector<Tensor*> plain = p.all();
  std::vector<Tensor*> leaves = attached.all();
  for (std::size_t t = 0; t < plain.size(); ++t) {
    const Tensor g = tape.grad(*leaves[t]);
    for (std::size_t j = 0; j < plain[t]->size(); ++j) {
      const double v = (*plain[t])[j];
      const double h = 1e-5 * std::max(1.0, std::abs(v));
      GeneratorParams pp = p;
      // deep-copy the tensors we mutate so p itself stays untouched
      std::vector<Tensor*> mine = pp.all();
      *mine[t] = plain[t]->detached_copy();
      mine[t]->mutable_data()[j] = v + h;
      const double fp = eval_with(pp, z);
      mine[t]->mutable_data()[j] = v - h;
      const double fm = eval_with(pp, z);
      const double fd = (fp - fm) / (2.0 * h);
      const double scale = std::max({1.0, std::abs(fd), std::abs(g[j])});
      CHECK(std::abs(fd - g[j]) <= 1e-4 * scale);
    }
  }
  const Tensor gz = tape.grad(zt);
  for (std::size_t j = 0; j < z.size(); ++j) {
    const double v = z[j];
    const double h = 1e-5 * std::max(1.0, std::abs(v));
    Tensor zz = z.detached_copy();
    zz.mutable_data()[j] = v + h;
    const double fp = eval_with(p, zz);
    zz.mutable_data()[j] = v - h;
    const double fm = eval_with(p, zz);
    const double fd = (fp - fm) / (2.0 * h);
    const double scale = std::max({1.0, std::abs(fd), std::abs(gz[j])});
    CHECK(std::abs(fd - gz[j]) <= 1e-4 * scale);
  }
}
