#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "vip/forward_models.hpp"

using namespace vip;

namespace {

Tensor random_image(std::size_t h, std::size_t w, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> img(h * w);
  for (auto& v : img) v = rng.uniform(0.05, 0.95);
  return Tensor(Shape{h, w}, std::move(img));
}

// naive visibility at a continuous (u, v) point
std::complex<double> brute_visibility(const Tensor& x, double u, double v) {
  const std::size_t h = x.shape[0], w = x.shape[1];
  std::complex<double> acc = 0.0;
  for (std::size_t p = 0; p < h; ++p) {
    for (std::size_t q = 0; q < w; ++q) {
      const double th = -2.0 * kPi * (u * static_cast<double>(p) / static_cast<double>(h) +
                                      v * static_cast<double>(q) / static_cast<double>(w));
      acc += x[p * w + q] * std::complex<double>(std::cos(th), std::sin(th));
    }
  }
  return acc / std::sqrt(static_cast<double>(h * w));
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

TEST_CASE("interferometric DC row and brute-force DFT oracle") {
  const std::size_t h = 6, w = 5;
  const Tensor x = random_image(h, w, 3);
  std::vector<std::pair<double, double>> uv{{0.0, 0.0}, {1.0, 2.0}, {-2.5, 1.25}, {3.0, -2.0}};
  ForwardModel m = ForwardModel::interferometric(h, w, uv, 0.1);
  const std::vector<double> y = apply(m, x).data();
  REQUIRE(y.size() == 2 * uv.size());

  double total = 0.0;
  for (double v : x.data()) total += v;
  CHECK(y[0] == doctest::Approx(total / std::sqrt(30.0)).epsilon(1e-12));
  CHECK(y[uv.size()] == doctest::Approx(0.0).epsilon(1e-12));

  for (std::size_t r = 0; r < uv.size(); ++r) {
    const auto vis = brute_visibility(x, uv[r].first, uv[r].second);
    CHECK(std::abs(y[r] - vis.real()) < 1e-10);
    CHECK(std::abs(y[uv.size() + r] - vis.imag()) < 1e-10);
  }
}

TEST_CASE("uv points beyond Nyquist are rejected") {
  CHECK_THROWS_AS(ForwardModel::interferometric(8, 8, {{5.0, 0.0}}, 0.1), ConfigError);
  CHECK_THROWS_AS(ForwardModel::interferometric(8, 8, {}, 0.1), ConfigError);
  CHECK_NOTHROW(ForwardModel::interferometric(8, 8, {{4.0, -4.0}}, 0.1));
}

TEST_CASE("dirty image is the adjoint") {
  const std::size_t h = 5, w = 7;
  const Tensor x = random_image(h, w, 11);
  ForwardModel m = ForwardModel::interferometric(
      h, w, {{0.5, 1.0}, {2.0, -1.5}, {-1.0, 3.0}, {1.5, 0.25}}, 0.1);
  Rng rng(4);
  std::vector<double> y(m.measurement_size());
  for (auto& v : y) v = rng.normal();
  // <A x, y> must equal <x, A^T y> with the dirty image playing A^T y
  const double lhs = dot(apply(m, x).data(), y);
  const double rhs = dot(x.data(), dirty_image(m, y).data());
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
}

TEST_CASE("full-grid coverage makes the dirty image exact") {
  const std::size_t h = 8, w = 8;
  std::vector<std::pair<double, double>> uv;
  for (int u = -4; u < 4; ++u) {
    for (int v = -4; v < 4; ++v) uv.emplace_back(u, v);
  }
  ForwardModel m = ForwardModel::interferometric(h, w, uv, 0.1);
  const Tensor x = random_image(h, w, 21);
  const Tensor dirty = dirty_image(m, apply(m, x).data());
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(dirty[i] == doctest::Approx(x[i]).epsilon(1e-8));
  }
}

TEST_CASE("gaussian operators: seeds, sizes, modulus floor") {
  ForwardModel a = ForwardModel::gaussian_cs(4, 4, 10, 5, 0.1);
  ForwardModel b = ForwardModel::gaussian_cs(4, 4, 10, 5, 0.1);
  ForwardModel c = ForwardModel::gaussian_cs(4, 4, 10, 6, 0.1);
  CHECK(a.op_re.data() == b.op_re.data());
  CHECK(a.op_re.data() != c.op_re.data());
  CHECK(a.measurement_size() == 20);

  ForwardModel pr = ForwardModel::gaussian_pr(4, 4, 10, 5, 0.1);
  CHECK(pr.measurement_size() == 10);
  // identical matrices, so pr magnitudes match the cs measurements
  const Tensor x = random_image(4, 4, 2);
  const auto ycs = apply(a, x).data();
  const auto ypr = apply(pr, x).data();
  for (std::size_t r = 0; r < 10; ++r) {
    const double mag = std::hypot(ycs[r], ycs[10 + r]);
    CHECK(ypr[r] == doctest::Approx(std::sqrt(mag * mag + 1e-16)).epsilon(1e-12));
  }
}

TEST_CASE("fourier phase retrieval against a padded DFT oracle") {
  const std::size_t h = 3, w = 4;
  const Tensor x = random_image(h, w, 9);
  ForwardModel m = ForwardModel::fourier_pr(h, w, 0.1);
  const auto y = apply(m, x).data();
  REQUIRE(y.size() == 4 * h * w);
  const std::size_t ph = 2 * h, pw = 2 * w;
  for (std::size_t a = 0; a < ph; ++a) {
    for (std::size_t b = 0; b < pw; ++b) {
      std::complex<double> acc = 0.0;
      for (std::size_t p = 0; p < h; ++p) {
        for (std::size_t q = 0; q < w; ++q) {
          const double th = -2.0 * kPi * (static_cast<double>(a * p) / static_cast<double>(ph) +
                                          static_cast<double>(b * q) / static_cast<double>(pw));
          acc += x[p * w + q] * std::complex<double>(std::cos(th), std::sin(th));
        }
      }
      const double mag = std::abs(acc) / std::sqrt(static_cast<double>(ph * pw));
      CHECK(std::abs(y[a * pw + b] - std::sqrt(mag * mag + 1e-16)) < 1e-10);
    }
  }
}

TEST_CASE("fd: apply is differentiable for every kind") {
  const std::size_t h = 4, w = 4;
  const Tensor x = random_image(h, w, 33);
  std::vector<ForwardModel> models;
  models.push_back(ForwardModel::denoise(h, w, 0.1));
  models.push_back(ForwardModel::interferometric(h, w, {{1.0, 0.5}, {-0.5, 1.5}}, 0.1));
  models.push_back(ForwardModel::gaussian_cs(h, w, 6, 1, 0.1));
  models.push_back(ForwardModel::fourier_pr(h, w, 0.1));
  models.push_back(ForwardModel::gaussian_pr(h, w, 6, 1, 0.1));
  for (const auto& m : models) {
    Rng rng(7);
    std::vector<double> wvec(m.measurement_size());
    for (auto& v : wvec) v = rng.normal();
    auto f = [&](const Tensor& img) {
      return sum(mul(apply(m, img), Tensor(Shape{wvec.size()}, wvec)));
    };
    Tape tape;
    Tensor leaf = tape.leaf(x);
    tape.backward(f(leaf));
    const Tensor g = tape.grad(leaf);
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double v = x[j];
      const double step = 1e-5;
      Tensor xp = x.detached_copy(), xm = x.detached_copy();
      xp.mutable_data()[j] = v + step;
      xm.mutable_data()[j] = v - step;
      const double fd = (f(xp).item() - f(xm).item()) / (2.0 * step);
      const double scale = std::max({1.0, std::abs(fd), std::abs(g[j])});
      CHECK(std::abs(fd - g[j]) <= 1e-4 * scale);
    }
  }
}

TEST_CASE("noise calibration round-trips and has the right spread") {
  const Tensor x = random_image(8, 8, 12);
  const std::vector<double>& clean = x.data();
  const double sigma = calibrate_sigma(clean, 15.0);
  CHECK(snr_db(clean, sigma) == doctest::Approx(15.0).epsilon(1e-12));

  Rng rng(77);
  std::vector<double> big(200000, 0.0);
  const auto noisy = add_noise(big, 0.3, rng);
  double ss = 0.0;
  for (double v : noisy) ss += v * v;
  CHECK(std::sqrt(ss / static_cast<double>(big.size())) == doctest::Approx(0.3).epsilon(0.01));
}

TEST_CASE("synthetic uv coverage properties") {
  const std::size_t h = 32, w = 32;
  const auto uv = synth_uv_coverage(h, w, 10, 20, 12.0, 99);
  REQUIRE(uv.size() == 2 * 10 * 20);
  for (std::size_t i = 0; i < uv.size(); i += 2) {
    // conjugate-mirrored pairs, radius within the requested bound
    CHECK(uv[i].first == doctest::Approx(-uv[i + 1].first).epsilon(1e-12));
    CHECK(uv[i].second == doctest::Approx(-uv[i + 1].second).epsilon(1e-12));
    CHECK(std::hypot(uv[i].first, uv[i].second) <= 12.0 + 1e-9);
  }
  const double frac = coverage_fraction(h, w, uv);
  CHECK(frac > 0.0);
  CHECK(frac <= 1.0);
  CHECK(frac <= static_cast<double>(uv.size()) / static_cast<double>(h * w));
  CHECK_THROWS_AS(synth_uv_coverage(8, 8, 2, 4, 100.0, 1), ConfigError);
}

TEST_CASE("low-pass target properties") {
  const std::size_t h = 8, w = 8;
  const Tensor x = random_image(h, w, 5);
  // radius at or above Nyquist keeps every coefficient
  const Tensor full = low_pass_target(x, 10.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(full[i] == doctest::Approx(x[i]).epsilon(1e-10));
  }
  // a constant image is pure DC and survives any radius
  const Tensor flat = Tensor::full(Shape{h, w}, 0.42);
  const Tensor lp = low_pass_target(flat, 1.0);
  for (std::size_t i = 0; i < lp.size(); ++i) {
    CHECK(lp[i] == doctest::Approx(0.42).epsilon(1e-10));
  }
  // removing frequencies cannot raise the energy (Parseval)
  const Tensor cut = low_pass_target(x, 2.0);
  double ex = 0.0, ec = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    ex += x[i] * x[i];
    ec += cut[i] * cut[i];
  }
  CHECK(ec <= ex + 1e-12);
}

TEST_CASE("kind names round-trip") {
  for (ModelKind k : {ModelKind::Denoise, ModelKind::InterferometricCS, ModelKind::GaussianCS,
                      ModelKind::FourierPhaseRetrieval, ModelKind::GaussianPhaseRetrieval}) {
    CHECK(model_kind_from_name(model_kind_name(k)) == k);
  }
  CHECK_THROWS_AS(model_kind_from_name("nope"), ConfigError);
}
