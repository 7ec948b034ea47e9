#include "vip/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vip/common.hpp"

namespace vip {

namespace {

double smoothstep(double edge0, double edge1, double x) {
  const double t = std::clamp((x - edge0) / (edge1 - edge0), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

Tensor clamp_open_unit(std::vector<double> data, std::size_t h, std::size_t w) {
  for (auto& v : data) v = 0.05 + 0.9 * std::clamp(v, 0.0, 1.0);
  return Tensor(Shape{h, w}, std::move(data));
}

}  // namespace

std::vector<Tensor> synth_moving_disk(std::size_t n, std::size_t h, std::size_t w,
                                      std::uint64_t seed) {
  Rng rng(seed);
  const double cx = static_cast<double>(w - 1) / 2.0, cy = static_cast<double>(h - 1) / 2.0;
  const double mn = static_cast<double>(std::min(h, w));
  const double orbit = 0.30 * mn;
  const double disk_r = 0.14 * mn;
  const double theta0 = rng.uniform(0.0, 2.0 * kPi);
  const double step = 2.0 * kPi / static_cast<double>(n);
  std::vector<Tensor> frames;
  for (std::size_t t = 0; t < n; ++t) {
    const double th = theta0 + step * static_cast<double>(t);
    const double dx = cx + orbit * std::cos(th), dy = cy + orbit * std::sin(th);
    std::vector<double> img(h * w);
    for (std::size_t p = 0; p < h; ++p) {
      for (std::size_t q = 0; q < w; ++q) {
        const double r = std::hypot(static_cast<double>(p) - dy, static_cast<double>(q) - dx);
        img[p * w + q] = 0.9 * (1.0 - smoothstep(disk_r - 1.0, disk_r + 1.0, r));
      }
    }
    frames.push_back(clamp_open_unit(std::move(img), h, w));
  }
  return frames;
}

std::vector<Tensor> synth_crescent_ring(std::size_t n, std::size_t h, std::size_t w,
                                        std::uint64_t seed) {
  Rng rng(seed);
  const double cx = static_cast<double>(w - 1) / 2.0, cy = static_cast<double>(h - 1) / 2.0;
  const double mn = static_cast<double>(std::min(h, w));
  const double ring_r = 0.30 * mn;
  const double ring_sigma = 0.055 * mn;
  const double theta0 = rng.uniform(0.0, 2.0 * kPi);
  const double omega = 0.15;  // rad per frame; day-to-day evolution stays gentle
  const double kappa = 4.0;
  std::vector<Tensor> frames;
  for (std::size_t t = 0; t < n; ++t) {
    const double spot = theta0 + omega * static_cast<double>(t);
    std::vector<double> img(h * w);
    for (std::size_t p = 0; p < h; ++p) {
      for (std::size_t q = 0; q < w; ++q) {
        const double ddy = static_cast<double>(p) - cy, ddx = static_cast<double>(q) - cx;
        const double r = std::hypot(ddy, ddx);
        const double ang = std::atan2(ddy, ddx);
        const double radial = std::exp(-0.5 * (r - ring_r) * (r - ring_r) /
                                       (ring_sigma * ring_sigma));
        const double bump = std::exp(kappa * (std::cos(ang - spot) - 1.0));
        img[p * w + q] = radial * (0.35 + 0.65 * bump);
      }
    }
    frames.push_back(clamp_open_unit(std::move(img), h, w));
  }
  return frames;
}

std::vector<Tensor> synth_two_class_digits(std::size_t n, std::size_t h, std::size_t w,
                                           int klass, std::uint64_t seed) {
  if (klass != 0 && klass != 1) throw std::invalid_argument("two-class-digits: class 0 or 1");
  Rng rng(seed);
  const double cx = static_cast<double>(w - 1) / 2.0, cy = static_cast<double>(h - 1) / 2.0;
  const double mn = static_cast<double>(std::min(h, w));
  std::vector<Tensor> frames;
  for (std::size_t t = 0; t < n; ++t) {
    const double jx = rng.uniform(-0.08, 0.08) * mn, jy = rng.uniform(-0.08, 0.08) * mn;
    const double s = rng.uniform(0.10, 0.14) * mn;
    std::vector<double> img(h * w, 0.0);
    auto add_blob = [&](double bx, double by, double bs) {
      for (std::size_t p = 0; p < h; ++p) {
        for (std::size_t q = 0; q < w; ++q) {
          const double ddy = static_cast<double>(p) - by, ddx = static_cast<double>(q) - bx;
          img[p * w + q] += 0.9 * std::exp(-0.5 * (ddx * ddx + ddy * ddy) / (bs * bs));
        }
      }
    };
    if (klass == 0) {
      // one centered blob
      add_blob(cx + jx, cy + jy, s);
    } else {
      // two blobs stacked vertically
      const double off = 0.22 * mn;
      add_blob(cx + jx, cy + jy - off, 0.8 * s);
      add_blob(cx + jx, cy + jy + off, 0.8 * s);
    }
    frames.push_back(clamp_open_unit(std::move(img), h, w));
  }
  return frames;
}

std::vector<Tensor> synth_dataset(const std::string& name, std::size_t n, std::size_t h,
                                  std::size_t w, std::uint64_t seed, int klass) {
  if (name == "moving-disk") return synth_moving_disk(n, h, w, seed);
  if (name == "crescent-ring") return synth_crescent_ring(n, h, w, seed);
  if (name == "two-class-digits") return synth_two_class_digits(n, h, w, klass, seed);
  throw ConfigError("unknown synthetic dataset: " + name);
}

std::vector<double> ring_profile(const Tensor& image, double cx, double cy, double radius,
                                 std::size_t n_angles) {
  if (image.rank() != 2) throw std::invalid_argument("ring_profile: 2-D image required");
  if (n_angles == 0) throw std::invalid_argument("ring_profile: n_angles > 0 required");
  const std::size_t h = image.shape[0], w = image.shape[1];
  if (cx - radius < 0.0 || cx + radius > static_cast<double>(w - 1) || cy - radius < 0.0 ||
      cy + radius > static_cast<double>(h - 1)) {
    throw std::invalid_argument("ring_profile: ring outside image bounds");
  }
  std::vector<double> profile(n_angles);
  for (std::size_t j = 0; j < n_angles; ++j) {
    const double ang = 2.0 * kPi * static_cast<double>(j) / static_cast<double>(n_angles);
    const double x = cx + radius * std::cos(ang);
    const double y = cy + radius * std::sin(ang);
    const std::size_t x0 = static_cast<std::size_t>(std::floor(x));
    const std::size_t y0 = static_cast<std::size_t>(std::floor(y));
    const std::size_t x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
    const double fx = x - static_cast<double>(x0), fy = y - static_cast<double>(y0);
    profile[j] = (1.0 - fy) * ((1.0 - fx) * image[y0 * w + x0] + fx * image[y0 * w + x1]) +
                 fy * ((1.0 - fx) * image[y1 * w + x0] + fx * image[y1 * w + x1]);
  }
  return profile;
}

}  // namespace vip
