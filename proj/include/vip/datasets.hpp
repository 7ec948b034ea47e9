#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vip/tensor.hpp"

namespace vip {

// Synthetic image sequences, deterministic per seed, pixel values in (0,1).
// Names: "moving-disk", "crescent-ring", "two-class-digits" (uses `klass`).
std::vector<Tensor> synth_dataset(const std::string& name, std::size_t n, std::size_t h,
                                  std::size_t w, std::uint64_t seed, int klass = 0);

std::vector<Tensor> synth_moving_disk(std::size_t n, std::size_t h, std::size_t w,
                                      std::uint64_t seed);
std::vector<Tensor> synth_crescent_ring(std::size_t n, std::size_t h, std::size_t w,
                                        std::uint64_t seed);
std::vector<Tensor> synth_two_class_digits(std::size_t n, std::size_t h, std::size_t w,
                                           int klass, std::uint64_t seed);

// Bilinear samples at n_angles equispaced angles along a circle; stacking the
// per-frame profiles gives the space x time unwrap.
std::vector<double> ring_profile(const Tensor& image, double cx, double cy, double radius,
                                 std::size_t n_angles);

}  // namespace vip
