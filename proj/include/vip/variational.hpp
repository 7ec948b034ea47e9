#pragma once

#include "vip/common.hpp"
#include "vip/tensor.hpp"

namespace vip {

// Per-measurement latent posterior N(mu, L L^T + ridge I). The ridge keeps
// the covariance positive definite for arbitrary (even degenerate) L.
struct GaussianVariational {
  Tensor mu;        // (k)
  Tensor l_factor;  // (k, k) lower-triangular
  double ridge = 1e-3;

  static GaussianVariational init(std::size_t k, Rng& rng);

  GaussianVariational attach(Tape& tape) const {
    return GaussianVariational{tape.leaf(mu), tape.leaf(l_factor), ridge};
  }

  std::size_t dim() const { return mu.size(); }
};

// Reparameterized draw z = mu + tril(L) u + sqrt(ridge) w with u, w iid
// standard normal; differentiable w.r.t. mu and L.
Tensor sample_one(const GaussianVariational& q, Rng& rng);
// Same with injected noise (common-random-numbers paths and tests).
Tensor sample_one_with(const GaussianVariational& q, const std::vector<double>& u,
                       const std::vector<double>& w);
// n independent draws stacked as (n, k).
Tensor sample(const GaussianVariational& q, std::size_t n, Rng& rng);

Tensor entropy(const GaussianVariational& q);
Tensor log_prob(const GaussianVariational& q, const Tensor& z);
Tensor std_normal_log_prob(const Tensor& z);

// Building blocks on a raw factor matrix (no triangular masking).
// log det(L L^T + ridge I), differentiable w.r.t. L.
Tensor gaussian_log_det(const Tensor& l, double ridge);
// log N(z; mu, L L^T + ridge I), differentiable w.r.t. z, mu, L.
Tensor gaussian_log_prob(const Tensor& z, const Tensor& mu, const Tensor& l, double ridge);

}  // namespace vip
