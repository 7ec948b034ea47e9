#include "vip/variational.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace vip {

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EVec = Eigen::VectorXd;

Tape* joint_tape3(const Tensor& a, const Tensor& b, const Tensor& c) {
  Tape* t = nullptr;
  for (const Tensor* x : {&a, &b, &c}) {
    if (x->tape == nullptr) continue;
    if (t != nullptr && t != x->tape) throw std::invalid_argument("operands on different tapes");
    t = x->tape;
  }
  return t;
}

EMat covariance(const Tensor& l, double ridge) {
  const std::size_t k = l.shape[0];
  Eigen::Map<const EMat> lm(l.data().data(), static_cast<Eigen::Index>(k),
                            static_cast<Eigen::Index>(k));
  EMat cov = lm * lm.transpose();
  cov.diagonal().array() += ridge;
  return cov;
}

}  // namespace

GaussianVariational GaussianVariational::init(std::size_t k, Rng& rng) {
  std::vector<double> mu(k);
  for (auto& v : mu) v = rng.normal(0.0, 0.1);
  std::vector<double> l(k * k, 0.0);
  for (std::size_t i = 0; i < k; ++i) l[i * k + i] = 0.1;
  return GaussianVariational{Tensor(Shape{k}, std::move(mu)), Tensor(Shape{k, k}, std::move(l)),
                             1e-3};
}

Tensor sample_one_with(const GaussianVariational& q, const std::vector<double>& u,
                       const std::vector<double>& w) {
  const std::size_t k = q.dim();
  if (u.size() != k || w.size() != k) throw std::invalid_argument("sample: noise length != dim");
  Tensor ut(Shape{k, 1}, u);
  Tensor wt(Shape{k}, w);
  Tensor lu = reshape(matmul(tril(q.l_factor), ut), Shape{k});
  return add(add(q.mu, lu), mul(wt, std::sqrt(q.ridge)));
}

Tensor sample_one(const GaussianVariational& q, Rng& rng) {
  const std::size_t k = q.dim();
  std::vector<double> u(k), w(k);
  for (auto& v : u) v = rng.normal();
  for (auto& v : w) v = rng.normal();
  return sample_one_with(q, u, w);
}

Tensor sample(const GaussianVariational& q, std::size_t n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("sample: n >= 1 required");
  const std::size_t k = q.dim();
  std::vector<double> out(n * k);
  for (std::size_t i = 0; i < n; ++i) {
    Tensor z = sample_one(q, rng);
    for (std::size_t j = 0; j < k; ++j) out[i * k + j] = z[j];
  }
  return Tensor(Shape{n, k}, std::move(out));
}

Tensor gaussian_log_det(const Tensor& l, double ridge) {
  if (l.rank() != 2 || l.shape[0] != l.shape[1]) {
    throw std::invalid_argument("gaussian_log_det: square matrix required");
  }
  const std::size_t k = l.shape[0];
  EMat cov = covariance(l, ridge);
  Eigen::LLT<EMat> llt(cov);
  if (llt.info() != Eigen::Success) throw NumericError("gaussian_log_det: Cholesky failed");
  double logdet = 0.0;
  for (std::size_t i = 0; i < k; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
  Tensor result(logdet);
  if (l.tape == nullptr) return result;
  Tape* tape = l.tape;
  const int ln = l.node;
  // d logdet / dL = 2 Cov^{-1} L
  Eigen::Map<const EMat> lm(l.data().data(), static_cast<Eigen::Index>(k),
                            static_cast<Eigen::Index>(k));
  EMat dl = 2.0 * llt.solve(lm);
  std::vector<double> dl_flat(dl.data(), dl.data() + k * k);
  result.tape = tape;
  result.node = tape->record(1, [tape, ln, dl_flat = std::move(dl_flat)](
                                    const std::vector<double>& g) {
    std::vector<double> acc(dl_flat.size());
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] = g[0] * dl_flat[i];
    tape->accumulate(ln, acc);
  });
  return result;
}

Tensor gaussian_log_prob(const Tensor& z, const Tensor& mu, const Tensor& l, double ridge) {
  const std::size_t k = mu.size();
  if (z.size() != k) throw std::invalid_argument("gaussian_log_prob: z length != dim");
  if (l.rank() != 2 || l.shape[0] != k || l.shape[1] != k) {
    throw std::invalid_argument("gaussian_log_prob: factor shape mismatch");
  }
  EMat cov = covariance(l, ridge);
  Eigen::LLT<EMat> llt(cov);
  if (llt.info() != Eigen::Success) throw NumericError("gaussian_log_prob: Cholesky failed");
  EVec r(k);
  for (std::size_t i = 0; i < k; ++i) r(static_cast<Eigen::Index>(i)) = z[i] - mu[i];
  EVec a = llt.solve(r);
  double logdet = 0.0;
  for (std::size_t i = 0; i < k; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
  const double value = -0.5 * r.dot(a) - 0.5 * logdet -
                       0.5 * static_cast<double>(k) * std::log(2.0 * kPi);
  Tensor result(value);
  Tape* tape = joint_tape3(z, mu, l);
  if (tape == nullptr) return result;
  const int zn = z.node, mn = mu.node, ln = l.node;
  std::vector<double> a_flat(a.data(), a.data() + k);
  std::vector<double> dl_flat;
  if (ln >= 0) {
    // df/dL = (a a^T - Cov^{-1}) L
    Eigen::Map<const EMat> lm(l.data().data(), static_cast<Eigen::Index>(k),
                              static_cast<Eigen::Index>(k));
    EMat cov_inv = llt.solve(EMat::Identity(static_cast<Eigen::Index>(k),
                                            static_cast<Eigen::Index>(k)));
    EMat dl = (a * a.transpose() - cov_inv) * lm;
    dl_flat.assign(dl.data(), dl.data() + k * k);
  }
  result.tape = tape;
  result.node = tape->record(
      1, [tape, zn, mn, ln, a_flat = std::move(a_flat),
          dl_flat = std::move(dl_flat)](const std::vector<double>& g) {
        const double gs = g[0];
        if (zn >= 0) {
          for (std::size_t i = 0; i < a_flat.size(); ++i) {
            tape->accumulate_at(zn, i, -gs * a_flat[i]);
          }
        }
        if (mn >= 0) {
          for (std::size_t i = 0; i < a_flat.size(); ++i) {
            tape->accumulate_at(mn, i, gs * a_flat[i]);
          }
        }
        if (ln >= 0) {
          for (std::size_t i = 0; i < dl_flat.size(); ++i) {
            tape->accumulate_at(ln, i, gs * dl_flat[i]);
          }
        }
      });
  return result;
}

Tensor entropy(const GaussianVariational& q) {
  const double k = static_cast<double>(q.dim());
  Tensor logdet = gaussian_log_det(tril(q.l_factor), q.ridge);
  return add(mul(logdet, 0.5), 0.5 * k * std::log(2.0 * kPi * std::exp(1.0)));
}

Tensor log_prob(const GaussianVariational& q, const Tensor& z) {
  return gaussian_log_prob(z, q.mu, tril(q.l_factor), q.ridge);
}

Tensor std_normal_log_prob(const Tensor& z) {
  const double k = static_cast<double>(z.size());
  return add(mul(sum(square(z)), -0.5), -0.5 * k * std::log(2.0 * kPi));
}

}  // namespace vip
