#include "vip/objective.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>

#include "vip/io.hpp"

namespace vip {

Tensor log_likelihood(const ForwardModel& model, const std::vector<double>& y,
                      const Tensor& x_hat) {
  if (y.size() != model.measurement_size()) {
    throw std::invalid_argument("log_likelihood: measurement size mismatch");
  }
  const double s2 = model.sigma * model.sigma;
  const double m = static_cast<double>(y.size());
  Tensor yt(Shape{y.size()}, y);
  Tensor residual = sub(yt, apply(model, x_hat));
  return add(mul(sum(square(residual)), -0.5 / s2), -0.5 * m * std::log(2.0 * kPi * s2));
}

Tensor elbo_proxy_core(const GenFn& gen, const GaussianVariational& q, const ForwardModel& model,
                       const std::vector<double>& y, std::size_t mc_samples,
                       std::uint64_t noise_seed, ElboTerms* terms) {
  if (mc_samples < 1) throw std::invalid_argument("elbo_proxy: mc_samples >= 1 required");
  const std::size_t k = q.dim();
  Rng base(noise_seed);
  Tensor acc;
  ElboTerms t;
  for (std::size_t s = 0; s < mc_samples; ++s) {
    Rng ns = base.fork(s);
    std::vector<double> u(k), w(k);
    for (auto& v : u) v = ns.normal();
    for (auto& v : w) v = ns.normal();
    Tensor z = sample_one_with(q, u, w);
    Tensor x_hat = gen(z, s);
    Tensor ll = log_likelihood(model, y, x_hat);
    Tensor prior = std_normal_log_prob(z);
    Tensor lq = log_prob(q, z);
    t.likelihood += ll.item();
    t.prior += prior.item();
    t.entropy += -lq.item();
    Tensor term = sub(add(ll, prior), lq);
    acc = (s == 0) ? term : add(acc, term);
  }
  const double inv_s = 1.0 / static_cast<double>(mc_samples);
  acc = mul(acc, inv_s);
  t.likelihood *= inv_s;
  t.prior *= inv_s;
  t.entropy *= inv_s;
  if (!std::isfinite(acc.item())) {
    throw NumericError("elbo_proxy: non-finite estimate (likelihood=" +
                       std::to_string(t.likelihood) + ", prior=" + std::to_string(t.prior) +
                       ", entropy=" + std::to_string(t.entropy) + ")");
  }
  if (terms != nullptr) *terms = t;
  return acc;
}

Tensor elbo_proxy(const GeneratorParams& params, const GaussianVariational& q,
                  const ForwardModel& model, const std::vector<double>& y,
                  std::size_t mc_samples, Mode mode, std::uint64_t noise_seed,
                  ElboTerms* terms) {
  GenFn gen = [&params, mode, noise_seed](const Tensor& z, std::size_t s) {
    Rng rng(mix_seed(noise_seed, 0x6472u + s));
    return generate(params, z, mode, rng);
  };
  return elbo_proxy_core(gen, q, model, y, mc_samples, noise_seed, terms);
}

Adam::Adam(double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::ascend(const std::vector<Tensor*>& params,
                  const std::vector<std::vector<double>>& grads) {
  if (params.size() != grads.size()) throw std::invalid_argument("adam: param/grad count mismatch");
  if (m_.empty()) {
    m_.resize(params.size());
    v_.resize(params.size());
    for (std::size_t j = 0; j < params.size(); ++j) {
      m_[j].assign(params[j]->size(), 0.0);
      v_[j].assign(params[j]->size(), 0.0);
    }
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t j = 0; j < params.size(); ++j) {
    auto& x = params[j]->mutable_data();
    const auto& g = grads[j];
    if (g.size() != x.size()) throw std::invalid_argument("adam: grad size mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) {
      m_[j][i] = beta1_ * m_[j][i] + (1.0 - beta1_) * g[i];
      v_[j][i] = beta2_ * v_[j][i] + (1.0 - beta2_) * g[i] * g[i];
      x[i] += lr_ * (m_[j][i] / c1) / (std::sqrt(v_[j][i] / c2) + eps_);
    }
  }
}

void TrainReport::write_csv(const std::filesystem::path& path) const {
  CsvWriter csv(path);
  csv.header({"iteration", "objective", "likelihood_term", "prior_term", "entropy_term",
              "seconds"});
  for (const auto& r : iterations) {
    csv.row(std::vector<std::string>{
        std::to_string(r.iteration), CsvWriter::format(r.objective),
        CsvWriter::format(r.likelihood_term), CsvWriter::format(r.prior_term),
        CsvWriter::format(r.entropy_term), CsvWriter::format(r.seconds)});
  }
}

namespace {

struct PerIndexResult {
  double value = 0.0;
  ElboTerms terms;
  std::vector<std::vector<double>> theta_grads;
  std::vector<std::vector<double>> phi_grads;  // mu, l_factor
};

PerIndexResult eval_index(const GeneratorParams& params, const GaussianVariational& q,
                          const MeasurementSet& ms, std::size_t i, std::size_t mc_samples,
                          Mode mode, std::uint64_t noise_seed) {
  Tape tape;
  GeneratorParams gp = params.attach(tape);
  GaussianVariational qa = q.attach(tape);
  PerIndexResult res;
  Tensor obj = elbo_proxy(gp, qa, ms.model, ms.observations[i], mc_samples, mode, noise_seed,
                          &res.terms);
  res.value = obj.item();
  tape.backward(obj);
  for (Tensor* t : gp.all()) res.theta_grads.push_back(tape.grad(*t).data());
  res.phi_grads.push_back(tape.grad(qa.mu).data());
  res.phi_grads.push_back(tape.grad(qa.l_factor).data());
  return res;
}

std::vector<std::size_t> pick_batch(std::size_t n, std::size_t batch, Rng rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  if (batch == 0 || batch >= n) return idx;
  // partial Fisher-Yates, then restore index order within the batch
  for (std::size_t j = 0; j < batch; ++j) {
    const std::size_t r = j + static_cast<std::size_t>(rng.next_u64() % (n - j));
    std::swap(idx[j], idx[r]);
  }
  idx.resize(batch);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

TrainReport joint_train(GeneratorParams& params, std::vector<GaussianVariational>& qs,
                        const MeasurementSet& measurements, const TrainConfig& cfg) {
  const std::size_t n = measurements.observations.size();
  if (n == 0) throw std::invalid_argument("joint_train: empty measurement set");
  if (qs.size() != n) throw std::invalid_argument("joint_train: qs length != N");
  if (cfg.mc_samples < 1) throw std::invalid_argument("joint_train: mc_samples >= 1 required");
  if (!(cfg.lr_theta > 0.0) || !(cfg.lr_phi > 0.0)) {
    throw std::invalid_argument("joint_train: step sizes must be positive");
  }

  TrainReport report;
  if (cfg.iterations == 0) return report;

  Adam theta_opt(cfg.lr_theta);
  std::vector<Adam> phi_opts;
  phi_opts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) phi_opts.emplace_back(cfg.lr_phi);

  const Mode mode = cfg.dropout ? Mode::train : Mode::eval;
  Rng batch_rng(mix_seed(cfg.seed, 0xba7cu));
  const auto t_start = std::chrono::steady_clock::now();

  // last-good snapshot for divergence recovery
  auto snapshot_params = [&] {
    std::vector<std::vector<double>> snap;
    for (const Tensor* t : std::as_const(params).all()) snap.push_back(t->data());
    for (const auto& q : qs) {
      snap.push_back(q.mu.data());
      snap.push_back(q.l_factor.data());
    }
    return snap;
  };
  auto restore_params = [&](const std::vector<std::vector<double>>& snap) {
    std::size_t j = 0;
    for (Tensor* t : params.all()) t->mutable_data() = snap[j++];
    for (auto& q : qs) {
      q.mu.mutable_data() = snap[j++];
      q.l_factor.mutable_data() = snap[j++];
    }
  };

  std::vector<std::vector<double>> last_good = snapshot_params();

  for (std::size_t iter = 0; iter < cfg.iterations; ++iter) {
    const std::vector<std::size_t> batch = pick_batch(n, cfg.batch, batch_rng.fork(iter));
    std::vector<PerIndexResult> results(batch.size());

    auto work = [&](std::size_t lo, std::size_t hi) {
      for (std::size_t j = lo; j < hi; ++j) {
        const std::size_t i = batch[j];
        const std::uint64_t noise_seed = mix_seed(mix_seed(cfg.seed, iter), i);
        results[j] = eval_index(params, qs[i], measurements, i, cfg.mc_samples, mode, noise_seed);
      }
    };
    const int threads = std::max(1, cfg.threads);
    if (threads == 1 || batch.size() <= 1) {
      work(0, batch.size());
    } else {
      std::vector<std::thread> pool;
      const std::size_t per = (batch.size() + threads - 1) / static_cast<std::size_t>(threads);
      for (int t = 0; t < threads; ++t) {
        const std::size_t lo = static_cast<std::size_t>(t) * per;
        const std::size_t hi = std::min(batch.size(), lo + per);
        if (lo >= hi) break;
        pool.emplace_back(work, lo, hi);
      }
      for (auto& th : pool) th.join();
    }

    // deterministic reduction in index order
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    std::vector<std::vector<double>> theta_grads;
    for (const Tensor* t : std::as_const(params).all()) {
      theta_grads.emplace_back(t->size(), 0.0);
    }
    double objective = 0.0;
    ElboTerms terms;
    for (const auto& r : results) {
      objective += r.value * inv_b;
      terms.likelihood += r.terms.likelihood * inv_b;
      terms.prior += r.terms.prior * inv_b;
      terms.entropy += r.terms.entropy * inv_b;
      for (std::size_t p = 0; p < theta_grads.size(); ++p) {
        for (std::size_t e = 0; e < theta_grads[p].size(); ++e) {
          theta_grads[p][e] += r.theta_grads[p][e] * inv_b;
        }
      }
    }

    bool finite = std::isfinite(objective);
    for (const auto& g : theta_grads) {
      for (double v : g) {
        if (!std::isfinite(v)) finite = false;
      }
    }
    if (!finite) {
      restore_params(last_good);
      throw NumericError("joint_train: divergence at iteration " + std::to_string(iter) +
                         "; parameters restored to the last good state");
    }
    last_good = snapshot_params();

    theta_opt.ascend(params.all(), theta_grads);
    for (std::size_t j = 0; j < batch.size(); ++j) {
      const std::size_t i = batch[j];
      phi_opts[i].ascend({&qs[i].mu, &qs[i].l_factor}, results[j].phi_grads);
    }

    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    report.iterations.push_back(
        IterRecord{iter, objective, terms.likelihood, terms.prior, terms.entropy, secs});
  }
  return report;
}

Reconstruction reconstruct(const GeneratorParams& params, const GaussianVariational& q,
                           std::size_t n_samples, Rng& rng) {
  if (n_samples < 1) throw std::invalid_argument("reconstruct: n_samples >= 1 required");
  Reconstruction out;
  Tensor acc;
  for (std::size_t s = 0; s < n_samples; ++s) {
    Tensor z = sample_one(q, rng);
    Rng unused(0);
    Tensor img = generate(params, z, Mode::eval, unused);
    acc = (s == 0) ? img.detached_copy() : add(acc, img);
    out.samples.push_back(std::move(img));
  }
  out.mean = mul(acc, 1.0 / static_cast<double>(n_samples));
  return out;
}

}  // namespace vip
