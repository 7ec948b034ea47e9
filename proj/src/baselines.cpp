#include "vip/baselines.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "vip/io.hpp"
#include "vip/variational.hpp"

namespace vip {

double psnr(const Tensor& x_hat, const Tensor& x_ref, double peak) {
  if (x_hat.shape != x_ref.shape) throw std::invalid_argument("psnr: shape mismatch");
  if (!(peak > 0.0)) throw std::invalid_argument("psnr: peak must be positive");
  double mse = 0.0;
  for (std::size_t i = 0; i < x_hat.size(); ++i) {
    const double d = x_hat[i] - x_ref[i];
    mse += d * d;
  }
  mse /= static_cast<double>(x_hat.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

Tensor tv_smooth(const Tensor& x, double delta) {
  if (x.rank() != 2) throw std::invalid_argument("tv_smooth: 2-D image required");
  const std::size_t h = x.shape[0], w = x.shape[1];
  const auto& in = *x.buf;
  double total = 0.0;
  std::vector<double> dh(h * w, 0.0), dv(h * w, 0.0), inv_t(h * w, 0.0);
  for (std::size_t p = 0; p < h; ++p) {
    for (std::size_t q = 0; q < w; ++q) {
      const std::size_t i = p * w + q;
      // forward differences, replicate boundary
      dh[i] = q + 1 < w ? in[i + 1] - in[i] : 0.0;
      dv[i] = p + 1 < h ? in[i + w] - in[i] : 0.0;
      const double t = std::sqrt(dh[i] * dh[i] + dv[i] * dv[i] + delta * delta);
      total += t;
      inv_t[i] = 1.0 / t;
    }
  }
  Tensor result(total);
  if (x.tape == nullptr) return result;
  Tape* tape = x.tape;
  const int xn = x.node;
  result.tape = tape;
  result.node = tape->record(1, [tape, xn, h, w, dh = std::move(dh), dv = std::move(dv),
                                 inv_t = std::move(inv_t)](const std::vector<double>& g) {
    const double gs = g[0];
    for (std::size_t p = 0; p < h; ++p) {
      for (std::size_t q = 0; q < w; ++q) {
        const std::size_t i = p * w + q;
        const double ch = gs * dh[i] * inv_t[i];
        const double cv = gs * dv[i] * inv_t[i];
        if (q + 1 < w) {
          tape->accumulate_at(xn, i + 1, ch);
          tape->accumulate_at(xn, i, -ch);
        }
        if (p + 1 < h) {
          tape->accumulate_at(xn, i + w, cv);
          tape->accumulate_at(xn, i, -cv);
        }
      }
    }
  });
  return result;
}

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Tensor rml_init(const ForwardModel& model, const std::vector<double>& y) {
  switch (model.kind) {
    case ModelKind::Denoise:
      return Tensor(Shape{model.h, model.w}, y);
    case ModelKind::InterferometricCS:
      return dirty_image(model, y);
    case ModelKind::GaussianCS: {
      const std::size_t mc = model.complex_rows(), n = model.h * model.w;
      Eigen::Map<const EMat> are(model.op_re.data().data(), static_cast<Eigen::Index>(mc),
                                 static_cast<Eigen::Index>(n));
      Eigen::Map<const EMat> aim(model.op_im.data().data(), static_cast<Eigen::Index>(mc),
                                 static_cast<Eigen::Index>(n));
      Eigen::Map<const Eigen::VectorXd> yre(y.data(), static_cast<Eigen::Index>(mc));
      Eigen::Map<const Eigen::VectorXd> yim(y.data() + mc, static_cast<Eigen::Index>(mc));
      Eigen::VectorXd out = are.transpose() * yre + aim.transpose() * yim;
      return Tensor(Shape{model.h, model.w}, std::vector<double>(out.data(), out.data() + n));
    }
    default:
      return Tensor::full(Shape{model.h, model.w}, 0.5);
  }
}

double rml_objective(const ForwardModel& model, const std::vector<double>& y, const Tensor& x,
                     double lambda, double delta) {
  Tensor yt(Shape{y.size()}, y);
  Tensor residual = sub(yt, apply(model, x));
  double f = sum(square(residual)).item() / (2.0 * model.sigma * model.sigma);
  if (lambda > 0.0) f += lambda * tv_smooth(x, delta).item();
  return f;
}

}  // namespace

Tensor tv_rml(const ForwardModel& model, const std::vector<double>& y, double lambda,
              std::size_t iters, double step) {
  if (lambda < 0.0) throw std::invalid_argument("tv_rml: lambda >= 0 required");
  if (!(step > 0.0)) throw std::invalid_argument("tv_rml: step must be positive");
  constexpr double delta = 1e-6;
  Tensor x = rml_init(model, y);
  double fx = rml_objective(model, y, x, lambda, delta);
  for (std::size_t it = 0; it < iters; ++it) {
    Tape tape;
    Tensor xt = tape.leaf(x);
    Tensor yt(Shape{y.size()}, y);
    Tensor residual = sub(yt, apply(model, xt));
    Tensor obj = mul(sum(square(residual)), 1.0 / (2.0 * model.sigma * model.sigma));
    if (lambda > 0.0) obj = add(obj, mul(tv_smooth(xt, delta), lambda));
    if (!std::isfinite(obj.item())) throw NumericError("tv_rml: non-finite objective");
    tape.backward(obj);
    const Tensor g = tape.grad(xt);
    // backtracking line search; the objective never increases
    double t = step;
    bool moved = false;
    while (t > 1e-14) {
      std::vector<double> cand(x.size());
      for (std::size_t i = 0; i < cand.size(); ++i) cand[i] = x[i] - t * g[i];
      Tensor xc(x.shape, std::move(cand));
      const double fc = rml_objective(model, y, xc, lambda, delta);
      if (fc <= fx) {
        x = std::move(xc);
        fx = fc;
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved) break;  // stationary within line-search resolution
  }
  return x;
}

DipResult dip_fit(const ForwardModel& model, const std::vector<double>& y,
                  const DeepDecoderConfig& config, std::size_t iters,
                  std::size_t checkpoint_interval, std::uint64_t seed) {
  if (checkpoint_interval == 0) throw std::invalid_argument("dip_fit: checkpoint interval > 0");
  DipResult out;
  out.params = init_generator(config, mix_seed(seed, 1));
  Rng zrng(mix_seed(seed, 2));
  std::vector<double> zdata(config.latent_dim);
  for (auto& v : zdata) v = zrng.normal();
  const Tensor z(Shape{config.latent_dim}, zdata);

  Adam opt(1e-3);
  GeneratorParams& p = out.params;
  for (std::size_t it = 0; it < iters; ++it) {
    Tape tape;
    GeneratorParams gp = p.attach(tape);
    Rng drop_rng(mix_seed(seed, 3 + it));
    Tensor x_hat = generate(gp, z, Mode::train, drop_rng);
    Tensor ll = log_likelihood(model, y, x_hat);
    if (!std::isfinite(ll.item())) throw NumericError("dip_fit: non-finite objective");
    tape.backward(ll);
    std::vector<std::vector<double>> grads;
    for (Tensor* t : gp.all()) grads.push_back(tape.grad(*t).data());
    opt.ascend(p.all(), grads);
    if ((it + 1) % checkpoint_interval == 0) {
      Rng unused(0);
      out.checkpoints.push_back(generate(p, z, Mode::eval, unused));
      out.checkpoint_iters.push_back(it + 1);
    }
  }
  return out;
}

std::size_t ScoreMatrix::argmin(std::size_t row) const {
  const auto& r = scores.at(row);
  return static_cast<std::size_t>(std::min_element(r.begin(), r.end()) - r.begin());
}

void ScoreMatrix::write_csv(const std::filesystem::path& path) const {
  CsvWriter csv(path);
  std::vector<std::string> head{"case"};
  head.insert(head.end(), col_labels.begin(), col_labels.end());
  csv.header(head);
  for (std::size_t r = 0; r < scores.size(); ++r) {
    std::vector<std::string> cells{row_labels[r]};
    for (double v : scores[r]) cells.push_back(CsvWriter::format(v));
    csv.row(cells);
  }
}

double selection_score(const GeneratorParams& candidate, const ForwardModel& model,
                       const std::vector<double>& y, std::size_t fit_iters, std::uint64_t seed) {
  Rng init_rng(mix_seed(seed, 0x11));
  GaussianVariational q = GaussianVariational::init(candidate.config.latent_dim, init_rng);
  Adam opt(1e-2);
  for (std::size_t it = 0; it < fit_iters; ++it) {
    Tape tape;
    GaussianVariational qa = q.attach(tape);
    Tensor obj = elbo_proxy(candidate, qa, model, y, 2, Mode::eval, mix_seed(seed, 0x100 + it));
    tape.backward(obj);
    opt.ascend({&q.mu, &q.l_factor}, {tape.grad(qa.mu).data(), tape.grad(qa.l_factor).data()});
  }
  // deterministic final evaluation with a larger sample count
  Tensor final_elbo = elbo_proxy(candidate, q, model, y, 32, Mode::eval, mix_seed(seed, 0xe7a1));
  return -final_elbo.item();
}

ScoreMatrix model_selection(const std::vector<GeneratorParams>& candidates,
                            const std::vector<SelectionCase>& cases, std::size_t fit_iters,
                            std::uint64_t seed) {
  if (candidates.size() < 2) throw std::invalid_argument("model_selection: >= 2 candidates");
  ScoreMatrix sm;
  for (std::size_t r = 0; r < cases.size(); ++r) sm.row_labels.push_back("case" + std::to_string(r));
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    sm.col_labels.push_back("model" + std::to_string(c));
  }
  sm.scores.assign(cases.size(), std::vector<double>(candidates.size(), 0.0));
  for (std::size_t r = 0; r < cases.size(); ++r) {
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      sm.scores[r][c] = selection_score(candidates[c], *cases[r].model, cases[r].y, fit_iters,
                                        mix_seed(seed, r * candidates.size() + c));
    }
  }
  return sm;
}

double registered_psnr(const Tensor& x_hat, const Tensor& x_ref, const AmbiguityGroup& group,
                       double peak) {
  if (x_hat.shape != x_ref.shape || x_hat.rank() != 2) {
    throw std::invalid_argument("registered_psnr: matching 2-D images required");
  }
  const std::size_t h = x_hat.shape[0], w = x_hat.shape[1];
  const std::size_t n_flips = group.flips ? 4 : 1;
  const std::size_t n_signs = group.sign ? 2 : 1;
  const std::size_t n_dy = group.shifts ? h : 1;
  const std::size_t n_dx = group.shifts ? w : 1;
  double best_mse = std::numeric_limits<double>::infinity();
  for (std::size_t flip = 0; flip < n_flips; ++flip) {
    for (std::size_t sgn = 0; sgn < n_signs; ++sgn) {
      for (std::size_t dy = 0; dy < n_dy; ++dy) {
        for (std::size_t dx = 0; dx < n_dx; ++dx) {
          double mse = 0.0;
          for (std::size_t p = 0; p < h; ++p) {
            for (std::size_t q = 0; q < w; ++q) {
              std::size_t sp = (p + dy) % h, sq = (q + dx) % w;
              if (flip & 1u) sq = w - 1 - sq;
              if (flip & 2u) sp = h - 1 - sp;
              double v = x_hat[sp * w + sq];
              if (sgn == 1) v = -v;
              const double d = v - x_ref[p * w + q];
              mse += d * d;
            }
          }
          best_mse = std::min(best_mse, mse);
        }
      }
    }
  }
  best_mse /= static_cast<double>(h * w);
  if (best_mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / best_mse);
}

}  // namespace vip
