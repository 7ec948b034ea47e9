#include "vip/forward_models.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <unordered_set>

namespace vip {

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr double kModulusFloor = 1e-8;  // smoothing delta for |.| at the origin

void build_dft_rows(Tensor& op_re, Tensor& op_im, std::size_t h, std::size_t w,
                    const std::vector<std::pair<double, double>>& uv) {
  const std::size_t n = h * w, mc = uv.size();
  const double norm = 1.0 / std::sqrt(static_cast<double>(n));
  std::vector<double> re(mc * n), im(mc * n);
  for (std::size_t r = 0; r < mc; ++r) {
    const double u = uv[r].first, v = uv[r].second;
    for (std::size_t p = 0; p < h; ++p) {
      for (std::size_t q = 0; q < w; ++q) {
        const double theta = 2.0 * kPi * (u * static_cast<double>(p) / static_cast<double>(h) +
                                          v * static_cast<double>(q) / static_cast<double>(w));
        re[r * n + p * w + q] = std::cos(theta) * norm;
        im[r * n + p * w + q] = -std::sin(theta) * norm;
      }
    }
  }
  op_re = Tensor(Shape{mc, n}, std::move(re));
  op_im = Tensor(Shape{mc, n}, std::move(im));
}

void build_gaussian_rows(Tensor& op_re, Tensor& op_im, std::size_t n, std::size_t mc,
                         std::uint64_t seed) {
  // complex entries with E|A_ij|^2 = 1/mc
  const double sd = std::sqrt(0.5 / static_cast<double>(mc));
  Rng rng(seed);
  std::vector<double> re(mc * n), im(mc * n);
  for (std::size_t i = 0; i < mc * n; ++i) {
    re[i] = rng.normal(0.0, sd);
    im[i] = rng.normal(0.0, sd);
  }
  op_re = Tensor(Shape{mc, n}, std::move(re));
  op_im = Tensor(Shape{mc, n}, std::move(im));
}

void check_sigma(double sigma) {
  if (!(sigma > 0.0)) throw ConfigError("forward model: sigma must be positive");
}

}  // namespace

const char* model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::Denoise: return "denoise";
    case ModelKind::InterferometricCS: return "interferometric-cs";
    case ModelKind::GaussianCS: return "gaussian-cs";
    case ModelKind::FourierPhaseRetrieval: return "fourier-pr";
    case ModelKind::GaussianPhaseRetrieval: return "gaussian-pr";
  }
  return "?";
}

ModelKind model_kind_from_name(const std::string& name) {
  if (name == "denoise") return ModelKind::Denoise;
  if (name == "interferometric-cs") return ModelKind::InterferometricCS;
  if (name == "gaussian-cs") return ModelKind::GaussianCS;
  if (name == "fourier-pr") return ModelKind::FourierPhaseRetrieval;
  if (name == "gaussian-pr") return ModelKind::GaussianPhaseRetrieval;
  throw ConfigError("unknown forward model kind: " + name);
}

ForwardModel ForwardModel::denoise(std::size_t h, std::size_t w, double sigma) {
  check_sigma(sigma);
  ForwardModel m;
  m.kind = ModelKind::Denoise;
  m.sigma = sigma;
  m.h = h;
  m.w = w;
  return m;
}

ForwardModel ForwardModel::interferometric(std::size_t h, std::size_t w,
                                           std::vector<std::pair<double, double>> uv,
                                           double sigma) {
  check_sigma(sigma);
  if (uv.empty()) throw ConfigError("interferometric model: empty uv coverage");
  const double nyq_u = static_cast<double>(h) / 2.0, nyq_v = static_cast<double>(w) / 2.0;
  for (const auto& [u, v] : uv) {
    if (std::fabs(u) > nyq_u + 1e-9 || std::fabs(v) > nyq_v + 1e-9) {
      throw ConfigError("uv point outside the Nyquist square");
    }
  }
  ForwardModel m;
  m.kind = ModelKind::InterferometricCS;
  m.sigma = sigma;
  m.h = h;
  m.w = w;
  m.uv = std::move(uv);
  build_dft_rows(m.op_re, m.op_im, h, w, m.uv);
  return m;
}

ForwardModel ForwardModel::gaussian_cs(std::size_t h, std::size_t w, std::size_t rows,
                                       std::uint64_t seed, double sigma) {
  check_sigma(sigma);
  if (rows == 0) throw ConfigError("gaussian model: rows must be positive");
  ForwardModel m;
  m.kind = ModelKind::GaussianCS;
  m.sigma = sigma;
  m.h = h;
  m.w = w;
  m.rows = rows;
  m.matrix_seed = seed;
  build_gaussian_rows(m.op_re, m.op_im, h * w, rows, seed);
  return m;
}

ForwardModel ForwardModel::fourier_pr(std::size_t h, std::size_t w, double sigma) {
  check_sigma(sigma);
  ForwardModel m;
  m.kind = ModelKind::FourierPhaseRetrieval;
  m.sigma = sigma;
  m.h = h;
  m.w = w;
  // x2 oversampling: frequencies of the zero-padded 2h x 2w grid
  const std::size_t ph = 2 * h, pw = 2 * w;
  const std::size_t n = h * w, mc = ph * pw;
  const double norm = 1.0 / std::sqrt(static_cast<double>(mc));
  std::vector<double> re(mc * n), im(mc * n);
  for (std::size_t a = 0; a < ph; ++a) {
    for (std::size_t b = 0; b < pw; ++b) {
      const std::size_t r = a * pw + b;
      for (std::size_t p = 0; p < h; ++p) {
        for (std::size_t q = 0; q < w; ++q) {
          const double theta =
              2.0 * kPi * (static_cast<double>(a * p) / static_cast<double>(ph) +
                           static_cast<double>(b * q) / static_cast<double>(pw));
          re[r * n + p * w + q] = std::cos(theta) * norm;
          im[r * n + p * w + q] = -std::sin(theta) * norm;
        }
      }
    }
  }
  m.op_re = Tensor(Shape{mc, n}, std::move(re));
  m.op_im = Tensor(Shape{mc, n}, std::move(im));
  return m;
}

ForwardModel ForwardModel::gaussian_pr(std::size_t h, std::size_t w, std::size_t rows,
                                       std::uint64_t seed, double sigma) {
  ForwardModel m = gaussian_cs(h, w, rows, seed, sigma);
  m.kind = ModelKind::GaussianPhaseRetrieval;
  return m;
}

std::size_t ForwardModel::complex_rows() const {
  switch (kind) {
    case ModelKind::Denoise: return 0;
    default: return op_re.shape[0];
  }
}

std::size_t ForwardModel::measurement_size() const {
  switch (kind) {
    case ModelKind::Denoise: return h * w;
    case ModelKind::InterferometricCS:
    case ModelKind::GaussianCS: return 2 * complex_rows();
    case ModelKind::FourierPhaseRetrieval:
    case ModelKind::GaussianPhaseRetrieval: return complex_rows();
  }
  return 0;
}

Tensor apply(const ForwardModel& model, const Tensor& x) {
  if (x.size() != model.h * model.w) throw std::invalid_argument("apply: image geometry mismatch");
  if (model.kind == ModelKind::Denoise) return reshape(x, Shape{model.h * model.w});
  const std::size_t mc = model.complex_rows();
  Tensor xcol = reshape(x, Shape{model.h * model.w, 1});
  Tensor re = reshape(matmul(model.op_re, xcol), Shape{mc});
  Tensor im = reshape(matmul(model.op_im, xcol), Shape{mc});
  switch (model.kind) {
    case ModelKind::InterferometricCS:
    case ModelKind::GaussianCS:
      return concat(re, im);
    case ModelKind::FourierPhaseRetrieval:
    case ModelKind::GaussianPhaseRetrieval:
      // smoothed modulus, differentiable at 0
      return sqrt_op(add(add(square(re), square(im)), kModulusFloor * kModulusFloor));
    default:
      break;
  }
  throw std::invalid_argument("apply: unsupported kind");
}

std::vector<double> add_noise(const std::vector<double>& clean, double sigma, Rng& rng) {
  check_sigma(sigma);
  std::vector<double> y(clean.size());
  for (std::size_t i = 0; i < clean.size(); ++i) y[i] = clean[i] + rng.normal(0.0, sigma);
  return y;
}

double snr_db(const std::vector<double>& clean, double sigma) {
  check_sigma(sigma);
  double ss = 0.0;
  for (double v : clean) ss += v * v;
  if (ss == 0.0) throw std::invalid_argument("snr_db: zero clean vector");
  const double m = static_cast<double>(clean.size());
  return 20.0 * std::log10(std::sqrt(ss) / (sigma * std::sqrt(m)));
}

double calibrate_sigma(const std::vector<double>& clean, double target_snr_db) {
  double ss = 0.0;
  for (double v : clean) ss += v * v;
  if (ss == 0.0) throw std::invalid_argument("calibrate_sigma: zero clean vector");
  const double m = static_cast<double>(clean.size());
  return std::sqrt(ss) / (std::sqrt(m) * std::pow(10.0, target_snr_db / 20.0));
}

Tensor dirty_image(const ForwardModel& model, const std::vector<double>& y) {
  if (model.kind != ModelKind::InterferometricCS) {
    throw std::invalid_argument("dirty_image: interferometric model required");
  }
  const std::size_t mc = model.complex_rows(), n = model.h * model.w;
  if (y.size() != 2 * mc) throw std::invalid_argument("dirty_image: measurement size mismatch");
  Eigen::Map<const EMat> are(model.op_re.data().data(), static_cast<Eigen::Index>(mc),
                             static_cast<Eigen::Index>(n));
  Eigen::Map<const EMat> aim(model.op_im.data().data(), static_cast<Eigen::Index>(mc),
                             static_cast<Eigen::Index>(n));
  Eigen::Map<const Eigen::VectorXd> yre(y.data(), static_cast<Eigen::Index>(mc));
  Eigen::Map<const Eigen::VectorXd> yim(y.data() + mc, static_cast<Eigen::Index>(mc));
  // real(A^H y) = A_re^T y_re + A_im^T y_im
  Eigen::VectorXd out = are.transpose() * yre + aim.transpose() * yim;
  return Tensor(Shape{model.h, model.w}, std::vector<double>(out.data(), out.data() + n));
}

std::vector<std::pair<double, double>> synth_uv_coverage(std::size_t h, std::size_t w,
                                                         std::size_t num_tracks,
                                                         std::size_t points_per_track,
                                                         double max_radius, std::uint64_t seed) {
  const double nyq = std::min(static_cast<double>(h), static_cast<double>(w)) / 2.0;
  if (max_radius > nyq + 1e-9) throw ConfigError("uv coverage: max radius above Nyquist");
  Rng rng(seed);
  std::vector<std::pair<double, double>> uv;
  uv.reserve(2 * num_tracks * points_per_track);
  for (std::size_t t = 0; t < num_tracks; ++t) {
    const double orient = rng.uniform(0.0, kPi);
    const double a = rng.uniform(0.35, 1.0) * max_radius;
    const double ratio = rng.uniform(0.25, 0.9);
    const double t0 = rng.uniform(0.0, 2.0 * kPi);
    const double arc = rng.uniform(kPi / 2.0, kPi);
    const double co = std::cos(orient), so = std::sin(orient);
    for (std::size_t j = 0; j < points_per_track; ++j) {
      const double frac = points_per_track > 1
                              ? static_cast<double>(j) / static_cast<double>(points_per_track - 1)
                              : 0.0;
      const double ang = t0 + arc * frac;
      const double ex = a * std::cos(ang), ey = a * ratio * std::sin(ang);
      const double u = co * ex - so * ey, v = so * ex + co * ey;
      uv.emplace_back(u, v);
      uv.emplace_back(-u, -v);
    }
  }
  return uv;
}

double coverage_fraction(std::size_t h, std::size_t w,
                         const std::vector<std::pair<double, double>>& uv) {
  std::unordered_set<long long> cells;
  const long long hh = static_cast<long long>(h), ww = static_cast<long long>(w);
  for (const auto& [u, v] : uv) {
    long long cu = ((static_cast<long long>(std::llround(u)) % hh) + hh) % hh;
    long long cv = ((static_cast<long long>(std::llround(v)) % ww) + ww) % ww;
    cells.insert(cu * ww + cv);
  }
  return static_cast<double>(cells.size()) / static_cast<double>(h * w);
}

Tensor low_pass_target(const Tensor& x, double radius) {
  if (x.rank() != 2) throw std::invalid_argument("low_pass_target: 2-D image required");
  if (!(radius > 0.0)) throw std::invalid_argument("low_pass_target: radius must be positive");
  const std::size_t h = x.shape[0], w = x.shape[1];
  using cd = std::complex<double>;
  std::vector<cd> f(h * w);
  // forward DFT, separable naive
  std::vector<cd> tmp(h * w);
  for (std::size_t p = 0; p < h; ++p) {
    for (std::size_t b = 0; b < w; ++b) {
      cd acc = 0.0;
      for (std::size_t q = 0; q < w; ++q) {
        const double th = -2.0 * kPi * static_cast<double>(b * q) / static_cast<double>(w);
        acc += x[p * w + q] * cd(std::cos(th), std::sin(th));
      }
      tmp[p * w + b] = acc;
    }
  }
  for (std::size_t b = 0; b < w; ++b) {
    for (std::size_t a = 0; a < h; ++a) {
      cd acc = 0.0;
      for (std::size_t p = 0; p < h; ++p) {
        const double th = -2.0 * kPi * static_cast<double>(a * p) / static_cast<double>(h);
        acc += tmp[p * w + b] * cd(std::cos(th), std::sin(th));
      }
      f[a * w + b] = acc;
    }
  }
  // zero out frequencies beyond the radius (centered convention)
  for (std::size_t a = 0; a < h; ++a) {
    const double fa = a <= h / 2 ? static_cast<double>(a) : static_cast<double>(a) - static_cast<double>(h);
    for (std::size_t b = 0; b < w; ++b) {
      const double fb = b <= w / 2 ? static_cast<double>(b) : static_cast<double>(b) - static_cast<double>(w);
      if (std::sqrt(fa * fa + fb * fb) > radius) f[a * w + b] = 0.0;
    }
  }
  // inverse DFT, real part
  for (std::size_t a = 0; a < h; ++a) {
    for (std::size_t q = 0; q < w; ++q) {
      cd acc = 0.0;
      for (std::size_t b = 0; b < w; ++b) {
        const double th = 2.0 * kPi * static_cast<double>(b * q) / static_cast<double>(w);
        acc += f[a * w + b] * cd(std::cos(th), std::sin(th));
      }
      tmp[a * w + q] = acc / static_cast<double>(w);
    }
  }
  std::vector<double> out(h * w);
  for (std::size_t q = 0; q < w; ++q) {
    for (std::size_t p = 0; p < h; ++p) {
      cd acc = 0.0;
      for (std::size_t a = 0; a < h; ++a) {
        const double th = 2.0 * kPi * static_cast<double>(a * p) / static_cast<double>(h);
        acc += tmp[a * w + q] * cd(std::cos(th), std::sin(th));
      }
      out[p * w + q] = acc.real() / static_cast<double>(h);
    }
  }
  return Tensor(Shape{h, w}, std::move(out));
}

}  // namespace vip
