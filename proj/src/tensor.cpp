#include "vip/tensor.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace vip {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EMap = Eigen::Map<EMat>;
using ECMap = Eigen::Map<const EMat>;

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

Tensor::Tensor(Shape s, std::vector<double> values)
    : shape(std::move(s)), buf(std::make_shared<std::vector<double>>(std::move(values))) {
  for (std::size_t e : shape) {
    if (e == 0) throw std::invalid_argument("tensor extents must be positive");
  }
  if (numel(shape) != buf->size()) {
    throw std::invalid_argument("tensor shape/data size mismatch");
  }
}

Tensor::Tensor(double scalar) : shape{}, buf(std::make_shared<std::vector<double>>(1, scalar)) {}

Tensor Tensor::zeros(Shape s) {
  std::size_t n = numel(s);
  return Tensor(std::move(s), std::vector<double>(n, 0.0));
}

Tensor Tensor::full(Shape s, double value) {
  std::size_t n = numel(s);
  return Tensor(std::move(s), std::vector<double>(n, value));
}

double Tensor::item() const {
  if (size() != 1) throw std::invalid_argument("item() requires a scalar tensor");
  return (*buf)[0];
}

Tensor Tensor::detached_copy() const {
  return Tensor(shape, *buf);
}

void check_finite(const Tensor& t, const char* what) {
  for (double v : t.data()) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string("non-finite value in ") + what);
    }
  }
}

// ---- Tape ----

Tensor Tape::leaf(const Tensor& value) {
  Tensor out = value.detached_copy();
  out.tape = this;
  nodes_.push_back(Node{out.size(), nullptr});
  out.node = static_cast<int>(nodes_.size()) - 1;
  return out;
}

int Tape::record(std::size_t out_size, BackwardFn fn) {
  nodes_.push_back(Node{out_size, std::move(fn)});
  return static_cast<int>(nodes_.size()) - 1;
}

void Tape::accumulate(int node, const std::vector<double>& g) {
  accumulate(node, g.data(), g.size());
}

void Tape::accumulate(int node, const double* g, std::size_t n) {
  if (node < 0) return;
  auto& slot = grads_[static_cast<std::size_t>(node)];
  if (slot.empty()) slot.assign(nodes_[static_cast<std::size_t>(node)].size, 0.0);
  for (std::size_t i = 0; i < n; ++i) slot[i] += g[i];
}

void Tape::accumulate_at(int node, std::size_t index, double g) {
  if (node < 0) return;
  auto& slot = grads_[static_cast<std::size_t>(node)];
  if (slot.empty()) slot.assign(nodes_[static_cast<std::size_t>(node)].size, 0.0);
  slot[index] += g;
}

void Tape::backward(const Tensor& root) {
  if (root.tape != this || root.node < 0) {
    throw std::invalid_argument("backward root is not on this tape");
  }
  if (root.size() != 1) throw std::invalid_argument("backward root must be a scalar");
  grads_.assign(nodes_.size(), {});
  grads_[static_cast<std::size_t>(root.node)] = {1.0};
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    const Node& n = nodes_[i];
    if (!n.back) continue;
    const auto& g = grads_[i];
    if (g.empty()) continue;
    n.back(g);
  }
  ran_backward_ = true;
}

Tensor Tape::grad(const Tensor& t) const {
  if (t.tape != this || t.node < 0) {
    throw std::invalid_argument("grad() of a tensor not on this tape");
  }
  if (!ran_backward_) throw std::invalid_argument("grad() before backward()");
  const auto& g = grads_[static_cast<std::size_t>(t.node)];
  if (g.empty()) return Tensor::zeros(t.shape);
  return Tensor(t.shape, g);
}

const std::vector<double>* Tape::grad_buffer(int node) const {
  if (node < 0 || static_cast<std::size_t>(node) >= grads_.size()) return nullptr;
  return &grads_[static_cast<std::size_t>(node)];
}

// ---- op helpers ----

namespace {

Tape* joint_tape(const Tensor& a, const Tensor& b) {
  if (a.tape != nullptr && b.tape != nullptr && a.tape != b.tape) {
    throw std::invalid_argument("operands belong to different tapes");
  }
  return a.tape != nullptr ? a.tape : b.tape;
}

Tensor finish(Tape* tape, Tensor out, Tape::BackwardFn fn) {
  if (tape != nullptr) {
    out.tape = tape;
    out.node = tape->record(out.size(), std::move(fn));
  }
  return out;
}

// Binary elementwise op: val = f(a_i, b_i), with local derivatives da, db.
// Supports scalar-with-tensor broadcast on either side.
template <typename F>
Tensor binary_ew(const Tensor& a, const Tensor& b, const char* name, F f) {
  const std::size_t na = a.size(), nb = b.size();
  const bool a_scalar = (na == 1 && nb != 1);
  const bool b_scalar = (nb == 1 && na != 1);
  if (na != nb && !a_scalar && !b_scalar) {
    throw std::invalid_argument(std::string(name) + ": shape mismatch");
  }
  if (na == nb && a.shape != b.shape) {
    throw std::invalid_argument(std::string(name) + ": shape mismatch");
  }
  const std::size_t n = std::max(na, nb);
  std::vector<double> out(n), da(n), db(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double av = (*a.buf)[a_scalar ? 0 : i];
    const double bv = (*b.buf)[b_scalar ? 0 : i];
    f(av, bv, out[i], da[i], db[i]);
  }
  Tape* tape = joint_tape(a, b);
  Tensor result(a_scalar ? b.shape : a.shape, std::move(out));
  if (tape == nullptr) return result;
  const int an = a.node, bn = b.node;
  return finish(tape, std::move(result),
                [tape, an, bn, a_scalar, b_scalar, da = std::move(da),
                 db = std::move(db)](const std::vector<double>& g) {
                  if (an >= 0) {
                    if (a_scalar) {
                      double s = 0.0;
                      for (std::size_t i = 0; i < g.size(); ++i) s += g[i] * da[i];
                      tape->accumulate_at(an, 0, s);
                    } else {
                      for (std::size_t i = 0; i < g.size(); ++i) {
                        tape->accumulate_at(an, i, g[i] * da[i]);
                      }
                    }
                  }
                  if (bn >= 0) {
                    if (b_scalar) {
                      double s = 0.0;
                      for (std::size_t i = 0; i < g.size(); ++i) s += g[i] * db[i];
                      tape->accumulate_at(bn, 0, s);
                    } else {
                      for (std::size_t i = 0; i < g.size(); ++i) {
                        tape->accumulate_at(bn, i, g[i] * db[i]);
                      }
                    }
                  }
                });
}

// Unary elementwise op: val = f(a_i) with local derivative d.
template <typename F>
Tensor unary_ew(const Tensor& a, F f) {
  const std::size_t n = a.size();
  std::vector<double> out(n), d(n);
  for (std::size_t i = 0; i < n; ++i) f((*a.buf)[i], out[i], d[i]);
  Tensor result(a.shape, std::move(out));
  if (a.tape == nullptr) return result;
  Tape* tape = a.tape;
  const int an = a.node;
  return finish(tape, std::move(result),
                [tape, an, d = std::move(d)](const std::vector<double>& g) {
                  for (std::size_t i = 0; i < g.size(); ++i) {
                    tape->accumulate_at(an, i, g[i] * d[i]);
                  }
                });
}

}  // namespace

// ---- elementwise ----

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_ew(a, b, "add", [](double x, double y, double& o, double& dx, double& dy) {
    o = x + y;
    dx = 1.0;
    dy = 1.0;
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_ew(a, b, "sub", [](double x, double y, double& o, double& dx, double& dy) {
    o = x - y;
    dx = 1.0;
    dy = -1.0;
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_ew(a, b, "mul", [](double x, double y, double& o, double& dx, double& dy) {
    o = x * y;
    dx = y;
    dy = x;
  });
}

Tensor div(const Tensor& a, const Tensor& b) {
  return binary_ew(a, b, "div", [](double x, double y, double& o, double& dx, double& dy) {
    if (y == 0.0) throw NumericError("div: division by zero");
    o = x / y;
    dx = 1.0 / y;
    dy = -x / (y * y);
  });
}

Tensor add(const Tensor& a, double c) {
  return unary_ew(a, [c](double x, double& o, double& d) {
    o = x + c;
    d = 1.0;
  });
}

Tensor mul(const Tensor& a, double c) {
  return unary_ew(a, [c](double x, double& o, double& d) {
    o = x * c;
    d = c;
  });
}

Tensor neg(const Tensor& a) { return mul(a, -1.0); }

Tensor exp_op(const Tensor& a) {
  return unary_ew(a, [](double x, double& o, double& d) {
    o = std::exp(x);
    if (!std::isfinite(o)) throw NumericError("exp: overflow");
    d = o;
  });
}

Tensor log_op(const Tensor& a) {
  return unary_ew(a, [](double x, double& o, double& d) {
    if (x <= 0.0) throw NumericError("log: non-positive input");
    o = std::log(x);
    d = 1.0 / x;
  });
}

Tensor relu(const Tensor& a) {
  // subgradient at 0 is 0
  return unary_ew(a, [](double x, double& o, double& d) {
    o = x > 0.0 ? x : 0.0;
    d = x > 0.0 ? 1.0 : 0.0;
  });
}

Tensor sigmoid(const Tensor& a) {
  return unary_ew(a, [](double x, double& o, double& d) {
    if (x >= 0.0) {
      const double e = std::exp(-x);
      o = 1.0 / (1.0 + e);
    } else {
      const double e = std::exp(x);
      o = e / (1.0 + e);
    }
    d = o * (1.0 - o);
  });
}

Tensor square(const Tensor& a) {
  return unary_ew(a, [](double x, double& o, double& d) {
    o = x * x;
    d = 2.0 * x;
  });
}

Tensor sqrt_op(const Tensor& a) {
  return unary_ew(a, [](double x, double& o, double& d) {
    if (x < 0.0) throw NumericError("sqrt: negative input");
    o = std::sqrt(x);
    d = o > 0.0 ? 0.5 / o : 0.0;
  });
}

Tensor abs_op(const Tensor& a) {
  // subgradient at 0 is 0
  return unary_ew(a, [](double x, double& o, double& d) {
    o = std::fabs(x);
    d = x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
  });
}

// ---- matmul ----

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2) throw std::invalid_argument("matmul: rank-2 operands required");
  const std::size_t m = a.shape[0], k = a.shape[1], k2 = b.shape[0], n = b.shape[1];
  if (k != k2) throw std::invalid_argument("matmul: inner dimensions disagree");
  std::vector<double> out(m * n);
  {
    ECMap am(a.buf->data(), static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k));
    ECMap bm(b.buf->data(), static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(n));
    EMap om(out.data(), static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    om.noalias() = am * bm;
  }
  Tape* tape = joint_tape(a, b);
  Tensor result(Shape{m, n}, std::move(out));
  if (tape == nullptr) return result;
  const int an = a.node, bn = b.node;
  // keep copies of the inputs for the backward rules dA = G B^T, dB = A^T G
  auto abuf = a.buf;
  auto bbuf = b.buf;
  return finish(tape, std::move(result),
                [tape, an, bn, abuf, bbuf, m, k, n](const std::vector<double>& g) {
                  ECMap gm(g.data(), static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
                  if (an >= 0) {
                    std::vector<double> da(m * k);
                    ECMap bm(bbuf->data(), static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(n));
                    EMap dam(da.data(), static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k));
                    dam.noalias() = gm * bm.transpose();
                    tape->accumulate(an, da);
                  }
                  if (bn >= 0) {
                    std::vector<double> db(k * n);
                    ECMap am(abuf->data(), static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k));
                    EMap dbm(db.data(), static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(n));
                    dbm.noalias() = am.transpose() * gm;
                    tape->accumulate(bn, db);
                  }
                });
}

// ---- structure ----

Tensor reshape(const Tensor& a, Shape s) {
  if (numel(s) != a.size()) throw std::invalid_argument("reshape: size mismatch");
  Tensor result(std::move(s), *a.buf);
  if (a.tape == nullptr) return result;
  Tape* tape = a.tape;
  const int an = a.node;
  return finish(tape, std::move(result), [tape, an](const std::vector<double>& g) {
    tape->accumulate(an, g);
  });
}

Tensor concat(const Tensor& a, const Tensor& b) {
  std::vector<double> out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.buf->begin(), a.buf->end());
  out.insert(out.end(), b.buf->begin(), b.buf->end());
  Tape* tape = joint_tape(a, b);
  Tensor result(Shape{a.size() + b.size()}, std::move(out));
  if (tape == nullptr) return result;
  const int an = a.node, bn = b.node;
  const std::size_t na = a.size(), nb = b.size();
  return finish(tape, std::move(result),
                [tape, an, bn, na, nb](const std::vector<double>& g) {
                  if (an >= 0) tape->accumulate(an, g.data(), na);
                  if (bn >= 0 && nb > 0) tape->accumulate(bn, g.data() + na, nb);
                });
}

namespace {

enum class ColvecOp { Add, Sub, Mul, Div };

Tensor colvec_ew(const Tensor& x, const Tensor& v, ColvecOp op) {
  if (x.rank() != 2) throw std::invalid_argument("colvec op: matrix operand required");
  const std::size_t rows = x.shape[0], cols = x.shape[1];
  if (v.size() != rows) throw std::invalid_argument("colvec op: vector length != rows");
  std::vector<double> out(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const double vv = (*v.buf)[r];
    if (op == ColvecOp::Div && vv == 0.0) throw NumericError("div_colvec: division by zero");
    for (std::size_t c = 0; c < cols; ++c) {
      const double xv = (*x.buf)[r * cols + c];
      double o = 0.0;
      switch (op) {
        case ColvecOp::Add: o = xv + vv; break;
        case ColvecOp::Sub: o = xv - vv; break;
        case ColvecOp::Mul: o = xv * vv; break;
        case ColvecOp::Div: o = xv / vv; break;
      }
      out[r * cols + c] = o;
    }
  }
  Tape* tape = joint_tape(x, v);
  Tensor result(x.shape, std::move(out));
  if (tape == nullptr) return result;
  const int xn = x.node, vn = v.node;
  auto xbuf = x.buf;
  auto vbuf = v.buf;
  return finish(tape, std::move(result),
                [tape, xn, vn, xbuf, vbuf, rows, cols, op](const std::vector<double>& g) {
                  for (std::size_t r = 0; r < rows; ++r) {
                    const double vv = (*vbuf)[r];
                    double vsum = 0.0;
                    for (std::size_t c = 0; c < cols; ++c) {
                      const std::size_t i = r * cols + c;
                      double dx = 0.0, dv = 0.0;
                      switch (op) {
                        case ColvecOp::Add: dx = 1.0; dv = 1.0; break;
                        case ColvecOp::Sub: dx = 1.0; dv = -1.0; break;
                        case ColvecOp::Mul: dx = vv; dv = (*xbuf)[i]; break;
                        case ColvecOp::Div:
                          dx = 1.0 / vv;
                          dv = -(*xbuf)[i] / (vv * vv);
                          break;
                      }
                      if (xn >= 0) tape->accumulate_at(xn, i, g[i] * dx);
                      vsum += g[i] * dv;
                    }
                    if (vn >= 0) tape->accumulate_at(vn, r, vsum);
                  }
                });
}

}  // namespace

Tensor add_colvec(const Tensor& x, const Tensor& v) { return colvec_ew(x, v, ColvecOp::Add); }
Tensor sub_colvec(const Tensor& x, const Tensor& v) { return colvec_ew(x, v, ColvecOp::Sub); }
Tensor mul_colvec(const Tensor& x, const Tensor& v) { return colvec_ew(x, v, ColvecOp::Mul); }
Tensor div_colvec(const Tensor& x, const Tensor& v) { return colvec_ew(x, v, ColvecOp::Div); }

Tensor tril(const Tensor& a) {
  if (a.rank() != 2 || a.shape[0] != a.shape[1]) {
    throw std::invalid_argument("tril: square matrix required");
  }
  const std::size_t k = a.shape[0];
  std::vector<double> out(k * k, 0.0);
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t c = 0; c <= r; ++c) out[r * k + c] = (*a.buf)[r * k + c];
  }
  Tensor result(a.shape, std::move(out));
  if (a.tape == nullptr) return result;
  Tape* tape = a.tape;
  const int an = a.node;
  return finish(tape, std::move(result), [tape, an, k](const std::vector<double>& g) {
    for (std::size_t r = 0; r < k; ++r) {
      for (std::size_t c = 0; c <= r; ++c) tape->accumulate_at(an, r * k + c, g[r * k + c]);
    }
  });
}

// ---- bilinear upsampling ----

namespace {

struct Lerp {
  std::size_t i0, i1;
  double w0, w1;
};

std::vector<Lerp> lerp_table(std::size_t in_extent) {
  std::vector<Lerp> t(2 * in_extent);
  for (std::size_t o = 0; o < 2 * in_extent; ++o) {
    const double s = static_cast<double>(o) / 2.0 - 0.25;
    double fl = std::floor(s);
    double frac = s - fl;
    long i0 = static_cast<long>(fl);
    long i1 = i0 + 1;
    const long last = static_cast<long>(in_extent) - 1;
    i0 = std::clamp(i0, 0L, last);
    i1 = std::clamp(i1, 0L, last);
    t[o] = Lerp{static_cast<std::size_t>(i0), static_cast<std::size_t>(i1), 1.0 - frac, frac};
  }
  return t;
}

}  // namespace

Tensor upsample2_bilinear(const Tensor& x, std::size_t h, std::size_t w) {
  if (x.rank() != 2) throw std::invalid_argument("upsample2: (channels, h*w) tensor required");
  const std::size_t ch = x.shape[0];
  if (x.shape[1] != h * w) throw std::invalid_argument("upsample2: spatial size mismatch");
  const std::size_t oh = 2 * h, ow = 2 * w;
  const auto ty = lerp_table(h);
  const auto tx = lerp_table(w);
  std::vector<double> out(ch * oh * ow);
  const auto& in = *x.buf;
  for (std::size_t c = 0; c < ch; ++c) {
    const std::size_t ib = c * h * w, ob = c * oh * ow;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      const Lerp& ly = ty[oy];
      for (std::size_t ox = 0; ox < ow; ++ox) {
        const Lerp& lx = tx[ox];
        out[ob + oy * ow + ox] = ly.w0 * (lx.w0 * in[ib + ly.i0 * w + lx.i0] +
                                          lx.w1 * in[ib + ly.i0 * w + lx.i1]) +
                                 ly.w1 * (lx.w0 * in[ib + ly.i1 * w + lx.i0] +
                                          lx.w1 * in[ib + ly.i1 * w + lx.i1]);
      }
    }
  }
  Tensor result(Shape{ch, oh * ow}, std::move(out));
  if (x.tape == nullptr) return result;
  Tape* tape = x.tape;
  const int xn = x.node;
  return finish(tape, std::move(result),
                [tape, xn, ch, h, w, oh, ow, ty, tx](const std::vector<double>& g) {
                  for (std::size_t c = 0; c < ch; ++c) {
                    const std::size_t ib = c * h * w, ob = c * oh * ow;
                    for (std::size_t oy = 0; oy < oh; ++oy) {
                      const Lerp& ly = ty[oy];
                      for (std::size_t ox = 0; ox < ow; ++ox) {
                        const Lerp& lx = tx[ox];
                        const double gv = g[ob + oy * ow + ox];
                        tape->accumulate_at(xn, ib + ly.i0 * w + lx.i0, gv * ly.w0 * lx.w0);
                        tape->accumulate_at(xn, ib + ly.i0 * w + lx.i1, gv * ly.w0 * lx.w1);
                        tape->accumulate_at(xn, ib + ly.i1 * w + lx.i0, gv * ly.w1 * lx.w0);
                        tape->accumulate_at(xn, ib + ly.i1 * w + lx.i1, gv * ly.w1 * lx.w1);
                      }
                    }
                  }
                });
}

// ---- reductions ----

namespace {

// Maps every input linear index to its output linear index after removing
// the reduced axes.
std::vector<std::size_t> reduce_index_map(const Shape& in, const std::vector<std::size_t>& axes,
                                          Shape* out_shape) {
  std::vector<bool> reduced(in.size(), false);
  for (std::size_t ax : axes) {
    if (ax >= in.size()) throw std::invalid_argument("reduce: axis out of range");
    if (reduced[ax]) throw std::invalid_argument("reduce: duplicate axis");
    reduced[ax] = true;
  }
  out_shape->clear();
  for (std::size_t d = 0; d < in.size(); ++d) {
    if (!reduced[d]) out_shape->push_back(in[d]);
  }
  // strides of the output in terms of the kept input axes
  std::vector<std::size_t> out_stride(in.size(), 0);
  std::size_t stride = 1;
  for (std::size_t d = in.size(); d-- > 0;) {
    if (!reduced[d]) {
      out_stride[d] = stride;
      stride *= in[d];
    }
  }
  const std::size_t n = numel(in);
  std::vector<std::size_t> map(n);
  std::vector<std::size_t> idx(in.size(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t o = 0;
    for (std::size_t d = 0; d < in.size(); ++d) o += idx[d] * out_stride[d];
    map[i] = o;
    for (std::size_t d = in.size(); d-- > 0;) {
      if (++idx[d] < in[d]) break;
      idx[d] = 0;
    }
  }
  return map;
}

enum class ReduceKind { Sum, Mean, Max };

Tensor reduce_impl(const Tensor& a, const std::vector<std::size_t>& axes, ReduceKind kind) {
  if (a.size() == 0) throw std::invalid_argument("reduce: empty tensor");
  Shape out_shape;
  std::vector<std::size_t> map = reduce_index_map(a.shape, axes, &out_shape);
  const std::size_t on = numel(out_shape);
  const std::size_t count = a.size() / on;
  std::vector<double> out;
  std::vector<std::size_t> winner;  // Max only: input index of each output max
  const auto& in = *a.buf;
  if (kind == ReduceKind::Max) {
    out.assign(on, -std::numeric_limits<double>::infinity());
    winner.assign(on, 0);
    for (std::size_t i = 0; i < in.size(); ++i) {
      if (in[i] > out[map[i]]) {
        out[map[i]] = in[i];
        winner[map[i]] = i;
      }
    }
  } else {
    out.assign(on, 0.0);
    for (std::size_t i = 0; i < in.size(); ++i) out[map[i]] += in[i];
    if (kind == ReduceKind::Mean) {
      for (double& v : out) v /= static_cast<double>(count);
    }
  }
  Tensor result(out_shape, std::move(out));
  if (a.tape == nullptr) return result;
  Tape* tape = a.tape;
  const int an = a.node;
  return finish(tape, std::move(result),
                [tape, an, kind, count, map = std::move(map),
                 winner = std::move(winner)](const std::vector<double>& g) {
                  switch (kind) {
                    case ReduceKind::Sum:
                      for (std::size_t i = 0; i < map.size(); ++i) {
                        tape->accumulate_at(an, i, g[map[i]]);
                      }
                      break;
                    case ReduceKind::Mean:
                      for (std::size_t i = 0; i < map.size(); ++i) {
                        tape->accumulate_at(an, i, g[map[i]] / static_cast<double>(count));
                      }
                      break;
                    case ReduceKind::Max:
                      for (std::size_t o = 0; o < winner.size(); ++o) {
                        tape->accumulate_at(an, winner[o], g[o]);
                      }
                      break;
                  }
                });
}

std::vector<std::size_t> all_axes(const Tensor& a) {
  std::vector<std::size_t> axes(a.rank());
  std::iota(axes.begin(), axes.end(), 0);
  return axes;
}

}  // namespace

Tensor sum(const Tensor& a) { return reduce_impl(a, all_axes(a), ReduceKind::Sum); }
Tensor sum(const Tensor& a, const std::vector<std::size_t>& axes) {
  return reduce_impl(a, axes, ReduceKind::Sum);
}
Tensor mean(const Tensor& a) { return reduce_impl(a, all_axes(a), ReduceKind::Mean); }
Tensor mean(const Tensor& a, const std::vector<std::size_t>& axes) {
  return reduce_impl(a, axes, ReduceKind::Mean);
}
Tensor reduce_max(const Tensor& a, const std::vector<std::size_t>& axes) {
  return reduce_impl(a, axes, ReduceKind::Max);
}

}  // namespace vip
