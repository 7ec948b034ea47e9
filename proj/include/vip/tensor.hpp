#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "vip/common.hpp"

namespace vip {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);

class Tape;

// Dense row-major tensor of doubles. Copies share the underlying buffer;
// mutable_data() is only used for parameter updates between tape builds.
// When `tape` is set the tensor is a node on that tape and participates in
// reverse-mode differentiation.
struct Tensor {
  Shape shape;
  std::shared_ptr<std::vector<double>> buf;
  Tape* tape = nullptr;
  int node = -1;

  Tensor() : buf(std::make_shared<std::vector<double>>()) {}
  Tensor(Shape s, std::vector<double> values);
  explicit Tensor(double scalar);

  static Tensor zeros(Shape s);
  static Tensor full(Shape s, double value);

  std::size_t size() const { return buf->size(); }
  std::size_t rank() const { return shape.size(); }
  const std::vector<double>& data() const { return *buf; }
  std::vector<double>& mutable_data() { return *buf; }
  double operator[](std::size_t i) const { return (*buf)[i]; }
  double item() const;
  bool on_tape() const { return tape != nullptr; }

  // Deep copy with no tape attachment.
  Tensor detached_copy() const;
};

void check_finite(const Tensor& t, const char* what);

// Reverse-mode differentiation tape. Nodes are recorded in topological order
// during the forward pass; backward() walks them in reverse. Gradients are
// stored per node and stay valid until the tape is destroyed.
class Tape {
 public:
  using BackwardFn = std::function<void(const std::vector<double>& grad_out)>;

  // Registers a copy of `value` as a differentiable leaf.
  Tensor leaf(const Tensor& value);

  // Registers an interior node. The backward fn receives the output gradient
  // and is responsible for accumulating into parents via accumulate().
  int record(std::size_t out_size, BackwardFn fn);

  void backward(const Tensor& root);

  // Gradient of the last backward() root w.r.t. tensor t. Untouched leaves
  // yield zeros of the matching shape.
  Tensor grad(const Tensor& t) const;

  void accumulate(int node, const std::vector<double>& g);
  void accumulate(int node, const double* g, std::size_t n);
  void accumulate_at(int node, std::size_t index, double g);

  const std::vector<double>* grad_buffer(int node) const;
  std::size_t num_nodes() const { return nodes_.size(); }

 private:
  struct Node {
    std::size_t size;
    BackwardFn back;  // null for leaves
  };
  std::vector<Node> nodes_;
  std::vector<std::vector<double>> grads_;
  bool ran_backward_ = false;
};

// ---- elementwise ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, double c);
Tensor mul(const Tensor& a, double c);
Tensor neg(const Tensor& a);
Tensor exp_op(const Tensor& a);
Tensor log_op(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor square(const Tensor& a);
Tensor sqrt_op(const Tensor& a);
Tensor abs_op(const Tensor& a);

// ---- linear algebra / structure ----
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor reshape(const Tensor& a, Shape s);
Tensor concat(const Tensor& a, const Tensor& b);  // flattens, joins on axis 0

// Row-wise broadcasts for (rows, cols) x (rows): v applied along each row.
Tensor add_colvec(const Tensor& x, const Tensor& v);
Tensor sub_colvec(const Tensor& x, const Tensor& v);
Tensor mul_colvec(const Tensor& x, const Tensor& v);
Tensor div_colvec(const Tensor& x, const Tensor& v);

// Zeroes the strict upper triangle of a square matrix (gradient included).
Tensor tril(const Tensor& a);

// Bilinear x2 upsampling (align-corners=false) of a (channels, h*w) tensor;
// result is (channels, 2h*2w).
Tensor upsample2_bilinear(const Tensor& x, std::size_t h, std::size_t w);

// ---- reductions ----
Tensor sum(const Tensor& a);
Tensor sum(const Tensor& a, const std::vector<std::size_t>& axes);
Tensor mean(const Tensor& a);
Tensor mean(const Tensor& a, const std::vector<std::size_t>& axes);
Tensor reduce_max(const Tensor& a, const std::vector<std::size_t>& axes);

}  // namespace vip
