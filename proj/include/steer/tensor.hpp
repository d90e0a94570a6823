#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "steer/kernels.hpp"

namespace steer::num {

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Tape;

// Handle to a node on a Tape. Values are 2-D (rows x cols), row-major;
// a scalar is 1x1. The tape owns storage, so a Tensor must not outlive it.
class Tensor {
 public:
  Tensor() = default;

  const Matrix& value() const;
  const Matrix& grad() const;
  bool requires_grad() const;
  bool has_grad() const;
  std::vector<std::size_t> shape() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double item() const;

  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Tensor(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Reverse-mode tape. Nodes are appended in evaluation order, so a reverse
// sweep is a valid topological order. A tape supports one backward() per
// zero_grad(); a second call throws instead of silently accumulating.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Matrix& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Tensor leaf(Matrix value, bool requires_grad = true);
  Tensor constant(Matrix value) { return leaf(std::move(value), false); }

  Tensor record(Matrix value, const char* op, std::vector<Tensor> parents, BackwardFn backward);

  void backward(const Tensor& loss);
  void zero_grad();

  // Adds g into the gradient of t (no-op when t does not require grad).
  void accumulate(const Tensor& t, const Matrix& g);

  std::size_t size() const { return nodes_.size(); }

 private:
  friend class Tensor;
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    bool has_grad = false;
    const char* op = "leaf";
    std::vector<std::size_t> parents;
    BackwardFn backward;
  };
  Node& node(const Tensor& t);
  const Node& node(const Tensor& t) const;

  std::deque<Node> nodes_;
  bool backward_done_ = false;
};

// ---- primitives ----
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor sum(const Tensor& a);
Tensor embedding(const Tensor& table, std::span<const int> ids);
// Causal scaled dot-product attention over column-blocked heads: q, k, v are
// (T, n_heads * head_dim); row i attends to rows <= i.
Tensor causal_attention(const Tensor& q, const Tensor& k, const Tensor& v, int n_heads);
Tensor rope(const Tensor& x, int n_heads, int first_position = 0);
Tensor rms_norm(const Tensor& x, const Tensor& gain);
Tensor gelu(const Tensor& x);
Tensor softmax(const Tensor& x);
// Mean token cross-entropy; targets < 0 are ignored. Needs >= 1 counted row.
Tensor cross_entropy(const Tensor& logits, std::span<const int> targets);
// Euclidean norm of each row, shape (rows, 1).
Tensor l2_norm(const Tensor& x);
// Replaces rows [first_row, rows) through fn. Not differentiable: backward
// through the result throws. Used for steering hooks in full-recompute paths.
Tensor map_rows(const Tensor& x, Eigen::Index first_row, const std::function<RowVector(const RowVector&)>& fn);

std::string shape_string(const Matrix& m);

}  // namespace steer::num
