#include "steer/tensor.hpp"

#include <cmath>
#include <sstream>

namespace steer::num {

std::string shape_string(const Matrix& m) {
  std::ostringstream os;
  os << "(" << m.rows() << ", " << m.cols() << ")";
  return os.str();
}

namespace {

void require_same_tape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.valid() || !b.valid()) throw std::invalid_argument(std::string(op) + ": invalid tensor");
  if (a.tape() != b.tape()) throw std::invalid_argument(std::string(op) + ": tensors live on different tapes");
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a) + " vs " + shape_string(b));
  }
}

Matrix check_finite(Matrix m, const char* op) {
  if (!m.allFinite()) throw NumericError(std::string(op) + ": non-finite output");
  return m;
}

}  // namespace

// ---- Tensor ----

const Matrix& Tensor::value() const { return tape_->node(*this).value; }
const Matrix& Tensor::grad() const {
  const auto& n = tape_->node(*this);
  if (!n.has_grad) throw std::logic_error("Tensor::grad: no gradient populated");
  return n.grad;
}
bool Tensor::requires_grad() const { return tape_->node(*this).requires_grad; }
bool Tensor::has_grad() const { return tape_->node(*this).has_grad; }
std::vector<std::size_t> Tensor::shape() const {
  const auto& v = value();
  return {static_cast<std::size_t>(v.rows()), static_cast<std::size_t>(v.cols())};
}
double Tensor::item() const {
  const auto& v = value();
  if (v.size() != 1) throw DimensionError("Tensor::item: not a scalar " + shape_string(v));
  return v(0, 0);
}

// ---- Tape ----

Tape::Node& Tape::node(const Tensor& t) {
  if (t.tape_ != this || t.id_ >= nodes_.size()) throw std::invalid_argument("tensor does not belong to tape");
  return nodes_[t.id_];
}

const Tape::Node& Tape::node(const Tensor& t) const {
  if (t.tape_ != this || t.id_ >= nodes_.size()) throw std::invalid_argument("tensor does not belong to tape");
  return nodes_[t.id_];
}

Tensor Tape::leaf(Matrix value, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Tensor(this, nodes_.size() - 1);
}

Tensor Tape::record(Matrix value, const char* op, std::vector<Tensor> parents, BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  n.op = op;
  for (const auto& p : parents) {
    if (p.tape_ != this) throw std::invalid_argument(std::string(op) + ": parent on a different tape");
    n.parents.push_back(p.id_);
    n.requires_grad = n.requires_grad || nodes_[p.id_].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Tensor(this, nodes_.size() - 1);
}

void Tape::accumulate(const Tensor& t, const Matrix& g) {
  auto& n = node(t);
  if (!n.requires_grad) return;
  if (!n.has_grad) {
    n.grad = g;
    n.has_grad = true;
  } else {
    n.grad += g;
  }
}

void Tape::backward(const Tensor& loss) {
  const auto& root = node(loss);
  if (root.value.size() != 1) throw DimensionError("backward: loss must be scalar, got " + shape_string(root.value));
  if (backward_done_) throw std::logic_error("backward: gradients already populated; call zero_grad() first");
  backward_done_ = true;
  accumulate(loss, Matrix::Ones(1, 1));
  for (std::size_t i = loss.id_ + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.has_grad || !n.backward) continue;
    for (std::size_t p : n.parents) {
      // Parents are always recorded before children.
      if (p >= i) throw std::logic_error("backward: graph cycle detected");
    }
    n.backward(*this, n.grad);
  }
}

void Tape::zero_grad() {
  for (auto& n : nodes_) {
    n.grad.resize(0, 0);
    n.has_grad = false;
  }
  backward_done_ = false;
}

// ---- primitives ----

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_same_tape(a, b, "matmul");
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.cols() != bv.rows()) {
    throw DimensionError("matmul: shape mismatch " + shape_string(av) + " x " + shape_string(bv));
  }
  Matrix out = check_finite(av * bv, "matmul");
  return a.tape()->record(std::move(out), "matmul", {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (a.requires_grad()) t.accumulate(a, g * b.value().transpose());
    if (b.requires_grad()) t.accumulate(b, a.value().transpose() * g);
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_tape(a, b, "add");
  require_same_shape(a.value(), b.value(), "add");
  Matrix out = check_finite(a.value() + b.value(), "add");
  return a.tape()->record(std::move(out), "add", {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_tape(a, b, "mul");
  require_same_shape(a.value(), b.value(), "mul");
  Matrix out = check_finite(a.value().cwiseProduct(b.value()), "mul");
  return a.tape()->record(std::move(out), "mul", {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (a.requires_grad()) t.accumulate(a, g.cwiseProduct(b.value()));
    if (b.requires_grad()) t.accumulate(b, g.cwiseProduct(a.value()));
  });
}

Tensor scale(const Tensor& a, double s) {
  Matrix out = check_finite(a.value() * s, "scale");
  return a.tape()->record(std::move(out), "scale", {a}, [a, s](Tape& t, const Matrix& g) { t.accumulate(a, g * s); });
}

Tensor sum(const Tensor& a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  check_finite(out, "sum");
  return a.tape()->record(std::move(out), "sum", {a}, [a](Tape& t, const Matrix& g) {
    t.accumulate(a, Matrix::Constant(a.rows(), a.cols(), g(0, 0)));
  });
}

Tensor embedding(const Tensor& table, std::span<const int> ids) {
  const Matrix& tv = table.value();
  Matrix out(static_cast<Eigen::Index>(ids.size()), tv.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= tv.rows()) {
      throw DimensionError("embedding: id " + std::to_string(ids[i]) + " outside table " + shape_string(tv));
    }
    out.row(static_cast<Eigen::Index>(i)) = tv.row(ids[i]);
  }
  std::vector<int> idv(ids.begin(), ids.end());
  return table.tape()->record(std::move(out), "embedding", {table},
                              [table, idv = std::move(idv)](Tape& t, const Matrix& g) {
                                Matrix dt = Matrix::Zero(table.rows(), table.cols());
                                for (std::size_t i = 0; i < idv.size(); ++i) {
                                  dt.row(idv[i]) += g.row(static_cast<Eigen::Index>(i));
                                }
                                t.accumulate(table, dt);
                              });
}

Tensor causal_attention(const Tensor& q, const Tensor& k, const Tensor& v, int n_heads) {
  require_same_tape(q, k, "causal_attention");
  require_same_tape(q, v, "causal_attention");
  require_same_shape(q.value(), k.value(), "causal_attention");
  require_same_shape(q.value(), v.value(), "causal_attention");
  const Eigen::Index T = q.rows();
  const Eigen::Index d = q.cols();
  if (n_heads <= 0 || d % n_heads != 0) {
    throw DimensionError("causal_attention: width " + std::to_string(d) + " not divisible by heads " +
                         std::to_string(n_heads));
  }
  const Eigen::Index hd = d / n_heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(hd));
  std::vector<Matrix> probs(static_cast<std::size_t>(n_heads));
  Matrix out(T, d);
  for (int h = 0; h < n_heads; ++h) {
    const auto qh = q.value().middleCols(h * hd, hd);
    const auto kh = k.value().middleCols(h * hd, hd);
    const auto vh = v.value().middleCols(h * hd, hd);
    Matrix scores = (qh * kh.transpose()) * inv_sqrt;
    Matrix p = Matrix::Zero(T, T);
    for (Eigen::Index i = 0; i < T; ++i) {
      auto row = scores.row(i).head(i + 1);
      const double m = row.maxCoeff();
      p.row(i).head(i + 1) = (row.array() - m).exp().matrix();
      p.row(i).head(i + 1) /= p.row(i).head(i + 1).sum();
    }
    out.middleCols(h * hd, hd) = p * vh;
    probs[static_cast<std::size_t>(h)] = std::move(p);
  }
  check_finite(out, "causal_attention");
  return q.tape()->record(
      std::move(out), "causal_attention", {q, k, v},
      [q, k, v, n_heads, hd, inv_sqrt, probs = std::move(probs)](Tape& t, const Matrix& g) {
        const Eigen::Index rows = q.rows();
        Matrix dq(rows, q.cols()), dk(rows, q.cols()), dv(rows, q.cols());
        for (int h = 0; h < n_heads; ++h) {
          const Matrix& p = probs[static_cast<std::size_t>(h)];
          const auto qh = q.value().middleCols(h * hd, hd);
          const auto kh = k.value().middleCols(h * hd, hd);
          const auto vh = v.value().middleCols(h * hd, hd);
          const auto gh = g.middleCols(h * hd, hd);
          Matrix dp = gh * vh.transpose();
          dv.middleCols(h * hd, hd) = p.transpose() * gh;
          Eigen::VectorXd row_dot = (dp.cwiseProduct(p)).rowwise().sum();
          Matrix ds = p.cwiseProduct(dp - row_dot.replicate(1, rows));
          dq.middleCols(h * hd, hd) = (ds * kh) * inv_sqrt;
          dk.middleCols(h * hd, hd) = (ds.transpose() * qh) * inv_sqrt;
        }
        t.accumulate(q, dq);
        t.accumulate(k, dk);
        t.accumulate(v, dv);
      });
}

Tensor rope(const Tensor& x, int n_heads, int first_position) {
  const Eigen::Index d = x.cols();
  if (n_heads <= 0 || d % n_heads != 0 || (d / n_heads) % 2 != 0) {
    throw DimensionError("rope: width " + std::to_string(d) + " incompatible with " + std::to_string(n_heads) +
                         " heads of even size");
  }
  Matrix out = x.value();
  rope_rows_inplace(out, n_heads, first_position);
  return x.tape()->record(std::move(out), "rope", {x}, [x, n_heads, first_position](Tape& t, const Matrix& g) {
    Matrix dx = g;
    rope_rows_inplace(dx, n_heads, first_position, -1.0);
    t.accumulate(x, dx);
  });
}

Tensor rms_norm(const Tensor& x, const Tensor& gain) {
  require_same_tape(x, gain, "rms_norm");
  if (gain.rows() != 1 || gain.cols() != x.cols()) {
    throw DimensionError("rms_norm: gain " + shape_string(gain.value()) + " does not match input " +
                         shape_string(x.value()));
  }
  Matrix out = check_finite(rms_norm_rows(x.value(), gain.value()), "rms_norm");
  return x.tape()->record(std::move(out), "rms_norm", {x, gain}, [x, gain](Tape& t, const Matrix& g) {
    const Matrix& xv = x.value();
    const RowVector gv = gain.value().row(0);
    const double n = static_cast<double>(xv.cols());
    Matrix dx(xv.rows(), xv.cols());
    RowVector dgain = RowVector::Zero(xv.cols());
    for (Eigen::Index r = 0; r < xv.rows(); ++r) {
      const double inv = 1.0 / std::sqrt(xv.row(r).squaredNorm() / n + kRmsEps);
      const RowVector xhat = xv.row(r) * inv;
      const RowVector gx = g.row(r).cwiseProduct(gv);
      dgain += g.row(r).cwiseProduct(xhat);
      dx.row(r) = inv * (gx - xhat * (gx.dot(xhat) / n));
    }
    t.accumulate(x, dx);
    if (gain.requires_grad()) t.accumulate(gain, dgain);
  });
}

Tensor gelu(const Tensor& x) {
  Matrix out = check_finite(gelu_rows(x.value()), "gelu");
  return x.tape()->record(std::move(out), "gelu", {x}, [x](Tape& t, const Matrix& g) {
    t.accumulate(x, g.cwiseProduct(x.value().unaryExpr([](double v) { return gelu_grad(v); })));
  });
}

Tensor softmax(const Tensor& x) {
  Matrix out = check_finite(softmax_rows(x.value()), "softmax");
  Matrix saved = out;
  return x.tape()->record(std::move(out), "softmax", {x}, [x, saved = std::move(saved)](Tape& t, const Matrix& g) {
    Eigen::VectorXd dot = g.cwiseProduct(saved).rowwise().sum();
    t.accumulate(x, saved.cwiseProduct(g - dot.replicate(1, g.cols())));
  });
}

Tensor cross_entropy(const Tensor& logits, std::span<const int> targets) {
  const Matrix& lv = logits.value();
  if (static_cast<Eigen::Index>(targets.size()) != lv.rows()) {
    throw DimensionError("cross_entropy: " + std::to_string(targets.size()) + " targets for logits " +
                         shape_string(lv));
  }
  Matrix probs = softmax_rows(lv);
  double total = 0.0;
  int counted = 0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const int tgt = targets[i];
    if (tgt < 0) continue;
    if (tgt >= lv.cols()) throw DimensionError("cross_entropy: target " + std::to_string(tgt) + " out of range");
    const auto r = static_cast<Eigen::Index>(i);
    const double m = lv.row(r).maxCoeff();
    const double lse = m + std::log((lv.row(r).array() - m).exp().sum());
    total += lse - lv(r, tgt);
    ++counted;
  }
  if (counted == 0) throw std::invalid_argument("cross_entropy: no counted targets");
  Matrix out(1, 1);
  out(0, 0) = total / counted;
  check_finite(out, "cross_entropy");
  std::vector<int> tv(targets.begin(), targets.end());
  return logits.tape()->record(
      std::move(out), "cross_entropy", {logits},
      [logits, tv = std::move(tv), probs = std::move(probs), counted](Tape& t, const Matrix& g) {
        Matrix d = Matrix::Zero(probs.rows(), probs.cols());
        const double w = g(0, 0) / counted;
        for (std::size_t i = 0; i < tv.size(); ++i) {
          if (tv[i] < 0) continue;
          const auto r = static_cast<Eigen::Index>(i);
          d.row(r) = probs.row(r) * w;
          d(r, tv[i]) -= w;
        }
        t.accumulate(logits, d);
      });
}

Tensor l2_norm(const Tensor& x) {
  Matrix out = check_finite(x.value().rowwise().norm(), "l2_norm");
  Matrix norms = out;
  return x.tape()->record(std::move(out), "l2_norm", {x}, [x, norms = std::move(norms)](Tape& t, const Matrix& g) {
    Matrix dx(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      const double n = norms(r, 0);
      dx.row(r) = n > 0.0 ? RowVector(x.value().row(r) * (g(r, 0) / n)) : RowVector::Zero(x.cols());
    }
    t.accumulate(x, dx);
  });
}

Tensor map_rows(const Tensor& x, Eigen::Index first_row, const std::function<RowVector(const RowVector&)>& fn) {
  Matrix out = x.value();
  for (Eigen::Index r = std::max<Eigen::Index>(first_row, 0); r < out.rows(); ++r) {
    RowVector mapped = fn(out.row(r));
    if (mapped.cols() != out.cols()) throw DimensionError("map_rows: mapped row changed width");
    out.row(r) = mapped;
  }
  check_finite(out, "map_rows");
  return x.tape()->record(std::move(out), "map_rows", {x}, [](Tape&, const Matrix&) {
    throw std::logic_error("map_rows: not differentiable");
  });
}

}  // namespace steer::num
