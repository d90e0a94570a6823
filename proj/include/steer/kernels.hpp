#pragma once

// Forward math shared by the taped primitives and the KV-cache decoder.
// Everything here is a free function over Eigen expressions so the two
// paths evaluate identical floating-point sequences.

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

namespace steer::num {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;
using Vector = Eigen::VectorXd;

inline constexpr double kRmsEps = 1e-12;
inline constexpr double kRopeBase = 10000.0;

// y = x / sqrt(mean(x^2) + eps) * gain, per row.
template <typename Derived, typename GainDerived>
Matrix rms_norm_rows(const Eigen::MatrixBase<Derived>& x, const Eigen::MatrixBase<GainDerived>& gain) {
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double ms = x.row(r).squaredNorm() / static_cast<double>(x.cols());
    const double inv = 1.0 / std::sqrt(ms + kRmsEps);
    out.row(r) = (x.row(r) * inv).cwiseProduct(gain.derived().row(0));
  }
  return out;
}

inline double gelu(double v) { return 0.5 * v * (1.0 + std::erf(v / std::numbers::sqrt2)); }

inline double gelu_grad(double v) {
  const double cdf = 0.5 * (1.0 + std::erf(v / std::numbers::sqrt2));
  const double pdf = std::exp(-0.5 * v * v) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + v * pdf;
}

template <typename Derived>
Matrix gelu_rows(const Eigen::MatrixBase<Derived>& x) {
  return x.unaryExpr([](double v) { return gelu(v); });
}

// Max-shifted softmax along each row.
template <typename Derived>
Matrix softmax_rows(const Eigen::MatrixBase<Derived>& x) {
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double m = x.row(r).maxCoeff();
    out.row(r) = (x.row(r).array() - m).exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

// Rotary position embedding (RoFormer): within each head, the pair
// (2i, 2i+1) at absolute position p is rotated by p * base^(-2i/head_dim).
// `sign` = -1 applies the inverse rotation (used by backward).
template <typename Derived>
void rope_rows_inplace(Eigen::MatrixBase<Derived>& x, Eigen::Index n_heads, Eigen::Index first_position,
                       double sign = 1.0) {
  const Eigen::Index head_dim = x.cols() / n_heads;
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double pos = static_cast<double>(first_position + r);
    for (Eigen::Index h = 0; h < n_heads; ++h) {
      for (Eigen::Index i = 0; i < head_dim / 2; ++i) {
        const double freq = std::pow(kRopeBase, -2.0 * static_cast<double>(i) / static_cast<double>(head_dim));
        const double angle = sign * pos * freq;
        const double c = std::cos(angle), s = std::sin(angle);
        const Eigen::Index j = h * head_dim + 2 * i;
        const double a = x(r, j), b = x(r, j + 1);
        x(r, j) = a * c - b * s;
        x(r, j + 1) = a * s + b * c;
      }
    }
  }
}

// Attention output of one query row against cached keys/values for one head.
// keys/values hold rows [0, n) for positions the query may attend to.
template <typename Q, typename K, typename V>
RowVector attend_row(const Eigen::MatrixBase<Q>& query, const Eigen::MatrixBase<K>& keys,
                     const Eigen::MatrixBase<V>& values) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(query.cols()));
  RowVector scores = (query * keys.transpose()) * scale;
  const double m = scores.maxCoeff();
  RowVector p = (scores.array() - m).exp().matrix();
  p /= p.sum();
  return p * values;
}

}  // namespace steer::num
