#include "steer/adam.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "steer/tensor.hpp"

namespace steer::num {

AdamState AdamState::zeros_like(std::span<const Matrix> params) {
  AdamState s;
  for (const auto& p : params) {
    s.m.push_back(Matrix::Zero(p.rows(), p.cols()));
    s.v.push_back(Matrix::Zero(p.rows(), p.cols()));
  }
  return s;
}

void adam_step(std::span<Matrix> params, std::span<const Matrix> grads, AdamState& state, const AdamHyper& hyper,
               long t) {
  if (t < 1) throw std::invalid_argument("adam_step: step index must be >= 1");
  if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
    throw DimensionError("adam_step: params, grads and state disagree in count");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].rows() != params[i].rows() || grads[i].cols() != params[i].cols() ||
        state.m[i].rows() != params[i].rows() || state.m[i].cols() != params[i].cols()) {
      throw DimensionError("adam_step: shape mismatch at parameter " + std::to_string(i) + " " +
                           shape_string(params[i]) + " vs grad " + shape_string(grads[i]));
    }
    if (!grads[i].allFinite()) throw NumericError("adam_step: non-finite gradient at parameter " + std::to_string(i));
  }
  const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * grads[i];
    state.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * grads[i].cwiseProduct(grads[i]);
    params[i].array() -=
        hyper.lr * (state.m[i].array() / bc1) / ((state.v[i].array() / bc2).sqrt() + hyper.eps);
  }
}

}  // namespace steer::num
