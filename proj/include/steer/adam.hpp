#pragma once

#include <span>
#include <vector>

#include "steer/kernels.hpp"

namespace steer::num {

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;

  static AdamState zeros_like(std::span<const Matrix> params);
};

// One bias-corrected Adam update at step t (t >= 1), in place.
void adam_step(std::span<Matrix> params, std::span<const Matrix> grads, AdamState& state, const AdamHyper& hyper,
               long t);

}  // namespace steer::num
