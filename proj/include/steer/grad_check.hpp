#pragma once

#include <functional>
#include <vector>

#include "steer/tensor.hpp"

namespace steer::num {

// Builds a scalar loss on a fresh tape from leaf tensors created at `point`.
using TapedFunction = std::function<Tensor(Tape&, const std::vector<Tensor>& leaves)>;

inline constexpr double kRelativeFloor = 1e-6;

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t worst_input = 0;
  Eigen::Index worst_row = 0;
  Eigen::Index worst_col = 0;
  std::size_t coordinates = 0;
  bool pass = false;
};

// Analytic gradients of f at point, via one backward pass.
std::vector<Matrix> analytic_gradients(const TapedFunction& f, const std::vector<Matrix>& point);

// Compares `analytic` against central differences (f(x+h) - f(x-h)) / 2h per
// coordinate; relative error uses max(|analytic|, |numeric|, kRelativeFloor).
// Below the floor central differences at h = 1e-5 are dominated by roundoff,
// so tiny gradients are effectively compared with an absolute tolerance.
GradCheckReport compare_gradients(const TapedFunction& f, const std::vector<Matrix>& point,
                                  const std::vector<Matrix>& analytic, double h, double tol);

GradCheckReport grad_check(const TapedFunction& f, const std::vector<Matrix>& point, double h, double tol);

}  // namespace steer::num
