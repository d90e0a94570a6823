#include "steer/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace steer::num {
namespace {

double evaluate(const TapedFunction& f, const std::vector<Matrix>& point) {
  Tape tape;
  std::vector<Tensor> leaves;
  leaves.reserve(point.size());
  for (const auto& m : point) leaves.push_back(tape.leaf(m, false));
  const double v = f(tape, leaves).item();
  if (!std::isfinite(v)) throw NumericError("grad_check: non-finite function value at perturbed point");
  return v;
}

}  // namespace

std::vector<Matrix> analytic_gradients(const TapedFunction& f, const std::vector<Matrix>& point) {
  Tape tape;
  std::vector<Tensor> leaves;
  leaves.reserve(point.size());
  for (const auto& m : point) leaves.push_back(tape.leaf(m, true));
  tape.backward(f(tape, leaves));
  std::vector<Matrix> grads;
  grads.reserve(point.size());
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    grads.push_back(leaves[i].has_grad() ? leaves[i].grad() : Matrix::Zero(point[i].rows(), point[i].cols()));
  }
  return grads;
}

GradCheckReport compare_gradients(const TapedFunction& f, const std::vector<Matrix>& point,
                                  const std::vector<Matrix>& analytic, double h, double tol) {
  if (!(h >= 1e-7 && h <= 1e-3)) throw std::invalid_argument("grad_check: h must lie in [1e-7, 1e-3]");
  if (analytic.size() != point.size()) throw DimensionError("grad_check: gradient count mismatch");
  GradCheckReport report;
  std::vector<Matrix> probe = point;
  for (std::size_t i = 0; i < point.size(); ++i) {
    if (analytic[i].rows() != point[i].rows() || analytic[i].cols() != point[i].cols()) {
      throw DimensionError("grad_check: gradient shape mismatch for input " + std::to_string(i));
    }
    for (Eigen::Index r = 0; r < point[i].rows(); ++r) {
      for (Eigen::Index c = 0; c < point[i].cols(); ++c) {
        const double x0 = point[i](r, c);
        probe[i](r, c) = x0 + h;
        const double fp = evaluate(f, probe);
        probe[i](r, c) = x0 - h;
        const double fm = evaluate(f, probe);
        probe[i](r, c) = x0;
        const double numeric = (fp - fm) / (2.0 * h);
        const double a = analytic[i](r, c);
        const double denom = std::max({std::abs(a), std::abs(numeric), kRelativeFloor});
        const double rel = std::abs(a - numeric) / denom;
        ++report.coordinates;
        if (rel > report.max_relative_error) {
          report.max_relative_error = rel;
          report.worst_input = i;
          report.worst_row = r;
          report.worst_col = c;
        }
      }
    }
  }
  report.pass = report.max_relative_error <= tol;
  return report;
}

GradCheckReport grad_check(const TapedFunction& f, const std::vector<Matrix>& point, double h, double tol) {
  return compare_gradients(f, point, analytic_gradients(f, point), h, tol);
}

}  // namespace steer::num
