// SPDX-License-Identifier: Apache-2.0

#include "vnsgru/gradcheck.hpp"

#include <cmath>

namespace vnsgru {

double finite_diff_check(const std::function<double(const std::vector<Tensor>&)>& f,
                         const std::vector<Tensor>& theta,
                         const std::vector<Tensor>& analytic, double h) {
  if (theta.size() != analytic.size())
    throw DimensionError("finite_diff_check: got " + std::to_string(analytic.size()) +
                         " gradients for " + std::to_string(theta.size()) + " parameters");
  std::vector<Tensor> probe = theta;
  double worst = 0.0;
  for (std::size_t p = 0; p < probe.size(); ++p) {
    require_same_shape("finite_diff_check", theta[p], analytic[p]);
    for (std::size_t i = 0; i < probe[p].size(); ++i) {
      const double kept = probe[p].data[i];
      probe[p].data[i] = kept + h;
      const double hi = f(probe);
      probe[p].data[i] = kept - h;
      const double lo = f(probe);
      probe[p].data[i] = kept;
      if (!std::isfinite(hi) || !std::isfinite(lo))
        throw NumericError("finite_diff_check: non-finite objective near parameter " +
                           std::to_string(p) + "[" + std::to_string(i) + "]");
      const double fd = (hi - lo) / (2.0 * h);
      const double a = analytic[p].data[i];
      const double err = std::fabs(a - fd) / std::max(1.0, std::fabs(a));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

double tape_finite_diff_check(const LossBuilder& build, const std::vector<Tensor>& theta,
                              double h) {
  auto eval = [&build](const std::vector<Tensor>& params) {
    Tape tape;
    std::vector<Var> leaves;
    leaves.reserve(params.size());
    for (const Tensor& p : params) leaves.push_back(tape.leaf(p));
    Var loss = build(tape, leaves);
    return tape.value(loss).data[0];
  };

  Tape tape;
  std::vector<Var> leaves;
  leaves.reserve(theta.size());
  for (const Tensor& p : theta) leaves.push_back(tape.leaf(p));
  Var loss = build(tape, leaves);
  std::vector<Tensor> analytic = tape.gradients(loss, leaves);
  return finite_diff_check(eval, theta, analytic, h);
}

} // namespace vnsgru
