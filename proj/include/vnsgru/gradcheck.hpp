// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <vector>

#include "vnsgru/tape.hpp"
#include "vnsgru/tensor.hpp"

namespace vnsgru {

/// Central-difference comparison against supplied analytic gradients.
/// Returns max over all parameter entries of
///   |analytic - (f(th+h) - f(th-h)) / 2h| / max(1, |analytic|).
/// Throws NumericError if f evaluates to a non-finite value.
double finite_diff_check(const std::function<double(const std::vector<Tensor>&)>& f,
                         const std::vector<Tensor>& theta,
                         const std::vector<Tensor>& analytic, double h = 1e-5);

/// Convenience wrapper: the builder assembles a scalar loss on a fresh tape
/// from leaves created for `theta` (in order); the analytic side is the
/// tape's own backward pass.
using LossBuilder = std::function<Var(Tape&, const std::vector<Var>&)>;
double tape_finite_diff_check(const LossBuilder& build, const std::vector<Tensor>& theta,
                              double h = 1e-5);

} // namespace vnsgru
