#pragma once

#include <functional>
#include <span>

#include "mstf/tensor.hpp"

namespace mstf {

/// Compares the reverse-mode gradient of a scalar-valued function against
/// central finite differences (f(x+h) - f(x-h)) / 2h, elementwise.
///
/// Returns the largest elementwise error
///     |g_i - fd_i| / max(1, |g_i|, |fd_i|)
/// i.e. relative error for large gradients with an absolute floor for small
/// ones, which keeps finite-difference noise on near-zero entries from
/// dominating the result.
double grad_check(const std::function<Var(Tape&, Var)>& f, const Tensor& x, double h = 1e-5);

/// Same comparison for every element of an explicit parameter list.
/// `loss_value` evaluates the scalar objective at the current parameter
/// values (pure forward); `compute_grads` zeroes the grads and fills them
/// via one reverse pass.
double grad_check_params(std::span<Parameter* const> params,
                         const std::function<double()>& loss_value,
                         const std::function<void()>& compute_grads, double h = 1e-5);

}  // namespace mstf
