#pragma once

#include <functional>
#include <vector>

#include "parsefuse/tensor.hpp"

namespace parsefuse {

/// Central-difference gradients per parameter coordinate:
/// (f(theta + eps e) - f(theta - eps e)) / (2 eps). loss_fn must be
/// deterministic (dropout off, fixed rng) and read current parameter values.
std::vector<std::vector<double>> finite_difference_gradients(
    const std::function<double()>& loss_fn, const std::vector<Parameter*>& params,
    double eps = 1e-5);

/// |a - n| / max(1, |a|, |n|), maximized over all coordinates of all params.
double max_relative_gradient_error(const std::vector<Parameter*>& params,
                                   const std::vector<std::vector<double>>& numeric);

}  // namespace parsefuse
